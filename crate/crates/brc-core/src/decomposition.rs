//! Adaptive decomposition of the component state space.
//!
//! Given a rule set, the engine repeatedly splits branches into specified
//! and unspecified regions. Each pass visits branches in descending order
//! of probability mass; a branch is split at most once per pass, using the
//! compatible reduced rules to choose the component state that is most
//! likely to produce specified children. Early exits stop the process when
//! the bound is narrow enough or the branch count hits its limit.

use crate::error::{Error, Result};
use crate::model::{
    Branch, BranchClass, BranchSet, ComponentSpace, Rule, RuleSet, State, Verdict,
};
use crate::probability::{branch_probability, conditional_rule_probability};

/// Termination parameters for decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationParams {
    /// Relative unknown-mass threshold: stop once
    /// `P(B_u) / P(B_f) < epsilon_u` (with positive failure mass).
    /// Zero requests exact decomposition.
    pub epsilon_u: f64,
    /// Maximum number of branches; `None` is unbounded.
    pub max_branches: Option<usize>,
}

impl TerminationParams {
    pub fn new(epsilon_u: f64, max_branches: Option<usize>) -> Result<Self> {
        if !(epsilon_u >= 0.0) {
            return Err(Error::invalid("epsilon_u must be non-negative"));
        }
        if max_branches == Some(0) {
            return Err(Error::invalid("max_branches must be positive"));
        }
        Ok(TerminationParams {
            epsilon_u,
            max_branches,
        })
    }

    /// Exact evaluation: no early exits.
    pub fn exact() -> Self {
        TerminationParams {
            epsilon_u: 0.0,
            max_branches: None,
        }
    }
}

impl Default for TerminationParams {
    fn default() -> Self {
        TerminationParams {
            epsilon_u: 0.05,
            max_branches: Some(50_000),
        }
    }
}

/// Why a decomposition call returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionStatus {
    /// Every branch is specified; the failure probability is exact.
    AllSpecified,
    /// Unspecified branches remain but none can be split with the current
    /// rules; the rule evaluation step must supply a new rule.
    NeedsNewRule,
    /// The unknown-to-failure mass ratio dropped below `epsilon_u`.
    BoundConverged,
    /// The branch count reached `max_branches`.
    BranchLimitReached,
}

/// Result of one decomposition call.
#[derive(Debug, Clone)]
pub struct DecompositionOutcome {
    pub branches: BranchSet,
    pub status: DecompositionStatus,
    /// Number of completed passes over the branch list.
    pub passes: u64,
}

/// The compatible, reduced rules of a branch.
///
/// A rule is compatible when its condition can still be met inside the
/// branch; it is then reduced to the conditions not already forced by the
/// branch bounds. Rules whose reduction is empty are excluded: the branch
/// bound already satisfies them, so the branch would have been specified.
pub fn compatible_reduced_rules(branch: &Branch, rules: &RuleSet) -> Vec<Rule> {
    let mut reduced = Vec::new();
    for rule in rules.iter() {
        let compatible = rule.conditions().all(|(n, r)| match rule.verdict() {
            Verdict::Fail => r >= branch.lower[n],
            Verdict::Survive => r <= branch.upper[n],
            Verdict::Unknown => unreachable!(),
        });
        if !compatible {
            continue;
        }
        let kept: Vec<(usize, State)> = rule
            .conditions()
            .filter(|&(n, r)| match rule.verdict() {
                Verdict::Fail => r < branch.upper[n],
                Verdict::Survive => r > branch.lower[n],
                Verdict::Unknown => unreachable!(),
            })
            .collect();
        if kept.is_empty() {
            continue;
        }
        if kept.len() == rule.scope_len() {
            reduced.push(rule.clone());
        } else {
            reduced.push(Rule::from_reduction(rule.verdict(), kept));
        }
    }
    reduced
}

/// Picks the component and state `x_d` used to split a branch.
///
/// Components are ordered by how often they appear in the reduced rules;
/// rules are ordered by their conditional probability on the branch. The
/// first (component, rule) hit yields `x_d = r + 1` for failure rules and
/// `x_d = r` for survival rules.
pub fn select_decomposition_state(
    branch: &Branch,
    reduced_rules: &[Rule],
    space: &ComponentSpace,
) -> Result<(usize, State)> {
    if reduced_rules.is_empty() {
        return Err(Error::contract(
            "cannot select a decomposition state without reduced rules",
        ));
    }

    // Appearance counts; ties broken by ascending component index via the
    // stable sort over an index-ordered list.
    let mut counts = vec![0usize; space.n_components()];
    for rule in reduced_rules {
        for n in rule.scope() {
            counts[n] += 1;
        }
    }
    let mut components: Vec<usize> = (0..space.n_components())
        .filter(|&n| counts[n] > 0)
        .collect();
    components.sort_by(|&a, &b| counts[b].cmp(&counts[a]));

    // Rules by descending conditional probability; ties keep insertion order.
    let mut scored: Vec<(usize, f64)> = reduced_rules
        .iter()
        .enumerate()
        .map(|(i, rule)| Ok((i, conditional_rule_probability(space, rule, branch)?)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));

    for &n in &components {
        for &(i, _) in &scored {
            let rule = &reduced_rules[i];
            let Some(r) = rule.condition_on(n) else {
                continue;
            };
            let (l, u) = (branch.lower[n], branch.upper[n]);
            match rule.verdict() {
                Verdict::Fail if l <= r && r < u => return Ok((n, r + 1)),
                Verdict::Survive if l < r && r <= u => return Ok((n, r)),
                _ => {}
            }
        }
    }
    // Reduced-compatible rules always satisfy the selection inequalities.
    Err(Error::contract(
        "no selectable decomposition state despite non-empty reduced rules",
    ))
}

/// Decides the verdict of a full component vector from the rule set alone;
/// the system function is never called.
pub fn infer_verdict(x: &[State], rules: &RuleSet) -> Verdict {
    let fails = rules
        .failure_rules()
        .iter()
        .any(|rule| rule.conditions().all(|(n, r)| x[n] <= r));
    if fails {
        return Verdict::Fail;
    }
    let survives = rules
        .survival_rules()
        .iter()
        .any(|rule| rule.conditions().all(|(n, r)| x[n] >= r));
    if survives {
        Verdict::Survive
    } else {
        Verdict::Unknown
    }
}

/// Splits a branch at `x_d` on the given component into a lower child
/// (upper bound capped at `x_d - 1`) and an upper child (lower bound raised
/// to `x_d`). Corner verdicts are inferred from the rules and masses
/// recomputed from the space.
pub fn split_branch(
    branch: &Branch,
    component: usize,
    x_d: State,
    rules: &RuleSet,
    space: &ComponentSpace,
) -> Result<(Branch, Branch)> {
    if component >= branch.lower.len() {
        return Err(Error::contract("split component out of range"));
    }
    let (l, u) = (branch.lower[component], branch.upper[component]);
    if !(l < x_d && x_d <= u) {
        return Err(Error::contract(format!(
            "x_d={x_d} outside the splittable range ({l}, {u}] of component {component}"
        )));
    }

    let mut lower_upper = branch.upper.clone();
    lower_upper[component] = x_d - 1;
    let mut upper_lower = branch.lower.clone();
    upper_lower[component] = x_d;

    let lower_child = make_branch(branch.lower.clone(), lower_upper, rules, space)?;
    let upper_child = make_branch(upper_lower, branch.upper.clone(), rules, space)?;
    debug_assert!(
        (lower_child.probability + upper_child.probability - branch.probability).abs() <= 1e-12
            || branch.probability == 0.0,
        "child masses do not sum to the parent mass"
    );
    Ok((lower_child, upper_child))
}

/// Builds a branch with rule-inferred corner verdicts and recomputed mass.
pub(crate) fn make_branch(
    lower: Vec<State>,
    upper: Vec<State>,
    rules: &RuleSet,
    space: &ComponentSpace,
) -> Result<Branch> {
    let p = branch_probability(space, &lower, &upper)?;
    let vl = infer_verdict(&lower, rules);
    let vu = infer_verdict(&upper, rules);
    Branch::new(lower, upper, vl, vu, p)
}

/// Decomposes the space under the given rules until a termination status.
pub fn decompose(
    space: &ComponentSpace,
    rules: &RuleSet,
    params: &TerminationParams,
    warm_start: Option<BranchSet>,
) -> Result<DecompositionOutcome> {
    decompose_with_observer(space, rules, params, warm_start, |_| {})
}

/// A branch together with its per-call bookkeeping: once a branch has no
/// compatible reduced rules it stays saturated for the rest of the call,
/// since the rule set is fixed.
struct Work {
    branch: Branch,
    saturated: bool,
}

/// Read-only view of the working branch set at a pass boundary.
pub struct PassView<'a> {
    work: &'a [Work],
}

impl PassView<'_> {
    pub fn branches(&self) -> impl Iterator<Item = &Branch> {
        self.work.iter().map(|w| &w.branch)
    }

    pub fn len(&self) -> usize {
        self.work.len()
    }

    pub fn is_empty(&self) -> bool {
        self.work.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.branches().map(|b| b.probability).sum()
    }
}

/// `decompose` with a callback invoked at every pass boundary (after the
/// initial branch set is built and after each completed pass); used by
/// invariant-checking tests.
pub fn decompose_with_observer(
    space: &ComponentSpace,
    rules: &RuleSet,
    params: &TerminationParams,
    warm_start: Option<BranchSet>,
    mut observer: impl FnMut(PassView<'_>),
) -> Result<DecompositionOutcome> {
    let initial: Vec<Branch> = match warm_start {
        Some(set) => set
            .into_iter()
            // Verdicts inferred under an older rule set stay valid (rules
            // only ever decide more vectors), but unknown corners may now be
            // decidable.
            .map(|b| refresh_branch(b, rules, space))
            .collect::<Result<_>>()?,
        None => vec![make_branch(
            space.worst_vector(),
            space.best_vector(),
            rules,
            space,
        )?],
    };
    let mut work: Vec<Work> = initial
        .into_iter()
        .map(|branch| Work {
            branch,
            saturated: false,
        })
        .collect();

    // Running masses over the combined working set (processed + remaining).
    let mut mass = Masses::of(work.iter().map(|w| &w.branch));
    let mut passes = 0u64;
    observer(PassView { work: &work });

    let finish = |work: Vec<Work>, status: DecompositionStatus, passes: u64| {
        DecompositionOutcome {
            branches: BranchSet::from_branches(work.into_iter().map(|w| w.branch).collect()),
            status,
            passes,
        }
    };

    loop {
        // Highest probability first; stable, so equal masses keep insertion
        // order.
        work.sort_by(|a, b| {
            b.branch
                .probability
                .partial_cmp(&a.branch.probability)
                .unwrap_or(std::cmp::Ordering::Equal)
        });

        let mut done: Vec<Work> = Vec::with_capacity(work.len());
        let mut split_happened = false;
        let mut remaining = work.into_iter();

        let early = loop {
            let Some(item) = remaining.next() else {
                break None;
            };
            let count = done.len() + 1 + remaining.len();
            if let Some(limit) = params.max_branches {
                if count >= limit {
                    done.push(item);
                    break Some(DecompositionStatus::BranchLimitReached);
                }
            }
            // With zero failure mass the ratio is +infinity, never below the
            // threshold.
            if mass.failure > 0.0 && mass.unknown / mass.failure < params.epsilon_u {
                done.push(item);
                break Some(DecompositionStatus::BoundConverged);
            }

            if item.branch.is_specified() || item.saturated {
                done.push(item);
                continue;
            }
            let reduced = compatible_reduced_rules(&item.branch, rules);
            if reduced.is_empty() {
                done.push(Work {
                    branch: item.branch,
                    saturated: true,
                });
                continue;
            }
            let (component, x_d) = select_decomposition_state(&item.branch, &reduced, space)?;
            let (low, high) = split_branch(&item.branch, component, x_d, rules, space)?;
            mass.replace(&item.branch, &low, &high);
            done.push(Work {
                branch: low,
                saturated: false,
            });
            done.push(Work {
                branch: high,
                saturated: false,
            });
            split_happened = true;
        };

        if let Some(status) = early {
            done.extend(remaining);
            observer(PassView { work: &done });
            return Ok(finish(done, status, passes));
        }

        passes += 1;
        work = done;
        observer(PassView { work: &work });

        if work.iter().all(|w| w.branch.is_specified()) {
            return Ok(finish(work, DecompositionStatus::AllSpecified, passes));
        }
        if !split_happened {
            return Ok(finish(work, DecompositionStatus::NeedsNewRule, passes));
        }
    }
}

fn refresh_branch(b: Branch, rules: &RuleSet, space: &ComponentSpace) -> Result<Branch> {
    let p = branch_probability(space, &b.lower, &b.upper)?;
    let vl = if b.verdict_lower.is_decided() {
        b.verdict_lower
    } else {
        infer_verdict(&b.lower, rules)
    };
    let vu = if b.verdict_upper.is_decided() {
        b.verdict_upper
    } else {
        infer_verdict(&b.upper, rules)
    };
    Branch::new(b.lower, b.upper, vl, vu, p)
}

#[derive(Debug, Clone, Copy)]
struct Masses {
    failure: f64,
    unknown: f64,
}

impl Masses {
    fn of<'a>(branches: impl Iterator<Item = &'a Branch>) -> Self {
        let mut m = Masses {
            failure: 0.0,
            unknown: 0.0,
        };
        for b in branches {
            m.add(b, 1.0);
        }
        m
    }

    fn add(&mut self, b: &Branch, sign: f64) {
        match b.class() {
            BranchClass::Failure => self.failure += sign * b.probability,
            BranchClass::Unspecified => self.unknown += sign * b.probability,
            BranchClass::Survival => {}
        }
    }

    fn replace(&mut self, parent: &Branch, low: &Branch, high: &Branch) {
        self.add(parent, -1.0);
        self.add(low, 1.0);
        self.add(high, 1.0);
        self.failure = self.failure.max(0.0);
        self.unknown = self.unknown.max(0.0);
    }
}
