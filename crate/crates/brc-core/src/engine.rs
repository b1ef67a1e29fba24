//! The analysis driver: alternates rule evaluation and decomposition until
//! a termination status, maintaining the non-dominated rule set and run
//! statistics.
//!
//! Each iteration decomposes the space under the current rules. When no
//! branch can be split any further, the driver picks the component vector
//! most likely to yield a high-probability rule, evaluates the system
//! function there exactly once, and folds the resulting rule back in.

use std::time::{Duration, Instant};

use crate::decomposition::{
    decompose, DecompositionOutcome, DecompositionStatus, TerminationParams,
};
use crate::error::{Error, Result};
use crate::model::{
    satisfies, BranchClass, BranchSet, ComponentSpace, Rule, RuleSet, State, SystemEvaluation,
    Verdict,
};

/// A deterministic system performance function.
///
/// Implementations must be coherent: improving any component state never
/// turns survival into failure. Violations are detected opportunistically
/// and reported as [`Error::Coherency`].
pub trait SystemFunction {
    fn evaluate(&self, x: &[State]) -> Result<SystemEvaluation>;
}

impl<F> SystemFunction for F
where
    F: Fn(&[State]) -> Result<SystemEvaluation>,
{
    fn evaluate(&self, x: &[State]) -> Result<SystemEvaluation> {
        self(x)
    }
}

/// Counters and timings for one driver run.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub system_function_calls: u64,
    pub failure_rules_found: u64,
    pub survival_rules_found: u64,
    /// Total decomposition passes across all decomposition calls.
    pub passes: u64,
    pub wall_time: Duration,
    pub decomposition_time: Duration,
    pub system_function_time: Duration,
}

impl RunStats {
    pub fn rules_found(&self) -> u64 {
        self.failure_rules_found + self.survival_rules_found
    }
}

/// Result of a completed driver run.
#[derive(Debug, Clone)]
pub struct BrcRun {
    pub outcome: DecompositionOutcome,
    pub rules: RuleSet,
    pub stats: RunStats,
}

/// Picks the next component vector for a system-function evaluation: the
/// upper bound of the highest-mass branch with an unknown upper verdict,
/// falling back to the first unknown lower bound. Survival states usually
/// carry more probability, so upper bounds lead to higher-probability rules.
pub fn select_query_vector(branches: &BranchSet) -> Result<Vec<State>> {
    let mut order: Vec<&crate::model::Branch> = branches.iter().collect();
    order.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if let Some(b) = order.iter().find(|b| b.verdict_upper == Verdict::Unknown) {
        return Ok(b.upper.clone());
    }
    if let Some(b) = order.iter().find(|b| b.verdict_lower == Verdict::Unknown) {
        return Ok(b.lower.clone());
    }
    Err(Error::contract(
        "all branches are specified; no query vector exists",
    ))
}

/// Derives a rule from an evaluated vector when the system function offers
/// none: survival keeps every component above its worst state, failure every
/// component below its best state. The dropped states cannot contribute to
/// the verdict.
pub fn extract_fallback_rule(
    x: &[State],
    state: Verdict,
    space: &ComponentSpace,
) -> Result<Rule> {
    if !state.is_decided() {
        return Err(Error::contract("fallback rules need a decided verdict"));
    }
    space.validate_vector(x)?;
    let conditions = x.iter().copied().enumerate();
    Rule::new(state, conditions, space).map_err(|e| match e {
        Error::Degenerate(_) => {
            let which = match state {
                Verdict::Survive => "the all-worst vector survives",
                _ => "the all-best vector fails",
            };
            Error::Degenerate(format!(
                "{which}: the system state is constant and the system degenerate"
            ))
        }
        other => other,
    })
}

/// Outcome of inserting a rule into the rule set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleUpdate {
    /// Inserted; `removed` rules were dominated by the new one.
    Inserted { removed: usize },
    /// The new rule is already present or dominated by a member; no-op.
    Rejected,
}

/// Inserts a rule and removes every member it dominates, keeping the set
/// non-dominated. A rule dominated by (or equal to) an existing member is
/// rejected without changing the set.
pub fn update_rule_set(rules: &mut RuleSet, new_rule: Rule) -> RuleUpdate {
    if rules.makes_redundant(&new_rule) {
        return RuleUpdate::Rejected;
    }
    let before = rules.len();
    rules.retain(new_rule.verdict(), |r| !new_rule.dominates(r));
    let removed = before - rules.len();
    rules.push_unchecked(new_rule);
    RuleUpdate::Inserted { removed }
}

/// Runs the full driver loop until decomposition terminates for a reason
/// other than needing a new rule.
pub fn run_brc(
    space: &ComponentSpace,
    system_function: &dyn SystemFunction,
    params: &TerminationParams,
) -> Result<BrcRun> {
    let started = Instant::now();
    let mut rules = RuleSet::new();
    let mut stats = RunStats::default();

    loop {
        let t = Instant::now();
        let outcome = decompose(space, &rules, params, None)?;
        stats.decomposition_time += t.elapsed();
        stats.passes += outcome.passes;

        if outcome.status != DecompositionStatus::NeedsNewRule {
            stats.wall_time = started.elapsed();
            return Ok(BrcRun {
                outcome,
                rules,
                stats,
            });
        }

        let x = select_query_vector(&outcome.branches)?;
        debug_assert_eq!(
            crate::decomposition::infer_verdict(&x, &rules),
            Verdict::Unknown
        );

        let t = Instant::now();
        let eval = system_function.evaluate(&x)?;
        stats.system_function_time += t.elapsed();
        stats.system_function_calls += 1;

        let rule = new_rule_for(&x, &eval, space)?;
        check_coherency(&rule, &outcome.branches)?;
        match update_rule_set(&mut rules, rule.clone()) {
            RuleUpdate::Inserted { .. } => {}
            RuleUpdate::Rejected => {
                // A stale extracted rule cannot decide the queried vector
                // without contradicting its unknown status; fall back to the
                // vector itself to guarantee progress.
                let fallback = extract_fallback_rule(&x, eval.state, space)?;
                match update_rule_set(&mut rules, fallback) {
                    RuleUpdate::Inserted { .. } => {}
                    RuleUpdate::Rejected => {
                        return Err(Error::Coherency {
                            witness: x,
                            detail: format!(
                                "the queried vector was undecided yet its rule {rule} \
                                 is already implied by the rule set"
                            ),
                        });
                    }
                }
            }
        }
        match eval.state {
            Verdict::Fail => stats.failure_rules_found += 1,
            Verdict::Survive => stats.survival_rules_found += 1,
            Verdict::Unknown => unreachable!(),
        }
    }
}

/// Validates the system evaluation and chooses the rule to insert: the
/// extracted rule when it is present and decides the queried vector, the
/// fallback rule otherwise.
fn new_rule_for(
    x: &[State],
    eval: &SystemEvaluation,
    space: &ComponentSpace,
) -> Result<Rule> {
    if !eval.state.is_decided() {
        return Err(Error::SystemFunction(
            "the system function returned an unknown state".into(),
        ));
    }
    if let Some(rule) = &eval.extracted_rule {
        if rule.verdict() != eval.state {
            return Err(Error::SystemFunction(format!(
                "extracted rule {rule} disagrees with the evaluated state {}",
                eval.state
            )));
        }
        if satisfies(x, rule)? {
            return Ok(rule.clone());
        }
        // The extraction does not cover the queried vector; ignore it.
    }
    extract_fallback_rule(x, eval.state, space)
}

/// A new rule must not match inside a branch already specified with the
/// opposite verdict; such a contradiction proves the system function is
/// incoherent. Returns the witness vector on failure.
fn check_coherency(rule: &Rule, branches: &BranchSet) -> Result<()> {
    let (class, detail) = match rule.verdict() {
        Verdict::Fail => (BranchClass::Survival, "failure rule matches inside a survival branch"),
        Verdict::Survive => (BranchClass::Failure, "survival rule matches inside a failure branch"),
        Verdict::Unknown => unreachable!(),
    };
    for branch in branches.of_class(class) {
        let witness = match rule.verdict() {
            // The rule's matching set intersects the box iff the condition
            // is reachable from the box's near corner.
            Verdict::Fail => {
                if rule.conditions().all(|(n, r)| branch.lower[n] <= r) {
                    let mut w = branch.lower.clone();
                    for (n, r) in rule.conditions() {
                        w[n] = r.min(branch.upper[n]);
                    }
                    Some(w)
                } else {
                    None
                }
            }
            Verdict::Survive => {
                if rule.conditions().all(|(n, r)| r <= branch.upper[n]) {
                    let mut w = branch.upper.clone();
                    for (n, r) in rule.conditions() {
                        w[n] = r.max(branch.lower[n]);
                    }
                    Some(w)
                } else {
                    None
                }
            }
            Verdict::Unknown => unreachable!(),
        };
        if let Some(witness) = witness {
            return Err(Error::Coherency {
                witness,
                detail: format!("{detail} ({rule})"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Branch;
    use crate::probability::branch_probability;
    use crate::sysfun::{ConnectivityPhi, NetworkTopology};

    fn toy_space() -> ComponentSpace {
        ComponentSpace::binary(&[0.1, 0.2, 0.3]).unwrap()
    }

    /// The two-path example network: nodes 1-2 joined by edge 1, nodes 2-3
    /// joined by parallel edges 2 and 3.
    fn toy_phi(space: &ComponentSpace) -> ConnectivityPhi {
        let topology = NetworkTopology::new(3, vec![(0, 1), (1, 2), (1, 2)]).unwrap();
        ConnectivityPhi::new(topology, 0, 2, space).unwrap()
    }

    #[test]
    fn select_query_prefers_upper_bounds_by_mass() {
        let sp = toy_space();
        let root = Branch::new(
            sp.worst_vector(),
            sp.best_vector(),
            Verdict::Unknown,
            Verdict::Unknown,
            1.0,
        )
        .unwrap();
        let x = select_query_vector(&BranchSet::from_branches(vec![root])).unwrap();
        assert_eq!(x, vec![1, 1, 1]);
    }

    #[test]
    fn select_query_falls_back_to_lower_bounds() {
        let b1 = Branch::new(vec![0, 0, 0], vec![0, 1, 1], Verdict::Unknown, Verdict::Survive, 0.1)
            .unwrap();
        let b2 = Branch::new(vec![1, 0, 0], vec![1, 1, 1], Verdict::Unknown, Verdict::Survive, 0.9)
            .unwrap();
        let x = select_query_vector(&BranchSet::from_branches(vec![b1, b2])).unwrap();
        assert_eq!(x, vec![1, 0, 0]);
    }

    #[test]
    fn select_query_point_branch() {
        let b = Branch::new(vec![1, 0, 0], vec![1, 0, 0], Verdict::Unknown, Verdict::Unknown, 0.05)
            .unwrap();
        let x = select_query_vector(&BranchSet::from_branches(vec![b])).unwrap();
        assert_eq!(x, vec![1, 0, 0]);
    }

    #[test]
    fn fallback_rules_strip_uninformative_states() {
        let sp = toy_space();
        let r = extract_fallback_rule(&[1, 1, 0], Verdict::Survive, &sp).unwrap();
        assert_eq!(r.conditions().collect::<Vec<_>>(), vec![(0, 1), (1, 1)]);

        let r = extract_fallback_rule(&[0, 0, 1], Verdict::Fail, &sp).unwrap();
        assert_eq!(r.conditions().collect::<Vec<_>>(), vec![(0, 0), (1, 0)]);

        let r = extract_fallback_rule(&[0, 1, 1], Verdict::Fail, &sp).unwrap();
        assert_eq!(r.conditions().collect::<Vec<_>>(), vec![(0, 0)]);
    }

    #[test]
    fn fallback_rules_reject_degenerate_systems() {
        let sp = toy_space();
        assert!(matches!(
            extract_fallback_rule(&[0, 0, 0], Verdict::Survive, &sp),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            extract_fallback_rule(&[1, 1, 1], Verdict::Fail, &sp),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn update_removes_dominated_rules() {
        let sp = toy_space();
        let mut rules = RuleSet::new();
        rules.push_unchecked(Rule::failure([(0, 0), (1, 0)], &sp).unwrap());
        let update = update_rule_set(&mut rules, Rule::failure([(0, 0)], &sp).unwrap());
        assert_eq!(update, RuleUpdate::Inserted { removed: 1 });
        assert_eq!(rules.len(), 1);
        assert_eq!(
            rules.failure_rules()[0].conditions().collect::<Vec<_>>(),
            vec![(0, 0)]
        );
    }

    #[test]
    fn update_rejects_duplicates_and_dominated() {
        let sp = toy_space();
        let mut rules = RuleSet::new();
        let rule = Rule::survival([(0, 1), (1, 1)], &sp).unwrap();
        assert!(matches!(
            update_rule_set(&mut rules, rule.clone()),
            RuleUpdate::Inserted { .. }
        ));
        assert_eq!(update_rule_set(&mut rules, rule.clone()), RuleUpdate::Rejected);
        // A weaker rule (superset scope, same states) is dominated.
        let weaker = Rule::survival([(0, 1), (1, 1), (2, 1)], &sp).unwrap();
        assert_eq!(update_rule_set(&mut rules, weaker), RuleUpdate::Rejected);
        assert_eq!(rules.len(), 1);
    }

    #[test]
    fn multi_state_dominance_matches_satisfying_set_enumeration() {
        // 2-component, 3-state space. Dominance is containment of the
        // satisfying sets, so nested scopes alone are not enough: the
        // narrow-scope rule must also be no stricter on its scope.
        let sp = ComponentSpace::new(vec![vec![0.2, 0.3, 0.5]; 2]).unwrap();
        let sat = |rule: &Rule| -> Vec<Vec<State>> {
            let mut out = Vec::new();
            for s0 in 0..3u8 {
                for s1 in 0..3u8 {
                    if satisfies(&[s0, s1], rule).unwrap() {
                        out.push(vec![s0, s1]);
                    }
                }
            }
            out
        };
        let contains = |outer: &[Vec<State>], inner: &[Vec<State>]| {
            inner.iter().all(|x| outer.contains(x))
        };

        // (x1^1, fail) absorbs (x1^0, x2^1, fail): everything the second
        // matches has x1 <= 0 <= 1.
        let a = Rule::failure([(0, 1)], &sp).unwrap();
        let b = Rule::failure([(0, 0), (1, 1)], &sp).unwrap();
        assert!(contains(&sat(&a), &sat(&b)));
        assert!(a.dominates(&b));
        let mut rules = RuleSet::new();
        update_rule_set(&mut rules, b);
        assert!(matches!(
            update_rule_set(&mut rules, a),
            RuleUpdate::Inserted { removed: 1 }
        ));
        assert_eq!(rules.len(), 1);

        // (x1^0, fail) vs (x1^1, x2^0, fail): scopes nest but the states
        // cross, so neither satisfying set contains the other; both kept.
        let c = Rule::failure([(0, 0)], &sp).unwrap();
        let d = Rule::failure([(0, 1), (1, 0)], &sp).unwrap();
        assert!(!contains(&sat(&c), &sat(&d)));
        assert!(!contains(&sat(&d), &sat(&c)));
        let mut rules = RuleSet::new();
        update_rule_set(&mut rules, c);
        assert!(matches!(
            update_rule_set(&mut rules, d),
            RuleUpdate::Inserted { removed: 0 }
        ));
        assert_eq!(rules.len(), 2);
        assert!(rules.dominated_pairs().is_empty());
    }

    #[test]
    fn didactic_run_reproduces_the_golden_trace() {
        let sp = toy_space();
        let phi = toy_phi(&sp);
        let run = run_brc(&sp, &phi, &TerminationParams::exact()).unwrap();

        assert_eq!(run.outcome.status, DecompositionStatus::AllSpecified);
        assert_eq!(run.stats.system_function_calls, 4);
        assert_eq!(run.rules.len(), 4);

        let expected = [
            Rule::survival([(0, 1), (1, 1)], &sp).unwrap(),
            Rule::survival([(0, 1), (2, 1)], &sp).unwrap(),
            Rule::failure([(0, 0)], &sp).unwrap(),
            Rule::failure([(1, 0), (2, 0)], &sp).unwrap(),
        ];
        for rule in &expected {
            assert!(run.rules.contains(rule), "missing rule {rule}");
        }

        let pf = run.outcome.branches.failure_mass();
        assert!((pf - 0.154).abs() < 1e-12);
    }

    #[test]
    fn series_system_matches_closed_form() {
        // Failure iff any component is down; fallback rules only.
        let p0 = [0.05, 0.1, 0.2, 0.15, 0.3];
        let sp = ComponentSpace::binary(&p0).unwrap();
        let phi = |x: &[State]| -> Result<SystemEvaluation> {
            Ok(if x.iter().all(|&s| s == 1) {
                SystemEvaluation::survive()
            } else {
                SystemEvaluation::fail()
            })
        };
        let run = run_brc(&sp, &phi, &TerminationParams::exact()).unwrap();
        assert_eq!(run.outcome.status, DecompositionStatus::AllSpecified);
        let expect = 1.0 - p0.iter().map(|p| 1.0 - p).product::<f64>();
        let pf = run.outcome.branches.failure_mass();
        assert!((pf - expect).abs() < 1e-12);
    }

    #[test]
    fn every_call_adds_exactly_one_rule() {
        let sp = toy_space();
        let phi = toy_phi(&sp);
        let run = run_brc(&sp, &phi, &TerminationParams::exact()).unwrap();
        assert_eq!(run.stats.rules_found(), run.stats.system_function_calls);
    }

    #[test]
    fn incoherent_system_function_is_detected() {
        // Survives only when component 0 is down: anti-monotone.
        let sp = ComponentSpace::binary(&[0.5, 0.5]).unwrap();
        let phi = |x: &[State]| -> Result<SystemEvaluation> {
            Ok(if x[0] == 0 {
                SystemEvaluation::survive()
            } else {
                SystemEvaluation::fail()
            })
        };
        let err = run_brc(&sp, &phi, &TerminationParams::exact()).unwrap_err();
        assert!(matches!(err, Error::Coherency { .. } | Error::Degenerate(_)));
    }

    #[test]
    fn branch_masses_satisfy_model_invariant() {
        let sp = toy_space();
        let phi = toy_phi(&sp);
        let run = run_brc(&sp, &phi, &TerminationParams::exact()).unwrap();
        for b in run.outcome.branches.iter() {
            let p = branch_probability(&sp, &b.lower, &b.upper).unwrap();
            assert!((p - b.probability).abs() < 1e-12);
        }
    }
}
