//! Domain types shared by all modules: component spaces, rules, branches,
//! verdicts, and system-function results.
//!
//! A *component vector* assigns one discrete state to each of the `N`
//! components of a system; states are ordered so that a higher state never
//! degrades the system (coherency). A [`Rule`] is a sparse partial
//! assignment plus a verdict: a failure rule asserts that every vector lying
//! at or below its condition (on the conditioned components) fails, a
//! survival rule the symmetric `>=` statement. A [`Branch`] is a
//! hyper-rectangle `[lower, upper]` of vectors with the verdicts recorded at
//! both corners and its probability mass.

use std::fmt;

use crate::error::{Error, Result};

/// Discrete component state. States run `0..K_n`, worst to best.
pub type State = u8;

/// System verdict at a component vector or branch corner.
///
/// `Fail < Survive` in the coherency order; `Unknown` marks corners not yet
/// decided by the current rule set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Fail,
    Survive,
    Unknown,
}

impl Verdict {
    pub fn is_decided(self) -> bool {
        !matches!(self, Verdict::Unknown)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Fail => write!(f, "fail"),
            Verdict::Survive => write!(f, "survive"),
            Verdict::Unknown => write!(f, "unknown"),
        }
    }
}

/// The discrete component state space together with per-component marginal
/// PMFs. Cumulative sums are precomputed so interval probabilities are O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpace {
    /// Number of states per component (`K_n >= 2`).
    n_states: Vec<State>,
    /// Marginal PMF per component, one probability per state.
    pmf: Vec<Vec<f64>>,
    /// `cum[n][k] = P(X_n <= k-1)`, with `cum[n][0] = 0`.
    cum: Vec<Vec<f64>>,
}

const PMF_SUM_TOL: f64 = 1e-12;

impl ComponentSpace {
    /// Builds a space from per-component marginal PMFs.
    pub fn new(pmf: Vec<Vec<f64>>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::invalid("component space needs at least one component"));
        }
        let mut n_states = Vec::with_capacity(pmf.len());
        let mut cum = Vec::with_capacity(pmf.len());
        for (n, p) in pmf.iter().enumerate() {
            if p.len() < 2 {
                return Err(Error::invalid(format!(
                    "component {n} has {} state(s); at least 2 are required",
                    p.len()
                )));
            }
            if p.len() > usize::from(State::MAX) + 1 {
                return Err(Error::invalid(format!("component {n} has too many states")));
            }
            if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "component {n} has a negative or non-finite probability"
                )));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > PMF_SUM_TOL {
                return Err(Error::invalid(format!(
                    "component {n} marginal sums to {total}, not 1"
                )));
            }
            let mut c = Vec::with_capacity(p.len() + 1);
            c.push(0.0);
            let mut acc = 0.0;
            for &v in p {
                acc += v;
                c.push(acc);
            }
            n_states.push(p.len() as State);
            cum.push(c);
        }
        Ok(ComponentSpace { n_states, pmf, cum })
    }

    /// Convenience constructor for binary components from failure
    /// probabilities `P(x_n = 0)`.
    pub fn binary(failure_probabilities: &[f64]) -> Result<Self> {
        ComponentSpace::new(
            failure_probabilities
                .iter()
                .map(|&p| vec![p, 1.0 - p])
                .collect(),
        )
    }

    pub fn n_components(&self) -> usize {
        self.n_states.len()
    }

    /// Number of states of component `n`.
    pub fn n_states(&self, n: usize) -> State {
        self.n_states[n]
    }

    /// Best (highest) state of component `n`.
    pub fn best_state(&self, n: usize) -> State {
        self.n_states[n] - 1
    }

    pub fn marginal(&self, n: usize) -> &[f64] {
        &self.pmf[n]
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.pmf
    }

    /// `P(X_n = state)`.
    pub fn state_probability(&self, n: usize, state: State) -> f64 {
        self.pmf[n][usize::from(state)]
    }

    /// `P(lo <= X_n <= hi)`, bounds inclusive.
    pub fn interval_probability(&self, n: usize, lo: State, hi: State) -> f64 {
        debug_assert!(lo <= hi && hi < self.n_states[n]);
        self.cum[n][usize::from(hi) + 1] - self.cum[n][usize::from(lo)]
    }

    /// The all-worst component vector.
    pub fn worst_vector(&self) -> Vec<State> {
        vec![0; self.n_components()]
    }

    /// The all-best component vector.
    pub fn best_vector(&self) -> Vec<State> {
        self.n_states.iter().map(|&k| k - 1).collect()
    }

    /// Checks that `x` has one valid state per component.
    pub fn validate_vector(&self, x: &[State]) -> Result<()> {
        if x.len() != self.n_components() {
            return Err(Error::invalid(format!(
                "vector has {} entries for a {}-component space",
                x.len(),
                self.n_components()
            )));
        }
        for (n, &s) in x.iter().enumerate() {
            if s >= self.n_states[n] {
                return Err(Error::invalid(format!(
                    "state {s} out of range for component {n} (K={})",
                    self.n_states[n]
                )));
            }
        }
        Ok(())
    }

    /// True when the other space has the same component count and state
    /// counts (only the marginals may differ).
    pub fn same_structure(&self, other: &ComponentSpace) -> bool {
        self.n_states == other.n_states
    }

    /// Joint probability of a full vector under independent marginals.
    pub fn vector_probability(&self, x: &[State]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(n, &s)| self.state_probability(n, s))
            .product()
    }

    /// Total number of component vectors, or `None` on overflow.
    pub fn n_vectors(&self) -> Option<u128> {
        self.n_states
            .iter()
            .try_fold(1u128, |acc, &k| acc.checked_mul(u128::from(k)))
    }
}

/// A sparse condition plus a verdict: the generalisation of cut-sets and
/// link-sets to multi-state components.
///
/// A failure rule matches every vector `x` with `x[n] <= condition[n]` for
/// all conditioned `n`; a survival rule matches under `>=`. Vacuous
/// conditions (failure at a component's best state, survival at state 0) are
/// stripped at construction. Conditions are kept sorted by component index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    condition: Vec<(usize, State)>,
    verdict: Verdict,
}

impl Rule {
    /// Builds a rule, validating states against the space and stripping
    /// vacuous conditions.
    pub fn new(
        verdict: Verdict,
        conditions: impl IntoIterator<Item = (usize, State)>,
        space: &ComponentSpace,
    ) -> Result<Self> {
        if !verdict.is_decided() {
            return Err(Error::invalid("a rule verdict must be fail or survive"));
        }
        let mut condition: Vec<(usize, State)> = Vec::new();
        for (n, s) in conditions {
            if n >= space.n_components() {
                return Err(Error::invalid(format!(
                    "rule conditions component {n} outside the space"
                )));
            }
            if s >= space.n_states(n) {
                return Err(Error::invalid(format!(
                    "rule state {s} out of range for component {n}"
                )));
            }
            let vacuous = match verdict {
                Verdict::Fail => s == space.best_state(n),
                Verdict::Survive => s == 0,
                Verdict::Unknown => unreachable!(),
            };
            if !vacuous {
                condition.push((n, s));
            }
        }
        condition.sort_unstable_by_key(|&(n, _)| n);
        if condition.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("rule conditions a component twice"));
        }
        if condition.is_empty() {
            return Err(Error::Degenerate(
                "rule condition is empty after stripping vacuous states".into(),
            ));
        }
        Ok(Rule { condition, verdict })
    }

    /// Builds a reduced rule from conditions already validated elsewhere.
    /// Reduction only keeps conditions strictly inside a branch's range, so
    /// they can never be vacuous and no stripping is needed.
    pub(crate) fn from_reduction(
        verdict: Verdict,
        conditions: impl IntoIterator<Item = (usize, State)>,
    ) -> Self {
        let mut condition: Vec<(usize, State)> = conditions.into_iter().collect();
        condition.sort_unstable_by_key(|&(n, _)| n);
        debug_assert!(!condition.is_empty());
        Rule { condition, verdict }
    }

    pub fn failure(
        conditions: impl IntoIterator<Item = (usize, State)>,
        space: &ComponentSpace,
    ) -> Result<Self> {
        Rule::new(Verdict::Fail, conditions, space)
    }

    pub fn survival(
        conditions: impl IntoIterator<Item = (usize, State)>,
        space: &ComponentSpace,
    ) -> Result<Self> {
        Rule::new(Verdict::Survive, conditions, space)
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    /// Conditioned components and their states, in ascending component order.
    pub fn conditions(&self) -> impl Iterator<Item = (usize, State)> + '_ {
        self.condition.iter().copied()
    }

    pub fn scope(&self) -> impl Iterator<Item = usize> + '_ {
        self.condition.iter().map(|&(n, _)| n)
    }

    pub fn scope_len(&self) -> usize {
        self.condition.len()
    }

    pub fn condition_on(&self, n: usize) -> Option<State> {
        self.condition
            .binary_search_by_key(&n, |&(m, _)| m)
            .ok()
            .map(|i| self.condition[i].1)
    }

    /// True when this rule makes `other` redundant: both rules share a
    /// verdict and every vector matched by `other` is matched by `self`.
    /// A rule does not dominate itself.
    pub fn dominates(&self, other: &Rule) -> bool {
        if self.verdict != other.verdict || self == other {
            return false;
        }
        // sat(other) ⊆ sat(self) iff self's scope is contained in other's
        // and self's condition is no stricter there.
        self.condition.iter().all(|&(n, s_self)| {
            other.condition_on(n).is_some_and(|s_other| match self.verdict {
                Verdict::Fail => s_self >= s_other,
                Verdict::Survive => s_self <= s_other,
                Verdict::Unknown => unreachable!(),
            })
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (n, s)) in self.conditions().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "x{}^{}", n + 1, s)?;
        }
        write!(f, ") -> {}", self.verdict)
    }
}

/// True iff `x` matches the rule's condition (`<=` for failure rules, `>=`
/// for survival rules on every conditioned component).
pub fn satisfies(x: &[State], rule: &Rule) -> Result<bool> {
    for (n, r) in rule.conditions() {
        let &s = x
            .get(n)
            .ok_or_else(|| Error::invalid(format!(
                "vector of length {} cannot be matched against component {n}",
                x.len()
            )))?;
        let ok = match rule.verdict() {
            Verdict::Fail => s <= r,
            Verdict::Survive => s >= r,
            Verdict::Unknown => unreachable!(),
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The current non-dominated collection of failure and survival rules.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSet {
    failure: Vec<Rule>,
    survival: Vec<Rule>,
}

impl RuleSet {
    pub fn new() -> Self {
        RuleSet::default()
    }

    pub fn failure_rules(&self) -> &[Rule] {
        &self.failure
    }

    pub fn survival_rules(&self) -> &[Rule] {
        &self.survival
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.failure.iter().chain(self.survival.iter())
    }

    pub fn len(&self) -> usize {
        self.failure.len() + self.survival.len()
    }

    pub fn is_empty(&self) -> bool {
        self.failure.is_empty() && self.survival.is_empty()
    }

    pub fn contains(&self, rule: &Rule) -> bool {
        self.rules_for(rule.verdict()).contains(rule)
    }

    fn rules_for(&self, verdict: Verdict) -> &Vec<Rule> {
        match verdict {
            Verdict::Fail => &self.failure,
            Verdict::Survive => &self.survival,
            Verdict::Unknown => panic!("no rules carry an unknown verdict"),
        }
    }

    fn rules_for_mut(&mut self, verdict: Verdict) -> &mut Vec<Rule> {
        match verdict {
            Verdict::Fail => &mut self.failure,
            Verdict::Survive => &mut self.survival,
            Verdict::Unknown => panic!("no rules carry an unknown verdict"),
        }
    }

    /// True when `rule` is already present or made redundant by a member.
    pub fn makes_redundant(&self, rule: &Rule) -> bool {
        self.rules_for(rule.verdict())
            .iter()
            .any(|r| r == rule || r.dominates(rule))
    }

    /// Inserts without any dominance bookkeeping. The caller is responsible
    /// for keeping the set non-dominated (see `engine::update_rule_set`).
    pub fn push_unchecked(&mut self, rule: Rule) {
        self.rules_for_mut(rule.verdict()).push(rule);
    }

    pub(crate) fn retain(&mut self, verdict: Verdict, keep: impl FnMut(&Rule) -> bool) {
        self.rules_for_mut(verdict).retain(keep);
    }

    /// All ordered pairs `(i, j)` where rule `i` is dominated by rule `j`.
    /// Empty on a properly maintained set.
    pub fn dominated_pairs(&self) -> Vec<(Rule, Rule)> {
        let mut pairs = Vec::new();
        for rules in [&self.failure, &self.survival] {
            for a in rules.iter() {
                for b in rules.iter() {
                    if b.dominates(a) {
                        pairs.push((a.clone(), b.clone()));
                    }
                }
            }
        }
        pairs
    }
}

/// Branch classification by its corner verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchClass {
    Failure,
    Survival,
    Unspecified,
}

/// A hyper-rectangle `[lower, upper]` of component vectors with corner
/// verdicts and probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub lower: Vec<State>,
    pub upper: Vec<State>,
    pub verdict_lower: Verdict,
    pub verdict_upper: Verdict,
    pub probability: f64,
}

impl Branch {
    pub fn new(
        lower: Vec<State>,
        upper: Vec<State>,
        verdict_lower: Verdict,
        verdict_upper: Verdict,
        probability: f64,
    ) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::invalid("branch bounds differ in length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::invalid("branch lower bound exceeds upper bound"));
        }
        // Coherency between corner verdicts.
        if verdict_lower == Verdict::Survive && verdict_upper != Verdict::Survive {
            return Err(Error::invalid(
                "a branch whose lower corner survives must survive at the upper corner",
            ));
        }
        if verdict_upper == Verdict::Fail && verdict_lower != Verdict::Fail {
            return Err(Error::invalid(
                "a branch whose upper corner fails must fail at the lower corner",
            ));
        }
        Ok(Branch {
            lower,
            upper,
            verdict_lower,
            verdict_upper,
            probability,
        })
    }

    pub fn class(&self) -> BranchClass {
        match (self.verdict_lower, self.verdict_upper) {
            (Verdict::Fail, Verdict::Fail) => BranchClass::Failure,
            (Verdict::Survive, Verdict::Survive) => BranchClass::Survival,
            _ => BranchClass::Unspecified,
        }
    }

    pub fn is_specified(&self) -> bool {
        self.class() != BranchClass::Unspecified
    }

    pub fn contains(&self, x: &[State]) -> bool {
        x.len() == self.lower.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&s, (&l, &u))| l <= s && s <= u)
    }

    /// Number of component vectors inside the branch, or `None` on overflow.
    pub fn n_vectors(&self) -> Option<u128> {
        self.lower
            .iter()
            .zip(&self.upper)
            .try_fold(1u128, |acc, (&l, &u)| {
                acc.checked_mul(u128::from(u - l) + 1)
            })
    }
}

/// An ordered, pairwise-disjoint collection of branches covering the space.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BranchSet {
    branches: Vec<Branch>,
}

impl BranchSet {
    pub fn from_branches(branches: Vec<Branch>) -> Self {
        BranchSet { branches }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter()
    }

    pub fn of_class(&self, class: BranchClass) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(move |b| b.class() == class)
    }

    pub fn mass_of(&self, class: BranchClass) -> f64 {
        self.of_class(class).map(|b| b.probability).sum()
    }

    /// `P(B_f)`: total mass of failure branches.
    pub fn failure_mass(&self) -> f64 {
        self.mass_of(BranchClass::Failure)
    }

    /// `P(B_s)`: total mass of survival branches.
    pub fn survival_mass(&self) -> f64 {
        self.mass_of(BranchClass::Survival)
    }

    /// `P(B_u)`: total mass of unspecified branches.
    pub fn unknown_mass(&self) -> f64 {
        self.mass_of(BranchClass::Unspecified)
    }

    pub fn total_mass(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    pub fn has_unspecified(&self) -> bool {
        self.branches.iter().any(|b| !b.is_specified())
    }

    /// The branch containing `x`, if any. Branches are disjoint so at most
    /// one matches.
    pub fn containing(&self, x: &[State]) -> Option<&Branch> {
        self.branches.iter().find(|b| b.contains(x))
    }
}

impl IntoIterator for BranchSet {
    type Item = Branch;
    type IntoIter = std::vec::IntoIter<Branch>;

    fn into_iter(self) -> Self::IntoIter {
        self.branches.into_iter()
    }
}

/// Result of one system-function evaluation: the verdict at the queried
/// vector plus an optional (sub-)minimal rule extracted as a by-product.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemEvaluation {
    pub state: Verdict,
    pub extracted_rule: Option<Rule>,
}

impl SystemEvaluation {
    pub fn new(state: Verdict, extracted_rule: Option<Rule>) -> Result<Self> {
        if !state.is_decided() {
            return Err(Error::invalid(
                "a system evaluation must decide fail or survive",
            ));
        }
        if let Some(rule) = &extracted_rule {
            if rule.verdict() != state {
                return Err(Error::invalid(
                    "extracted rule verdict disagrees with the evaluated state",
                ));
            }
        }
        Ok(SystemEvaluation {
            state,
            extracted_rule,
        })
    }

    pub fn fail() -> Self {
        SystemEvaluation {
            state: Verdict::Fail,
            extracted_rule: None,
        }
    }

    pub fn survive() -> Self {
        SystemEvaluation {
            state: Verdict::Survive,
            extracted_rule: None,
        }
    }
}
