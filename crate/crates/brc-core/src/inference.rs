//! Reliability evaluation over a decomposed branch set: exact probability,
//! deterministic bounds, hybrid Beta-posterior estimation over unspecified
//! branches, and importance-sampling updates under new component
//! distributions.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::decomposition::DecompositionStatus;
use crate::engine::{BrcRun, SystemFunction};
use crate::error::{Error, Result};
use crate::model::{
    Branch, BranchClass, BranchSet, ComponentSpace, State, Verdict,
};
use crate::probability::{branch_probability, UnspecifiedSampler};

/// Samples evaluated during hybrid estimation, stored with their verdicts
/// and the distribution that generated them so later updates can reweight
/// without any system-function call.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleArchive {
    pub samples: Vec<Vec<State>>,
    pub failed: Vec<bool>,
    /// Prior Beta parameters used for the posterior.
    pub alpha: f64,
    pub beta: f64,
    /// Marginals of the distribution the samples were drawn from.
    pub generating_pmf: Vec<Vec<f64>>,
}

impl SampleArchive {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_failed(&self) -> usize {
        self.failed.iter().filter(|&&f| f).count()
    }
}

/// A Beta-posterior estimate of the failure probability, combined with the
/// deterministic masses of the specified branches.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridEstimate {
    pub alpha_post: f64,
    pub beta_post: f64,
    /// `P(B_f)`: the estimate cannot fall below the specified failure mass.
    pub lower_limit: f64,
    /// `1 - P(B_s)`: nor rise above one minus the specified survival mass.
    pub upper_limit: f64,
    pub mean: f64,
    pub variance: f64,
    /// Coefficient of variation: posterior standard deviation over the mean.
    pub cov: f64,
    pub archive: SampleArchive,
    /// Present when sampling stopped early on a system-function error.
    pub error_note: Option<String>,
}

impl HybridEstimate {
    /// Equal-tailed credible interval of the combined estimate.
    pub fn credible_interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(0.0 < level && level < 1.0) {
            return Err(Error::invalid("credible level must lie in (0, 1)"));
        }
        let dist = Beta::new(self.alpha_post, self.beta_post)
            .map_err(|e| Error::invalid(format!("invalid posterior: {e}")))?;
        let tail = (1.0 - level) / 2.0;
        let width = self.upper_limit - self.lower_limit;
        let lo = self.lower_limit + width * dist.inverse_cdf(tail);
        let hi = self.lower_limit + width * dist.inverse_cdf(1.0 - tail);
        Ok((lo, hi))
    }
}

/// The reliability evaluation output: exact, bounded, or hybrid.
#[derive(Debug, Clone, PartialEq)]
pub enum ReliabilityResult {
    Exact { value: f64 },
    Bounds { lower: f64, upper: f64 },
    Hybrid(HybridEstimate),
}

impl ReliabilityResult {
    /// Point summary: the exact value, the bound midpoint, or the hybrid
    /// posterior mean.
    pub fn mean(&self) -> f64 {
        match self {
            ReliabilityResult::Exact { value } => *value,
            ReliabilityResult::Bounds { lower, upper } => 0.5 * (lower + upper),
            ReliabilityResult::Hybrid(h) => h.mean,
        }
    }

    /// Enclosing interval: degenerate for exact values, the deterministic
    /// bound, or the hybrid limits.
    pub fn interval(&self) -> (f64, f64) {
        match self {
            ReliabilityResult::Exact { value } => (*value, *value),
            ReliabilityResult::Bounds { lower, upper } => (*lower, *upper),
            ReliabilityResult::Hybrid(h) => (h.lower_limit, h.upper_limit),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ReliabilityResult::Exact { .. } => "exact",
            ReliabilityResult::Bounds { .. } => "bounds",
            ReliabilityResult::Hybrid(_) => "hybrid",
        }
    }
}

/// Exact failure probability of a fully specified branch set.
pub fn exact_probability(branches: &BranchSet) -> Result<f64> {
    if branches.has_unspecified() {
        return Err(Error::contract(
            "exact evaluation requires a fully specified branch set",
        ));
    }
    Ok(branches.failure_mass())
}

/// Deterministic bounds `[P(B_f), 1 - P(B_s)]`; the width equals the
/// unspecified mass.
pub fn probability_bounds(branches: &BranchSet) -> (f64, f64) {
    (branches.failure_mass(), 1.0 - branches.survival_mass())
}

/// Parameters of hybrid estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridParams {
    /// Beta prior; `alpha = beta = 1` is the conservative default.
    pub alpha: f64,
    pub beta: f64,
    /// Stop once the combined coefficient of variation drops this low.
    pub target_cov: f64,
    pub max_samples: usize,
    pub seed: u64,
    /// Samples per convergence check; does not affect the estimate for a
    /// fixed sample count.
    pub batch_size: usize,
}

impl HybridParams {
    pub fn new(target_cov: f64, max_samples: usize, seed: u64) -> Self {
        HybridParams {
            alpha: 1.0,
            beta: 1.0,
            target_cov,
            max_samples,
            seed,
            batch_size: 256,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return Err(Error::invalid("Beta prior parameters must be positive"));
        }
        if self.max_samples == 0 || self.batch_size == 0 {
            return Err(Error::invalid("sample counts must be positive"));
        }
        Ok(())
    }
}

struct PosteriorSummary {
    alpha_post: f64,
    beta_post: f64,
    mean: f64,
    variance: f64,
    cov: f64,
}

/// Posterior after observing effective counts `m` and `m_f`, combined with
/// the branch masses.
fn combine(
    alpha: f64,
    beta: f64,
    m: f64,
    m_f: f64,
    p_fail: f64,
    p_unknown: f64,
) -> PosteriorSummary {
    let a = alpha + m_f;
    let b = beta + m - m_f;
    let total = a + b;
    let p_fu = a / total;
    let var_fu = a * b / (total * total * (total + 1.0));
    let mean = p_fail + p_unknown * p_fu;
    let variance = p_unknown * p_unknown * var_fu;
    let cov = if mean > 0.0 {
        variance.sqrt() / mean
    } else {
        f64::INFINITY
    };
    PosteriorSummary {
        alpha_post: a,
        beta_post: b,
        mean,
        variance,
        cov,
    }
}

/// Recomputed class masses of a branch set under a (possibly different)
/// space.
fn class_masses(space: &ComponentSpace, branches: &BranchSet) -> Result<(f64, f64, f64)> {
    let mut fail = 0.0;
    let mut survive = 0.0;
    let mut unknown = 0.0;
    for b in branches.iter() {
        let p = branch_probability(space, &b.lower, &b.upper)?;
        match b.class() {
            BranchClass::Failure => fail += p,
            BranchClass::Survival => survive += p,
            BranchClass::Unspecified => unknown += p,
        }
    }
    Ok((fail, survive, unknown))
}

/// Monte Carlo estimation over the unspecified branches with a Beta
/// posterior, combined with the deterministic masses of the specified
/// branches. Branch masses are recomputed under `space`.
pub fn hybrid_estimate(
    space: &ComponentSpace,
    branches: &BranchSet,
    system_function: &dyn SystemFunction,
    params: &HybridParams,
) -> Result<ReliabilityResult> {
    params.validate()?;
    let unspecified: Vec<&Branch> = branches
        .of_class(BranchClass::Unspecified)
        .collect();
    if unspecified.is_empty() {
        return Err(Error::contract(
            "hybrid estimation requires unspecified branches",
        ));
    }
    let (p_fail, p_survive, _) = class_masses(space, branches)?;
    let sampler = UnspecifiedSampler::new(space, unspecified.iter().copied())?;
    let p_unknown = sampler.total_mass();
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);

    let mut samples: Vec<Vec<State>> = Vec::new();
    let mut failed: Vec<bool> = Vec::new();
    let mut n_failed = 0usize;
    let mut error_note = None;

    'sampling: while samples.len() < params.max_samples {
        let batch_end = (samples.len() + params.batch_size).min(params.max_samples);
        while samples.len() < batch_end {
            let x = sampler.draw(&mut rng);
            match system_function.evaluate(&x) {
                Ok(eval) => {
                    let is_failure = eval.state == Verdict::Fail;
                    n_failed += usize::from(is_failure);
                    failed.push(is_failure);
                    samples.push(x);
                }
                Err(e) => {
                    if samples.is_empty() {
                        return Err(e);
                    }
                    error_note = Some(format!(
                        "sampling stopped after {} samples: {e}",
                        samples.len()
                    ));
                    break 'sampling;
                }
            }
        }
        let summary = combine(
            params.alpha,
            params.beta,
            samples.len() as f64,
            n_failed as f64,
            p_fail,
            p_unknown,
        );
        if summary.cov <= params.target_cov {
            break;
        }
    }

    let summary = combine(
        params.alpha,
        params.beta,
        samples.len() as f64,
        n_failed as f64,
        p_fail,
        p_unknown,
    );
    Ok(ReliabilityResult::Hybrid(HybridEstimate {
        alpha_post: summary.alpha_post,
        beta_post: summary.beta_post,
        lower_limit: p_fail,
        upper_limit: 1.0 - p_survive,
        mean: summary.mean,
        variance: summary.variance,
        cov: summary.cov,
        archive: SampleArchive {
            samples,
            failed,
            alpha: params.alpha,
            beta: params.beta,
            generating_pmf: space.marginals().to_vec(),
        },
        error_note,
    }))
}

/// Re-evaluates a result under a new component distribution without any
/// system-function call: branch masses are recomputed directly; hybrid
/// archives are reweighted by importance sampling with the new distribution
/// as the target and the archived generating distribution as the proposal.
///
/// Returns the updated result together with the re-massed branch set.
pub fn update_probability(
    result: &ReliabilityResult,
    branches: &BranchSet,
    old_space: &ComponentSpace,
    new_space: &ComponentSpace,
) -> Result<(ReliabilityResult, BranchSet)> {
    if !old_space.same_structure(new_space) {
        return Err(Error::invalid(
            "the new distribution has a different component structure",
        ));
    }
    let updated_branches: Vec<Branch> = branches
        .iter()
        .map(|b| {
            Ok(Branch {
                probability: branch_probability(new_space, &b.lower, &b.upper)?,
                ..b.clone()
            })
        })
        .collect::<Result<_>>()?;
    let updated_branches = BranchSet::from_branches(updated_branches);

    let updated = match result {
        ReliabilityResult::Exact { .. } => ReliabilityResult::Exact {
            value: exact_probability(&updated_branches)?,
        },
        ReliabilityResult::Bounds { .. } => {
            let (lower, upper) = probability_bounds(&updated_branches);
            ReliabilityResult::Bounds { lower, upper }
        }
        ReliabilityResult::Hybrid(h) => {
            ReliabilityResult::Hybrid(reweight(h, branches, new_space)?)
        }
    };
    Ok((updated, updated_branches))
}

fn reweight(
    estimate: &HybridEstimate,
    branches: &BranchSet,
    new_space: &ComponentSpace,
) -> Result<HybridEstimate> {
    let archive = &estimate.archive;
    if archive.is_empty() {
        return Err(Error::contract(
            "hybrid update requires an archived sample set",
        ));
    }
    let proposal = ComponentSpace::new(archive.generating_pmf.clone())?;
    if !proposal.same_structure(new_space) {
        return Err(Error::invalid(
            "archived samples were generated over a different component structure",
        ));
    }

    let (p_fail, p_survive, p_unknown) = class_masses(new_space, branches)?;
    let (_, _, q_unknown) = class_masses(&proposal, branches)?;
    if p_unknown <= 0.0 {
        return Err(Error::Degenerate(
            "the unspecified region has zero mass under the new distribution".into(),
        ));
    }

    // The samples follow the two-stage conditional density
    // q(x) = Q(x) / Q(B_u); the target is P'(x) / P'(B_u). Both the
    // per-vector ratio and the region-mass ratio enter the weight.
    let stage_ratio = q_unknown / p_unknown;
    let mut m_eff = 0.0;
    let mut m_f_eff = 0.0;
    for (i, (x, &is_failure)) in archive.samples.iter().zip(&archive.failed).enumerate() {
        let q = proposal.vector_probability(x);
        let p = new_space.vector_probability(x);
        if q <= 0.0 {
            if p > 0.0 {
                return Err(Error::UnboundedWeight {
                    index: i,
                    sample: x.clone(),
                });
            }
            continue;
        }
        let w = p / q * stage_ratio;
        m_eff += w;
        if is_failure {
            m_f_eff += w;
        }
    }

    let summary = combine(
        archive.alpha,
        archive.beta,
        m_eff,
        m_f_eff,
        p_fail,
        p_unknown,
    );
    Ok(HybridEstimate {
        alpha_post: summary.alpha_post,
        beta_post: summary.beta_post,
        lower_limit: p_fail,
        upper_limit: 1.0 - p_survive,
        mean: summary.mean,
        variance: summary.variance,
        cov: summary.cov,
        archive: archive.clone(),
        error_note: estimate.error_note.clone(),
    })
}

/// Dispatches the reliability evaluation appropriate to a finished run:
/// exact for fully specified sets, bounds after convergence, hybrid after a
/// branch-limit stop.
pub fn evaluate_reliability(
    space: &ComponentSpace,
    run: &BrcRun,
    system_function: &dyn SystemFunction,
    hybrid: &HybridParams,
) -> Result<ReliabilityResult> {
    match run.outcome.status {
        DecompositionStatus::AllSpecified => Ok(ReliabilityResult::Exact {
            value: exact_probability(&run.outcome.branches)?,
        }),
        DecompositionStatus::BoundConverged => {
            let (lower, upper) = probability_bounds(&run.outcome.branches);
            Ok(ReliabilityResult::Bounds { lower, upper })
        }
        DecompositionStatus::BranchLimitReached => {
            hybrid_estimate(space, &run.outcome.branches, system_function, hybrid)
        }
        DecompositionStatus::NeedsNewRule => Err(Error::contract(
            "the driver returned without a terminal status",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, TerminationParams};
    use crate::engine::run_brc;
    use crate::model::{Rule, RuleSet, SystemEvaluation};
    use crate::sysfun::{ConnectivityPhi, NetworkTopology};

    fn toy_space() -> ComponentSpace {
        ComponentSpace::binary(&[0.1, 0.2, 0.3]).unwrap()
    }

    fn toy_phi(space: &ComponentSpace) -> ConnectivityPhi {
        let topology = NetworkTopology::new(3, vec![(0, 1), (1, 2), (1, 2)]).unwrap();
        ConnectivityPhi::new(topology, 0, 2, space).unwrap()
    }

    fn toy_rules(space: &ComponentSpace) -> RuleSet {
        let mut rules = RuleSet::new();
        rules.push_unchecked(Rule::survival([(0, 1), (1, 1)], space).unwrap());
        rules.push_unchecked(Rule::survival([(0, 1), (2, 1)], space).unwrap());
        rules.push_unchecked(Rule::failure([(0, 0)], space).unwrap());
        rules.push_unchecked(Rule::failure([(1, 0), (2, 0)], space).unwrap());
        rules
    }

    fn didactic_branches(space: &ComponentSpace) -> BranchSet {
        decompose(space, &toy_rules(space), &TerminationParams::exact(), None)
            .unwrap()
            .branches
    }

    #[test]
    fn exact_probability_didactic() {
        let sp = toy_space();
        let branches = didactic_branches(&sp);
        let pf = exact_probability(&branches).unwrap();
        assert!((pf - 0.154).abs() < 1e-12);
        assert!((pf - (1.0 - branches.survival_mass())).abs() < 1e-9);
    }

    #[test]
    fn exact_probability_rejects_unspecified_sets() {
        let sp = toy_space();
        let out = decompose(&sp, &RuleSet::new(), &TerminationParams::exact(), None).unwrap();
        assert!(exact_probability(&out.branches).is_err());
    }

    #[test]
    fn bounds_are_trivial_without_rules_and_degenerate_when_specified() {
        let sp = toy_space();
        let out = decompose(&sp, &RuleSet::new(), &TerminationParams::exact(), None).unwrap();
        let (lo, hi) = probability_bounds(&out.branches);
        assert_eq!((lo, hi), (0.0, 1.0));

        let branches = didactic_branches(&sp);
        let (lo, hi) = probability_bounds(&branches);
        assert!((hi - lo).abs() < 1e-12);
        assert!((lo - 0.154).abs() < 1e-12);
    }

    #[test]
    fn bound_width_equals_unknown_mass() {
        let sp = toy_space();
        let mut rules = RuleSet::new();
        rules.push_unchecked(Rule::survival([(0, 1), (1, 1)], &sp).unwrap());
        let out = decompose(&sp, &rules, &TerminationParams::exact(), None).unwrap();
        let (lo, hi) = probability_bounds(&out.branches);
        assert!((hi - lo - out.branches.unknown_mass()).abs() < 1e-9);
    }

    #[test]
    fn uninformed_prior_midpoint() {
        // With alpha = beta = 1 and no samples the conditional estimate sits
        // at 0.5, so the combined mean is P(B_f) + 0.5 * P(B_u).
        let summary = combine(1.0, 1.0, 0.0, 0.0, 0.3, 0.2);
        assert!((summary.mean - (0.3 + 0.2 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn posterior_formulas_match_direct_substitution() {
        let s = combine(1.0, 1.0, 100.0, 10.0, 0.0, 1.0);
        assert!((s.mean - 11.0 / 102.0).abs() < 1e-15);
        let expect_var = 11.0 * 91.0 / (102.0f64.powi(2) * 103.0);
        assert!((s.variance - expect_var).abs() < 1e-18);
        // Combined variance never exceeds the conditional variance.
        let s = combine(1.0, 1.0, 100.0, 10.0, 0.1, 0.5);
        let cond_var = 11.0 * 91.0 / (102.0f64.powi(2) * 103.0);
        assert!(s.variance <= cond_var);
    }

    #[test]
    fn hybrid_estimate_requires_unspecified_branches() {
        let sp = toy_space();
        let branches = didactic_branches(&sp);
        let phi = toy_phi(&sp);
        let err =
            hybrid_estimate(&sp, &branches, &phi, &HybridParams::new(0.01, 100, 0)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn hybrid_mean_is_invariant_to_batch_size() {
        let sp = toy_space();
        let out = decompose(&sp, &RuleSet::new(), &TerminationParams::exact(), None).unwrap();
        let phi = toy_phi(&sp);
        let mut params = HybridParams::new(0.0, 1_000, 99);
        params.batch_size = 64;
        let a = hybrid_estimate(&sp, &out.branches, &phi, &params).unwrap();
        params.batch_size = 1024;
        let b = hybrid_estimate(&sp, &out.branches, &phi, &params).unwrap();
        let (ReliabilityResult::Hybrid(a), ReliabilityResult::Hybrid(b)) = (a, b) else {
            panic!("expected hybrid results");
        };
        assert_eq!(a.archive.samples.len(), 1_000);
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.variance, b.variance);
        assert_eq!(a.archive.samples, b.archive.samples);
    }

    #[test]
    fn hybrid_estimate_converges_to_didactic_value() {
        let sp = toy_space();
        let out = decompose(&sp, &RuleSet::new(), &TerminationParams::exact(), None).unwrap();
        let phi = toy_phi(&sp);
        let params = HybridParams::new(0.01, 200_000, 7);
        let ReliabilityResult::Hybrid(h) =
            hybrid_estimate(&sp, &out.branches, &phi, &params).unwrap()
        else {
            panic!("expected hybrid");
        };
        assert!(h.cov <= 0.01);
        let (lo, hi) = h.credible_interval(0.95).unwrap();
        assert!(lo <= 0.154 && 0.154 <= hi, "interval [{lo}, {hi}]");
        assert!(h.lower_limit <= h.mean && h.mean <= h.upper_limit);
    }

    #[test]
    fn update_with_same_distribution_is_identity() {
        let sp = toy_space();
        let branches = didactic_branches(&sp);
        let result = ReliabilityResult::Exact {
            value: exact_probability(&branches).unwrap(),
        };
        let (updated, new_branches) =
            update_probability(&result, &branches, &sp, &sp).unwrap();
        let ReliabilityResult::Exact { value } = updated else {
            panic!("kind changed");
        };
        assert!((value - 0.154).abs() < 1e-12);
        for (a, b) in branches.iter().zip(new_branches.iter()) {
            assert!((a.probability - b.probability).abs() < 1e-12);
        }
    }

    #[test]
    fn update_exact_didactic_to_new_marginals() {
        let sp = toy_space();
        let branches = didactic_branches(&sp);
        let result = ReliabilityResult::Exact {
            value: exact_probability(&branches).unwrap(),
        };
        let new_space = ComponentSpace::binary(&[0.2, 0.2, 0.3]).unwrap();
        let (updated, _) = update_probability(&result, &branches, &sp, &new_space).unwrap();
        let ReliabilityResult::Exact { value } = updated else {
            panic!("kind changed");
        };
        // 0.2 + 0.8 * 0.2 * 0.3
        assert!((value - 0.248).abs() < 1e-12);
    }

    #[test]
    fn update_rejects_structural_mismatch() {
        let sp = toy_space();
        let branches = didactic_branches(&sp);
        let result = ReliabilityResult::Exact { value: 0.154 };
        let other = ComponentSpace::binary(&[0.5, 0.5]).unwrap();
        assert!(update_probability(&result, &branches, &sp, &other).is_err());
    }

    #[test]
    fn hybrid_update_is_identity_under_same_distribution() {
        let sp = toy_space();
        let out = decompose(&sp, &RuleSet::new(), &TerminationParams::exact(), None).unwrap();
        let phi = toy_phi(&sp);
        let params = HybridParams::new(0.05, 10_000, 3);
        let result = hybrid_estimate(&sp, &out.branches, &phi, &params).unwrap();
        let (updated, _) = update_probability(&result, &out.branches, &sp, &sp).unwrap();
        let (ReliabilityResult::Hybrid(a), ReliabilityResult::Hybrid(b)) = (&result, &updated)
        else {
            panic!("expected hybrid");
        };
        assert!((a.mean - b.mean).abs() < 1e-12);
        assert!((a.variance - b.variance).abs() < 1e-15);
    }

    #[test]
    fn hybrid_update_tracks_fresh_estimate() {
        let sp = toy_space();
        let out = decompose(&sp, &RuleSet::new(), &TerminationParams::exact(), None).unwrap();
        let phi = toy_phi(&sp);
        let params = HybridParams::new(0.01, 100_000, 21);
        let result = hybrid_estimate(&sp, &out.branches, &phi, &params).unwrap();

        let new_space = ComponentSpace::binary(&[0.2, 0.2, 0.3]).unwrap();
        let (updated, _) = update_probability(&result, &out.branches, &sp, &new_space).unwrap();
        let fresh_params = HybridParams::new(0.01, 100_000, 1021);
        let fresh = hybrid_estimate(&new_space, &out.branches, &toy_phi(&new_space), &fresh_params)
            .unwrap();
        let (ReliabilityResult::Hybrid(u), ReliabilityResult::Hybrid(f)) = (&updated, &fresh)
        else {
            panic!("expected hybrid");
        };
        let tol = 3.0 * (u.variance + f.variance).sqrt();
        assert!(
            (u.mean - f.mean).abs() <= tol,
            "updated {} vs fresh {} (tol {tol})",
            u.mean,
            f.mean
        );
    }

    #[test]
    fn unbounded_weights_are_reported() {
        let sp = ComponentSpace::binary(&[0.0, 0.5]).unwrap();
        // Hand-build an archive containing an impossible sample under the
        // generating distribution.
        let archive = SampleArchive {
            samples: vec![vec![0, 0]],
            failed: vec![true],
            alpha: 1.0,
            beta: 1.0,
            generating_pmf: sp.marginals().to_vec(),
        };
        let estimate = HybridEstimate {
            alpha_post: 2.0,
            beta_post: 1.0,
            lower_limit: 0.0,
            upper_limit: 1.0,
            mean: 0.5,
            variance: 0.01,
            cov: 0.2,
            archive,
            error_note: None,
        };
        let root = Branch::new(vec![0, 0], vec![1, 1], Verdict::Unknown, Verdict::Unknown, 1.0)
            .unwrap();
        let branches = BranchSet::from_branches(vec![root]);
        let new_space = ComponentSpace::binary(&[0.3, 0.5]).unwrap();
        let err = update_probability(
            &ReliabilityResult::Hybrid(estimate),
            &branches,
            &sp,
            &new_space,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnboundedWeight { index: 0, .. }));
    }

    #[test]
    fn evaluate_reliability_dispatches_on_status() {
        let sp = toy_space();
        let phi = toy_phi(&sp);
        let hybrid = HybridParams::new(0.1, 10_000, 5);

        let run = run_brc(&sp, &phi, &TerminationParams::exact()).unwrap();
        let r = evaluate_reliability(&sp, &run, &phi, &hybrid).unwrap();
        assert_eq!(r.kind(), "exact");

        let params = TerminationParams::new(0.9, None).unwrap();
        let run = run_brc(&sp, &phi, &params).unwrap();
        let r = evaluate_reliability(&sp, &run, &phi, &hybrid).unwrap();
        assert_eq!(r.kind(), "bounds");

        let params = TerminationParams::new(0.0, Some(2)).unwrap();
        let run = run_brc(&sp, &phi, &params).unwrap();
        let r = evaluate_reliability(&sp, &run, &phi, &hybrid).unwrap();
        assert_eq!(r.kind(), "hybrid");
    }
}
