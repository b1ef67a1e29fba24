//! Probability kernels: branch mass, rule mass, conditional rule mass, and
//! sampling within a set of unspecified branches.
//!
//! All kernels use the independence approximation: joint probabilities are
//! products of per-component marginal interval probabilities, which is exact
//! when components are independent.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::model::{Branch, ComponentSpace, Rule, State, Verdict};

/// `P(lower <= X <= upper)` as the product of marginal interval
/// probabilities.
pub fn branch_probability(
    space: &ComponentSpace,
    lower: &[State],
    upper: &[State],
) -> Result<f64> {
    space.validate_vector(lower)?;
    space.validate_vector(upper)?;
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Err(Error::invalid("lower bound exceeds upper bound"));
    }
    Ok((0..space.n_components())
        .map(|n| space.interval_probability(n, lower[n], upper[n]))
        .product())
}

/// `P(gamma)`: the mass of the hyper-rectangle a rule defines over the full
/// space (`[0, r]` on its scope for failure rules, `[r, K-1]` for survival).
pub fn rule_probability(space: &ComponentSpace, rule: &Rule) -> f64 {
    rule.conditions()
        .map(|(n, r)| match rule.verdict() {
            Verdict::Fail => space.interval_probability(n, 0, r),
            Verdict::Survive => space.interval_probability(n, r, space.best_state(n)),
            Verdict::Unknown => unreachable!(),
        })
        .product()
}

/// Unnormalised probability of a reduced rule conditioned on a branch: the
/// product over the rule's scope of `P(l <= X <= r)` (failure) or
/// `P(r <= X <= u)` (survival). The `1/P(b)` proportionality constant is
/// omitted; it is common to every rule compared on the same branch.
pub fn conditional_rule_probability(
    space: &ComponentSpace,
    reduced_rule: &Rule,
    branch: &Branch,
) -> Result<f64> {
    let mut p = 1.0;
    for (n, r) in reduced_rule.conditions() {
        let l = branch.lower[n];
        let u = branch.upper[n];
        match reduced_rule.verdict() {
            Verdict::Fail => {
                if r < l || r >= u {
                    return Err(Error::contract(format!(
                        "rule is not reduced-compatible with the branch on component {n}"
                    )));
                }
                p *= space.interval_probability(n, l, r);
            }
            Verdict::Survive => {
                if r > u || r <= l {
                    return Err(Error::contract(format!(
                        "rule is not reduced-compatible with the branch on component {n}"
                    )));
                }
                p *= space.interval_probability(n, r, u);
            }
            Verdict::Unknown => unreachable!(),
        }
    }
    Ok(p)
}

/// Draws component vectors from `P(X | X in the union of the given
/// branches)` with the two-stage scheme: pick a branch proportionally to its
/// mass, then draw each component from its marginal truncated to the
/// branch's interval.
///
/// Branch masses are recomputed from `space`, so the stored `probability`
/// fields need not be current.
pub struct UnspecifiedSampler<'a> {
    space: &'a ComponentSpace,
    branches: Vec<&'a Branch>,
    /// Cumulative branch masses under `space`.
    cumulative: Vec<f64>,
    total: f64,
}

impl<'a> UnspecifiedSampler<'a> {
    pub fn new(
        space: &'a ComponentSpace,
        branches: impl IntoIterator<Item = &'a Branch>,
    ) -> Result<Self> {
        let branches: Vec<&Branch> = branches.into_iter().collect();
        if branches.is_empty() {
            return Err(Error::Degenerate("no branches to sample from".into()));
        }
        let mut cumulative = Vec::with_capacity(branches.len());
        let mut total = 0.0;
        for b in &branches {
            total += branch_probability(space, &b.lower, &b.upper)?;
            cumulative.push(total);
        }
        if total <= 0.0 {
            return Err(Error::Degenerate(
                "the sampling region has zero probability mass".into(),
            ));
        }
        Ok(UnspecifiedSampler {
            space,
            branches,
            cumulative,
            total,
        })
    }

    /// Total mass of the sampling region under the space's marginals.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn draw(&self, rng: &mut impl Rng) -> Vec<State> {
        let t = rng.gen::<f64>() * self.total;
        let idx = self
            .cumulative
            .partition_point(|&c| c < t)
            .min(self.branches.len() - 1);
        let branch = self.branches[idx];
        let mut x = Vec::with_capacity(self.space.n_components());
        for n in 0..self.space.n_components() {
            let (l, u) = (branch.lower[n], branch.upper[n]);
            if l == u {
                x.push(l);
                continue;
            }
            let mass = self.space.interval_probability(n, l, u);
            let target = rng.gen::<f64>() * mass;
            let mut acc = 0.0;
            let mut chosen = u;
            for s in l..=u {
                acc += self.space.state_probability(n, s);
                if target < acc {
                    chosen = s;
                    break;
                }
            }
            x.push(chosen);
        }
        x
    }
}

/// Draws `count` i.i.d. samples from the union of the given branches.
/// Deterministic for a fixed seed.
pub fn sample_unspecified(
    space: &ComponentSpace,
    unspecified: &[Branch],
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<State>>> {
    let sampler = UnspecifiedSampler::new(space, unspecified.iter())?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Verdict;

    fn toy_space() -> ComponentSpace {
        ComponentSpace::binary(&[0.1, 0.2, 0.3]).unwrap()
    }

    fn unknown_branch(lower: Vec<State>, upper: Vec<State>) -> Branch {
        Branch::new(lower, upper, Verdict::Unknown, Verdict::Unknown, 0.0).unwrap()
    }

    #[test]
    fn branch_probability_toy_cases() {
        let sp = toy_space();
        let p = branch_probability(&sp, &[0, 0, 0], &[1, 0, 0]).unwrap();
        assert!((p - 0.06).abs() < 1e-15);
        let p = branch_probability(&sp, &[0, 1, 0], &[1, 1, 1]).unwrap();
        assert!((p - 0.8).abs() < 1e-15);
        let p = branch_probability(&sp, &[0, 0, 0], &[1, 1, 1]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_probability_rejects_bad_bounds() {
        let sp = toy_space();
        assert!(branch_probability(&sp, &[0, 0, 0], &[2, 0, 0]).is_err());
        assert!(branch_probability(&sp, &[1, 0, 0], &[0, 1, 1]).is_err());
    }

    #[test]
    fn rule_probability_examples() {
        let sp = toy_space();
        let fail = Rule::failure([(1, 0), (2, 0)], &sp).unwrap();
        assert!((rule_probability(&sp, &fail) - 0.06).abs() < 1e-15);
        let surv = Rule::survival([(0, 1), (1, 1)], &sp).unwrap();
        assert!((rule_probability(&sp, &surv) - 0.72).abs() < 1e-15);
        let single = Rule::failure([(2, 0)], &sp).unwrap();
        assert!((rule_probability(&sp, &single) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rule_probability_equals_its_hyper_rectangle_mass() {
        let sp = ComponentSpace::new(vec![
            vec![0.2, 0.3, 0.5],
            vec![0.1, 0.9],
            vec![0.4, 0.2, 0.4],
        ])
        .unwrap();
        let rule = Rule::failure([(0, 1), (2, 0)], &sp).unwrap();
        let lower = sp.worst_vector();
        let upper = vec![1, 1, 0];
        let expect = branch_probability(&sp, &lower, &upper).unwrap();
        assert!((rule_probability(&sp, &rule) - expect).abs() < 1e-15);

        let rule = Rule::survival([(0, 2), (1, 1)], &sp).unwrap();
        let lower = vec![2, 1, 0];
        let upper = sp.best_vector();
        let expect = branch_probability(&sp, &lower, &upper).unwrap();
        assert!((rule_probability(&sp, &rule) - expect).abs() < 1e-15);
    }

    #[test]
    fn branch_probability_is_additive_under_splits() {
        let sp = ComponentSpace::new(vec![
            vec![0.2, 0.3, 0.5],
            vec![0.1, 0.9],
            vec![0.4, 0.2, 0.4],
        ])
        .unwrap();
        let whole = branch_probability(&sp, &[0, 0, 0], &[2, 1, 2]).unwrap();
        let low = branch_probability(&sp, &[0, 0, 0], &[1, 1, 2]).unwrap();
        let high = branch_probability(&sp, &[2, 0, 0], &[2, 1, 2]).unwrap();
        assert!((whole - (low + high)).abs() < 1e-12);
    }

    #[test]
    fn conditional_rule_probability_worked_cases() {
        let sp = toy_space();
        let b1 = unknown_branch(vec![0, 0, 0], vec![1, 1, 0]);
        let reduced_fail = Rule::failure([(1, 0)], &sp).unwrap();
        let p = conditional_rule_probability(&sp, &reduced_fail, &b1).unwrap();
        assert!((p - 0.2).abs() < 1e-15);

        let surv = Rule::survival([(0, 1), (1, 1)], &sp).unwrap();
        let p = conditional_rule_probability(&sp, &surv, &b1).unwrap();
        assert!((p - 0.72).abs() < 1e-15);
    }

    #[test]
    fn conditional_rule_probability_full_span() {
        // A survival rule whose conditioned intervals span the branch's full
        // remaining range equals the branch-restricted product.
        let sp = ComponentSpace::new(vec![vec![0.2, 0.3, 0.5], vec![0.1, 0.9]]).unwrap();
        let b = unknown_branch(vec![0, 0], vec![2, 1]);
        let rule = Rule::survival([(0, 1), (1, 1)], &sp).unwrap();
        let p = conditional_rule_probability(&sp, &rule, &b).unwrap();
        let manual = sp.interval_probability(0, 1, 2) * sp.interval_probability(1, 1, 1);
        assert!((p - manual).abs() < 1e-15);
    }

    #[test]
    fn conditional_rule_probability_rejects_incompatible_rules() {
        let sp = toy_space();
        let b1 = unknown_branch(vec![0, 0, 0], vec![1, 1, 0]);
        // x3^1 cannot be satisfied inside b1.
        let surv = Rule::survival([(0, 1), (2, 1)], &sp).unwrap();
        assert!(conditional_rule_probability(&sp, &surv, &b1).is_err());
    }

    #[test]
    fn point_branch_sampling_is_constant() {
        let sp = toy_space();
        let b = unknown_branch(vec![1, 0, 1], vec![1, 0, 1]);
        let samples = sample_unspecified(&sp, &[b], 64, 7).unwrap();
        assert!(samples.iter().all(|x| x == &[1, 0, 1]));
    }

    #[test]
    fn branch_selection_frequency_matches_masses() {
        let sp = toy_space();
        // Masses 0.054 and 0.006: ratio 0.9 / 0.1.
        let b_big = unknown_branch(vec![1, 0, 0], vec![1, 0, 0]); // 0.9*0.2*0.3
        let b_small = unknown_branch(vec![0, 0, 0], vec![0, 0, 0]); // 0.1*0.2*0.3
        let n = 100_000;
        let samples = sample_unspecified(&sp, &[b_big.clone(), b_small], n, 42).unwrap();
        let hits_big = samples.iter().filter(|x| b_big.contains(x)).count();
        let freq = hits_big as f64 / n as f64;
        // Normal approximation: 5 sigma around 0.9 with sigma ~ 9.5e-4.
        assert!(
            (freq - 0.9).abs() < 5.0 * (0.9f64 * 0.1 / n as f64).sqrt(),
            "selection frequency {freq} too far from 0.9"
        );
    }

    #[test]
    fn within_branch_frequencies_match_truncated_marginals() {
        let sp = ComponentSpace::new(vec![vec![0.2, 0.3, 0.5], vec![0.25, 0.25, 0.5]]).unwrap();
        let b = unknown_branch(vec![0, 1], vec![1, 2]);
        let n = 100_000;
        let samples = sample_unspecified(&sp, &[b], n, 11).unwrap();
        // Component 0 truncated to [0, 1]: P(0) = 0.4, P(1) = 0.6.
        let f0 = samples.iter().filter(|x| x[0] == 0).count() as f64 / n as f64;
        assert!((f0 - 0.4).abs() < 5.0 * (0.4f64 * 0.6 / n as f64).sqrt());
        // Component 1 truncated to [1, 2]: P(1) = 1/3, P(2) = 2/3.
        let f1 = samples.iter().filter(|x| x[1] == 1).count() as f64 / n as f64;
        let p = 1.0 / 3.0;
        assert!((f1 - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn samples_stay_inside_exactly_one_branch() {
        let sp = ComponentSpace::new(vec![vec![0.2, 0.3, 0.5]; 3]).unwrap();
        let branches = vec![
            unknown_branch(vec![0, 0, 0], vec![0, 2, 2]),
            unknown_branch(vec![1, 0, 0], vec![2, 1, 2]),
            unknown_branch(vec![1, 2, 0], vec![2, 2, 2]),
        ];
        let samples = sample_unspecified(&sp, &branches, 5_000, 3).unwrap();
        for x in &samples {
            let n_inside = branches.iter().filter(|b| b.contains(x)).count();
            assert_eq!(n_inside, 1, "sample {x:?} not in exactly one branch");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let sp = toy_space();
        let b = unknown_branch(vec![0, 0, 0], vec![1, 1, 1]);
        let a = sample_unspecified(&sp, &[b.clone()], 100, 5).unwrap();
        let bb = sample_unspecified(&sp, &[b], 100, 5).unwrap();
        assert_eq!(a, bb);
    }

    #[test]
    fn zero_mass_region_is_degenerate() {
        let sp = ComponentSpace::new(vec![vec![0.0, 1.0]]).unwrap();
        let b = unknown_branch(vec![0], vec![0]);
        assert!(matches!(
            sample_unspecified(&sp, &[b], 10, 0),
            Err(Error::Degenerate(_))
        ));
    }
}
