//! Seismic scenario to per-component failure probabilities: an Eastern
//! North America ground-motion prediction equation, aleatory and epistemic
//! uncertainties, and HAZUS-style lognormal fragility classes combined into
//! independent marginal failure probabilities.

use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::ComponentSpace;

/// Coefficients of the ENA ground-motion prediction equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmpeCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c11: f64,
    pub c12: f64,
    pub c13: f64,
    pub m1: f64,
    /// Distance breakpoints of the attenuation term (km).
    pub r1: f64,
    pub r2: f64,
}

impl GmpeCoefficients {
    /// Published coefficients for 5%-damped pseudo spectral acceleration at
    /// a natural period of 1.0 second.
    pub fn ena_period_1s() -> Self {
        GmpeCoefficients {
            c1: -0.6104,
            c2: 0.451,
            c3: -0.2090,
            c4: -1.158,
            c5: -0.00255,
            c6: 0.000141,
            c7: 0.299,
            c8: 0.503,
            c11: 1.110,
            c12: -0.0793,
            c13: 0.543,
            m1: 7.16,
            r1: 70.0,
            r2: 130.0,
        }
    }
}

/// `ln Y`: the log of the median spectral acceleration (g) at moment
/// magnitude `m_w` and rupture distance `r_rup` (km).
pub fn gmpe_ln_y(coeffs: &GmpeCoefficients, m_w: f64, r_rup: f64) -> Result<f64> {
    if !(r_rup > 0.0) || !r_rup.is_finite() {
        return Err(Error::invalid(format!(
            "rupture distance must be positive, got {r_rup}"
        )));
    }
    let f1 = coeffs.c2 * m_w + coeffs.c3 * (8.5 - m_w).powi(2);
    let near_term = coeffs.c7 * (coeffs.c8 * m_w).exp();
    let r = (r_rup * r_rup + near_term * near_term).sqrt();
    let f2 = coeffs.c4 * r.ln() + (coeffs.c5 + coeffs.c6 * m_w) * r_rup;
    let f3 = if r_rup <= coeffs.r1 {
        0.0
    } else if r_rup <= coeffs.r2 {
        coeffs.c7 * (r_rup.ln() - coeffs.r1.ln())
    } else {
        coeffs.c7 * (r_rup.ln() - coeffs.r1.ln()) + coeffs.c8 * (r_rup.ln() - coeffs.r2.ln())
    };
    Ok(coeffs.c1 + f1 + f2 + f3)
}

/// Magnitude-dependent standard deviation of `ln Y`; used as the aleatory
/// term of the demand variance.
pub fn aleatory_sigma(coeffs: &GmpeCoefficients, m_w: f64) -> f64 {
    if m_w < coeffs.m1 {
        coeffs.c11 + coeffs.c12 * m_w
    } else {
        coeffs.c13
    }
}

/// Tabulated magnitudes of the epistemic standard deviation grid.
pub const EPISTEMIC_MAGNITUDES: [f64; 9] = [5.0, 5.4, 5.8, 6.2, 6.6, 7.0, 7.4, 7.8, 8.2];

/// Tabulated rupture distances (km) of the epistemic grid.
pub const EPISTEMIC_DISTANCES: [f64; 11] =
    [1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0, 40.0, 50.0, 70.0];

/// Epistemic standard deviation of `ln Y` at 1.0 s, by magnitude row and
/// distance column.
pub const EPISTEMIC_TABLE: [[f64; 11]; 9] = [
    [0.24, 0.25, 0.25, 0.21, 0.18, 0.13, 0.06, 0.10, 0.14, 0.17, 0.23],
    [0.22, 0.23, 0.23, 0.22, 0.19, 0.16, 0.10, 0.11, 0.14, 0.18, 0.23],
    [0.19, 0.20, 0.21, 0.20, 0.19, 0.17, 0.14, 0.15, 0.18, 0.21, 0.27],
    [0.15, 0.15, 0.16, 0.16, 0.17, 0.16, 0.14, 0.15, 0.18, 0.21, 0.27],
    [0.12, 0.13, 0.13, 0.13, 0.14, 0.14, 0.13, 0.15, 0.18, 0.21, 0.27],
    [0.13, 0.13, 0.13, 0.13, 0.14, 0.14, 0.14, 0.15, 0.17, 0.20, 0.27],
    [0.14, 0.13, 0.13, 0.14, 0.15, 0.16, 0.16, 0.16, 0.18, 0.21, 0.27],
    [0.15, 0.15, 0.14, 0.15, 0.15, 0.17, 0.18, 0.18, 0.20, 0.22, 0.28],
    [0.17, 0.17, 0.16, 0.16, 0.17, 0.18, 0.20, 0.21, 0.22, 0.23, 0.29],
];

/// Epistemic standard deviation of `ln Y`, interpolated bilinearly in
/// `(M_w, ln r)` over the published grid; inputs outside the grid clamp to
/// the nearest edge.
pub fn epistemic_sigma(m_w: f64, r_rup: f64) -> f64 {
    let (i, tm) = bracket(&EPISTEMIC_MAGNITUDES, m_w, |v| v);
    let (j, tr) = bracket(&EPISTEMIC_DISTANCES, r_rup.max(f64::MIN_POSITIVE), f64::ln);
    let row = |i: usize| {
        EPISTEMIC_TABLE[i][j] * (1.0 - tr) + EPISTEMIC_TABLE[i][j + 1] * tr
    };
    row(i) * (1.0 - tm) + row(i + 1) * tm
}

/// Bracketing cell index and interpolation weight in a transformed
/// coordinate, clamped to the grid.
fn bracket(grid: &[f64], value: f64, transform: impl Fn(f64) -> f64) -> (usize, f64) {
    let last = grid.len() - 2;
    if value <= grid[0] {
        return (0, 0.0);
    }
    if value >= grid[grid.len() - 1] {
        return (last, 1.0);
    }
    let i = grid.partition_point(|&g| g <= value) - 1;
    let i = i.min(last);
    let (lo, hi) = (transform(grid[i]), transform(grid[i + 1]));
    let t = if value == grid[i] {
        0.0
    } else {
        (transform(value) - lo) / (hi - lo)
    };
    (i, t)
}

/// A lognormal fragility class: median spectral-acceleration capacity (g)
/// and log-space dispersion.
#[derive(Debug, Clone, PartialEq)]
pub struct FragilityClass {
    pub name: String,
    pub median_capacity: f64,
    pub dispersion: f64,
}

impl FragilityClass {
    pub fn new(name: impl Into<String>, median_capacity: f64, dispersion: f64) -> Result<Self> {
        if !(median_capacity > 0.0) || !(dispersion > 0.0) {
            return Err(Error::invalid(
                "fragility capacity and dispersion must be positive",
            ));
        }
        Ok(FragilityClass {
            name: name.into(),
            median_capacity,
            dispersion,
        })
    }

    /// Non-California seismic major bridge.
    pub fn hwb2() -> Self {
        FragilityClass::new("HWB2", 1.10, 0.6).unwrap()
    }

    /// Non-California seismic single span.
    pub fn hwb4() -> Self {
        FragilityClass::new("HWB4", 1.20, 0.6).unwrap()
    }

    /// Non-California seismic continuous concrete.
    pub fn hwb11() -> Self {
        FragilityClass::new("HWB11", 1.10, 0.6).unwrap()
    }
}

/// Per-edge fragility assignment: explicit entries with an optional default
/// class for all remaining edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassMap {
    explicit: BTreeMap<usize, FragilityClass>,
    default: Option<FragilityClass>,
}

impl ClassMap {
    pub fn new() -> Self {
        ClassMap::default()
    }

    pub fn with_default(default: FragilityClass) -> Self {
        ClassMap {
            explicit: BTreeMap::new(),
            default: Some(default),
        }
    }

    pub fn assign(&mut self, edge: usize, class: FragilityClass) {
        self.explicit.insert(edge, class);
    }

    pub fn resolve(&self, edge: usize) -> Result<&FragilityClass> {
        self.explicit
            .get(&edge)
            .or(self.default.as_ref())
            .ok_or_else(|| {
                Error::invalid(format!("edge {} has no fragility class assigned", edge + 1))
            })
    }
}

/// A seismic hazard scenario: moment magnitude plus per-component rupture
/// distances (km), given directly or derived from an epicenter location.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub m_w: f64,
    pub r_rup: Vec<f64>,
}

impl Scenario {
    pub fn new(m_w: f64, r_rup: Vec<f64>) -> Result<Self> {
        if !(5.0..=8.2).contains(&m_w) {
            return Err(Error::invalid(format!(
                "magnitude {m_w} outside the tabulated range [5.0, 8.2]"
            )));
        }
        if r_rup.is_empty() {
            return Err(Error::invalid("a scenario needs at least one distance"));
        }
        for (e, &r) in r_rup.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::invalid(format!(
                    "edge {} has a non-positive rupture distance {r}",
                    e + 1
                )));
            }
        }
        Ok(Scenario { m_w, r_rup })
    }

    /// Derives per-edge distances as the Euclidean distance from the
    /// epicenter to each edge's midpoint.
    pub fn from_epicenter(
        m_w: f64,
        epicenter: (f64, f64),
        node_coords: &[(f64, f64)],
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let distances = edges
            .iter()
            .map(|&(u, v)| {
                let a = node_coords.get(u).ok_or_else(|| {
                    Error::invalid(format!("node {u} has no coordinates"))
                })?;
                let b = node_coords.get(v).ok_or_else(|| {
                    Error::invalid(format!("node {v} has no coordinates"))
                })?;
                let mid = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
                Ok(((mid.0 - epicenter.0).powi(2) + (mid.1 - epicenter.1).powi(2)).sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        Scenario::new(m_w, distances)
    }
}

/// Marginal failure probability of one component: the standard normal CDF
/// of the demand-over-capacity log margin, with aleatory, epistemic, and
/// capacity dispersions combined in quadrature.
pub fn component_failure_probability(
    coeffs: &GmpeCoefficients,
    m_w: f64,
    r_rup: f64,
    fragility: &FragilityClass,
) -> Result<f64> {
    let ln_y = gmpe_ln_y(coeffs, m_w, r_rup)?;
    let sigma_a = aleatory_sigma(coeffs, m_w);
    let sigma_e = epistemic_sigma(m_w, r_rup);
    let sigma = (sigma_a * sigma_a + sigma_e * sigma_e
        + fragility.dispersion * fragility.dispersion)
        .sqrt();
    let z = (ln_y - fragility.median_capacity.ln()) / sigma;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(normal.cdf(z))
}

/// Binary component space with per-edge failure probabilities from the
/// scenario and fragility assignment.
pub fn build_component_space(
    scenario: &Scenario,
    classes: &ClassMap,
    coeffs: &GmpeCoefficients,
) -> Result<ComponentSpace> {
    let failure: Vec<f64> = scenario
        .r_rup
        .iter()
        .enumerate()
        .map(|(e, &r)| {
            let class = classes.resolve(e)?;
            component_failure_probability(coeffs, scenario.m_w, r, class)
        })
        .collect::<Result<_>>()?;
    ComponentSpace::binary(&failure)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs() -> GmpeCoefficients {
        GmpeCoefficients::ena_period_1s()
    }

    #[test]
    fn gmpe_matches_frozen_manual_substitution() {
        // Expected values computed independently by direct substitution of
        // the published coefficients at high precision.
        let cases = [
            (8.0, 50.0, -1.7172570438872356),
            (8.0, 100.0, -2.4389581803155537),
            (8.0, 200.0, -2.9479540856474189),
            (6.5, 10.0, -1.4763426909284011),
            (5.5, 75.0, -5.1253324882755825),
        ];
        for (m, r, expect) in cases {
            let got = gmpe_ln_y(&coeffs(), m, r).unwrap();
            assert!(
                (got - expect).abs() < 1e-9,
                "lnY({m}, {r}) = {got}, expected {expect}"
            );
        }
    }

    #[test]
    fn gmpe_is_continuous_at_breakpoints() {
        let c = coeffs();
        for r in [70.0f64, 130.0] {
            let at = gmpe_ln_y(&c, 7.5, r).unwrap();
            let below = gmpe_ln_y(&c, 7.5, r.next_down()).unwrap();
            let above = gmpe_ln_y(&c, 7.5, r.next_up()).unwrap();
            assert!((at - below).abs() < 1e-12);
            assert!((at - above).abs() < 1e-12);
        }
    }

    #[test]
    fn gmpe_rejects_non_positive_distance() {
        assert!(gmpe_ln_y(&coeffs(), 7.0, 0.0).is_err());
        assert!(gmpe_ln_y(&coeffs(), 7.0, -3.0).is_err());
    }

    #[test]
    fn gmpe_finite_at_tiny_distances() {
        // The near-source term keeps R bounded away from zero.
        let v = gmpe_ln_y(&coeffs(), 8.0, 1e-9).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn aleatory_sigma_branches() {
        let c = coeffs();
        assert!((aleatory_sigma(&c, 7.16) - 0.543).abs() < 1e-15);
        assert!((aleatory_sigma(&c, 0.0) - 1.110).abs() < 1e-15);
        // The published piecewise form is discontinuous at M1; the jump is
        // |c11 + c12 * 7.16 - c13| and is reported, not hidden.
        let jump = (aleatory_sigma(&c, 7.16 - 1e-12) - aleatory_sigma(&c, 7.16)).abs();
        assert!((jump - (1.110 - 0.0793 * 7.16 - 0.543f64).abs()).abs() < 1e-9);
    }

    #[test]
    fn epistemic_sigma_reproduces_every_grid_point() {
        for (i, &m) in EPISTEMIC_MAGNITUDES.iter().enumerate() {
            for (j, &r) in EPISTEMIC_DISTANCES.iter().enumerate() {
                let got = epistemic_sigma(m, r);
                let expect = EPISTEMIC_TABLE[i][j];
                assert!(
                    (got - expect).abs() < 1e-15,
                    "grid ({m}, {r}): {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn epistemic_sigma_interpolates_between_magnitude_rows() {
        // Midpoint between rows 5.0 (0.24) and 5.4 (0.22) at r = 1.
        assert!((epistemic_sigma(5.2, 1.0) - 0.23).abs() < 1e-12);
    }

    #[test]
    fn epistemic_sigma_clamps_outside_the_grid() {
        assert_eq!(epistemic_sigma(4.0, 1.0), 0.24);
        assert_eq!(epistemic_sigma(9.0, 70.0), 0.29);
        assert_eq!(epistemic_sigma(5.0, 0.1), 0.24);
        assert_eq!(epistemic_sigma(8.2, 500.0), 0.29);
    }

    #[test]
    fn failure_probability_is_half_at_zero_margin() {
        // Pick a fragility whose log capacity equals ln Y.
        let c = coeffs();
        let ln_y = gmpe_ln_y(&c, 7.0, 40.0).unwrap();
        let class = FragilityClass::new("T", ln_y.exp(), 0.6).unwrap();
        let p = component_failure_probability(&c, 7.0, 40.0, &class).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn failure_probability_vanishes_for_huge_capacity() {
        let class = FragilityClass::new("T", 1e9, 0.6).unwrap();
        let p = component_failure_probability(&coeffs(), 7.0, 40.0, &class).unwrap();
        assert!(p < 1e-10);
    }

    #[test]
    fn failure_probability_matches_frozen_oracle() {
        let p =
            component_failure_probability(&coeffs(), 8.0, 30.0, &FragilityClass::hwb4()).unwrap();
        assert!((p - 0.04929770819456495).abs() < 1e-9, "got {p}");
    }

    #[test]
    fn failure_probability_monotone_in_capacity_and_demand() {
        let c = coeffs();
        let mut last = 1.0;
        for capacity in [0.5, 0.8, 1.1, 1.5, 3.0] {
            let class = FragilityClass::new("T", capacity, 0.6).unwrap();
            let p = component_failure_probability(&c, 7.5, 30.0, &class).unwrap();
            assert!(p <= last);
            last = p;
        }
        // Demand decays with distance, so failure probability does too.
        let class = FragilityClass::hwb11();
        let mut last = 1.0;
        for r in [5.0, 20.0, 60.0, 120.0, 250.0] {
            let p = component_failure_probability(&c, 7.5, r, &class).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::new(4.0, vec![10.0]).is_err());
        assert!(Scenario::new(8.0, vec![0.0]).is_err());
        assert!(Scenario::new(8.0, vec![10.0, 25.0]).is_ok());
    }

    #[test]
    fn scenario_from_epicenter_uses_edge_midpoints() {
        let coords = vec![(0.0, 0.0), (2.0, 0.0), (2.0, 2.0)];
        let edges = vec![(0, 1), (1, 2)];
        let s = Scenario::from_epicenter(7.0, (1.0, 4.0), &coords, &edges).unwrap();
        // Midpoints (1, 0) and (2, 1).
        assert!((s.r_rup[0] - 4.0).abs() < 1e-12);
        assert!((s.r_rup[1] - 10.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn build_space_requires_full_class_coverage() {
        let scenario = Scenario::new(8.0, vec![30.0, 40.0]).unwrap();
        let mut classes = ClassMap::new();
        classes.assign(0, FragilityClass::hwb2());
        let err = build_component_space(&scenario, &classes, &coeffs()).unwrap_err();
        assert!(err.to_string().contains("edge 2"));
    }

    #[test]
    fn identical_inputs_give_identical_marginals() {
        let scenario = Scenario::new(8.0, vec![35.0, 35.0, 80.0]).unwrap();
        let classes = ClassMap::with_default(FragilityClass::hwb11());
        let space = build_component_space(&scenario, &classes, &coeffs()).unwrap();
        assert_eq!(
            space.state_probability(0, 0),
            space.state_probability(1, 0)
        );
        assert_ne!(
            space.state_probability(0, 0),
            space.state_probability(2, 0)
        );
        for n in 0..3 {
            let p = space.state_probability(n, 0);
            assert!(p > 0.0 && p < 1.0);
        }
    }
}
