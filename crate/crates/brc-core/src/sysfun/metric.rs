//! Scalar-metric system functions and the cross-threshold cache.
//!
//! Multi-state analyses run the driver once per threshold on the same
//! underlying metric (travel time, max flow). The metric value of every
//! evaluated vector is cached so a later round can classify that vector
//! without re-running the analysis.

use std::cell::RefCell;
use std::collections::HashMap;

use super::survival_rule_from_support;
use crate::engine::SystemFunction;
use crate::error::{Error, Result};
use crate::model::{State, SystemEvaluation, Verdict};

/// How a metric relates to survival at a threshold `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricOrientation {
    /// Smaller is better: survive iff `value <= t` (travel time).
    CostLike,
    /// Larger is better: survive iff `value > t` (max flow vs demand).
    CapacityLike,
}

/// One metric evaluation: the scalar value plus the edge states that
/// support survival (a path or a flow), valid at any threshold where the
/// verdict comes out as survival.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricEvaluation {
    pub value: f64,
    pub survival_support: Vec<(usize, State)>,
}

/// A system whose verdict is a threshold on a scalar performance metric.
pub trait MetricSystem {
    fn orientation(&self) -> MetricOrientation;
    fn evaluate_metric(&self, x: &[State]) -> Result<MetricEvaluation>;
}

/// Cache of metric evaluations keyed by component vector.
#[derive(Debug, Default)]
pub struct MetricCache {
    entries: HashMap<Vec<State>, MetricEvaluation>,
    hits: u64,
    misses: u64,
}

impl MetricCache {
    pub fn new() -> Self {
        MetricCache::default()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resets the hit/miss counters, keeping the entries.
    pub fn reset_counters(&mut self) {
        self.hits = 0;
        self.misses = 0;
    }

    fn lookup_or(
        &mut self,
        x: &[State],
        compute: impl FnOnce() -> Result<MetricEvaluation>,
    ) -> Result<MetricEvaluation> {
        if let Some(hit) = self.entries.get(x) {
            self.hits += 1;
            return Ok(hit.clone());
        }
        let fresh = compute()?;
        if let Some(old) = self.entries.insert(x.to_vec(), fresh.clone()) {
            if old.value != fresh.value {
                return Err(Error::SystemFunction(format!(
                    "metric changed between evaluations of {x:?}: {} vs {}",
                    old.value, fresh.value
                )));
            }
        }
        self.misses += 1;
        Ok(fresh)
    }
}

/// Adapts a metric system to a fixed threshold, sharing the metric cache
/// across thresholds. Single-threaded by construction (the driver never
/// calls its system function concurrently).
pub struct ThresholdSystem<'a, M: MetricSystem> {
    metric: &'a M,
    threshold: f64,
    cache: &'a RefCell<MetricCache>,
}

impl<'a, M: MetricSystem> ThresholdSystem<'a, M> {
    pub fn new(metric: &'a M, threshold: f64, cache: &'a RefCell<MetricCache>) -> Self {
        ThresholdSystem {
            metric,
            threshold,
            cache,
        }
    }

    fn survives(&self, value: f64) -> bool {
        match self.metric.orientation() {
            MetricOrientation::CostLike => value <= self.threshold,
            MetricOrientation::CapacityLike => value > self.threshold,
        }
    }
}

impl<M: MetricSystem> SystemFunction for ThresholdSystem<'_, M> {
    fn evaluate(&self, x: &[State]) -> Result<SystemEvaluation> {
        let eval = self
            .cache
            .borrow_mut()
            .lookup_or(x, || self.metric.evaluate_metric(x))?;
        if self.survives(eval.value) {
            let rule = survival_rule_from_support(eval.survival_support);
            SystemEvaluation::new(Verdict::Survive, rule)
        } else {
            Ok(SystemEvaluation::fail())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct FakeMetric;

    impl MetricSystem for FakeMetric {
        fn orientation(&self) -> MetricOrientation {
            MetricOrientation::CostLike
        }

        fn evaluate_metric(&self, x: &[State]) -> Result<MetricEvaluation> {
            // Travel time shrinks as components improve.
            let value = 60.0 - 10.0 * x.iter().map(|&s| f64::from(s)).sum::<f64>();
            let support = x
                .iter()
                .enumerate()
                .map(|(n, &s)| (n, s))
                .collect();
            Ok(MetricEvaluation {
                value,
                survival_support: support,
            })
        }
    }

    #[test]
    fn cached_metric_classifies_without_recompute() {
        let cache = RefCell::new(MetricCache::new());
        let metric = FakeMetric;

        let at30 = ThresholdSystem::new(&metric, 30.0, &cache);
        // Metric 40: fails at threshold 30.
        assert_eq!(at30.evaluate(&[1, 1, 0]).unwrap().state, Verdict::Fail);
        assert_eq!(cache.borrow().misses(), 1);

        let at45 = ThresholdSystem::new(&metric, 45.0, &cache);
        // Same vector at threshold 45: survives straight from the cache.
        let eval = at45.evaluate(&[1, 1, 0]).unwrap();
        assert_eq!(eval.state, Verdict::Survive);
        assert_eq!(cache.borrow().hits(), 1);
        assert_eq!(cache.borrow().misses(), 1);
        let rule = eval.extracted_rule.unwrap();
        assert_eq!(rule.conditions().collect::<Vec<_>>(), vec![(0, 1), (1, 1)]);
    }
}
