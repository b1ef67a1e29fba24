//! The analyze / update / sweep commands over the artifact directory
//! layout:
//!
//! ```text
//! out/
//!   network.json     resolved copy of the input network
//!   space.json       component marginals the artifacts refer to
//!   result.json      reliability result (single-event runs)
//!   rules.json       final non-dominated rules
//!   branches.json    final branch partition
//!   stats.json       run counters and timings
//!   map.csv          one row per target node (multi-event runs)
//!   nodes/n<ID>/     per-node artifacts (multi-event runs)
//! ```

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use brc_core::decomposition::{DecompositionStatus, TerminationParams};
use brc_core::engine::{run_brc, SystemFunction};
use brc_core::inference::{
    evaluate_reliability, update_probability, HybridParams, ReliabilityResult,
};
use brc_core::model::{BranchSet, ComponentSpace, RuleSet};
use brc_core::sysfun::{
    ConnectivityPhi, MaxFlowThresholdPhi, MetricCache, MetricSystem, NetworkTopology,
    ShortestPathThresholdPhi, TablePhi, ThresholdSystem,
};

use crate::formats::{
    self, load_network, load_scenario, resolve, target_events, BranchesDto, NetworkFile,
    Resolved, ResultDto, RulesDto, SpaceDto, StatsDto, SystemSpec, Targets,
};

/// Numeric knobs shared by analyze and sweep.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub epsilon_u: f64,
    pub max_branches: Option<usize>,
    pub target_cov: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_samples: usize,
    pub seed: Option<u64>,
}

impl Settings {
    fn termination(&self) -> Result<TerminationParams> {
        Ok(TerminationParams::new(self.epsilon_u, self.max_branches)?)
    }

    fn hybrid(&self) -> Result<HybridParams> {
        let seed = self
            .seed
            .ok_or_else(|| anyhow!("--seed is required when hybrid sampling runs"))?;
        let mut params = HybridParams::new(self.target_cov, self.max_samples, seed);
        params.alpha = self.alpha;
        params.beta = self.beta;
        Ok(params)
    }
}

fn build_phi(
    topology: &NetworkTopology,
    space: &ComponentSpace,
    spec: &SystemSpec,
) -> Result<Box<dyn SystemFunction + Send + Sync>> {
    Ok(match spec {
        SystemSpec::Connectivity {
            origin,
            destination,
        } => Box::new(ConnectivityPhi::new(
            topology.clone(),
            origin - 1,
            destination - 1,
            space,
        )?),
        SystemSpec::ShortestPathThreshold {
            origins,
            targets,
            factor,
        } => {
            let Targets::One(target) = targets else {
                bail!("a single analysis event needs a single target");
            };
            Box::new(ShortestPathThresholdPhi::new(
                topology.clone(),
                origins.iter().map(|o| o - 1).collect(),
                target - 1,
                *factor,
                space,
            )?)
        }
        SystemSpec::MaxFlowThreshold {
            origin,
            destination,
            demand,
            min_cut_rules,
        } => {
            let phi = MaxFlowThresholdPhi::new(
                topology.clone(),
                origin - 1,
                destination - 1,
                *demand,
                space,
            )?;
            Box::new(if *min_cut_rules {
                phi.with_min_cut_rules()
            } else {
                phi
            })
        }
        SystemSpec::KOfN { k } => Box::new(TablePhi::k_out_of_n(space.n_components(), *k)?),
    })
}

struct EventOutcome {
    result: ReliabilityResult,
    rules: RuleSet,
    branches: BranchSet,
    stats: StatsDto,
}

fn run_event(
    topology: &NetworkTopology,
    space: &ComponentSpace,
    spec: &SystemSpec,
    settings: &Settings,
) -> Result<EventOutcome> {
    let phi = build_phi(topology, space, spec)?;
    let run = run_brc(space, phi.as_ref(), &settings.termination()?)?;
    let result = match run.outcome.status {
        DecompositionStatus::BranchLimitReached => {
            evaluate_reliability(space, &run, phi.as_ref(), &settings.hybrid()?)?
        }
        _ => {
            // No sampling on these paths; the seed stays optional.
            let placeholder = HybridParams::new(settings.target_cov, 1, 0);
            evaluate_reliability(space, &run, phi.as_ref(), &placeholder)?
        }
    };
    let sampled = match &result {
        ReliabilityResult::Hybrid(h) => h.archive.len() as u64,
        _ => 0,
    };
    let stats = StatsDto::new(run.outcome.status, &run.stats, sampled);
    Ok(EventOutcome {
        result,
        rules: run.rules,
        branches: run.outcome.branches,
        stats,
    })
}

fn write_event(dir: &Path, outcome: &EventOutcome) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot write {}", dir.display()))?;
    formats::write_json(&dir.join("result.json"), &ResultDto::from_result(&outcome.result)?)?;
    formats::write_json(&dir.join("rules.json"), &RulesDto::from_rules(&outcome.rules))?;
    formats::write_json(
        &dir.join("branches.json"),
        &BranchesDto::from_branches(&outcome.branches),
    )?;
    formats::write_json(&dir.join("stats.json"), &outcome.stats)?;
    Ok(())
}

fn map_row(node: usize, outcome: &EventOutcome) -> String {
    let calls = outcome.stats.system_function_calls + outcome.stats.hybrid_samples;
    match &outcome.result {
        ReliabilityResult::Exact { value } => {
            format!("{node},exact,{value},{value},{value},0,{calls}")
        }
        ReliabilityResult::Bounds { lower, upper } => {
            let mid = 0.5 * (lower + upper);
            format!("{node},bounds,{lower},{mid},{upper},,{calls}")
        }
        ReliabilityResult::Hybrid(h) => format!(
            "{node},hybrid,{},{},{},{},{calls}",
            h.lower_limit, h.mean, h.upper_limit, h.cov
        ),
    }
}

const MAP_HEADER: &str = "node,kind,lower,mean,upper,cov,sysfn_calls";

pub fn analyze(
    network_path: &Path,
    scenario_path: Option<&Path>,
    out_dir: &Path,
    settings: &Settings,
) -> Result<()> {
    let file = load_network(network_path)?;
    let scenario = scenario_path.map(load_scenario).transpose()?;
    let resolved = resolve(&file, scenario.as_ref())?;
    let events = target_events(&resolved)?;

    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot write {}", out_dir.display()))?;
    formats::write_json(&out_dir.join("network.json"), &file)?;
    formats::write_json(&out_dir.join("space.json"), &SpaceDto::from_space(&resolved.space))?;

    if events.len() == 1 {
        let outcome = run_event(&resolved.topology, &resolved.space, &events[0], settings)?;
        write_event(out_dir, &outcome)?;
        report_event(&events[0], &outcome);
        return Ok(());
    }

    // One engine per target node, run in parallel; all writes happen after
    // the parallel section.
    let outcomes: Vec<(usize, Result<EventOutcome>)> = events
        .par_iter()
        .map(|spec| {
            let node = match spec {
                SystemSpec::ShortestPathThreshold {
                    targets: Targets::One(t),
                    ..
                } => *t,
                _ => unreachable!("multi-event specs are per-target"),
            };
            (
                node,
                run_event(&resolved.topology, &resolved.space, spec, settings),
            )
        })
        .collect();

    let mut rows = vec![MAP_HEADER.to_string()];
    for (node, outcome) in &outcomes {
        let outcome = outcome
            .as_ref()
            .map_err(|e| anyhow!("node {node}: {e}"))?;
        write_event(&out_dir.join("nodes").join(format!("n{node}")), outcome)?;
        rows.push(map_row(*node, outcome));
    }
    let csv = rows.join("\n") + "\n";
    fs::write(out_dir.join("map.csv"), csv)
        .with_context(|| format!("cannot write {}", out_dir.join("map.csv").display()))?;
    println!(
        "analyzed {} target nodes; map written to {}",
        outcomes.len(),
        out_dir.join("map.csv").display()
    );
    Ok(())
}

fn report_event(spec: &SystemSpec, outcome: &EventOutcome) {
    let label = match spec {
        SystemSpec::Connectivity { .. } => "connectivity".to_string(),
        SystemSpec::ShortestPathThreshold {
            targets: Targets::One(t),
            ..
        } => format!("node {t}"),
        SystemSpec::ShortestPathThreshold { .. } => "shortest-path".to_string(),
        SystemSpec::MaxFlowThreshold { demand, .. } => format!("max-flow demand {demand}"),
        SystemSpec::KOfN { k } => format!("{k}-out-of-n"),
    };
    match &outcome.result {
        ReliabilityResult::Exact { value } => {
            println!("{label}: exact failure probability {value:.6e}")
        }
        ReliabilityResult::Bounds { lower, upper } => {
            println!("{label}: failure probability in [{lower:.6e}, {upper:.6e}]")
        }
        ReliabilityResult::Hybrid(h) => println!(
            "{label}: estimated failure probability {:.6e} (c.o.v. {:.3e}, {} samples)",
            h.mean,
            h.cov,
            h.archive.len()
        ),
    }
    println!(
        "  {} system-function calls, {} rules, {} branches",
        outcome.stats.system_function_calls,
        outcome.rules.len(),
        outcome.branches.len()
    );
}

/// Re-evaluates an artifact directory under a new component distribution
/// without any system-function call.
pub fn update(
    artifact_dir: &Path,
    network_path: Option<&Path>,
    scenario_path: Option<&Path>,
) -> Result<()> {
    let started = Instant::now();
    let original: NetworkFile = formats::read_json(&artifact_dir.join("network.json"))?;
    let old_space = formats::read_json::<SpaceDto>(&artifact_dir.join("space.json"))?.to_space()?;

    let new_space = match (network_path, scenario_path) {
        (Some(path), None) => resolve(&load_network(path)?, None)?.space,
        (None, Some(path)) => {
            let scenario = load_scenario(path)?;
            resolve(&original, Some(&scenario))?.space
        }
        _ => bail!("update needs exactly one of --network or --scenario"),
    };

    let node_dirs = list_node_dirs(artifact_dir)?;
    let mut nodes_updated = 0usize;
    if node_dirs.is_empty() {
        update_one(artifact_dir, &old_space, &new_space)?;
        nodes_updated += 1;
    } else {
        let mut rows = vec![MAP_HEADER.to_string()];
        for (node, dir) in &node_dirs {
            let (result, stats) = update_one(dir, &old_space, &new_space)?;
            let outcome = EventOutcome {
                result,
                rules: RuleSet::new(),
                branches: BranchSet::default(),
                stats,
            };
            rows.push(map_row(*node, &outcome));
            nodes_updated += 1;
        }
        let csv = rows.join("\n") + "\n";
        fs::write(artifact_dir.join("map.csv"), csv).with_context(|| {
            format!("cannot write {}", artifact_dir.join("map.csv").display())
        })?;
    }

    formats::write_json(&artifact_dir.join("space.json"), &SpaceDto::from_space(&new_space))?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    formats::write_json(
        &artifact_dir.join("update_stats.json"),
        &serde_json::json!({
            "nodes_updated": nodes_updated,
            "system_function_calls": 0,
            "wall_ms": wall_ms,
        }),
    )?;
    println!(
        "updated {nodes_updated} result(s) in {wall_ms:.1} ms with 0 system-function calls"
    );
    Ok(())
}

fn list_node_dirs(artifact_dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let nodes = artifact_dir.join("nodes");
    if !nodes.is_dir() {
        return Ok(Vec::new());
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(&nodes).with_context(|| format!("cannot read {}", nodes.display()))? {
        let path = entry?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if let Some(id) = name.strip_prefix('n').and_then(|s| s.parse::<usize>().ok()) {
            dirs.push((id, path));
        }
    }
    dirs.sort_by_key(|(id, _)| *id);
    Ok(dirs)
}

fn update_one(
    dir: &Path,
    old_space: &ComponentSpace,
    new_space: &ComponentSpace,
) -> Result<(ReliabilityResult, StatsDto)> {
    let result = formats::read_json::<ResultDto>(&dir.join("result.json"))?.to_result();
    let branches = formats::read_json::<BranchesDto>(&dir.join("branches.json"))?.to_branches()?;
    let (updated, new_branches) = update_probability(&result, &branches, old_space, new_space)?;
    formats::write_json(&dir.join("result.json"), &ResultDto::from_result(&updated)?)?;
    formats::write_json(
        &dir.join("branches.json"),
        &BranchesDto::from_branches(&new_branches),
    )?;
    let stats: StatsDto = formats::read_json(&dir.join("stats.json"))?;
    Ok((updated, stats))
}

/// Multi-round analysis over a list of thresholds on the system's scalar
/// performance metric, re-using cached metric evaluations across rounds.
pub fn sweep(
    network_path: &Path,
    scenario_path: Option<&Path>,
    out_dir: &Path,
    thresholds: &[f64],
    settings: &Settings,
) -> Result<()> {
    if thresholds.is_empty() {
        bail!("at least one threshold is required");
    }
    let file = load_network(network_path)?;
    let scenario = scenario_path.map(load_scenario).transpose()?;
    let resolved = resolve(&file, scenario.as_ref())?;

    let metric: Box<dyn MetricSystem> = match &resolved.system {
        SystemSpec::ShortestPathThreshold {
            origins,
            targets: Targets::One(target),
            factor,
        } => Box::new(ShortestPathThresholdPhi::new(
            resolved.topology.clone(),
            origins.iter().map(|o| o - 1).collect(),
            target - 1,
            *factor,
            &resolved.space,
        )?),
        SystemSpec::MaxFlowThreshold {
            origin,
            destination,
            demand,
            ..
        } => Box::new(MaxFlowThresholdPhi::new(
            resolved.topology.clone(),
            origin - 1,
            destination - 1,
            *demand,
            &resolved.space,
        )?),
        _ => bail!("threshold sweeps need a system with a scalar performance metric \
                    (shortest-path or max-flow)"),
    };

    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot write {}", out_dir.display()))?;
    formats::write_json(&out_dir.join("network.json"), &file)?;
    formats::write_json(&out_dir.join("space.json"), &SpaceDto::from_space(&resolved.space))?;

    let cache = RefCell::new(MetricCache::new());
    let mut summary = Vec::new();
    for &threshold in thresholds {
        cache.borrow_mut().reset_counters();
        let phi = ThresholdSystem::new(metric.as_ref(), threshold, &cache);
        let run = run_brc(&resolved.space, &phi, &settings.termination()?)?;
        let result = match run.outcome.status {
            DecompositionStatus::BranchLimitReached => {
                evaluate_reliability(&resolved.space, &run, &phi, &settings.hybrid()?)?
            }
            _ => {
                let placeholder = HybridParams::new(settings.target_cov, 1, 0);
                evaluate_reliability(&resolved.space, &run, &phi, &placeholder)?
            }
        };
        let sampled = match &result {
            ReliabilityResult::Hybrid(h) => h.archive.len() as u64,
            _ => 0,
        };
        let (hits, misses) = {
            let c = cache.borrow();
            (c.hits(), c.misses())
        };
        let outcome = EventOutcome {
            stats: StatsDto::new(run.outcome.status, &run.stats, sampled),
            result,
            rules: run.rules,
            branches: run.outcome.branches,
        };
        write_event(&out_dir.join(format!("threshold_{threshold}")), &outcome)?;
        let (lower, upper) = outcome.result.interval();
        println!(
            "threshold {threshold}: {} in [{lower:.6e}, {upper:.6e}]; {} fresh evaluations, \
             {} answered from cache",
            outcome.result.kind(),
            misses,
            hits
        );
        summary.push(serde_json::json!({
            "threshold": threshold,
            "kind": outcome.result.kind(),
            "lower": lower,
            "mean": outcome.result.mean(),
            "upper": upper,
            "queries": hits + misses,
            "fresh_evaluations": misses,
            "cache_hits": hits,
        }));
    }
    formats::write_json(&out_dir.join("sweep.json"), &summary)?;
    Ok(())
}
