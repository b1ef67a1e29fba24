//! File formats: network descriptions, hazard scenarios, and the artifacts
//! written by the commands. Node, edge, and component indices are 1-based
//! in every file and converted at this boundary; the library is 0-based.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use brc_core::decomposition::DecompositionStatus;
use brc_core::engine::RunStats;
use brc_core::hazard::{self, ClassMap, FragilityClass, GmpeCoefficients, Scenario};
use brc_core::inference::{HybridEstimate, ReliabilityResult, SampleArchive};
use brc_core::model::{Branch, BranchSet, ComponentSpace, Rule, RuleSet, Verdict};
use brc_core::sysfun::{EdgeDef, NetworkTopology};

// ---------------------------------------------------------------------------
// Network file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nodes: usize,
    /// Optional per-node planar coordinates, used to derive rupture
    /// distances from an epicenter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub edges: Vec<EdgeFile>,
    pub system: SystemSpec,
    pub components: ComponentsSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeFile {
    /// Optional 1-based edge id; must match the position when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<usize>,
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacities: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemSpec {
    Connectivity {
        origin: usize,
        destination: usize,
    },
    ShortestPathThreshold {
        origins: Vec<usize>,
        targets: Targets,
        factor: f64,
    },
    MaxFlowThreshold {
        origin: usize,
        destination: usize,
        demand: i64,
        #[serde(default)]
        min_cut_rules: bool,
    },
    KOfN {
        k: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Targets {
    Keyword(String),
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComponentsSpec {
    /// Explicit per-component PMFs over ordered states.
    Marginals { pmf: Vec<Vec<f64>> },
    /// Failure probabilities derived from a seismic scenario.
    Hazard {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scenario: Option<ScenarioFile>,
        classes: ClassesSpec,
        /// Extra or overriding fragility classes by name.
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        class_table: BTreeMap<String, FragilityParams>,
        /// GMPE selection; only the bundled model is available.
        #[serde(default = "default_gmpe")]
        gmpe: String,
    },
}

fn default_gmpe() -> String {
    "ena_1s".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub m_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epicenter: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassesSpec {
    /// 1-based edge id -> class name.
    #[serde(default)]
    pub explicit: BTreeMap<usize, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragilityParams {
    pub median_capacity: f64,
    pub dispersion: f64,
}

pub fn load_network(path: &Path) -> Result<NetworkFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read network file {}", path.display()))?;
    let file: NetworkFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse network file {}", path.display()))?;
    Ok(file)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("cannot parse scenario file {}", path.display()))
}

// ---------------------------------------------------------------------------
// Resolution to core types
// ---------------------------------------------------------------------------

/// The network file resolved into library inputs.
pub struct Resolved {
    pub topology: NetworkTopology,
    pub space: ComponentSpace,
    pub system: SystemSpec,
}

fn node_index(raw: usize, n_nodes: usize, what: &str) -> Result<usize> {
    if raw == 0 || raw > n_nodes {
        bail!("{what} node {raw} outside 1..={n_nodes}");
    }
    Ok(raw - 1)
}

pub fn resolve(file: &NetworkFile, scenario_override: Option<&ScenarioFile>) -> Result<Resolved> {
    if file.nodes == 0 {
        bail!("the network needs at least one node");
    }
    let mut edges = Vec::with_capacity(file.edges.len());
    for (i, e) in file.edges.iter().enumerate() {
        if let Some(id) = e.id {
            if id != i + 1 {
                bail!("edge at position {} declares id {id}; ids must be 1-based and in order", i + 1);
            }
        }
        edges.push(EdgeDef {
            u: node_index(e.from, file.nodes, "edge endpoint")?,
            v: node_index(e.to, file.nodes, "edge endpoint")?,
            length: e.length,
            capacities: e.capacities.clone(),
        });
    }
    let topology = NetworkTopology::with_edges(file.nodes, edges)?;

    let space = match &file.components {
        ComponentsSpec::Marginals { pmf } => {
            if !file.edges.is_empty() && pmf.len() != file.edges.len() {
                bail!(
                    "{} marginals for {} edges",
                    pmf.len(),
                    file.edges.len()
                );
            }
            ComponentSpace::new(pmf.clone())?
        }
        ComponentsSpec::Hazard {
            scenario,
            classes,
            class_table,
            gmpe,
        } => {
            if gmpe != "ena_1s" {
                bail!("unknown GMPE model {gmpe:?}; only \"ena_1s\" is bundled");
            }
            let scenario_file = scenario_override
                .or(scenario.as_ref())
                .ok_or_else(|| anyhow!("a hazard network needs a scenario (inline or --scenario)"))?;
            let scenario = resolve_scenario(scenario_file, file)?;
            let class_map = resolve_classes(classes, class_table)?;
            hazard::build_component_space(
                &scenario,
                &class_map,
                &GmpeCoefficients::ena_period_1s(),
            )?
        }
    };
    if space.n_components() != topology.n_edges() && !matches!(file.system, SystemSpec::KOfN { .. })
    {
        bail!(
            "{} components for {} edges",
            space.n_components(),
            topology.n_edges()
        );
    }

    Ok(Resolved {
        topology,
        space,
        system: file.system.clone(),
    })
}

pub fn resolve_scenario(scenario: &ScenarioFile, file: &NetworkFile) -> Result<Scenario> {
    match (&scenario.distances, &scenario.epicenter) {
        (Some(d), _) => {
            if d.len() != file.edges.len() {
                bail!("{} distances for {} edges", d.len(), file.edges.len());
            }
            Ok(Scenario::new(scenario.m_w, d.clone())?)
        }
        (None, Some(&epicenter)) => {
            let coords = file
                .coords
                .as_ref()
                .ok_or_else(|| anyhow!("an epicenter scenario needs node coordinates"))?;
            if coords.len() != file.nodes {
                bail!("{} coordinates for {} nodes", coords.len(), file.nodes);
            }
            let pairs: Vec<(usize, usize)> = file
                .edges
                .iter()
                .map(|e| (e.from - 1, e.to - 1))
                .collect();
            Ok(Scenario::from_epicenter(
                scenario.m_w,
                epicenter,
                coords,
                &pairs,
            )?)
        }
        (None, None) => bail!("a scenario needs either distances or an epicenter"),
    }
}

fn resolve_classes(
    classes: &ClassesSpec,
    table: &BTreeMap<String, FragilityParams>,
) -> Result<ClassMap> {
    let lookup = |name: &str| -> Result<FragilityClass> {
        if let Some(params) = table.get(name) {
            return Ok(FragilityClass::new(
                name,
                params.median_capacity,
                params.dispersion,
            )?);
        }
        match name {
            "HWB2" => Ok(FragilityClass::hwb2()),
            "HWB4" => Ok(FragilityClass::hwb4()),
            "HWB11" => Ok(FragilityClass::hwb11()),
            other => bail!("unknown fragility class {other:?}"),
        }
    };
    let mut map = match &classes.default {
        Some(name) => ClassMap::with_default(lookup(name)?),
        None => ClassMap::new(),
    };
    for (&edge, name) in &classes.explicit {
        if edge == 0 {
            bail!("class map edge ids are 1-based");
        }
        map.assign(edge - 1, lookup(name)?);
    }
    Ok(map)
}

/// Expands the system spec into the list of 0-based target events.
/// Single-event systems yield one entry.
pub fn target_events(resolved: &Resolved) -> Result<Vec<SystemSpec>> {
    match &resolved.system {
        SystemSpec::ShortestPathThreshold {
            origins,
            targets,
            factor,
        } => {
            let targets_1based: Vec<usize> = match targets {
                Targets::One(t) => vec![*t],
                Targets::Many(list) => list.clone(),
                Targets::Keyword(word) if word == "all_non_origin" => (1..=resolved
                    .topology
                    .n_nodes())
                    .filter(|t| !origins.contains(t))
                    .collect(),
                Targets::Keyword(other) => {
                    bail!("unknown targets keyword {other:?} (expected \"all_non_origin\")")
                }
            };
            Ok(targets_1based
                .into_iter()
                .map(|t| SystemSpec::ShortestPathThreshold {
                    origins: origins.clone(),
                    targets: Targets::One(t),
                    factor: *factor,
                })
                .collect())
        }
        other => Ok(vec![other.clone()]),
    }
}

// ---------------------------------------------------------------------------
// Artifact serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceDto {
    pub pmf: Vec<Vec<f64>>,
}

impl SpaceDto {
    pub fn from_space(space: &ComponentSpace) -> Self {
        SpaceDto {
            pmf: space.marginals().to_vec(),
        }
    }

    pub fn to_space(&self) -> Result<ComponentSpace> {
        Ok(ComponentSpace::new(self.pmf.clone())?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionDto {
    /// 1-based component index.
    pub component: usize,
    pub state: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleDto {
    pub condition: Vec<ConditionDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RulesDto {
    pub failure: Vec<RuleDto>,
    pub survival: Vec<RuleDto>,
}

impl RulesDto {
    pub fn from_rules(rules: &RuleSet) -> Self {
        let convert = |rule: &Rule| RuleDto {
            condition: rule
                .conditions()
                .map(|(n, s)| ConditionDto {
                    component: n + 1,
                    state: s,
                })
                .collect(),
        };
        RulesDto {
            failure: rules.failure_rules().iter().map(convert).collect(),
            survival: rules.survival_rules().iter().map(convert).collect(),
        }
    }

    pub fn to_rules(&self, space: &ComponentSpace) -> Result<RuleSet> {
        let mut rules = RuleSet::new();
        for (list, verdict) in [
            (&self.failure, Verdict::Fail),
            (&self.survival, Verdict::Survive),
        ] {
            for dto in list {
                let conditions = dto
                    .condition
                    .iter()
                    .map(|c| {
                        if c.component == 0 {
                            bail!("component indices are 1-based");
                        }
                        Ok((c.component - 1, c.state))
                    })
                    .collect::<Result<Vec<_>>>()?;
                rules.push_unchecked(Rule::new(verdict, conditions, space)?);
            }
        }
        Ok(rules)
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Fail => "fail",
        Verdict::Survive => "survive",
        Verdict::Unknown => "unknown",
    }
}

fn parse_verdict(s: &str) -> Result<Verdict> {
    match s {
        "fail" => Ok(Verdict::Fail),
        "survive" => Ok(Verdict::Survive),
        "unknown" => Ok(Verdict::Unknown),
        other => bail!("unknown verdict {other:?}"),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchDto {
    pub lower: Vec<u8>,
    pub upper: Vec<u8>,
    pub verdict_lower: String,
    pub verdict_upper: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchesDto {
    pub branches: Vec<BranchDto>,
}

impl BranchesDto {
    pub fn from_branches(set: &BranchSet) -> Self {
        BranchesDto {
            branches: set
                .iter()
                .map(|b| BranchDto {
                    lower: b.lower.clone(),
                    upper: b.upper.clone(),
                    verdict_lower: verdict_str(b.verdict_lower).into(),
                    verdict_upper: verdict_str(b.verdict_upper).into(),
                    probability: b.probability,
                })
                .collect(),
        }
    }

    pub fn to_branches(&self) -> Result<BranchSet> {
        let branches = self
            .branches
            .iter()
            .map(|dto| {
                Ok(Branch::new(
                    dto.lower.clone(),
                    dto.upper.clone(),
                    parse_verdict(&dto.verdict_lower)?,
                    parse_verdict(&dto.verdict_upper)?,
                    dto.probability,
                )?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BranchSet::from_branches(branches))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchiveDto {
    pub alpha: f64,
    pub beta: f64,
    pub generating_pmf: Vec<Vec<f64>>,
    pub samples: Vec<Vec<u8>>,
    pub failed: Vec<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultDto {
    Exact {
        value: f64,
    },
    Bounds {
        lower: f64,
        upper: f64,
    },
    Hybrid {
        alpha_post: f64,
        beta_post: f64,
        lower_limit: f64,
        upper_limit: f64,
        mean: f64,
        variance: f64,
        cov: f64,
        credible_95: (f64, f64),
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error_note: Option<String>,
        archive: ArchiveDto,
    },
}

impl ResultDto {
    pub fn from_result(result: &ReliabilityResult) -> Result<Self> {
        Ok(match result {
            ReliabilityResult::Exact { value } => ResultDto::Exact { value: *value },
            ReliabilityResult::Bounds { lower, upper } => ResultDto::Bounds {
                lower: *lower,
                upper: *upper,
            },
            ReliabilityResult::Hybrid(h) => ResultDto::Hybrid {
                alpha_post: h.alpha_post,
                beta_post: h.beta_post,
                lower_limit: h.lower_limit,
                upper_limit: h.upper_limit,
                mean: h.mean,
                variance: h.variance,
                cov: h.cov,
                credible_95: h.credible_interval(0.95)?,
                error_note: h.error_note.clone(),
                archive: ArchiveDto {
                    alpha: h.archive.alpha,
                    beta: h.archive.beta,
                    generating_pmf: h.archive.generating_pmf.clone(),
                    samples: h.archive.samples.clone(),
                    failed: h.archive.failed.clone(),
                },
            },
        })
    }

    pub fn to_result(&self) -> ReliabilityResult {
        match self {
            ResultDto::Exact { value } => ReliabilityResult::Exact { value: *value },
            ResultDto::Bounds { lower, upper } => ReliabilityResult::Bounds {
                lower: *lower,
                upper: *upper,
            },
            ResultDto::Hybrid {
                alpha_post,
                beta_post,
                lower_limit,
                upper_limit,
                mean,
                variance,
                cov,
                error_note,
                archive,
                ..
            } => ReliabilityResult::Hybrid(HybridEstimate {
                alpha_post: *alpha_post,
                beta_post: *beta_post,
                lower_limit: *lower_limit,
                upper_limit: *upper_limit,
                mean: *mean,
                variance: *variance,
                cov: *cov,
                archive: SampleArchive {
                    samples: archive.samples.clone(),
                    failed: archive.failed.clone(),
                    alpha: archive.alpha,
                    beta: archive.beta,
                    generating_pmf: archive.generating_pmf.clone(),
                },
                error_note: error_note.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsDto {
    pub status: String,
    pub system_function_calls: u64,
    pub failure_rules_found: u64,
    pub survival_rules_found: u64,
    pub passes: u64,
    pub hybrid_samples: u64,
    pub wall_ms: f64,
    pub decomposition_ms: f64,
    pub system_function_ms: f64,
}

impl StatsDto {
    pub fn new(status: DecompositionStatus, stats: &RunStats, hybrid_samples: u64) -> Self {
        StatsDto {
            status: format!("{status:?}"),
            system_function_calls: stats.system_function_calls,
            failure_rules_found: stats.failure_rules_found,
            survival_rules_found: stats.survival_rules_found,
            passes: stats.passes,
            hybrid_samples,
            wall_ms: stats.wall_time.as_secs_f64() * 1e3,
            decomposition_ms: stats.decomposition_time.as_secs_f64() * 1e3,
            system_function_ms: stats.system_function_time.as_secs_f64() * 1e3,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}
