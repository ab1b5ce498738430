//! Experiment configuration: what to build and which quantities to compute.

use std::path::{Path, PathBuf};

use morreylab::characterize::{TheoremId, TheoremParams};
use morreylab::commutator::FamilyMember;
use morreylab::space::{build_grid_1d, build_ultrametric_tree, SpaceDocument, DEFAULT_POINT_BUDGET};
use morreylab::weights::gen_power_weight;
use morreylab::{Domain64, Function64, Masses, PointFunction, QuasiMetricSpace, Weight, Weight64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Grid1d {
        n: usize,
        #[serde(default = "one")]
        theta: f64,
        #[serde(default)]
        masses: Masses,
    },
    UltrametricTree {
        depth: u32,
        arity: u32,
        #[serde(default)]
        masses: Masses,
        #[serde(default = "default_budget")]
        point_budget: usize,
    },
    /// A serialized space document, relative to the config file.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

fn default_budget() -> usize {
    DEFAULT_POINT_BUDGET
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    #[default]
    Uniform,
    /// `(epsilon + d(center, .))^alpha`.
    Power { center: usize, alpha: f64, epsilon: f64 },
    Explicit { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Explicit { values: Vec<f64> },
    Constant { value: f64 },
    /// Indicator of the ball with the given enumeration index.
    Indicator { ball: usize },
    /// 1 from `threshold` on, 0 before.
    Step { threshold: usize },
    LogDist { center: usize, epsilon: f64 },
    /// Random signs; without a seed one is derived from the experiment seed.
    RandomPm {
        #[serde(default)]
        seed: Option<u64>,
    },
}

/// Unknown keys are rejected by the flattened spec, which sees every key but `name`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFunction {
    pub name: String,
    #[serde(flatten)]
    pub spec: FunctionSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl Params {
    pub fn theorem(&self) -> TheoremParams<f64> {
        TheoremParams {
            p: self.p,
            q: self.q,
            kappa: self.kappa,
            gamma: self.gamma,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrids {
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
    #[serde(default)]
    pub kappa: Vec<f64>,
    #[serde(default)]
    pub gamma: Vec<f64>,
}

impl SweepGrids {
    pub fn is_empty(&self) -> bool {
        self.p.is_empty() && self.q.is_empty() && self.kappa.is_empty() && self.gamma.is_empty()
    }

    /// Cartesian product, with `base` filling the parameters without a grid.
    pub fn tuples(&self, base: &Params) -> Vec<Params> {
        let pick = |grid: &[f64], fallback: f64| if grid.is_empty() { vec![fallback] } else { grid.to_vec() };
        let mut out = Vec::new();
        for &p in &pick(&self.p, base.p) {
            for &q in &pick(&self.q, base.q) {
                for &kappa in &pick(&self.kappa, base.kappa) {
                    for &gamma in &pick(&self.gamma, base.gamma) {
                        out.push(Params { p, q, kappa, gamma });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub space: SpaceSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    /// Symbols `b`.
    pub symbols: Vec<NamedFunction>,
    /// Test functions for the audit; the operator-norm family is built separately.
    #[serde(default)]
    pub functions: Vec<NamedFunction>,
    pub params: Params,
    #[serde(default = "all_theorems")]
    pub theorems: Vec<String>,
    #[serde(default)]
    pub sweep: SweepGrids,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_random_family")]
    pub random_family_size: usize,
    #[serde(default = "yes")]
    pub opnorm: bool,
    #[serde(default = "yes")]
    pub audit: bool,
    #[serde(default)]
    pub sharp_statement_variant: bool,
    /// Output directory, relative to the working directory; `--out` wins.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn all_theorems() -> Vec<String> {
    TheoremId::ALL.iter().map(|t| t.as_str().to_string()).collect()
}

fn default_random_family() -> usize {
    8
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Reads a config; relative space-file paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if let SpaceSpec::File { path: file } = &mut config.space {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    pub fn theorem_ids(&self) -> Result<Vec<TheoremId>, CliError> {
        self.theorems
            .iter()
            .map(|s| TheoremId::parse(s).ok_or_else(|| CliError::Config(format!("theorems: unknown theorem id {s:?}"))))
            .collect()
    }

    /// Stable text the config hash is computed from.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }
}

/// A config resolved into computable objects.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub domain: Domain64,
    pub weight: Weight64,
    pub symbols: Vec<(String, Function64)>,
    pub functions: Vec<FamilyMember<f64>>,
}

impl Experiment {
    pub fn build(config: ExperimentConfig) -> Result<Self, CliError> {
        if config.name.trim().is_empty() {
            return Err(CliError::Config("name: must not be empty".into()));
        }
        if config.symbols.is_empty() {
            return Err(CliError::Config("symbols: at least one symbol is required".into()));
        }
        config.theorem_ids()?;
        let space = build_space(&config.space)?;
        let domain = Domain64::new(space);
        let weight = build_weight(&config.weight, &domain)?;
        let mut symbols = Vec::new();
        for (i, named) in config.symbols.iter().enumerate() {
            let f = build_function(&named.spec, &domain, derived_seed(config.seed, 1 + i as u64))
                .map_err(|e| CliError::Config(format!("symbols[{i}] ({}): {e}", named.name)))?;
            symbols.push((named.name.clone(), f));
        }
        let mut functions = Vec::new();
        for (i, named) in config.functions.iter().enumerate() {
            let f = build_function(&named.spec, &domain, derived_seed(config.seed, 1000 + i as u64))
                .map_err(|e| CliError::Config(format!("functions[{i}] ({}): {e}", named.name)))?;
            functions.push(FamilyMember {
                label: named.name.clone(),
                is_indicator: matches!(named.spec, FunctionSpec::Indicator { .. }),
                function: f,
            });
        }
        Ok(Self {
            config,
            domain,
            weight,
            symbols,
            functions,
        })
    }
}

/// Per-item seeds that depend only on the experiment seed and the item slot.
pub fn derived_seed(seed: u64, slot: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(slot)
}

pub fn build_space(spec: &SpaceSpec) -> Result<QuasiMetricSpace<f64>, CliError> {
    let err = |e: morreylab::Error| CliError::Config(format!("space: {e}"));
    match spec {
        SpaceSpec::Grid1d { n, theta, masses } => build_grid_1d(*n, masses.clone(), *theta).map_err(err),
        SpaceSpec::UltrametricTree {
            depth,
            arity,
            masses,
            point_budget,
        } => build_ultrametric_tree(*depth, *arity, masses.clone(), *point_budget).map_err(err),
        SpaceSpec::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("space.path: cannot read {}: {e}", path.display())))?;
            let doc: SpaceDocument = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("space.path: invalid space document: {e}")))?;
            QuasiMetricSpace::from_document(&doc).map_err(err)
        }
    }
}

pub fn build_weight(spec: &WeightSpec, domain: &Domain64) -> Result<Weight64, CliError> {
    let err = |e: morreylab::Error| CliError::Config(format!("weight: {e}"));
    match spec {
        WeightSpec::Uniform => Ok(Weight::uniform(domain.len())),
        WeightSpec::Power { center, alpha, epsilon } => {
            gen_power_weight(domain, *center, *alpha, *epsilon).map_err(err)
        }
        WeightSpec::Explicit { values } => Weight::on(domain, values.clone()).map_err(err),
    }
}

fn build_function(spec: &FunctionSpec, domain: &Domain64, seed: u64) -> morreylab::Result<Function64> {
    match spec {
        FunctionSpec::Explicit { values } => PointFunction::on(domain, values.clone()),
        FunctionSpec::Constant { value } => PointFunction::on(domain, vec![*value; domain.len()]),
        FunctionSpec::Indicator { ball } => PointFunction::indicator(domain, *ball),
        FunctionSpec::Step { threshold } => PointFunction::step(domain, *threshold),
        FunctionSpec::LogDist { center, epsilon } => PointFunction::log_dist(domain, *center, *epsilon),
        FunctionSpec::RandomPm { seed: own } => Ok(PointFunction::random_pm(domain.len(), own.unwrap_or(seed))),
    }
}
