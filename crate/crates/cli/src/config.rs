//! Experiment configs: `{"kind", "parameters", "seeds", "outputDir"}` with a
//! parameter schema per kind. Unknown fields are rejected everywhere.

use std::path::PathBuf;

use ergolab::percolation::Thresholds;
use ergolab::window::GeneratorSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sweep,
    IntervalProbe,
    Spectral,
    EntropyLedger,
    Coinduce,
    ExtensionSuite,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Sweep => "sweep",
            Kind::IntervalProbe => "interval-probe",
            Kind::Spectral => "spectral",
            Kind::EntropyLedger => "entropy-ledger",
            Kind::Coinduce => "coinduce",
            Kind::ExtensionSuite => "extension-suite",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range(SeedRange),
}

/// Inclusive range of seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub from: u64,
    pub to: u64,
}

impl Seeds {
    pub fn expand(&self, offset: u64) -> Vec<u64> {
        let base: Vec<u64> = match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range(r) => (r.from..=r.to).collect(),
        };
        base.into_iter().map(|s| s.wrapping_add(offset)).collect()
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::List(vec![0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub parameters: serde_json::Value,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// An inclusive grid `lo, lo + step, …, hi`, or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range(GridRange),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range(r) => ergolab::percolation::grid(r.lo, r.hi, r.step),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepParams {
    pub window: GeneratorSpec,
    #[serde(default)]
    pub radius: usize,
    pub p_grid: GridSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub svg: bool,
}

fn default_p_low() -> f64 {
    0.05
}

fn default_probe_big() -> usize {
    1000
}

fn default_many() -> usize {
    10
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IntervalProbeParams {
    /// Rank of the free group; the window is the ball of the 2·rank-regular tree.
    pub rank: usize,
    pub radius: usize,
    pub p: f64,
    /// Control parameter below the interval.
    #[serde(default = "default_p_low")]
    pub p_low: f64,
    #[serde(default = "default_probe_big")]
    pub big_size: usize,
    #[serde(default = "default_many")]
    pub many: usize,
    /// Operator norm used for the interval; defaults to the tree value 2√(2·rank − 1).
    #[serde(default)]
    pub norm: Option<f64>,
    #[serde(default = "default_true")]
    pub ends: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SpectralParams {
    pub window: GeneratorSpec,
    pub radii: Vec<usize>,
    #[serde(default)]
    pub iso_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RelationSpec {
    /// Exact weights as "p/q" strings; uniform when omitted.
    #[serde(default)]
    pub weights: Option<Vec<String>>,
    pub points: usize,
    pub generators: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SearchSpec {
    pub graphing: RelationSpec,
    #[serde(default = "default_cap")]
    pub word_length_cap: usize,
    #[serde(default = "default_beam")]
    pub beam_width: usize,
}

fn default_cap() -> usize {
    2
}

fn default_beam() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BaseSpec {
    pub name: String,
    pub weights: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexSpec {
    Finite(usize),
    Named(InfiniteMarker),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfiniteMarker {
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IndexStep {
    /// Ledger entry holding the bound of the subrelation.
    pub of: usize,
    pub index: IndexSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RestrictionStep {
    /// Ledger entry holding the bound of the restriction.
    pub of: usize,
    pub mu_y: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EntropyParams {
    #[serde(default)]
    pub bases: Vec<BaseSpec>,
    #[serde(default)]
    pub alpha_witness: Option<usize>,
    #[serde(default)]
    pub search: Option<SearchSpec>,
    /// (n, m) steps of the compression schedule.
    #[serde(default)]
    pub schedule: Vec<(usize, usize)>,
    #[serde(default)]
    pub finite_index: Vec<IndexStep>,
    #[serde(default)]
    pub restrictions: Vec<RestrictionStep>,
    #[serde(default)]
    pub infinite_fundamental_group: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ActionSpec {
    #[serde(default)]
    pub weights: Option<Vec<String>>,
    pub points: usize,
    /// Images of the acting group's generators, in the order of `beta.generators`.
    pub generators: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OrderSpec {
    #[default]
    Cyclic,
    Reversed,
}

fn default_budget() -> u128 {
    ergolab::extension::DEFAULT_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CoinduceParams {
    /// Classes of the relation on X; the weights come from `beta.weights`.
    pub classes: Vec<Vec<usize>>,
    /// Free action on X given by generator permutations.
    pub beta: ActionSpec,
    pub alpha: ActionSpec,
    #[serde(default)]
    pub order: OrderSpec,
    #[serde(default = "default_budget")]
    pub budget: u128,
    #[serde(default)]
    pub swap_test: bool,
}

fn default_max_points() -> usize {
    12
}

fn default_max_symbols() -> usize {
    3
}

fn default_size_limit() -> u128 {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExtensionSuiteParams {
    pub instances: usize,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default = "default_max_symbols")]
    pub max_symbols: usize,
    /// Instances whose extension would exceed this many points are redrawn.
    #[serde(default = "default_size_limit")]
    pub size_limit: u128,
}

fn schema_error(path: String, message: String) -> CliError {
    CliError::Schema { path, message }
}

/// Parses a config, reporting the path of the first offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| schema_error(e.path().to_string(), e.inner().to_string()))
}

/// Parses the kind-specific parameters; paths are prefixed with `parameters`.
pub fn parse_parameters<T: DeserializeOwned>(value: &serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value.clone()).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { "parameters".to_string() } else { format!("parameters.{inner}") };
        schema_error(path, e.inner().to_string())
    })
}

pub fn require(condition: bool, path: &str, message: &str) -> Result<()> {
    if condition {
        Ok(())
    } else {
        Err(schema_error(path.to_string(), message.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_name_the_field() {
        let err = parse_config(r#"{"kind":"sweep","parameters":{},"seeds":[1],"colour":1}"#).unwrap_err();
        assert!(matches!(err, CliError::Schema { ref path, .. } if path == "colour"), "{err}");
        let err = parse_config(r#"{"kind":"nope"}"#).unwrap_err();
        assert!(matches!(err, CliError::Schema { ref path, .. } if path == "kind"), "{err}");
        let cfg = parse_config(r#"{"kind":"spectral","parameters":{"window":{"type":"tree","degree":3},"radii":[1,"x"]}}"#)
            .unwrap();
        let err = parse_parameters::<SpectralParams>(&cfg.parameters).unwrap_err();
        assert!(matches!(err, CliError::Schema { ref path, .. } if path == "parameters.radii[1]"), "{err}");
    }

    #[test]
    fn seeds_expand_with_offset() {
        let cfg = parse_config(r#"{"kind":"sweep","seeds":{"from":1,"to":3}}"#).unwrap();
        assert_eq!(cfg.seeds.expand(10), vec![11, 12, 13]);
    }
}
