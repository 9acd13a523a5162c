//! Declarative experiment configs (TOML) and the in-repo preset registry.
//!
//! A config document has `[task]` and `[network]` sections plus optional
//! `[train]`, `[eval]`, `[sweep]` and `[compare]` sections. Unknown keys
//! are rejected and constraint violations are reported all at once, each
//! naming its key path.

use serde::{Deserialize, Serialize};

use crate::autonomy::EmbeddingSpec;
use crate::benchmarks::{LorenzParams, MackeyGlassParams};
use crate::error::{Error, Result};
use crate::mask::{build_mask_with_hold, MaskDistribution};
use crate::network::{LayerConfig, NetworkConfig};
use crate::readout::TrainSpec;
use crate::sweep::GridAxis;
use crate::task::{SystemSpec, TaskSpec};

/// Default Mackey-Glass largest Lyapunov exponent (per time unit).
pub const LYAPUNOV_MACKEY_GLASS: f64 = 5.8e-3;
/// Default Lorenz largest Lyapunov exponent (per time unit).
pub const LYAPUNOV_LORENZ: f64 = 0.91;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    MackeyGlass,
    Lorenz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub system: SystemKind,
    pub delta_n: usize,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    /// Transient samples dropped by the generator; defaults per system.
    #[serde(default)]
    pub discard: Option<usize>,
    #[serde(default = "default_true")]
    pub standardize: bool,
    /// Amplitude applied to the generated series; sets the drive scale
    /// jointly with the layer-1 input gain.
    #[serde(default = "default_input_scale")]
    pub input_scale: f64,
    /// Training-only drive noise std, relative to the input's std.
    #[serde(default)]
    pub input_noise: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub ridge_grid: Vec<f64>,
    pub validation_fraction: f64,
    pub include_bias: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainSpec::default();
        Self {
            ridge_grid: d.ridge_grid,
            validation_fraction: d.validation_fraction,
            include_bias: d.include_bias,
        }
    }
}

/// Closed-loop evaluation settings; per-system defaults fill in whatever
/// is omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub embedding_dimension: Option<usize>,
    /// Embedding lag in samples.
    pub embedding_lag: Option<usize>,
    /// Closed-loop steps to run.
    pub n_steps: Option<usize>,
    /// Teacher-driven steps before the loop closes.
    pub warmup_steps: Option<usize>,
    /// Divergence threshold as a fraction of the attractor diameter.
    pub threshold_fraction: Option<f64>,
    pub lyapunov_max: Option<f64>,
    pub escape_factor: Option<f64>,
}

/// Fully resolved closed-loop evaluation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub embedding: EmbeddingSpec,
    pub n_steps: usize,
    pub warmup_steps: usize,
    pub threshold_fraction: f64,
    pub lyapunov_max: f64,
    pub escape_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    #[serde(default = "default_distribution")]
    pub distribution: MaskDistribution,
    #[serde(default = "default_mask_seed")]
    pub seed: u64,
    #[serde(default = "default_hold_fraction")]
    pub hold_fraction: f64,
}

impl Default for MaskSection {
    fn default() -> Self {
        Self {
            distribution: default_distribution(),
            seed: default_mask_seed(),
            hold_fraction: default_hold_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSection {
    pub beta: f64,
    pub tau_fast: f64,
    #[serde(default)]
    pub delta_slow: f64,
    pub tau_delay: f64,
    #[serde(default)]
    pub bias: f64,
    pub n_nodes: usize,
    #[serde(default)]
    pub input_gain: f64,
    #[serde(default)]
    pub w_from_prev: f64,
    #[serde(default)]
    pub w_from_next: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub layers: Vec<LayerSection>,
    #[serde(default)]
    pub mask: MaskSection,
    #[serde(default = "default_substeps")]
    pub substeps_per_node: usize,
    #[serde(default = "default_washout")]
    pub washout_steps: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub allow_multi_input: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub parameter_path: String,
    /// Explicit values; mutually exclusive with `range`/`steps`.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Inclusive `[lo, hi]` range, resolved with `steps` evenly spaced
    /// values.
    #[serde(default)]
    pub range: Option<[f64; 2]>,
    #[serde(default)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<AxisSection>,
    /// Worker threads; 0 means one per available core.
    #[serde(default)]
    pub parallelism: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedNetworkSection {
    pub label: String,
    pub network: NetworkSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    /// Preset names whose network sections join the comparison.
    #[serde(default)]
    pub presets: Vec<String>,
    /// Inline architectures.
    #[serde(default)]
    pub networks: Vec<NamedNetworkSection>,
    #[serde(default = "default_true")]
    pub require_equal_nodes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskSection,
    pub network: NetworkSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub compare: Option<CompareSection>,
}

fn default_true() -> bool {
    true
}
fn default_n_train() -> usize {
    5000
}
fn default_n_test() -> usize {
    1000
}
fn default_seed() -> u64 {
    42
}
fn default_input_scale() -> f64 {
    1.0
}
fn default_distribution() -> MaskDistribution {
    MaskDistribution::UniformPm1
}
fn default_mask_seed() -> u64 {
    1
}
fn default_hold_fraction() -> f64 {
    0.8
}
fn default_substeps() -> usize {
    2
}
fn default_washout() -> usize {
    200
}

impl ExperimentConfig {
    /// Parse and fully validate a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)
            .map_err(|e| Error::Config(vec![format!("config parse error: {e}")]))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Validate every cross-field constraint, collecting all violations.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.task.delta_n == 0 {
            issues.push("task.delta_n must be >= 1".to_string());
        }
        if self.task.n_train < 10 {
            issues.push("task.n_train must be >= 10".to_string());
        }
        if self.task.n_test < 1 {
            issues.push("task.n_test must be >= 1".to_string());
        }
        if !self.task.input_scale.is_finite() || self.task.input_scale == 0.0 {
            issues.push("task.input_scale must be finite and nonzero".to_string());
        }
        if !self.task.input_noise.is_finite() || self.task.input_noise < 0.0 {
            issues.push("task.input_noise must be finite and >= 0".to_string());
        }
        if !(self.train.validation_fraction > 0.0 && self.train.validation_fraction < 1.0) {
            issues.push("train.validation_fraction must be in (0, 1)".to_string());
        }
        if self.train.ridge_grid.is_empty() {
            issues.push("train.ridge_grid must be non-empty".to_string());
        }
        if self.train.ridge_grid.iter().any(|l| *l < 0.0 || !l.is_finite()) {
            issues.push("train.ridge_grid values must be finite and >= 0".to_string());
        }
        match self.network() {
            Ok(network) => {
                if let Err(Error::Config(mut more)) = network.validate() {
                    issues.append(&mut more);
                }
            }
            Err(Error::Config(mut more)) => issues.append(&mut more),
            Err(other) => issues.push(other.to_string()),
        }
        if let Some(sweep) = &self.sweep {
            if sweep.axes.is_empty() {
                issues.push("sweep.axes must be non-empty".to_string());
            }
            for (k, axis) in sweep.axes.iter().enumerate() {
                let key = format!("sweep.axes.{}", k + 1);
                match (&axis.values, &axis.range, &axis.steps) {
                    (Some(v), None, None) => {
                        if v.is_empty() {
                            issues.push(format!("{key}.values must be non-empty"));
                        }
                    }
                    (None, Some(r), Some(s)) => {
                        if *s < 2 {
                            issues.push(format!("{key}.steps must be >= 2"));
                        }
                        if !(r[0] < r[1]) {
                            issues.push(format!("{key}.range must be increasing"));
                        }
                    }
                    _ => issues.push(format!(
                        "{key}: give either `values` or both `range` and `steps`"
                    )),
                }
            }
        }
        if let Some(compare) = &self.compare {
            if compare.presets.is_empty() && compare.networks.is_empty() {
                issues.push("compare needs at least one preset or inline network".to_string());
            }
            for name in &compare.presets {
                if preset(name).is_none() {
                    issues.push(format!(
                        "compare.presets: unknown preset {name:?} (known: {})",
                        preset_names().join(", ")
                    ));
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }

    /// Build the typed network config (the mask realization is generated
    /// here from its recipe).
    pub fn network(&self) -> Result<NetworkConfig> {
        Self::build_network(&self.network, self.task.seed)
    }

    fn build_network(section: &NetworkSection, task_seed: u64) -> Result<NetworkConfig> {
        if section.layers.is_empty() {
            return Err(Error::Config(vec![
                "network.layers must contain at least one layer".to_string(),
            ]));
        }
        let mask = build_mask_with_hold(
            section.layers[0].n_nodes,
            section.mask.seed,
            section.mask.distribution,
            section.mask.hold_fraction,
        )?;
        Ok(NetworkConfig {
            layers: section
                .layers
                .iter()
                .map(|l| LayerConfig {
                    beta: l.beta,
                    tau_fast: l.tau_fast,
                    delta_slow: l.delta_slow,
                    tau_delay: l.tau_delay,
                    bias: l.bias,
                    n_nodes: l.n_nodes,
                    input_gain: l.input_gain,
                    w_from_prev: l.w_from_prev,
                    w_from_next: l.w_from_next,
                })
                .collect(),
            mask,
            substeps_per_node: section.substeps_per_node,
            washout_steps: section.washout_steps,
            seed: section.seed.unwrap_or(task_seed),
            allow_multi_input: section.allow_multi_input,
        })
    }

    pub fn task_spec(&self) -> TaskSpec {
        let (system, discard_default) = match self.task.system {
            SystemKind::MackeyGlass => (
                SystemSpec::MackeyGlass(MackeyGlassParams::default()),
                1000,
            ),
            SystemKind::Lorenz => (SystemSpec::Lorenz(LorenzParams::default()), 5000),
        };
        TaskSpec {
            system,
            delta_n: self.task.delta_n,
            n_train: self.task.n_train,
            n_test: self.task.n_test,
            discard: self.task.discard.unwrap_or(discard_default),
            standardize: self.task.standardize,
            input_scale: self.task.input_scale,
            input_noise: self.task.input_noise,
            seed: self.task.seed,
            ridge_grid: self.train.ridge_grid.clone(),
            validation_fraction: self.train.validation_fraction,
            include_bias: self.train.include_bias,
        }
    }

    /// Closed-loop settings with per-system defaults filled in.
    pub fn eval_settings(&self) -> EvalSettings {
        let (lag, lyap) = match self.task.system {
            SystemKind::MackeyGlass => (17, LYAPUNOV_MACKEY_GLASS),
            SystemKind::Lorenz => (3, LYAPUNOV_LORENZ),
        };
        EvalSettings {
            embedding: EmbeddingSpec {
                dimension: self.eval.embedding_dimension.unwrap_or(3),
                lag: self.eval.embedding_lag.unwrap_or(lag),
            },
            n_steps: self.eval.n_steps.unwrap_or(2000),
            warmup_steps: self.eval.warmup_steps.unwrap_or(500),
            threshold_fraction: self.eval.threshold_fraction.unwrap_or(0.4),
            lyapunov_max: self.eval.lyapunov_max.unwrap_or(lyap),
            escape_factor: self.eval.escape_factor.unwrap_or(10.0),
        }
    }

    /// Resolve the sweep axes into concrete grids.
    pub fn sweep_axes(&self) -> Result<Vec<GridAxis>> {
        let section = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config(vec!["config has no [sweep] section".to_string()]))?;
        section
            .axes
            .iter()
            .map(|axis| {
                let values = match (&axis.values, &axis.range, &axis.steps) {
                    (Some(v), None, None) => v.clone(),
                    (None, Some(r), Some(s)) => crate::sweep::linspace(r[0], r[1], *s),
                    _ => {
                        return Err(Error::Config(vec![format!(
                            "sweep axis {:?}: give either `values` or both `range` and `steps`",
                            axis.parameter_path
                        )]))
                    }
                };
                Ok(GridAxis {
                    parameter_path: axis.parameter_path.clone(),
                    values,
                })
            })
            .collect()
    }

    /// Architectures joining a `compare` run: presets first, then inline
    /// networks, in declaration order.
    pub fn compare_specs(&self) -> Result<Vec<(String, NetworkConfig)>> {
        let section = self
            .compare
            .as_ref()
            .ok_or_else(|| Error::Config(vec!["config has no [compare] section".to_string()]))?;
        let mut out = Vec::new();
        for name in &section.presets {
            let text = preset(name).ok_or_else(|| {
                Error::Config(vec![format!("unknown preset {name:?}")])
            })?;
            let cfg = Self::parse(text)?;
            out.push((name.clone(), Self::build_network(&cfg.network, self.task.seed)?));
        }
        for named in &section.networks {
            out.push((
                named.label.clone(),
                Self::build_network(&named.network, self.task.seed)?,
            ));
        }
        Ok(out)
    }
}

/// Look up a shipped preset by name.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

static PRESETS: &[(&str, &str)] = &[
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig3c", include_str!("../presets/fig3c.toml")),
    ("table1-1", include_str!("../presets/table1-1.toml")),
    ("table1-2", include_str!("../presets/table1-2.toml")),
    ("table1-3", include_str!("../presets/table1-3.toml")),
    ("fig4-mg", include_str!("../presets/fig4-mg.toml")),
    ("fig4-lz", include_str!("../presets/fig4-lz.toml")),
];
