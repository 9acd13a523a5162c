//! A prediction task: which chaotic system to generate, how far ahead to
//! predict, and how to train/score, shared by the CLI, the sweep
//! harness and the topology comparison.

use serde::{Deserialize, Serialize};

use crate::benchmarks::{gen_lorenz, gen_mackey_glass, LorenzParams, MackeyGlassParams};
use crate::error::Result;
use crate::network::NetworkConfig;
use crate::readout::{train_and_eval, EvalReport, ReadoutWeights, TrainSpec};
use crate::series::Timeseries;
use crate::sim::{simulate, StateMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemSpec {
    MackeyGlass(MackeyGlassParams),
    Lorenz(LorenzParams),
}

/// Full task description. The input signal is the generated sequence
/// (for Lorenz, its first dimension), standardized by default so the
/// layer-1 input gain acts on a known scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub system: SystemSpec,
    /// Prediction horizon Δn.
    pub delta_n: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Transient samples dropped by the generator.
    pub discard: usize,
    pub standardize: bool,
    /// Amplitude applied to the generated series (after standardization
    /// if enabled); fixes the input's drive scale independently of the
    /// layer-1 gain.
    pub input_scale: f64,
    /// Std of Gaussian noise added to the drive during training,
    /// relative to the input's std. Targets stay clean, so the readout
    /// learns to contract perturbations; essential for stable
    /// closed-loop operation.
    pub input_noise: f64,
    /// Root seed; generator history and similar streams derive from it.
    pub seed: u64,
    pub ridge_grid: Vec<f64>,
    pub validation_fraction: f64,
    pub include_bias: bool,
}

impl TaskSpec {
    pub fn mackey_glass(delta_n: usize) -> Self {
        Self {
            system: SystemSpec::MackeyGlass(MackeyGlassParams::default()),
            delta_n,
            n_train: 5000,
            n_test: 1000,
            discard: 1000,
            standardize: true,
            input_scale: 1.0,
            input_noise: 0.0,
            seed: 42,
            ridge_grid: TrainSpec::default().ridge_grid,
            validation_fraction: 0.1,
            include_bias: true,
        }
    }

    pub fn lorenz(delta_n: usize) -> Self {
        Self {
            system: SystemSpec::Lorenz(LorenzParams::default()),
            delta_n,
            n_train: 5000,
            n_test: 1000,
            discard: 5000,
            standardize: true,
            input_scale: 1.0,
            input_noise: 0.0,
            seed: 42,
            ridge_grid: TrainSpec::default().ridge_grid,
            validation_fraction: 0.1,
            include_bias: true,
        }
    }

    pub fn train_spec(&self) -> TrainSpec {
        TrainSpec {
            n_train: self.n_train,
            delta_n: self.delta_n,
            ridge_grid: self.ridge_grid.clone(),
            validation_fraction: self.validation_fraction,
            include_bias: self.include_bias,
        }
    }

    /// Total input samples needed for a network with `washout` steps.
    pub fn required_samples(&self, washout: usize) -> usize {
        washout + self.n_train + self.n_test + self.delta_n
    }

    /// Generate the scalar input/target series for this task.
    pub fn generate_input(&self, n_samples: usize) -> Result<Timeseries> {
        let raw = match &self.system {
            SystemSpec::MackeyGlass(params) => {
                let mut params = params.clone();
                if let crate::benchmarks::HistoryInit::Random { seed } = &mut params.history_init {
                    if *seed == 0 {
                        *seed = crate::rng::derive_seed(self.seed, "generator-history");
                    }
                }
                gen_mackey_glass(&params, n_samples, self.discard)?
            }
            SystemSpec::Lorenz(params) => {
                gen_lorenz(params, n_samples, self.discard)?.component(0)?
            }
        };
        let mut out = if self.standardize {
            raw.standardize()?
        } else {
            raw
        };
        if self.input_scale != 1.0 {
            for row in out.samples_mut() {
                for v in row.iter_mut() {
                    *v *= self.input_scale;
                }
            }
        }
        Ok(out)
    }
}

/// Everything produced by one simulate-train-evaluate pass.
pub struct TaskRun {
    pub input: Timeseries,
    pub states: StateMatrix,
    pub weights: ReadoutWeights,
    pub report: EvalReport,
}

/// Run the full pipeline for one network on one task. `input` may be a
/// pre-generated series (it must cover `required_samples`); pass `None`
/// to generate it from the task.
pub fn run_task(
    network: &NetworkConfig,
    task: &TaskSpec,
    input: Option<&Timeseries>,
) -> Result<TaskRun> {
    network.validate()?;
    let needed = task.required_samples(network.washout_steps);
    let owned;
    let input = match input {
        Some(s) => s,
        None => {
            owned = task.generate_input(needed)?;
            &owned
        }
    };
    let states = if task.input_noise > 0.0 {
        // drive with a noise-perturbed copy; targets stay clean so the
        // readout learns to contract perturbations of the drive
        use rand_distr::{Distribution, StandardNormal};
        let mut noisy = input.clone();
        let n = noisy.len() as f64;
        let mean: f64 = noisy.samples().iter().map(|r| r[0]).sum::<f64>() / n;
        let var: f64 =
            noisy.samples().iter().map(|r| (r[0] - mean).powi(2)).sum::<f64>() / n;
        let sigma = task.input_noise * var.sqrt();
        let mut rng = crate::rng::stream(task.seed, "train-noise");
        for row in noisy.samples_mut() {
            for v in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * z;
            }
        }
        simulate(network, &noisy)?
    } else {
        simulate(network, input)?
    };
    // align the target to the state rows: row k was produced under input
    // sample (washout + k)
    let target = input.slice(network.washout_steps, input.len())?;
    let (weights, report) = train_and_eval(&states, &target, &task.train_spec(), task.seed)?;
    Ok(TaskRun {
        input: input.clone(),
        states,
        weights,
        report,
    })
}
