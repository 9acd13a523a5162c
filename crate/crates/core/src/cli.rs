//! Command-line front end: ties generators, simulation, training,
//! closed-loop evaluation and sweeps together via config files and
//! reproducible run manifests.
//!
//! Exit codes (stable scripting contract): 0 success, 2 config or
//! argument error, 3 numeric blowup, 4 I/O error.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::autonomy::closed_loop_eval;
use crate::config::{preset, preset_names, ExperimentConfig};
use crate::error::{Error, Result};
use crate::manifest::{write_atomic, RunManifest};
use crate::sweep::{compare_topologies, run_grid};
use crate::task::run_task;

#[derive(Debug, Parser)]
#[command(
    name = "dtdr",
    version,
    about = "Deep time-delay reservoir simulator and trainer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named in-repo preset used instead of --config.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory for result files and the run manifest.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the config's root seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override sweep parallelism (0 = one worker per core).
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the task's chaotic input series.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of samples; defaults to what the configured run needs.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Simulate the reservoir and train the ridge readout.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train a one-step predictor, then run it closed-loop and score the
    /// divergence against the true continuation.
    Autonomous {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the config's parameter grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate and rank the architectures in the config's [compare]
    /// section on the shared task.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
}

struct Run {
    config: ExperimentConfig,
    out: PathBuf,
    manifest: RunManifest,
    started: Instant,
    parallelism: usize,
}

impl Run {
    fn prepare(command: &str, common: &CommonArgs) -> Result<Run> {
        let (mut config, mut text) = match (&common.config, &common.preset) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Format {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                (ExperimentConfig::parse(&text)?, text)
            }
            (None, Some(name)) => {
                let text = preset(name).ok_or_else(|| {
                    Error::Argument(format!(
                        "unknown preset {name:?} (known: {})",
                        preset_names().join(", ")
                    ))
                })?;
                (ExperimentConfig::parse(text)?, text.to_string())
            }
            (Some(_), Some(_)) => {
                return Err(Error::Argument(
                    "give either --config or --preset, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Argument(
                    "a config is required: pass --config <path> or --preset <name>".into(),
                ))
            }
        };
        if let Some(seed) = common.seed {
            config.task.seed = seed;
            // the resolved config in the manifest reflects the override
            text = config.to_toml_string();
        }
        std::fs::create_dir_all(&common.out)?;
        let manifest = RunManifest::new(command, text, config.task.seed);
        let parallelism = common
            .parallelism
            .or_else(|| config.sweep.as_ref().map(|s| s.parallelism))
            .unwrap_or(0);
        Ok(Run {
            config,
            out: common.out.clone(),
            manifest,
            started: Instant::now(),
            parallelism,
        })
    }

    fn emit<F>(&mut self, name: &str, write: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let path = self.out.join(name);
        let mut buf = Vec::new();
        write(&mut buf)?;
        write_atomic(&path, &buf)?;
        self.manifest.output_files.push(path.clone());
        Ok(path)
    }

    fn emit_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let json = serde_json::to_vec_pretty(value).expect("value serializes");
        self.emit(name, |buf| {
            buf.extend_from_slice(&json);
            buf.push(b'\n');
            Ok(())
        })
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.wall_time_seconds = self.started.elapsed().as_secs_f64();
        let path = self.out.join("manifest.json");
        self.manifest.output_files.push(path.clone());
        self.manifest.save(path)
    }
}

/// Execute one parsed command line. Errors map to exit codes via
/// [`Error::exit_code`].
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, samples } => cmd_generate(&common, samples),
        Command::Train { common } => cmd_train(&common),
        Command::Autonomous { common } => cmd_autonomous(&common),
        Command::Sweep { common } => cmd_sweep(&common),
        Command::Compare { common } => cmd_compare(&common),
    }
}

fn cmd_generate(common: &CommonArgs, samples: Option<usize>) -> Result<()> {
    let mut run = Run::prepare("generate", common)?;
    let task = run.config.task_spec();
    let network = run.config.network()?;
    let n = samples.unwrap_or_else(|| task.required_samples(network.washout_steps));
    let series = task.generate_input(n)?;
    run.emit("series.csv", |buf| series.write_csv(buf))?;
    run.emit("series.bin", |buf| series.write_binary(buf))?;
    println!(
        "generated {} samples ({:?}, sample interval {}) -> {}",
        series.len(),
        run.config.task.system,
        series.sample_interval,
        run.out.display()
    );
    run.finish()
}

#[derive(Serialize)]
struct StatesMeta {
    n_rows: usize,
    n_cols: usize,
    layer_nodes: Vec<usize>,
}

fn cmd_train(common: &CommonArgs) -> Result<()> {
    let mut run = Run::prepare("train", common)?;
    let task = run.config.task_spec();
    let network = run.config.network()?;
    let result = run_task(&network, &task, None)?;
    run.emit_json(
        "states_meta.json",
        &StatesMeta {
            n_rows: result.states.n_rows(),
            n_cols: result.states.n_cols(),
            layer_nodes: result.states.layer_nodes().to_vec(),
        },
    )?;
    run.emit("weights.bin", |buf| result.weights.write_binary(buf))?;
    run.emit_json("report.json", &result.report)?;
    println!(
        "test NMSE {:.3e} (train {:.3e}, ridge {:.1e}, {} nodes) -> {}",
        result.report.nmse_test,
        result.report.nmse_train,
        result.weights.chosen_ridge,
        result.states.n_cols(),
        run.out.display()
    );
    run.finish()
}

#[derive(Serialize)]
struct AutonomyReport {
    nmse_test_open_loop: f64,
    valid_time_lyapunov: f64,
    threshold_fraction: f64,
    escaped: bool,
    saturation_onset: Option<usize>,
    n_steps: usize,
}

fn cmd_autonomous(common: &CommonArgs) -> Result<()> {
    let mut run = Run::prepare("autonomous", common)?;
    let task = run.config.task_spec();
    let network = run.config.network()?;
    let eval = run.config.eval_settings();
    let outcome = closed_loop_eval(&network, &task, &eval)
        .map_err(|e| match e {
            Error::Argument(msg) if msg.contains("delta_n") => Error::Config(vec![msg]),
            other => other,
        })?;

    run.emit("prediction.csv", |buf| outcome.prediction.write_csv(buf))?;
    run.emit("truth.csv", |buf| outcome.truth.write_csv(buf))?;
    run.emit("divergence.csv", |buf| outcome.curve.write_csv(buf))?;
    let n_cmp = outcome.prediction.len();
    let report = AutonomyReport {
        nmse_test_open_loop: outcome.open_loop_nmse,
        valid_time_lyapunov: outcome.valid_time_lyapunov,
        threshold_fraction: eval.threshold_fraction,
        escaped: outcome.escaped,
        saturation_onset: outcome.saturation_onset,
        n_steps: n_cmp,
    };
    run.emit_json("autonomy.json", &report)?;
    let mut line = format!(
        "valid time {:.2} Lyapunov times over {n_cmp} closed-loop steps (threshold {}, open-loop test NMSE {:.3e})",
        outcome.valid_time_lyapunov, eval.threshold_fraction, outcome.open_loop_nmse
    );
    if let Some(step) = outcome.saturation_onset {
        line.push_str(&format!("; divergence saturates from step {step}"));
    }
    if outcome.escaped {
        line.push_str("; output escaped the attractor bound");
    }
    println!("{line} -> {}", run.out.display());
    run.finish()
}

fn cmd_sweep(common: &CommonArgs) -> Result<()> {
    let mut run = Run::prepare("sweep", common)?;
    let task = run.config.task_spec();
    let network = run.config.network()?;
    let axes = run.config.sweep_axes()?;
    let result = run_grid(&network, &task, &axes, run.parallelism)?;
    run.emit("sweep.csv", |buf| result.write_csv(buf))?;
    run.emit_json("sweep.json", &result)?;
    if axes.len() == 2 {
        run.emit("heatmap.csv", |buf| result.write_heatmap_csv(buf))?;
    }
    let n_ok = result.rows.iter().filter(|r| r.is_ok()).count();
    match result.best() {
        Some(best) => {
            let at: Vec<String> = axes
                .iter()
                .zip(&best.axis_values)
                .map(|(a, v)| format!("{}={}", a.parameter_path, v))
                .collect();
            println!(
                "best NMSE {:.3e} at {} ({}/{} points ok) -> {}",
                best.nmse_test,
                at.join(", "),
                n_ok,
                result.rows.len(),
                run.out.display()
            );
        }
        None => println!(
            "no grid point succeeded (0/{} points ok) -> {}",
            result.rows.len(),
            run.out.display()
        ),
    }
    run.finish()
}

fn cmd_compare(common: &CommonArgs) -> Result<()> {
    let mut run = Run::prepare("compare", common)?;
    let task = run.config.task_spec();
    let require_equal = run
        .config
        .compare
        .as_ref()
        .map(|c| c.require_equal_nodes)
        .unwrap_or(true);
    let specs = run.config.compare_specs()?;
    let report = compare_topologies(&specs, &task, require_equal)?;
    run.emit_json("compare.json", &report)?;
    run.emit("compare.csv", |buf| {
        use std::io::Write;
        writeln!(buf, "label,n_layers,total_nodes,nmse_test,nmse_train,status")?;
        for e in &report.entries {
            writeln!(
                buf,
                "{},{},{},{:?},{:?},{}",
                e.label, e.n_layers, e.total_nodes, e.nmse_test, e.nmse_train, e.status
            )?;
        }
        Ok(())
    })?;
    for (rank, idx) in report.ranking.iter().enumerate() {
        let e = &report.entries[*idx];
        println!(
            "#{} {}: NMSE {:.3e} ({} layers, {} nodes, {})",
            rank + 1,
            e.label,
            e.nmse_test,
            e.n_layers,
            e.total_nodes,
            e.status
        );
    }
    println!("-> {}", run.out.display());
    run.finish()
}
