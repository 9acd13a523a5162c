//! Exhaustive parameter-grid scans and topology comparisons with
//! parallel execution over grid points.
//!
//! Every grid point reuses the same cached input series and seeds, so
//! only the scanned parameters differ between points; rows are reported
//! in Cartesian grid order regardless of execution order.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::digest_hex;
use crate::network::NetworkConfig;
use crate::task::{run_task, TaskSpec};

/// One scanned axis: a dotted path into the network config and the
/// values to visit. Layer indices in paths are 1-based, matching the
/// layer numbering of the dynamical equations (e.g. `layers.2.w_from_prev`
/// is the coupling weight w_{1,2} into layer 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub parameter_path: String,
    pub values: Vec<f64>,
}

/// Evenly spaced inclusive range helper for axis construction.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Set a real-valued parameter addressed by a dotted path.
pub fn set_param(config: &mut NetworkConfig, path: &str, value: f64) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let bad = || Error::Argument(format!("cannot resolve parameter path {path:?}"));
    match parts.as_slice() {
        ["layers", idx, field] => {
            let i: usize = idx.parse().map_err(|_| bad())?;
            if i < 1 || i > config.layers.len() {
                return Err(Error::Argument(format!(
                    "path {path:?}: layer index out of range (1..={})",
                    config.layers.len()
                )));
            }
            let layer = &mut config.layers[i - 1];
            let slot = match *field {
                "beta" => &mut layer.beta,
                "tau_fast" => &mut layer.tau_fast,
                "delta_slow" => &mut layer.delta_slow,
                "tau_delay" => &mut layer.tau_delay,
                "bias" => &mut layer.bias,
                "input_gain" => &mut layer.input_gain,
                "w_from_prev" => &mut layer.w_from_prev,
                "w_from_next" => &mut layer.w_from_next,
                _ => return Err(bad()),
            };
            *slot = value;
            Ok(())
        }
        ["mask", "hold_fraction"] => {
            config.mask.hold_fraction = value;
            Ok(())
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    pub nmse_test: f64,
    pub nmse_train: f64,
    pub chosen_ridge: f64,
    /// "ok" or the error text; failed points carry a status, never
    /// fabricated numbers (their NMSE fields are NaN).
    pub status: String,
    pub wall_time_seconds: f64,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<GridAxis>,
    pub rows: Vec<SweepRow>,
    pub base_config_digest: String,
    pub seed: u64,
}

impl SweepResult {
    /// Row with the lowest finite test NMSE.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.is_ok() && r.nmse_test.is_finite())
            .min_by(|a, b| a.nmse_test.total_cmp(&b.nmse_test))
    }

    /// One row per grid point: axis values, NMSE and status.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let header: Vec<String> = self
            .axes
            .iter()
            .map(|a| a.parameter_path.clone())
            .chain(
                ["nmse_test", "nmse_train", "chosen_ridge", "status", "wall_time_seconds"]
                    .iter()
                    .map(|s| s.to_string()),
            )
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut fields: Vec<String> = row.axis_values.iter().map(|v| format!("{v:?}")).collect();
            fields.push(format!("{:?}", row.nmse_test));
            fields.push(format!("{:?}", row.nmse_train));
            fields.push(format!("{:?}", row.chosen_ridge));
            fields.push(row.status.replace(',', ";").replace('\n', " "));
            fields.push(format!("{:.3}", row.wall_time_seconds));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Plot-ready (axis1, axis2, nmse) table; only for two-axis sweeps.
    pub fn write_heatmap_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.axes.len() != 2 {
            return Err(Error::Argument(
                "heatmap export needs exactly two axes".into(),
            ));
        }
        writeln!(
            w,
            "{},{},nmse_test",
            self.axes[0].parameter_path, self.axes[1].parameter_path
        )?;
        for row in &self.rows {
            writeln!(
                w,
                "{:?},{:?},{:?}",
                row.axis_values[0], row.axis_values[1], row.nmse_test
            )?;
        }
        Ok(())
    }
}

fn cartesian_point(axes: &[GridAxis], mut index: usize) -> Vec<f64> {
    // last axis varies fastest
    let mut out = vec![0.0; axes.len()];
    for (k, axis) in axes.iter().enumerate().rev() {
        let len = axis.values.len();
        out[k] = axis.values[index % len];
        index /= len;
    }
    out
}

/// Exhaustively evaluate the Cartesian grid. `parallelism` 0 means one
/// worker per available core.
pub fn run_grid(
    base: &NetworkConfig,
    task: &TaskSpec,
    axes: &[GridAxis],
    parallelism: usize,
) -> Result<SweepResult> {
    if axes.is_empty() || axes.len() > 3 {
        return Err(Error::Argument("sweep needs 1 to 3 axes".into()));
    }
    for axis in axes {
        if axis.values.is_empty() {
            return Err(Error::Argument(format!(
                "axis {:?} has no values",
                axis.parameter_path
            )));
        }
        // path must resolve on the base config
        set_param(&mut base.clone(), &axis.parameter_path, axis.values[0])?;
    }
    base.validate()?;

    let base_json = serde_json::to_vec(base).expect("config serializes");
    let base_config_digest = digest_hex(&base_json);

    // all grid points consume the identical input series
    let input = task.generate_input(task.required_samples(base.washout_steps))?;

    let n_points: usize = axes.iter().map(|a| a.values.len()).product();
    let eval_point = |idx: usize| -> SweepRow {
        let axis_values = cartesian_point(axes, idx);
        let started = Instant::now();
        let mut config = base.clone();
        let mut status = "ok".to_string();
        let mut result = None;
        for (axis, v) in axes.iter().zip(&axis_values) {
            if let Err(e) = set_param(&mut config, &axis.parameter_path, *v) {
                status = e.to_string();
            }
        }
        if status == "ok" {
            match run_task(&config, task, Some(&input)) {
                Ok(run) => result = Some(run.report),
                Err(e) => status = e.to_string(),
            }
        }
        let (nmse_test, nmse_train, chosen_ridge) = match &result {
            Some(r) => (r.nmse_test, r.nmse_train, r.chosen_ridge),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        SweepRow {
            axis_values,
            nmse_test,
            nmse_train,
            chosen_ridge,
            status,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        }
    };

    let rows: Vec<SweepRow> = if parallelism == 1 {
        (0..n_points).map(eval_point).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
        // indexed parallel collect keeps Cartesian order
        pool.install(|| (0..n_points).into_par_iter().map(eval_point).collect())
    };

    Ok(SweepResult {
        axes: axes.to_vec(),
        rows,
        base_config_digest,
        seed: task.seed,
    })
}

/// Per-architecture entry of a topology comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub label: String,
    pub total_nodes: usize,
    pub n_layers: usize,
    pub nmse_test: f64,
    pub nmse_train: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub entries: Vec<ComparisonEntry>,
    /// Entry indices sorted by ascending test NMSE (failures last).
    pub ranking: Vec<usize>,
}

/// Evaluate several architectures on the same task and rank them.
/// All specs must share the same total node budget unless
/// `require_equal_nodes` is disabled.
pub fn compare_topologies(
    specs: &[(String, NetworkConfig)],
    task: &TaskSpec,
    require_equal_nodes: bool,
) -> Result<ComparisonReport> {
    if specs.is_empty() {
        return Err(Error::Argument("no architectures to compare".into()));
    }
    if require_equal_nodes {
        let n0 = specs[0].1.total_nodes();
        for (label, cfg) in specs {
            if cfg.total_nodes() != n0 {
                return Err(Error::Argument(format!(
                    "architecture {label:?} has {} nodes, expected {n0} (disable the equal-node check to override)",
                    cfg.total_nodes()
                )));
            }
        }
    }
    let entries: Vec<ComparisonEntry> = specs
        .iter()
        .map(|(label, cfg)| {
            let (nmse_test, nmse_train, status) = match run_task(cfg, task, None) {
                Ok(run) => (run.report.nmse_test, run.report.nmse_train, "ok".to_string()),
                Err(e) => (f64::NAN, f64::NAN, e.to_string()),
            };
            ComparisonEntry {
                label: label.clone(),
                total_nodes: cfg.total_nodes(),
                n_layers: cfg.layers.len(),
                nmse_test,
                nmse_train,
                status,
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..entries.len()).collect();
    ranking.sort_by(|&a, &b| {
        let (x, y) = (entries[a].nmse_test, entries[b].nmse_test);
        match (x.is_finite(), y.is_finite()) {
            (true, true) => x.total_cmp(&y),
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (false, false) => std::cmp::Ordering::Equal,
        }
    });
    Ok(ComparisonReport { entries, ranking })
}
