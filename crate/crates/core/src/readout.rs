//! Linear readout: ridge-regression training on virtual-node states and
//! NMSE scoring.
//!
//! The output is y_j(n) = Σ_{i,σ} W_{i,σ,j} x_i^σ(n) (+ optional bias).
//! Training solves the regularized normal equations on the training
//! block; the ridge parameter is picked by validation NMSE on the tail
//! of that block, then the weights are refit on the full block.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Timeseries;
use crate::sim::StateMatrix;

pub const WEIGHTS_MAGIC: &[u8; 8] = b"DTDRWT01";

/// Readout training controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    /// Number of state rows used for training.
    pub n_train: usize,
    /// Prediction horizon: the target is s(n + delta_n).
    pub delta_n: usize,
    /// Candidate ridge parameters, sorted ascending.
    pub ridge_grid: Vec<f64>,
    /// Fraction of the training block held out (at its tail) for ridge
    /// selection.
    pub validation_fraction: f64,
    /// Append a constant-1 column; its weight is never regularized.
    pub include_bias: bool,
}

impl Default for TrainSpec {
    fn default() -> Self {
        // {0} ∪ {10^k : k = -12..-2}
        let mut ridge_grid = vec![0.0];
        ridge_grid.extend((-12..=-2).map(|k| 10f64.powi(k)));
        Self {
            n_train: 5000,
            delta_n: 1,
            ridge_grid,
            validation_fraction: 0.1,
            include_bias: true,
        }
    }
}

impl TrainSpec {
    fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.n_train < 10 {
            issues.push("train.n_train must be >= 10".to_string());
        }
        if self.ridge_grid.is_empty() {
            issues.push("train.ridge_grid must be non-empty".to_string());
        }
        if self.ridge_grid.windows(2).any(|w| w[0] > w[1]) {
            issues.push("train.ridge_grid must be sorted ascending".to_string());
        }
        if self.ridge_grid.iter().any(|r| *r < 0.0) {
            issues.push("train.ridge_grid entries must be >= 0".to_string());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            issues.push("train.validation_fraction must be in [0, 1)".to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

/// Trained output weights (Σ N_i + bias) × J.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights {
    /// Row k = weight of state column k; the last row is the bias weight
    /// when `has_bias`.
    pub matrix: DMatrix<f64>,
    pub has_bias: bool,
    pub chosen_ridge: f64,
    pub meta: TrainMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub n_train: usize,
    pub delta_n: usize,
    pub seed: u64,
}

/// Train/test quality summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub nmse_train: f64,
    pub nmse_test: f64,
    pub chosen_ridge: f64,
    pub n_test: usize,
}

impl ReadoutWeights {
    pub fn n_inputs(&self) -> usize {
        self.matrix.nrows() - usize::from(self.has_bias)
    }

    pub fn n_outputs(&self) -> usize {
        self.matrix.ncols()
    }

    /// Binary format: magic, u64 rows, u64 cols, u8 bias flag,
    /// f64 chosen ridge, u64 n_train, u64 delta_n, u64 seed, payload
    /// row-major f64, little-endian.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(WEIGHTS_MAGIC)?;
        w.write_all(&(self.matrix.nrows() as u64).to_le_bytes())?;
        w.write_all(&(self.matrix.ncols() as u64).to_le_bytes())?;
        w.write_all(&[u8::from(self.has_bias)])?;
        w.write_all(&self.chosen_ridge.to_le_bytes())?;
        w.write_all(&(self.meta.n_train as u64).to_le_bytes())?;
        w.write_all(&(self.meta.delta_n as u64).to_le_bytes())?;
        w.write_all(&self.meta.seed.to_le_bytes())?;
        for r in 0..self.matrix.nrows() {
            for c in 0..self.matrix.ncols() {
                w.write_all(&self.matrix[(r, c)].to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_binary<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::new();
        self.write_binary(&mut buf)?;
        crate::manifest::write_atomic(path.as_ref(), &buf)
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<ReadoutWeights> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != WEIGHTS_MAGIC {
            return Err(Error::Format {
                path: "binary".into(),
                reason: format!("bad magic {magic:?}"),
            });
        }
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let chosen_ridge = read_f64(&mut r)?;
        let n_train = read_u64(&mut r)? as usize;
        let delta_n = read_u64(&mut r)? as usize;
        let seed = read_u64(&mut r)?;
        let mut matrix = DMatrix::zeros(rows, cols);
        for rr in 0..rows {
            for cc in 0..cols {
                matrix[(rr, cc)] = read_f64(&mut r)?;
            }
        }
        Ok(ReadoutWeights {
            matrix,
            has_bias: flag[0] != 0,
            chosen_ridge,
            meta: TrainMeta {
                n_train,
                delta_n,
                seed,
            },
        })
    }

    pub fn load_binary<P: AsRef<Path>>(path: P) -> Result<ReadoutWeights> {
        Self::read_binary(std::fs::File::open(path)?)
    }

    /// JSON summary next to the binary weights.
    pub fn save_summary<P: AsRef<Path>>(&self, path: P, report: &EvalReport) -> Result<()> {
        let doc = serde_json::json!({
            "chosen_ridge": self.chosen_ridge,
            "n_inputs": self.n_inputs(),
            "n_outputs": self.n_outputs(),
            "has_bias": self.has_bias,
            "meta": self.meta,
            "nmse_train": report.nmse_train,
            "nmse_test": report.nmse_test,
            "n_test": report.n_test,
        });
        crate::manifest::write_atomic(
            path.as_ref(),
            serde_json::to_string_pretty(&doc).expect("serializes").as_bytes(),
        )
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Design matrix of rows [start, end) with optional bias column.
fn design(states: &StateMatrix, start: usize, end: usize, bias: bool) -> DMatrix<f64> {
    let cols = states.n_cols() + usize::from(bias);
    let mut x = DMatrix::zeros(end - start, cols);
    for (ri, n) in (start..end).enumerate() {
        let row = states.row(n);
        for (ci, v) in row.iter().enumerate() {
            x[(ri, ci)] = *v;
        }
        if bias {
            x[(ri, cols - 1)] = 1.0;
        }
    }
    x
}

/// Aligned targets y(n) = target(n + delta_n) for rows [start, end).
fn targets(target: &Timeseries, start: usize, end: usize, delta_n: usize) -> DMatrix<f64> {
    let d = target.dim();
    let mut y = DMatrix::zeros(end - start, d);
    for (ri, n) in (start..end).enumerate() {
        for c in 0..d {
            y[(ri, c)] = target.value(n + delta_n, c);
        }
    }
    y
}

fn solve_ridge(
    gram: &DMatrix<f64>,
    xty: &DMatrix<f64>,
    ridge: f64,
    bias: bool,
) -> Option<DMatrix<f64>> {
    let mut reg = gram.clone();
    let c = reg.nrows();
    let penalized = if bias { c - 1 } else { c };
    for k in 0..penalized {
        reg[(k, k)] += ridge;
    }
    Cholesky::new(reg).map(|ch| ch.solve(xty))
}

fn block_nmse(x: &DMatrix<f64>, w: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let pred = x * w;
    let resid = &pred - y;
    let n = y.nrows() as f64;
    let mse: f64 = resid.iter().map(|v| v * v).sum::<f64>() / n;
    let mut var = 0.0;
    for c in 0..y.ncols() {
        let col = y.column(c);
        let mean = col.sum() / n;
        var += col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    }
    // a (near-)constant block cannot normalize; rank models by raw MSE
    // so degenerate targets remain trainable
    if var > 1e-300 {
        mse / var
    } else {
        mse
    }
}

/// Train the readout by ridge regression on the first `n_train` state
/// rows, with the ridge parameter chosen on the held-out tail of the
/// training block.
pub fn train_ridge(
    states: &StateMatrix,
    target: &Timeseries,
    spec: &TrainSpec,
) -> Result<ReadoutWeights> {
    train_ridge_seeded(states, target, spec, 0)
}

/// As [`train_ridge`] with the run's root seed recorded in the metadata.
pub fn train_ridge_seeded(
    states: &StateMatrix,
    target: &Timeseries,
    spec: &TrainSpec,
    seed: u64,
) -> Result<ReadoutWeights> {
    spec.validate()?;
    if states.n_rows() < spec.n_train + spec.delta_n {
        return Err(Error::Argument(format!(
            "need >= n_train + delta_n = {} state rows, got {}",
            spec.n_train + spec.delta_n,
            states.n_rows()
        )));
    }
    if target.len() < spec.n_train + spec.delta_n {
        return Err(Error::Argument(format!(
            "target has {} samples, need >= {}",
            target.len(),
            spec.n_train + spec.delta_n
        )));
    }

    let n_val = ((spec.n_train as f64 * spec.validation_fraction) as usize).min(spec.n_train - 1);
    let n_fit = spec.n_train - n_val;

    let x_fit = design(states, 0, n_fit, spec.include_bias);
    let y_fit = targets(target, 0, n_fit, spec.delta_n);
    let gram_fit = x_fit.tr_mul(&x_fit);
    let xty_fit = x_fit.tr_mul(&y_fit);

    let (x_val, y_val) = if n_val > 0 {
        (
            Some(design(states, n_fit, spec.n_train, spec.include_bias)),
            Some(targets(target, n_fit, spec.n_train, spec.delta_n)),
        )
    } else {
        (None, None)
    };

    let mut ranked: Vec<(f64, f64)> = Vec::new(); // (ridge, val score)
    let mut skipped = Vec::new();
    for &ridge in &spec.ridge_grid {
        let Some(w) = solve_ridge(&gram_fit, &xty_fit, ridge, spec.include_bias) else {
            skipped.push(ridge);
            continue;
        };
        let score = match (&x_val, &y_val) {
            (Some(xv), Some(yv)) => block_nmse(xv, &w, yv),
            _ => block_nmse(&x_fit, &w, &y_fit),
        };
        if !score.is_finite() {
            skipped.push(ridge);
            continue;
        }
        ranked.push((ridge, score));
    }
    if ranked.is_empty() {
        return Err(Error::Training(format!(
            "every ridge grid point failed (singular or non-finite): {skipped:?}"
        )));
    }
    if !skipped.is_empty() {
        log::debug!("ridge grid points skipped as singular: {skipped:?}");
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));

    // refit on the full training block; candidates whose refit turns out
    // singular fall through to the next-best validated ridge
    let x_tail = design(states, n_fit, spec.n_train, spec.include_bias);
    let y_tail = targets(target, n_fit, spec.n_train, spec.delta_n);
    let gram = &gram_fit + x_tail.tr_mul(&x_tail);
    let xty = &xty_fit + x_tail.tr_mul(&y_tail);
    for (chosen, _) in ranked {
        let Some(matrix) = solve_ridge(&gram, &xty, chosen, spec.include_bias) else {
            log::debug!("refit at ridge {chosen:e} is singular, falling back");
            continue;
        };
        if !matrix.iter().all(|v| v.is_finite()) {
            continue;
        }
        return Ok(ReadoutWeights {
            matrix,
            has_bias: spec.include_bias,
            chosen_ridge: chosen,
            meta: TrainMeta {
                n_train: spec.n_train,
                delta_n: spec.delta_n,
                seed,
            },
        });
    }
    Err(Error::Training(
        "refit failed for every validated ridge grid point".into(),
    ))
}

/// Apply the readout: pure linear map from state rows to outputs.
pub fn predict(states: &StateMatrix, weights: &ReadoutWeights) -> Result<Timeseries> {
    if states.n_cols() != weights.n_inputs() {
        return Err(Error::Argument(format!(
            "states have {} columns but weights expect {}",
            states.n_cols(),
            weights.n_inputs()
        )));
    }
    let samples = (0..states.n_rows())
        .map(|n| predict_row(states.row(n), weights))
        .collect();
    Timeseries::new(samples, 1.0)
}

/// Readout of a single state row.
pub fn predict_row(row: &[f64], weights: &ReadoutWeights) -> Vec<f64> {
    let j = weights.n_outputs();
    let mut out = vec![0.0; j];
    for (c, v) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, x) in row.iter().enumerate() {
            acc += weights.matrix[(k, c)] * x;
        }
        if weights.has_bias {
            acc += weights.matrix[(weights.matrix.nrows() - 1, c)];
        }
        *v = acc;
    }
    out
}

/// Normalized mean square error: mean squared error divided by the
/// target variance (summed over components for vector targets).
pub fn nmse(prediction: &Timeseries, target: &Timeseries) -> Result<f64> {
    if prediction.len() != target.len() {
        return Err(Error::Argument(format!(
            "length mismatch: prediction {} vs target {}",
            prediction.len(),
            target.len()
        )));
    }
    if prediction.dim() != target.dim() {
        return Err(Error::Argument("dimension mismatch".into()));
    }
    if target.len() < 2 {
        return Err(Error::Argument("need at least 2 samples".into()));
    }
    let n = target.len() as f64;
    let d = target.dim();
    let mut mse = 0.0;
    for (p, t) in prediction.samples().iter().zip(target.samples()) {
        for c in 0..d {
            let e = p[c] - t[c];
            mse += e * e;
        }
    }
    mse /= n;
    let mut var = 0.0;
    for c in 0..d {
        let mean: f64 = target.samples().iter().map(|s| s[c]).sum::<f64>() / n;
        var += target
            .samples()
            .iter()
            .map(|s| (s[c] - mean) * (s[c] - mean))
            .sum::<f64>()
            / n;
    }
    if var <= 0.0 {
        return Err(Error::Degenerate("target has zero variance".into()));
    }
    Ok(mse / var)
}

/// Train, then score on both the training block and the rows after it.
/// The test NMSE uses only rows n > n_train, i.e. data the weights never
/// saw; the divisor is the actual evaluated length.
pub fn train_and_eval(
    states: &StateMatrix,
    target: &Timeseries,
    spec: &TrainSpec,
    seed: u64,
) -> Result<(ReadoutWeights, EvalReport)> {
    let weights = train_ridge_seeded(states, target, spec, seed)?;
    let n_rows = states.n_rows().min(target.len().saturating_sub(spec.delta_n));
    let x_train = design(states, 0, spec.n_train, spec.include_bias);
    let y_train = targets(target, 0, spec.n_train, spec.delta_n);
    let nmse_train = block_nmse(&x_train, &weights.matrix, &y_train);
    let (nmse_test, n_test) = if n_rows > spec.n_train + 1 {
        let x_test = design(states, spec.n_train, n_rows, spec.include_bias);
        let y_test = targets(target, spec.n_train, n_rows, spec.delta_n);
        (block_nmse(&x_test, &weights.matrix, &y_test), n_rows - spec.n_train)
    } else {
        (f64::NAN, 0)
    };
    let report = EvalReport {
        nmse_train,
        nmse_test,
        chosen_ridge: weights.chosen_ridge,
        n_test,
    };
    Ok((weights, report))
}
