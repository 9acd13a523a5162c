//! Closed-loop (autonomous) prediction and its evaluation.
//!
//! After training a one-step predictor, the loop is closed: the value
//! injected at step ñ is the readout output of step ñ−1, so the reservoir
//! free-runs as a model of the learned system. Quality is measured by the
//! Euclidean divergence between Takens-embedded predicted and true
//! trajectories, converted to Lyapunov times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkConfig;
use crate::readout::{predict_row, ReadoutWeights};
use crate::series::Timeseries;
use crate::sim::Simulator;

/// Takens delay-embedding parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    /// Embedding dimension m.
    pub dimension: usize,
    /// Delay lag in samples.
    pub lag: usize,
}

impl EmbeddingSpec {
    fn validate(&self) -> Result<()> {
        if self.dimension < 1 || self.lag < 1 {
            return Err(Error::Argument(
                "embedding needs dimension >= 1 and lag >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct AutonomousRun {
    /// Readout outputs y(ñ), ñ = 1..n_steps (possibly truncated on escape).
    pub output: Timeseries,
    /// Values injected as input at each ñ; injected[ñ] == output[ñ-1]
    /// bit-exactly for ñ >= 1.
    pub injected: Vec<f64>,
    /// Set when the output left the escape bound and the run was
    /// truncated early.
    pub escaped: bool,
}

/// Pointwise divergence between two embedded trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceCurve {
    /// (ñ, Euclidean distance), ñ strictly increasing from 1.
    pub points: Vec<(usize, f64)>,
    pub lyapunov_max: f64,
    pub sample_interval: f64,
    /// Max per-coordinate range of the embedded reference trajectories.
    pub attractor_diameter: f64,
}

/// Run the trained system closed-loop. `warmup` is teacher-driven input
/// that brings the reservoir to a valid state before the loop closes;
/// weights must have been trained with delta_n = 1.
///
/// The output stops early (with `escaped` set) if it leaves a bound of
/// `escape_factor` times the warmup signal's range around its midpoint.
pub fn run_autonomous(
    config: &NetworkConfig,
    weights: &ReadoutWeights,
    warmup: &Timeseries,
    n_steps: usize,
) -> Result<AutonomousRun> {
    run_autonomous_bounded(config, weights, warmup, n_steps, 10.0)
}

pub fn run_autonomous_bounded(
    config: &NetworkConfig,
    weights: &ReadoutWeights,
    warmup: &Timeseries,
    n_steps: usize,
    escape_factor: f64,
) -> Result<AutonomousRun> {
    if weights.meta.delta_n != 1 {
        return Err(Error::Argument(format!(
            "closed-loop prediction needs weights trained with delta_n = 1, got {}",
            weights.meta.delta_n
        )));
    }
    if warmup.dim() != 1 {
        return Err(Error::Argument("warmup series must be scalar".into()));
    }
    if warmup.is_empty() {
        return Err(Error::Argument("warmup series must be non-empty".into()));
    }
    let mut sim = Simulator::new(config)?;
    if sim.n_cols() != weights.n_inputs() {
        return Err(Error::Argument(format!(
            "network has {} nodes but weights expect {}",
            sim.n_cols(),
            weights.n_inputs()
        )));
    }

    let (lo, hi) = warmup
        .samples()
        .iter()
        .map(|v| v[0])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let mid = 0.5 * (lo + hi);
    let half_span = 0.5 * (hi - lo).max(f64::MIN_POSITIVE);
    let bound = escape_factor * half_span;

    let mut row = Vec::new();
    for n in 0..warmup.len() {
        row = sim.step(warmup.value(n, 0))?;
    }

    let mut outputs = Vec::with_capacity(n_steps);
    let mut injected = Vec::with_capacity(n_steps);
    // at n_tilde = 0 the last teacher value is still in effect; the first
    // closed-loop injection is the readout of the final warmup step
    let mut next_input = predict_row(&row, weights)[0];
    let mut escaped = false;
    for _ in 0..n_steps {
        injected.push(next_input);
        row = sim.step(next_input)?;
        let y = predict_row(&row, weights)[0];
        outputs.push(y);
        if !y.is_finite() || (y - mid).abs() > bound {
            escaped = true;
            break;
        }
        next_input = y;
    }
    let mut output = Timeseries::scalar(
        outputs.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect(),
        warmup.sample_interval,
    )?;
    output.normalization = warmup.normalization.clone();
    Ok(AutonomousRun {
        output,
        injected,
        escaped,
    })
}

/// Outcome of a full train-then-free-run evaluation.
#[derive(Debug, Clone)]
pub struct ClosedLoopOutcome {
    /// Open-loop test NMSE of the underlying one-step predictor.
    pub open_loop_nmse: f64,
    pub prediction: Timeseries,
    pub truth: Timeseries,
    pub curve: DivergenceCurve,
    pub valid_time_lyapunov: f64,
    pub saturation_onset: Option<usize>,
    pub escaped: bool,
}

/// Train a one-step predictor for `task` on `network`, close the loop,
/// and score the free run against the true continuation of the same
/// generated series.
pub fn closed_loop_eval(
    network: &NetworkConfig,
    task: &crate::task::TaskSpec,
    eval: &crate::config::EvalSettings,
) -> Result<ClosedLoopOutcome> {
    if task.delta_n != 1 {
        return Err(Error::Argument(format!(
            "closed-loop evaluation needs delta_n = 1, got {}",
            task.delta_n
        )));
    }
    let mut task = task.clone();
    let span = (eval.embedding.dimension - 1) * eval.embedding.lag;
    // one series covers training, the teacher warmup, and the true
    // continuation the closed loop is compared against
    let teacher_len = network.washout_steps + task.n_train;
    let needed = (teacher_len + 1 + eval.n_steps + span + 1)
        .max(task.required_samples(network.washout_steps));
    task.n_test = needed - teacher_len - task.delta_n;
    let input = task.generate_input(needed)?;
    let result = crate::task::run_task(network, &task, Some(&input))?;

    let warmup = input.slice(0, teacher_len)?;
    let auto = run_autonomous_bounded(
        network,
        &result.weights,
        &warmup,
        eval.n_steps,
        eval.escape_factor,
    )?;
    // output[j] approximates input sample teacher_len + 1 + j
    let n_cmp = auto.output.len().min(input.len() - teacher_len - 1);
    let truth = input.slice(teacher_len + 1, teacher_len + 1 + n_cmp)?;
    let prediction = auto.output.slice(0, n_cmp)?;
    let curve = divergence_curve(&prediction, &truth, &eval.embedding, eval.lyapunov_max)?;
    let valid_time = curve.valid_time(eval.threshold_fraction)?;
    let saturation = curve.saturation_onset(eval.threshold_fraction);
    Ok(ClosedLoopOutcome {
        open_loop_nmse: result.report.nmse_test,
        prediction,
        truth,
        curve,
        valid_time_lyapunov: valid_time,
        saturation_onset: saturation,
        escaped: auto.escaped,
    })
}

/// Delay embedding v(n) = (s(n), s(n−lag), …, s(n−(m−1)·lag)).
/// Output length is input length − (m−1)·lag exactly.
pub fn takens_embed(series: &Timeseries, spec: &EmbeddingSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if series.dim() != 1 {
        return Err(Error::Argument("takens_embed expects a scalar series".into()));
    }
    let m = spec.dimension;
    let span = (m - 1) * spec.lag;
    if series.len() < span + 1 {
        return Err(Error::Argument(format!(
            "series of length {} too short for (m={m}, lag={})",
            series.len(),
            spec.lag
        )));
    }
    Ok((span..series.len())
        .map(|n| (0..m).map(|k| series.value(n - k * spec.lag, 0)).collect())
        .collect())
}

fn embedded_diameter(points: &[Vec<f64>]) -> f64 {
    let m = points[0].len();
    (0..m)
        .map(|c| {
            let (lo, hi) = points
                .iter()
                .map(|p| p[c])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Pointwise Euclidean distance between the embedded trajectories of
/// `prediction` and `target`, indexed by ñ starting at 1. Symmetric in
/// its two series arguments.
pub fn divergence_curve(
    prediction: &Timeseries,
    target: &Timeseries,
    spec: &EmbeddingSpec,
    lyapunov_max: f64,
) -> Result<DivergenceCurve> {
    if prediction.len() != target.len() {
        return Err(Error::Argument(format!(
            "length mismatch: prediction {} vs target {}",
            prediction.len(),
            target.len()
        )));
    }
    let a = takens_embed(prediction, spec)?;
    let b = takens_embed(target, spec)?;
    let points = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (p, q))| {
            let d2: f64 = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
            (i + 1, d2.sqrt())
        })
        .collect();
    let attractor_diameter = embedded_diameter(&a).max(embedded_diameter(&b));
    Ok(DivergenceCurve {
        points,
        lyapunov_max,
        sample_interval: target.sample_interval,
        attractor_diameter,
    })
}

impl DivergenceCurve {
    /// Valid prediction time in Lyapunov times: the first ñ where the
    /// distance exceeds `threshold_fraction` of the attractor diameter,
    /// converted via λ_max and the sample interval. Returns the full
    /// horizon when never exceeded.
    pub fn valid_time(&self, threshold_fraction: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&threshold_fraction) || threshold_fraction == 0.0 {
            return Err(Error::Argument(
                "threshold_fraction must be in (0, 1)".into(),
            ));
        }
        let threshold = threshold_fraction * self.attractor_diameter;
        let crossing = self
            .points
            .iter()
            .find(|(_, d)| *d > threshold)
            .map(|(n, _)| n.saturating_sub(1))
            .unwrap_or_else(|| self.points.last().map(|(n, _)| *n).unwrap_or(0));
        Ok(crossing as f64 * self.sample_interval * self.lyapunov_max)
    }

    /// Divergence-saturation detector: the curve has left the attractor
    /// scale and stays there (the closed loop collapsed to some other
    /// dynamical state instead of tracking the target). Reports the
    /// first ñ from which the median distance of the remaining curve
    /// exceeds `threshold_fraction` of the diameter, if any.
    pub fn saturation_onset(&self, threshold_fraction: f64) -> Option<usize> {
        let threshold = threshold_fraction * self.attractor_diameter;
        let n = self.points.len();
        if n < 4 {
            return None;
        }
        for (i, (step, d)) in self.points.iter().enumerate() {
            if *d > threshold {
                let mut rest: Vec<f64> = self.points[i..].iter().map(|(_, d)| *d).collect();
                rest.sort_by(f64::total_cmp);
                if rest[rest.len() / 2] > threshold {
                    return Some(*step);
                }
            }
        }
        None
    }

    /// CSV with columns (ñ, distance).
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# lyapunov_max = {}", self.lyapunov_max)?;
        writeln!(w, "# sample_interval = {}", self.sample_interval)?;
        writeln!(w, "# attractor_diameter = {}", self.attractor_diameter)?;
        writeln!(w, "n,distance")?;
        for (n, d) in &self.points {
            writeln!(w, "{n},{d:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{build_mask, MaskDistribution};
    use crate::network::LayerConfig;
    use crate::readout::{train_ridge, TrainSpec};
    use crate::sim::simulate;

    fn scalar(v: Vec<f64>) -> Timeseries {
        Timeseries::scalar(v, 1.0).unwrap()
    }

    #[test]
    fn embed_identity_and_pairs() {
        let s = scalar(vec![1.0, 2.0, 3.0]);
        let e1 = takens_embed(&s, &EmbeddingSpec { dimension: 1, lag: 1 }).unwrap();
        assert_eq!(e1, vec![vec![1.0], vec![2.0], vec![3.0]]);
        let e2 = takens_embed(&s, &EmbeddingSpec { dimension: 2, lag: 1 }).unwrap();
        assert_eq!(e2, vec![vec![2.0, 1.0], vec![3.0, 2.0]]);
        assert!(takens_embed(&s, &EmbeddingSpec { dimension: 4, lag: 1 }).is_err());
    }

    #[test]
    fn embedding_length_is_exact() {
        let s = scalar((0..57).map(|i| i as f64).collect());
        for (m, lag) in [(1, 1), (2, 3), (3, 5), (4, 2)] {
            let e = takens_embed(&s, &EmbeddingSpec { dimension: m, lag }).unwrap();
            assert_eq!(e.len(), 57 - (m - 1) * lag);
        }
    }

    #[test]
    fn sinusoid_embeds_onto_circle() {
        // lag = quarter period turns (sin, sin shifted) into a circle
        let period = 40usize;
        let s = scalar(
            (0..400)
                .map(|n| (2.0 * std::f64::consts::PI * n as f64 / period as f64).sin())
                .collect(),
        );
        let e = takens_embed(
            &s,
            &EmbeddingSpec {
                dimension: 2,
                lag: period / 4,
            },
        )
        .unwrap();
        for p in &e {
            let r2 = p[0] * p[0] + p[1] * p[1];
            assert!((r2 - 1.0).abs() < 1e-6, "off the unit circle: {r2}");
        }
    }

    #[test]
    fn divergence_trivial_cases() {
        let t = scalar((0..50).map(|i| (i as f64 * 0.3).sin()).collect());
        let spec = EmbeddingSpec { dimension: 2, lag: 2 };
        let same = divergence_curve(&t, &t, &spec, 1.0).unwrap();
        assert!(same.points.iter().all(|(_, d)| *d == 0.0));
        assert_eq!(same.points[0].0, 1);

        // constant offset with m = 1 gives |c| everywhere
        let c = 0.7;
        let shifted = scalar(t.samples().iter().map(|v| v[0] + c).collect());
        let m1 = EmbeddingSpec { dimension: 1, lag: 1 };
        let curve = divergence_curve(&shifted, &t, &m1, 1.0).unwrap();
        assert!(curve.points.iter().all(|(_, d)| (*d - c).abs() < 1e-12));
    }

    #[test]
    fn divergence_is_symmetric() {
        let a = scalar((0..60).map(|i| (i as f64 * 0.21).sin()).collect());
        let b = scalar((0..60).map(|i| (i as f64 * 0.19).cos()).collect());
        let spec = EmbeddingSpec { dimension: 3, lag: 2 };
        let ab = divergence_curve(&a, &b, &spec, 0.5).unwrap();
        let ba = divergence_curve(&b, &a, &spec, 0.5).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn valid_time_edges_and_monotonicity() {
        let t = scalar((0..100).map(|i| (i as f64 * 0.3).sin()).collect());
        let spec = EmbeddingSpec { dimension: 2, lag: 2 };
        let same = divergence_curve(&t, &t, &spec, 2.0).unwrap();
        // identical series: full horizon
        let full = same.valid_time(0.4).unwrap();
        assert_eq!(full, same.points.last().unwrap().0 as f64 * 1.0 * 2.0);

        // immediate exceedance: valid time 0 within one step
        let far = scalar(t.samples().iter().map(|v| v[0] + 100.0).collect());
        let gone = divergence_curve(&far, &t, &spec, 2.0).unwrap();
        assert!(gone.valid_time(0.4).unwrap() <= 1.0 * 2.0);

        // growing divergence: smaller threshold never increases valid time
        let drift = scalar(
            (0..100)
                .map(|i| (i as f64 * 0.3).sin() + 0.01 * i as f64)
                .collect(),
        );
        let curve = divergence_curve(&drift, &t, &spec, 2.0).unwrap();
        let mut prev = f64::INFINITY;
        for f in [0.8, 0.6, 0.4, 0.2, 0.1, 0.05] {
            let v = curve.valid_time(f).unwrap();
            assert!(v <= prev + 1e-12, "valid time increased at threshold {f}");
            prev = v;
        }
    }

    #[test]
    fn constant_loop_fixed_point() {
        // a reservoir trained to reproduce a constant sequence stays there
        let mut l1 = LayerConfig::low_pass(0.6, 0.05, 2.0, 12);
        l1.bias = 0.3;
        l1.input_gain = 0.4;
        let cfg = crate::network::NetworkConfig {
            layers: vec![l1],
            mask: build_mask(12, 2, MaskDistribution::UniformPm1).unwrap(),
            substeps_per_node: 4,
            washout_steps: 20,
            seed: 2,
            allow_multi_input: false,
        };
        let c = 0.5;
        let teacher = scalar(vec![c; 150]);
        let states = simulate(&cfg, &teacher).unwrap();
        let spec = TrainSpec {
            n_train: 100,
            delta_n: 1,
            ridge_grid: vec![1e-8, 1e-4],
            validation_fraction: 0.1,
            include_bias: true,
        };
        let w = train_ridge(&states, &teacher.slice(20, 150).unwrap(), &spec).unwrap();
        let run = run_autonomous(&cfg, &w, &teacher.slice(0, 100).unwrap(), 50).unwrap();
        assert!(!run.escaped);
        for v in run.output.samples() {
            assert!((v[0] - c).abs() < 1e-6, "left the fixed point: {}", v[0]);
        }
        // closed-loop consistency: injected value == previous output
        for n in 1..run.injected.len() {
            assert_eq!(run.injected[n], run.output.value(n - 1, 0));
        }
    }

    #[test]
    fn delta_n_must_be_one() {
        let w = ReadoutWeights {
            matrix: nalgebra::DMatrix::zeros(3, 1),
            has_bias: false,
            chosen_ridge: 0.0,
            meta: crate::readout::TrainMeta { n_train: 10, delta_n: 2, seed: 0 },
        };
        let l1 = LayerConfig::low_pass(0.5, 0.05, 2.0, 3);
        let cfg = crate::network::NetworkConfig {
            layers: vec![l1],
            mask: build_mask(3, 1, MaskDistribution::UniformPm1).unwrap(),
            substeps_per_node: 2,
            washout_steps: 0,
            seed: 1,
            allow_multi_input: false,
        };
        let warm = scalar(vec![0.1; 10]);
        assert!(run_autonomous(&cfg, &w, &warm, 5).is_err());
    }
}
