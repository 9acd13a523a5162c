//! Chaotic benchmark generators: the Mackey-Glass delay equation and the
//! Lorenz system, integrated by an explicit fixed-step 4th-order scheme.
//!
//! Both generators are deterministic functions of their parameters and
//! seed; accuracy is controlled by `substeps_per_sample`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::series::Timeseries;
use rand::Rng;

/// Initial history for the Mackey-Glass delay line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryInit {
    Constant { value: f64 },
    /// Uniform values in [0.5, 1.5] on the history grid; the transient
    /// discard settles the trajectory onto the attractor.
    Random { seed: u64 },
}

/// Mackey-Glass system  ẋ = γ·x(t−τ) / (1 + x(t−τ)^p) − δ·x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlassParams {
    pub feedback_gain: f64,
    pub decay: f64,
    pub exponent: f64,
    pub delay: f64,
    pub sample_interval: f64,
    pub substeps_per_sample: usize,
    pub history_init: HistoryInit,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            feedback_gain: 0.2,
            decay: 0.1,
            exponent: 10.0,
            delay: 17.0,
            sample_interval: 1.0,
            substeps_per_sample: 10,
            history_init: HistoryInit::Random { seed: 0 },
        }
    }
}

impl MackeyGlassParams {
    fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if !(self.delay > 0.0) {
            issues.push("mackey_glass.delay must be > 0".to_string());
        }
        if !(self.sample_interval > 0.0) {
            issues.push("mackey_glass.sample_interval must be > 0".to_string());
        }
        if self.substeps_per_sample < 10 {
            issues.push("mackey_glass.substeps_per_sample must be >= 10".to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

/// Lorenz system  ẋ=σ(y−x), ẏ=x(ρ−z)−y, ż=xy−βz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub sample_interval: f64,
    pub substeps_per_sample: usize,
    pub init_state: [f64; 3],
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            sample_interval: 0.02,
            substeps_per_sample: 10,
            init_state: [1.0, 1.0, 1.0],
        }
    }
}

impl LorenzParams {
    fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if !(self.sample_interval > 0.0) {
            issues.push("lorenz.sample_interval must be > 0".to_string());
        }
        if self.substeps_per_sample == 0 {
            issues.push("lorenz.substeps_per_sample must be >= 1".to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

use crate::delay::DelayLine;

/// Generate `n_samples` scalar Mackey-Glass samples after dropping
/// `discard` transient samples.
pub fn gen_mackey_glass(
    params: &MackeyGlassParams,
    n_samples: usize,
    discard: usize,
) -> Result<Timeseries> {
    params.validate()?;
    if n_samples < 1 {
        return Err(Error::Argument("n_samples must be >= 1".into()));
    }
    let dt = params.sample_interval / params.substeps_per_sample as f64;
    let delay_steps = params.delay / dt;
    let hist_len = delay_steps.ceil() as usize + 2;

    let history: Vec<f64> = match params.history_init {
        HistoryInit::Constant { value } => vec![value; hist_len],
        HistoryInit::Random { seed } => {
            let mut rng = stream(seed, "mackey-glass-history");
            (0..hist_len).map(|_| rng.gen_range(0.5..1.5)).collect()
        }
    };
    let mut x = *history.last().expect("non-empty history");
    let mut line = DelayLine::new(history, hist_len + 2);

    let gamma = params.feedback_gain;
    let delta = params.decay;
    let p = params.exponent;
    let deriv = |x: f64, xd: f64| gamma * xd / (1.0 + xd.powf(p)) - delta * x;

    let total = discard + n_samples;
    let mut out = Vec::with_capacity(n_samples);
    let mut g: i64 = 0; // current substep index
    for s in 0..total {
        for _ in 0..params.substeps_per_sample {
            let gd = g as f64 - delay_steps;
            let xd0 = line.lookup(gd);
            let xdh = line.lookup(gd + 0.5);
            let xd1 = line.lookup(gd + 1.0);
            let k1 = deriv(x, xd0);
            let k2 = deriv(x + 0.5 * dt * k1, xdh);
            let k3 = deriv(x + 0.5 * dt * k2, xdh);
            let k4 = deriv(x + dt * k3, xd1);
            x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            g += 1;
            line.push(x);
        }
        if !x.is_finite() {
            return Err(Error::Blowup {
                context: "mackey-glass generator".into(),
                time: (s + 1) as f64 * params.sample_interval,
            });
        }
        if s >= discard {
            out.push(x);
        }
    }
    Timeseries::scalar(out, params.sample_interval)
}

/// Generate `n_samples` 3-dimensional Lorenz samples after dropping
/// `discard` transient samples. Task input uses component 0 (x) only.
pub fn gen_lorenz(params: &LorenzParams, n_samples: usize, discard: usize) -> Result<Timeseries> {
    params.validate()?;
    if n_samples < 1 {
        return Err(Error::Argument("n_samples must be >= 1".into()));
    }
    let dt = params.sample_interval / params.substeps_per_sample as f64;
    let (sigma, rho, beta) = (params.sigma, params.rho, params.beta);
    let deriv = |s: [f64; 3]| {
        [
            sigma * (s[1] - s[0]),
            s[0] * (rho - s[2]) - s[1],
            s[0] * s[1] - beta * s[2],
        ]
    };
    let add = |a: [f64; 3], b: [f64; 3], c: f64| {
        [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]]
    };

    let mut state = params.init_state;
    let total = discard + n_samples;
    let mut out = Vec::with_capacity(n_samples);
    for s in 0..total {
        for _ in 0..params.substeps_per_sample {
            let k1 = deriv(state);
            let k2 = deriv(add(state, k1, 0.5 * dt));
            let k3 = deriv(add(state, k2, 0.5 * dt));
            let k4 = deriv(add(state, k3, dt));
            for c in 0..3 {
                state[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::Blowup {
                context: "lorenz generator".into(),
                time: (s + 1) as f64 * params.sample_interval,
            });
        }
        if s >= discard {
            out.push(state.to_vec());
        }
    }
    Timeseries::new(out, params.sample_interval)
}
