//! Coupled delay-oscillator integration and virtual-node state
//! extraction.
//!
//! Each layer obeys
//!
//! ```text
//! τ_i ẋ_i = −x_i − δ_i y_i + β_i sin²(d_i + b_i)
//! ẏ_i     = x_i
//! d_i(t)  = x_i(t − τ_Di) + w_prev x_{i−1}(t) + w_next x_{i+1}(t) + ρ_i u(t)
//! ```
//!
//! The stiff linear part is advanced exactly per substep (the 2×2 matrix
//! exponential of the (x, y) pair), with the nonlinear drive held
//! constant over the substep. τ_i can be ~30× smaller than the node
//! spacing, which would force tiny steps in a naive explicit scheme.
//!
//! All layers share the input clock: one input step lasts
//! `hold_fraction · τ_D1`, and layer i is sampled at N_i uniformly spaced
//! instants per input step. The feedback lookback uses the full τ_Di
//! while injection advances at `hold_fraction · τ_Di` per step, so input
//! and feedback are deliberately de-synchronized.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::delay::DelayLine;
use crate::error::{Error, Result};
use crate::mask::MaskSpec;
use crate::network::{LayerConfig, NetworkConfig};
use crate::series::Timeseries;

pub const STATE_MATRIX_MAGIC: &[u8; 8] = b"DTDRSM01";

/// Discrete-time virtual-node states: rows indexed by input step n,
/// columns by flattened (layer, node).
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    /// Node count per layer; columns of layer i start at the running sum.
    layer_nodes: Vec<usize>,
}

impl StateMatrix {
    pub fn new(n_rows: usize, layer_nodes: Vec<usize>) -> Self {
        let n_cols = layer_nodes.iter().sum();
        Self {
            data: vec![0.0; n_rows * n_cols],
            n_rows,
            n_cols,
            layer_nodes,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, layer_nodes: Vec<usize>) -> Result<Self> {
        let n_cols: usize = layer_nodes.iter().sum();
        let n_rows = rows.len();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::Argument(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(Self {
            data,
            n_rows,
            n_cols,
            layer_nodes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_layers(&self) -> usize {
        self.layer_nodes.len()
    }

    pub fn layer_nodes(&self) -> &[usize] {
        &self.layer_nodes
    }

    /// Column range occupied by layer `layer` (0-based).
    pub fn layer_columns(&self, layer: usize) -> std::ops::Range<usize> {
        let start: usize = self.layer_nodes[..layer].iter().sum();
        start..start + self.layer_nodes[layer]
    }

    /// Flattened column of (layer, node), both 0-based.
    pub fn col_index(&self, layer: usize, node: usize) -> usize {
        debug_assert!(node < self.layer_nodes[layer]);
        self.layer_columns(layer).start + node
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.n_cols..(n + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Keep only the first `n` rows.
    pub fn truncate_rows(&mut self, n: usize) {
        if n < self.n_rows {
            self.data.truncate(n * self.n_cols);
            self.n_rows = n;
        }
    }

    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(STATE_MATRIX_MAGIC)?;
        w.write_all(&(self.n_rows as u64).to_le_bytes())?;
        w.write_all(&(self.n_cols as u64).to_le_bytes())?;
        w.write_all(&(self.layer_nodes.len() as u64).to_le_bytes())?;
        for n in &self.layer_nodes {
            w.write_all(&(*n as u64).to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_binary<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::new();
        self.write_binary(&mut buf)?;
        crate::manifest::write_atomic(path.as_ref(), &buf)
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<StateMatrix> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != STATE_MATRIX_MAGIC {
            return Err(Error::Format {
                path: "binary".into(),
                reason: format!("bad magic {magic:?}"),
            });
        }
        let n_rows = read_u64(&mut r)? as usize;
        let n_cols = read_u64(&mut r)? as usize;
        let n_layers = read_u64(&mut r)? as usize;
        let mut layer_nodes = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            layer_nodes.push(read_u64(&mut r)? as usize);
        }
        if layer_nodes.iter().sum::<usize>() != n_cols {
            return Err(Error::Format {
                path: "binary".into(),
                reason: "layer node counts do not sum to n_cols".into(),
            });
        }
        let mut data = vec![0.0; n_rows * n_cols];
        for v in &mut data {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        Ok(StateMatrix {
            data,
            n_rows,
            n_cols,
            layer_nodes,
        })
    }

    pub fn load_binary<P: AsRef<Path>>(path: P) -> Result<StateMatrix> {
        Self::read_binary(std::fs::File::open(path)?)
    }

    /// CSV for small runs: one row per input step.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "# layer_nodes = {}",
            self.layer_nodes
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )?;
        for n in 0..self.n_rows {
            let line = self
                .row(n)
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Exact one-substep propagator of the linear pair (x, y) with the
/// nonlinear drive f held constant:
/// (x, y) ← Φ·(x, y) + ψ·f.
#[derive(Debug, Clone, Copy)]
struct Propagator {
    phi: [[f64; 2]; 2],
    psi: [f64; 2],
    low_pass: bool,
}

impl Propagator {
    fn new(layer: &LayerConfig, h: f64) -> Self {
        let tau = layer.tau_fast;
        if layer.delta_slow == 0.0 {
            let a = (-h / tau).exp();
            return Propagator {
                phi: [[a, 0.0], [0.0, 1.0]],
                psi: [1.0 - a, 0.0],
                low_pass: true,
            };
        }
        let delta = layer.delta_slow;
        // roots of τ r² + r + δ = 0 (complex when 4τδ > 1)
        let disc = Complex64::new(1.0 - 4.0 * tau * delta, 0.0);
        let mut sq = disc.sqrt();
        if sq.norm() < 1e-9 {
            // critically damped: nudge off the repeated root; the
            // propagator is continuous there so the error is ~1e-9
            sq = Complex64::new(1e-9, 0.0);
        }
        let r1 = (-1.0 + sq) / (2.0 * tau);
        let r2 = (-1.0 - sq) / (2.0 * tau);
        let d = r1 - r2;
        let e1 = (r1 * h).exp();
        let e2 = (r2 * h).exp();
        let phi11 = ((r1 * e1 - r2 * e2) / d).re;
        let phi12 = ((r1 * r2 * (e2 - e1)) / d).re;
        let phi21 = ((e1 - e2) / d).re;
        let phi22 = ((r1 * e2 - r2 * e1) / d).re;
        let psi_x = ((e1 - e2) / (tau * d)).re;
        let g1 = (e1 - 1.0) / r1;
        let g2 = (e2 - 1.0) / r2;
        let psi_y = ((g1 - g2) / (tau * d)).re;
        Propagator {
            phi: [[phi11, phi12], [phi21, phi22]],
            psi: [psi_x, psi_y],
            low_pass: false,
        }
    }

    #[inline]
    fn advance(&self, x: f64, y: f64, f: f64) -> (f64, f64) {
        if self.low_pass {
            (self.phi[0][0] * x + self.psi[0] * f, 0.0)
        } else {
            (
                self.phi[0][0] * x + self.phi[0][1] * y + self.psi[0] * f,
                self.phi[1][0] * x + self.phi[1][1] * y + self.psi[1] * f,
            )
        }
    }
}

/// Virtual-node sample position inside one input step: the sample for
/// node σ is taken when substep boundary `boundary` is reached, blending
/// the states at boundaries `boundary-1` and `boundary` with weight
/// `w_new` on the newer one.
#[derive(Debug, Clone, Copy)]
struct SamplePoint {
    boundary: usize,
    w_new: f64,
}

struct LayerSim {
    cfg: LayerConfig,
    prop: Propagator,
    x: f64,
    y: f64,
    line: DelayLine,
    delay_substeps: f64,
    samples: Vec<SamplePoint>,
}

/// Optional substep-resolution recording for diagnostics: per layer, the
/// state x and the nonlinear drive f = β sin²(d + b) at each substep
/// boundary / interval.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub dt: f64,
    /// x_i at substep boundaries (index k = state at time k·dt), per layer.
    pub x: Vec<Vec<f64>>,
    /// f_i held over substep k (covering (k·dt, (k+1)·dt]), per layer.
    pub f: Vec<Vec<f64>>,
}

/// Incremental deep-TDR integrator. One call to [`Simulator::step`]
/// advances one input step and returns the flattened node samples of all
/// layers for that step.
pub struct Simulator {
    layers: Vec<LayerSim>,
    mask: MaskSpec,
    dt: f64,
    substeps_per_step: usize,
    substeps_per_node: usize,
    /// Global substep boundary index (time = index · dt).
    boundary: u64,
    n_cols: usize,
}

impl Simulator {
    pub fn new(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let first = &config.layers[0];
        let t_hold = config.mask.hold_fraction * first.tau_delay;
        let substeps_per_step = first.n_nodes * config.substeps_per_node;
        let dt = t_hold / substeps_per_step as f64;
        let layers = config
            .layers
            .iter()
            .map(|l| {
                let delay_substeps = l.tau_delay / dt;
                let cap = delay_substeps.ceil() as usize + 3;
                LayerSim {
                    cfg: l.clone(),
                    prop: Propagator::new(l, dt),
                    x: 0.0,
                    y: 0.0,
                    line: DelayLine::new(vec![0.0], cap),
                    delay_substeps,
                    samples: sample_points(l.n_nodes, substeps_per_step),
                }
            })
            .collect::<Vec<_>>();
        let n_cols = config.total_nodes();
        Ok(Self {
            layers,
            mask: config.mask.clone(),
            dt,
            substeps_per_step,
            substeps_per_node: config.substeps_per_node,
            boundary: 0,
            n_cols,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Duration of one input step (the hold interval).
    pub fn hold_interval(&self) -> f64 {
        self.dt * self.substeps_per_step as f64
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn layer_nodes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.cfg.n_nodes).collect()
    }

    /// Override the instantaneous state of one layer (diagnostics only;
    /// the delay history is left untouched).
    pub fn set_state(&mut self, layer: usize, x: f64, y: f64) {
        self.layers[layer].x = x;
        self.layers[layer].y = y;
    }

    pub fn state(&self, layer: usize) -> (f64, f64) {
        (self.layers[layer].x, self.layers[layer].y)
    }

    /// Advance one input step with input value `input`, returning the
    /// flattened node samples of all layers produced during this step.
    pub fn step(&mut self, input: f64) -> Result<Vec<f64>> {
        self.step_inner(input, None)
    }

    /// Like [`step`](Self::step) but also records substep-resolution
    /// state and drive into `trace`.
    pub fn step_traced(&mut self, input: f64, trace: &mut Trace) -> Result<Vec<f64>> {
        self.step_inner(input, Some(trace))
    }

    fn step_inner(&mut self, input: f64, mut trace: Option<&mut Trace>) -> Result<Vec<f64>> {
        let n_layers = self.layers.len();
        if let Some(t) = trace.as_deref_mut() {
            if t.x.is_empty() {
                t.dt = self.dt;
                t.x = vec![Vec::new(); n_layers];
                t.f = vec![Vec::new(); n_layers];
                for (i, l) in self.layers.iter().enumerate() {
                    t.x[i].push(l.x); // state at t = 0
                }
            }
        }

        let mut row = vec![0.0; self.n_cols];
        let mut sample_ptrs = vec![0usize; n_layers];
        let mut x_prev: Vec<f64> = self.layers.iter().map(|l| l.x).collect();
        let mut drives = vec![0.0; n_layers];

        for ls in 0..self.substeps_per_step {
            // mask slot active during this substep
            let slot = ls / self.substeps_per_node;
            let u = self.mask.values[slot] * input;

            // drives from states at the substep start (instantaneous
            // coupling uses the neighbour's value at the interval start)
            for (i, layer) in self.layers.iter().enumerate() {
                let p = self.boundary as f64 - layer.delay_substeps;
                let delayed = layer.line.lookup(p);
                let mut d = delayed;
                if i > 0 {
                    d += layer.cfg.w_from_prev * x_prev[i - 1];
                }
                if i + 1 < n_layers {
                    d += layer.cfg.w_from_next * x_prev[i + 1];
                }
                d += layer.cfg.input_gain * u;
                drives[i] = d;
            }

            for (i, layer) in self.layers.iter_mut().enumerate() {
                let arg = drives[i] + layer.cfg.bias;
                let f = layer.cfg.beta * arg.sin().powi(2);
                let (nx, ny) = layer.prop.advance(layer.x, layer.y, f);
                if let Some(t) = trace.as_deref_mut() {
                    t.f[i].push(f);
                    t.x[i].push(nx);
                }
                layer.x = nx;
                layer.y = ny;
                if !nx.is_finite() || !ny.is_finite() {
                    return Err(Error::Blowup {
                        context: format!("layer {}", i + 1),
                        time: (self.boundary + 1) as f64 * self.dt,
                    });
                }
            }
            self.boundary += 1;
            for layer in self.layers.iter_mut() {
                layer.line.push(layer.x);
            }

            // collect virtual-node samples whose instant falls in this substep
            let nb = ls + 1;
            let mut col0 = 0usize;
            for (i, layer) in self.layers.iter().enumerate() {
                let ptr = &mut sample_ptrs[i];
                while *ptr < layer.samples.len() && layer.samples[*ptr].boundary == nb {
                    let sp = layer.samples[*ptr];
                    let v = x_prev[i] * (1.0 - sp.w_new) + layer.x * sp.w_new;
                    row[col0 + *ptr] = v;
                    *ptr += 1;
                }
                col0 += layer.cfg.n_nodes;
            }

            for (i, layer) in self.layers.iter().enumerate() {
                x_prev[i] = layer.x;
            }
        }
        debug_assert!(sample_ptrs
            .iter()
            .zip(&self.layers)
            .all(|(p, l)| *p == l.samples.len()));
        Ok(row)
    }
}

/// Sample instants for a layer with `n_nodes` nodes over an input step of
/// `substeps` substeps: node σ (0-based) is sampled at fractional substep
/// position (σ+1)·substeps/n_nodes.
fn sample_points(n_nodes: usize, substeps: usize) -> Vec<SamplePoint> {
    (0..n_nodes)
        .map(|sigma| {
            let num = (sigma + 1) * substeps;
            let boundary = num.div_ceil(n_nodes);
            let w_new = num as f64 / n_nodes as f64 - (boundary - 1) as f64;
            SamplePoint { boundary, w_new }
        })
        .collect()
}

/// Integrate the full network over the scalar input series `s` and return
/// the StateMatrix with the leading `washout_steps` rows discarded.
/// Row n holds the states produced while input s(washout + n) was applied.
pub fn simulate(config: &NetworkConfig, s: &Timeseries) -> Result<StateMatrix> {
    simulate_impl(config, s, None)
}

/// As [`simulate`], also filling `trace` at substep resolution.
pub fn simulate_traced(
    config: &NetworkConfig,
    s: &Timeseries,
    trace: &mut Trace,
) -> Result<StateMatrix> {
    simulate_impl(config, s, Some(trace))
}

fn simulate_impl(
    config: &NetworkConfig,
    s: &Timeseries,
    mut trace: Option<&mut Trace>,
) -> Result<StateMatrix> {
    if s.dim() != 1 {
        return Err(Error::Argument(
            "simulate expects a scalar input series (select a component first)".into(),
        ));
    }
    if s.len() <= config.washout_steps {
        return Err(Error::Argument(format!(
            "input has {} samples but washout alone needs more than {}",
            s.len(),
            config.washout_steps
        )));
    }
    let mut sim = Simulator::new(config)?;
    let n_rows = s.len() - config.washout_steps;
    let layer_nodes = sim.layer_nodes();
    let mut rows = Vec::with_capacity(n_rows);
    for n in 0..s.len() {
        let row = match trace.as_deref_mut() {
            Some(t) => sim.step_traced(s.value(n, 0), t)?,
            None => sim.step(s.value(n, 0))?,
        };
        if n >= config.washout_steps {
            rows.push(row);
        }
    }
    StateMatrix::from_rows(rows, layer_nodes)
}

/// Masked input drive ρ₁ · mask[σ(t)] · s(n(t)): the input value s(n) is
/// held for `hold_fraction · τ_D1` and the mask cycles through its N₁
/// values once per hold interval, piecewise constant between node slots.
pub fn drive_signal(s: &Timeseries, mask: &MaskSpec, layer1: &LayerConfig, t: f64) -> Result<f64> {
    mask.validate(layer1.n_nodes)?;
    let t_hold = mask.hold_fraction * layer1.tau_delay;
    if t < 0.0 {
        return Err(Error::Argument(format!("t = {t} is before the input span")));
    }
    let n = (t / t_hold).floor() as usize;
    if n >= s.len() {
        return Err(Error::Argument(format!(
            "t = {t} is beyond the input span ({} steps of {t_hold})",
            s.len()
        )));
    }
    let local = t - n as f64 * t_hold;
    let slot = ((local / t_hold * layer1.n_nodes as f64).floor() as usize).min(layer1.n_nodes - 1);
    Ok(layer1.input_gain * mask.values[slot] * s.value(n, 0))
}

/// Analytic impulse response h(t) of the linear part of a layer.
///
/// Transfer function from the nonlinear drive f to x is
/// H(s) = s / (τ s² + s + δ); with roots r₁, r₂ of τ r² + r + δ = 0,
/// h(t) = (r₁ e^{r₁ t} − r₂ e^{r₂ t}) / (τ (r₁ − r₂)).
/// For δ = 0 this reduces to the normalized low-pass kernel
/// h(t) = (1/τ) e^{−t/τ} with unit area; for δ > 0 the kernel is
/// band-pass with zero area (H(0) = 0, i.e. DC rejection).
pub fn impulse_response(layer: &LayerConfig, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Argument("impulse response requires t >= 0".into()));
    }
    let tau = layer.tau_fast;
    if layer.delta_slow == 0.0 {
        return Ok((-t / tau).exp() / tau);
    }
    let disc = Complex64::new(1.0 - 4.0 * tau * layer.delta_slow, 0.0);
    let mut sq = disc.sqrt();
    if sq.norm() < 1e-9 {
        sq = Complex64::new(1e-9, 0.0);
    }
    let r1 = (-1.0 + sq) / (2.0 * tau);
    let r2 = (-1.0 - sq) / (2.0 * tau);
    let h = (r1 * (r1 * t).exp() - r2 * (r2 * t).exp()) / (tau * (r1 - r2));
    Ok(h.re)
}

/// Result of the spatial-autocorrelation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrWidth {
    /// Lag (in nodes) at which the row-averaged autocorrelation along the
    /// node axis first drops below 1/e.
    pub width: f64,
    /// Set when the layer is constant (zero variance); width is then the
    /// maximal n_nodes.
    pub degenerate: bool,
}

/// Quantifies how quickly structure along the virtual-space axis
/// decorrelates; deeper layers respond on coarser spatial scales, so
/// their width is larger.
pub fn spatial_autocorr_width(states: &StateMatrix, layer: usize) -> Result<AutocorrWidth> {
    if layer >= states.n_layers() {
        return Err(Error::Argument(format!(
            "layer {layer} out of range ({} layers)",
            states.n_layers()
        )));
    }
    if states.n_rows() < 100 {
        return Err(Error::Argument(format!(
            "need >= 100 rows for a stable estimate, got {}",
            states.n_rows()
        )));
    }
    let cols = states.layer_columns(layer);
    let n = cols.len();
    let mut acc = vec![0.0f64; n];
    let mut used_rows = 0usize;
    for r in 0..states.n_rows() {
        let row = &states.row(r)[cols.clone()];
        let mean = row.iter().sum::<f64>() / n as f64;
        let e: Vec<f64> = row.iter().map(|v| v - mean).collect();
        let c0 = e.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if c0 <= 1e-300 {
            continue;
        }
        used_rows += 1;
        for k in 0..n {
            let m = n - k;
            let ck = (0..m).map(|i| e[i] * e[i + k]).sum::<f64>() / m as f64;
            acc[k] += ck / c0;
        }
    }
    if used_rows == 0 {
        return Ok(AutocorrWidth {
            width: n as f64,
            degenerate: true,
        });
    }
    let inv_e = (-1.0f64).exp();
    for (k, a) in acc.iter().enumerate().skip(1) {
        let cur = a / (used_rows as f64);
        if cur < inv_e {
            // linear interpolation of the 1/e crossing between lags
            let prev = acc[k - 1] / (used_rows as f64);
            let frac = if prev > cur { (prev - inv_e) / (prev - cur) } else { 1.0 };
            return Ok(AutocorrWidth {
                width: (k - 1) as f64 + frac,
                degenerate: false,
            });
        }
    }
    Ok(AutocorrWidth {
        width: n as f64,
        degenerate: false,
    })
}
