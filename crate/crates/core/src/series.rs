//! Sampled timeseries with a normalization record, plus CSV and binary
//! columnar import/export.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SERIES_MAGIC: &[u8; 8] = b"DTDRTS01";

/// Per-component affine normalization applied to a series:
/// `stored = (original - offset) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            offset: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.offset.iter().all(|&v| v == 0.0) && self.scale.iter().all(|&v| v == 1.0)
    }
}

/// Uniformly sampled scalar or vector timeseries.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeseries {
    samples: Vec<Vec<f64>>,
    pub sample_interval: f64,
    pub normalization: Normalization,
}

impl Timeseries {
    pub fn new(samples: Vec<Vec<f64>>, sample_interval: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("timeseries must be non-empty".into()));
        }
        if sample_interval <= 0.0 {
            return Err(Error::Argument("sample_interval must be > 0".into()));
        }
        let dim = samples[0].len();
        if dim == 0 {
            return Err(Error::Argument("samples must have dimension >= 1".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::Argument(format!(
                    "sample {i} has dimension {} but sample 0 has {dim}",
                    s.len()
                )));
            }
            if !s.iter().all(|v| v.is_finite()) {
                return Err(Error::Argument(format!("sample {i} is non-finite")));
            }
        }
        Ok(Self {
            samples,
            sample_interval,
            normalization: Normalization::identity(dim),
        })
    }

    /// Scalar series from a flat vector.
    pub fn scalar(values: Vec<f64>, sample_interval: f64) -> Result<Self> {
        Self::new(values.into_iter().map(|v| vec![v]).collect(), sample_interval)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.samples
    }

    pub fn value(&self, n: usize, component: usize) -> f64 {
        self.samples[n][component]
    }

    /// Scalar view of one component.
    pub fn component(&self, c: usize) -> Result<Timeseries> {
        if c >= self.dim() {
            return Err(Error::Argument(format!(
                "component {c} out of range for dimension {}",
                self.dim()
            )));
        }
        let mut out = Timeseries::new(
            self.samples.iter().map(|s| vec![s[c]]).collect(),
            self.sample_interval,
        )?;
        out.normalization = Normalization {
            offset: vec![self.normalization.offset[c]],
            scale: vec![self.normalization.scale[c]],
        };
        Ok(out)
    }

    /// Zero-mean unit-variance rescaling with the affine map recorded so
    /// predictions can be mapped back to original units.
    pub fn standardize(&self) -> Result<Timeseries> {
        let d = self.dim();
        let n = self.len() as f64;
        let mut mean = vec![0.0; d];
        for s in &self.samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for s in &self.samples {
            for c in 0..d {
                let e = s[c] - mean[c];
                var[c] += e * e;
            }
        }
        for (c, v) in var.iter_mut().enumerate() {
            *v /= n;
            if *v <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "component {c} has zero variance; cannot standardize"
                )));
            }
        }
        let scale: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
        let samples = self
            .samples
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(c, v)| (v - mean[c]) / scale[c])
                    .collect()
            })
            .collect();
        Ok(Timeseries {
            samples,
            sample_interval: self.sample_interval,
            normalization: Normalization {
                offset: mean,
                scale,
            },
        })
    }

    /// Invert the recorded normalization, returning a series in original
    /// units with an identity record.
    pub fn denormalize(&self) -> Timeseries {
        let norm = &self.normalization;
        let samples = self
            .samples
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(c, v)| v * norm.scale[c] + norm.offset[c])
                    .collect()
            })
            .collect();
        Timeseries {
            samples,
            sample_interval: self.sample_interval,
            normalization: Normalization::identity(self.dim()),
        }
    }

    /// Sub-range [start, end).
    pub fn slice(&self, start: usize, end: usize) -> Result<Timeseries> {
        if start >= end || end > self.len() {
            return Err(Error::Argument(format!(
                "invalid slice [{start}, {end}) of series of length {}",
                self.len()
            )));
        }
        Ok(Timeseries {
            samples: self.samples[start..end].to_vec(),
            sample_interval: self.sample_interval,
            normalization: self.normalization.clone(),
        })
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# sample_interval = {}", self.sample_interval)?;
        writeln!(
            w,
            "# normalization_offset = {}",
            join_floats(&self.normalization.offset)
        )?;
        writeln!(
            w,
            "# normalization_scale = {}",
            join_floats(&self.normalization.scale)
        )?;
        for s in &self.samples {
            writeln!(w, "{}", join_floats(s))?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        crate::manifest::write_atomic(path.as_ref(), &buf)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Timeseries> {
        let reader = BufReader::new(r);
        let mut sample_interval = 1.0;
        let mut offset: Option<Vec<f64>> = None;
        let mut scale: Option<Vec<f64>> = None;
        let mut samples = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("sample_interval =") {
                    sample_interval = parse_float(v.trim(), "csv")?;
                } else if let Some(v) = rest.strip_prefix("normalization_offset =") {
                    offset = Some(parse_floats(v.trim(), "csv")?);
                } else if let Some(v) = rest.strip_prefix("normalization_scale =") {
                    scale = Some(parse_floats(v.trim(), "csv")?);
                }
                continue;
            }
            samples.push(parse_floats(line, "csv")?);
        }
        let mut series = Timeseries::new(samples, sample_interval)?;
        if let (Some(offset), Some(scale)) = (offset, scale) {
            if offset.len() != series.dim() || scale.len() != series.dim() {
                return Err(Error::Format {
                    path: "csv".into(),
                    reason: "normalization record dimension mismatch".into(),
                });
            }
            series.normalization = Normalization { offset, scale };
        }
        Ok(series)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Timeseries> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Binary columnar format: magic, u64 n_samples, u64 dim,
    /// f64 sample_interval, offset[dim], scale[dim], row-major payload.
    /// All little-endian.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(SERIES_MAGIC)?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        w.write_all(&self.sample_interval.to_le_bytes())?;
        for v in self.normalization.offset.iter().chain(&self.normalization.scale) {
            w.write_all(&v.to_le_bytes())?;
        }
        for s in &self.samples {
            for v in s {
                w.write_all(&v.to_le_bytes())?;
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

    pub fn read_binary<R: Read>(mut r: R) -> Result<Timeseries> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SERIES_MAGIC {
            return Err(Error::Format {
                path: "binary".into(),
                reason: format!("bad magic {:?}", magic),
            });
        }
        let n = read_u64(&mut r)? as usize;
        let dim = read_u64(&mut r)? as usize;
        let sample_interval = read_f64(&mut r)?;
        let offset = read_f64_vec(&mut r, dim)?;
        let scale = read_f64_vec(&mut r, dim)?;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            samples.push(read_f64_vec(&mut r, dim)?);
        }
        let mut series = Timeseries::new(samples, sample_interval)?;
        series.normalization = Normalization { offset, scale };
        Ok(series)
    }

    pub fn load_binary<P: AsRef<Path>>(path: P) -> Result<Timeseries> {
        Self::read_binary(std::fs::File::open(path)?)
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_float(s: &str, path: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Format {
        path: path.into(),
        reason: format!("cannot parse float from {s:?}"),
    })
}

fn parse_floats(s: &str, path: &str) -> Result<Vec<f64>> {
    s.split(',').map(|f| parse_float(f, path)).collect()
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

fn read_f64_vec<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| read_f64(r)).collect()
}
