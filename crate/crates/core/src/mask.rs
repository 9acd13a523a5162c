//! Input masks: the fixed weight sequence that modulates the held input
//! value across virtual-node slots, implementing the input weight matrix
//! of the reservoir.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskDistribution {
    /// Uniform on [-1, +1].
    UniformPm1,
    /// Equiprobable {-1, +1}.
    BinaryPm1,
}

/// A concrete mask realization plus the recipe that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub values: Vec<f64>,
    pub seed: u64,
    pub distribution: MaskDistribution,
    /// Input hold length as a fraction of the first layer's delay.
    pub hold_fraction: f64,
}

impl MaskSpec {
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        let mut issues = Vec::new();
        if self.values.len() != n_nodes {
            issues.push(format!(
                "mask.values has length {} but layer 1 has {} nodes",
                self.values.len(),
                n_nodes
            ));
        }
        if !(self.hold_fraction > 0.0 && self.hold_fraction <= 1.0) {
            issues.push("mask.hold_fraction must be in (0, 1]".to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

/// Deterministic seeded mask with a zero-mean distribution.
pub fn build_mask(n_nodes: usize, seed: u64, distribution: MaskDistribution) -> Result<MaskSpec> {
    build_mask_with_hold(n_nodes, seed, distribution, 0.8)
}

pub fn build_mask_with_hold(
    n_nodes: usize,
    seed: u64,
    distribution: MaskDistribution,
    hold_fraction: f64,
) -> Result<MaskSpec> {
    if n_nodes < 1 {
        return Err(Error::Argument("mask needs n_nodes >= 1".into()));
    }
    let mut rng = stream(seed, "input-mask");
    let values = (0..n_nodes)
        .map(|_| match distribution {
            MaskDistribution::UniformPm1 => rng.gen_range(-1.0..1.0),
            MaskDistribution::BinaryPm1 => {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
        })
        .collect();
    let spec = MaskSpec {
        values,
        seed,
        distribution,
        hold_fraction,
    };
    spec.validate(n_nodes)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_is_deterministic() {
        let a = build_mask(4, 7, MaskDistribution::UniformPm1).unwrap();
        let b = build_mask(4, 7, MaskDistribution::UniformPm1).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn binary_mask_support() {
        let m = build_mask(600, 3, MaskDistribution::BinaryPm1).unwrap();
        assert!(m.values.iter().all(|v| *v == 1.0 || *v == -1.0));
    }

    #[test]
    fn uniform_mask_is_close_to_zero_mean() {
        let m = build_mask(10_000, 5, MaskDistribution::UniformPm1).unwrap();
        let mean = m.values.iter().sum::<f64>() / m.values.len() as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!(m.values.iter().all(|v| (-1.0..1.0).contains(v)));
    }
}
