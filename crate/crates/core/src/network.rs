//! Network configuration: per-layer oscillator parameters and the
//! whole-network integration controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::MaskSpec;

/// One delay-oscillator layer.
///
/// Layer dynamics:  τ·ẋ = −x − δ·y + β·sin²(d + b),  ẏ = x,
/// with drive  d(t) = x(t−τ_D) + w_prev·x_{i−1}(t) + w_next·x_{i+1}(t) + ρ·u(t).
/// δ = 0 selects a low-pass layer (the integral term is disabled);
/// δ > 0 gives band-pass (zero-DC-gain) node dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    /// Bifurcation parameter β weighing the nonlinearity.
    pub beta: f64,
    /// Fast (low-pass) time constant τ.
    pub tau_fast: f64,
    /// Slow (band-pass) rate δ; 0 selects a pure low-pass layer.
    pub delta_slow: f64,
    /// Self-feedback delay τ_D.
    pub tau_delay: f64,
    /// Constant bias b inside the sin² argument.
    pub bias: f64,
    /// Number of virtual nodes N.
    pub n_nodes: usize,
    /// Input gain ρ; nonzero only for layer 1 unless explicitly overridden.
    pub input_gain: f64,
    /// Weight w_{i−1,i} on the previous layer's instantaneous state.
    pub w_from_prev: f64,
    /// Weight w_{i+1,i} on the next layer's instantaneous state.
    pub w_from_next: f64,
}

impl LayerConfig {
    /// A low-pass layer with everything but the named essentials zeroed.
    pub fn low_pass(beta: f64, tau_fast: f64, tau_delay: f64, n_nodes: usize) -> Self {
        Self {
            beta,
            tau_fast,
            delta_slow: 0.0,
            tau_delay,
            bias: 0.0,
            n_nodes,
            input_gain: 0.0,
            w_from_prev: 0.0,
            w_from_next: 0.0,
        }
    }
}

/// Full deep-TDR configuration: ordered layers, the input mask, and
/// integration controls. All layers share the input clock set by layer
/// 1's hold interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layers: Vec<LayerConfig>,
    pub mask: MaskSpec,
    /// Integration substeps per layer-1 virtual-node slot.
    pub substeps_per_node: usize,
    /// Leading input steps discarded before states are recorded.
    pub washout_steps: usize,
    pub seed: u64,
    /// Permit input_gain != 0 on layers other than the first (used by the
    /// uncoupled baseline where every layer receives the input).
    #[serde(default)]
    pub allow_multi_input: bool,
}

impl NetworkConfig {
    pub fn total_nodes(&self) -> usize {
        self.layers.iter().map(|l| l.n_nodes).sum()
    }

    /// Validate every structural constraint, collecting all violations.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.layers.is_empty() {
            issues.push("network.layers must contain at least one layer".to_string());
        }
        for (idx, layer) in self.layers.iter().enumerate() {
            let i = idx + 1; // 1-based, as in the layer equations
            let key = format!("network.layers.{i}");
            if !(layer.tau_fast > 0.0) {
                issues.push(format!("{key}.tau_fast must be > 0"));
            }
            if !(layer.tau_delay > 0.0) {
                issues.push(format!("{key}.tau_delay must be > 0"));
            }
            if layer.n_nodes < 1 {
                issues.push(format!("{key}.n_nodes must be >= 1"));
            }
            if layer.delta_slow < 0.0 {
                issues.push(format!("{key}.delta_slow must be >= 0"));
            }
            if !layer.beta.is_finite() || !layer.bias.is_finite() {
                issues.push(format!("{key}: beta and bias must be finite"));
            }
            if i == 1 {
                if layer.delta_slow != 0.0 {
                    issues.push(format!("{key}.delta_slow must be 0 (layer 1 is low-pass)"));
                }
                if layer.w_from_prev != 0.0 {
                    issues.push(format!("{key}.w_from_prev must be 0 (no layer below 1)"));
                }
            } else if layer.input_gain != 0.0 && !self.allow_multi_input {
                issues.push(format!(
                    "{key}.input_gain must be 0 (only layer 1 receives input; set allow_multi_input to override)"
                ));
            }
            if idx == self.layers.len() - 1 && layer.w_from_next != 0.0 {
                issues.push(format!("{key}.w_from_next must be 0 (no layer above the last)"));
            }
        }
        if self.substeps_per_node < 2 {
            issues.push("network.substeps_per_node must be >= 2".to_string());
        }
        if let Some(first) = self.layers.first() {
            if let Err(Error::Config(mut mask_issues)) = self.mask.validate(first.n_nodes) {
                issues.append(&mut mask_issues);
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{build_mask, MaskDistribution};

    fn two_layer() -> NetworkConfig {
        let mut l1 = LayerConfig::low_pass(1.4, 6e-4, 12.0, 8);
        l1.input_gain = 8.0;
        l1.bias = 0.2;
        let mut l2 = LayerConfig::low_pass(1.2, 6e-4, 12.0, 8);
        l2.delta_slow = 0.01;
        l2.w_from_prev = 1.4;
        l2.bias = 0.2;
        NetworkConfig {
            layers: vec![l1, l2],
            mask: build_mask(8, 1, MaskDistribution::UniformPm1).unwrap(),
            substeps_per_node: 2,
            washout_steps: 10,
            seed: 1,
            allow_multi_input: false,
        }
    }

    #[test]
    fn valid_config_passes() {
        two_layer().validate().unwrap();
    }

    #[test]
    fn input_gain_on_layer_2_is_rejected_without_override() {
        let mut cfg = two_layer();
        cfg.layers[1].input_gain = 8.0;
        let err = cfg.validate().unwrap_err();
        match err {
            Error::Config(issues) => {
                assert!(issues.iter().any(|m| m.contains("layers.2.input_gain")));
            }
            other => panic!("unexpected error {other:?}"),
        }
        cfg.allow_multi_input = true;
        cfg.validate().unwrap();
    }

    #[test]
    fn all_violations_are_reported() {
        let mut cfg = two_layer();
        cfg.layers[0].tau_fast = 0.0;
        cfg.layers[0].delta_slow = 0.5;
        cfg.layers[1].w_from_next = 0.3;
        cfg.substeps_per_node = 1;
        match cfg.validate().unwrap_err() {
            Error::Config(issues) => assert_eq!(issues.len(), 4, "{issues:?}"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
