//! Build a two-layer delay network by hand and inspect its node
//! responses.
//!
//! Layer 1 is a low-pass oscillator driven by the masked input; layer 2
//! is a band-pass stage fed unidirectionally from layer 1. Each input
//! sample produces one row of node samples across all layers.

use dtdr::benchmarks::{gen_mackey_glass, MackeyGlassParams};
use dtdr::mask::build_mask;
use dtdr::sim::simulate;
use dtdr::{LayerConfig, MaskDistribution, NetworkConfig};

fn main() -> Result<(), dtdr::Error> {
    let mut l1 = LayerConfig::low_pass(1.4, 0.0006, 12.0, 100);
    l1.bias = 0.2;
    l1.input_gain = 8.0;
    let mut l2 = LayerConfig::low_pass(1.2, 0.0006, 12.0, 100);
    l2.delta_slow = 0.01;
    l2.bias = 0.2;
    l2.w_from_prev = 1.4;

    let network = NetworkConfig {
        layers: vec![l1, l2],
        mask: build_mask(100, 1, MaskDistribution::UniformPm1)?,
        substeps_per_node: 4,
        washout_steps: 50,
        seed: 7,
        allow_multi_input: false,
    };

    let mut input = gen_mackey_glass(&MackeyGlassParams::default(), 300, 1000)?;
    for row in input.samples_mut() {
        row[0] *= 0.05625;
    }
    let states = simulate(&network, &input)?;
    println!(
        "{} rows x {} node columns ({} layers)",
        states.n_rows(),
        states.n_cols(),
        states.n_layers()
    );
    for layer in 0..states.n_layers() {
        let cols = states.layer_columns(layer);
        let last = states.row(states.n_rows() - 1);
        let mean = last[cols.clone()].iter().sum::<f64>() / cols.len() as f64;
        println!("layer {} mean response on last row: {mean:+.5}", layer + 1);
    }
    Ok(())
}
