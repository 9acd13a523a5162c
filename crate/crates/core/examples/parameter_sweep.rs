//! Grid scan over the two inter-layer coupling weights of a two-layer
//! network, reusing one generated input series for every grid point.
//!
//! A full 11x11 plane is what the "fig3c" preset ships; this example
//! runs a coarser 5x3 version of the same scan so it finishes in about
//! a minute. The minimum sits on the w21 = 0 edge: feeding the first
//! layer back from the second only hurts.

use dtdr::config::ExperimentConfig;
use dtdr::sweep::{linspace, run_grid, GridAxis};

fn main() -> Result<(), dtdr::Error> {
    let config = ExperimentConfig::parse(dtdr::config::preset("fig3c").expect("built-in"))?;
    let mut network = config.network()?;
    network.substeps_per_node = 2;

    let axes = vec![
        GridAxis {
            parameter_path: "layers.2.w_from_prev".into(),
            values: linspace(0.6, 2.0, 5),
        },
        GridAxis {
            parameter_path: "layers.1.w_from_next".into(),
            values: linspace(0.0, 1.0, 3),
        },
    ];
    let result = run_grid(&network, &config.task_spec(), &axes, 1)?;

    println!("w12     w21     test NMSE");
    for row in &result.rows {
        println!(
            "{:<7.3} {:<7.3} {}",
            row.axis_values[0],
            row.axis_values[1],
            if row.is_ok() {
                format!("{:.3e}", row.nmse_test)
            } else {
                row.status.clone()
            }
        );
    }
    if let Some(best) = result.best() {
        println!(
            "minimum {:.3e} at w12 = {}, w21 = {}",
            best.nmse_test, best.axis_values[0], best.axis_values[1]
        );
    }
    Ok(())
}
