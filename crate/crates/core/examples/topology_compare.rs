//! Rank architectures with an identical total node budget on the same
//! task: 1200 nodes as one, two or three cascaded layers, evaluated on
//! Lorenz one-step prediction.
//!
//! Deeper cascades win even though every variant sees the same input
//! and trains the same readout size.

use dtdr::config::ExperimentConfig;
use dtdr::sweep::compare_topologies;
use dtdr::NetworkConfig;

fn main() -> Result<(), dtdr::Error> {
    let presets = ["table1-1", "table1-2", "table1-3"];
    let mut specs: Vec<(String, NetworkConfig)> = Vec::new();
    for name in presets {
        let config = ExperimentConfig::parse(dtdr::config::preset(name).expect("built-in"))?;
        specs.push((name.to_string(), config.network()?));
    }
    let task = ExperimentConfig::parse(dtdr::config::preset("table1-1").unwrap())?.task_spec();

    let report = compare_topologies(&specs, &task, true)?;
    println!("rank  label     layers  nodes  test NMSE");
    for (rank, &idx) in report.ranking.iter().enumerate() {
        let e = &report.entries[idx];
        println!(
            "{:>4}  {:<8}  {:>6}  {:>5}  {}",
            rank + 1,
            e.label,
            e.n_layers,
            e.total_nodes,
            if e.status == "ok" {
                format!("{:.3e}", e.nmse_test)
            } else {
                e.status.clone()
            }
        );
    }
    Ok(())
}
