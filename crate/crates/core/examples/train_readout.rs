//! End-to-end prediction run from a built-in preset: generate input,
//! simulate the network, train the ridge readout and report NMSE.
//!
//! The "fig3c" preset is a two-layer Mackey-Glass 34-step predictor with
//! unidirectional coupling. The ridge parameter is selected on a
//! held-out validation tail, then the readout is refit on the whole
//! training block.

use dtdr::config::ExperimentConfig;
use dtdr::task::run_task;

fn main() -> Result<(), dtdr::Error> {
    let config = ExperimentConfig::parse(dtdr::config::preset("fig3c").expect("built-in"))?;
    let network = config.network()?;
    let task = config.task_spec();

    let run = run_task(&network, &task, None)?;
    println!(
        "train NMSE {:.3e}, test NMSE {:.3e} (ridge {:.1e}, {} nodes, {} test samples)",
        run.report.nmse_train,
        run.report.nmse_test,
        run.weights.chosen_ridge,
        run.states.n_cols(),
        run.report.n_test
    );

    run.weights.save_binary("weights.bin")?;
    println!("weights.bin written");
    Ok(())
}
