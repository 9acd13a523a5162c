//! Generate the two chaotic benchmark series and write them as CSV.
//!
//! Mackey-Glass is sampled once per unit time; Lorenz every 0.02 time
//! units. Both generators discard an initial transient so the output
//! starts on the attractor, and both are fully determined by their
//! parameters and seed.

use dtdr::benchmarks::{gen_lorenz, gen_mackey_glass, LorenzParams, MackeyGlassParams};

fn main() -> Result<(), dtdr::Error> {
    let mg = gen_mackey_glass(&MackeyGlassParams::default(), 2000, 1000)?;
    mg.save_csv("mackey_glass.csv")?;
    println!(
        "mackey_glass.csv: {} samples, first value {:.6}",
        mg.len(),
        mg.value(0, 0)
    );

    let lz = gen_lorenz(&LorenzParams::default(), 2000, 5000)?;
    lz.save_csv("lorenz.csv")?;
    println!(
        "lorenz.csv: {} samples of (x, y, z), first x {:.6}",
        lz.len(),
        lz.value(0, 0)
    );
    Ok(())
}
