//! Prints the quantities whose vanishing drives the two-level convergence
//! argument, sampled at the start of each forward pass.
//!
//! cargo run --release --example proof_chain -- [seed]

use spin_bfn::bfn::proof_chain;
use spin_bfn::cli::{run_experiment, ExperimentConfig, Preset};

fn main() -> spin_bfn::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let mut cfg = ExperimentConfig::preset(Preset::Paper2Level);
    cfg.physics.rng_seed = seed;
    cfg.n_iterations = 15;
    let (sim, run) = run_experiment(&cfg)?;

    println!(
        "{:>3} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12}",
        "k", "V", "|Z|", "|Z'|", "|Z''|", "|BxY-ByX|", "|B'xY-B'yX|"
    );
    for row in proof_chain(&run, &sim.control.field)? {
        println!(
            "{:>3} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>12.2e} {:>12.2e}",
            row.k,
            row.v,
            row.z.abs(),
            row.z_dot.abs(),
            row.z_ddot.abs(),
            row.field_combination.abs(),
            row.rate_combination.abs()
        );
    }
    Ok(())
}
