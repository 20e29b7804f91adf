//! Reconstructs a random pure spin-1/2 state from a noiseless record.
//!
//! cargo run --release --example two_level_reconstruction -- [seed] [iterations]

use spin_bfn::cli::{run_experiment, ExperimentConfig, Preset};

fn main() -> spin_bfn::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(0, |s| s.parse().expect("seed"));
    let iterations = args.next().map_or(10, |s| s.parse().expect("iterations"));

    let mut cfg = ExperimentConfig::preset(Preset::Paper2Level);
    cfg.physics.rng_seed = seed;
    cfg.n_iterations = iterations;
    let (sim, run) = run_experiment(&cfg)?;

    println!("truth:\n{:.4}", sim.truth.matrix());
    println!("estimate after {} iterations:\n{:.4}", run.iterations, run.final_estimate.matrix());
    for (k, v) in run.vk_sequence.iter().enumerate() {
        println!("V_{k:<2} = {v:.3e}");
    }
    println!("fidelity {:.5}", run.fidelity_vs_truth.unwrap_or(f64::NAN));
    println!("{:.3} ms per iteration", 1e3 * run.wall_seconds / run.iterations as f64);
    Ok(())
}
