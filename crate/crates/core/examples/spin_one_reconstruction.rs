//! Spin-1 ensemble with a quadratic Zeeman term, reconstructed from a
//! record with 10% measurement and field noise.
//!
//! cargo run --release --example spin_one_reconstruction -- [noise] [iterations]

use spin_bfn::cli::{run_experiment, ExperimentConfig, Preset};

fn main() -> spin_bfn::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise = args.next().map_or(0.1, |s| s.parse().expect("noise level"));
    let iterations = args.next().map_or(50, |s| s.parse().expect("iterations"));

    let mut cfg = ExperimentConfig::preset(Preset::PaperSpin1);
    cfg.physics = cfg.physics.with_noise(noise, noise);
    cfg.n_iterations = iterations;
    let (sim, run) = run_experiment(&cfg)?;

    println!("truth:\n{:.4}", sim.truth.matrix());
    println!("estimate:\n{:.4}", run.final_estimate.matrix());
    println!("fidelity {:.4}", run.fidelity_vs_truth.unwrap_or(f64::NAN));
    println!("min eigenvalue before projection {:.2e}", run.min_eigenvalues.last().unwrap());
    println!(
        "{} iterations in {:.2} s ({:.1} ms each)",
        run.iterations,
        run.wall_seconds,
        1e3 * run.wall_seconds / run.iterations as f64
    );
    Ok(())
}
