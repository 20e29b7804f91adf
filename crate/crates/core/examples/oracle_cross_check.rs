//! Compares BFN with the linear least-squares reconstruction of the same
//! record, as the iteration count grows.
//!
//! cargo run --release --example oracle_cross_check -- [seed] [noise]

use spin_bfn::bfn::{run_bfn, BfnOptions};
use spin_bfn::cli::{simulate, ExperimentConfig, Preset};
use spin_bfn::oracle::{build_response, reconstruct};
use spin_bfn::qops;

fn main() -> spin_bfn::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(0, |s| s.parse().expect("seed"));
    let noise = args.next().map_or(0.0, |s| s.parse().expect("noise level"));

    let mut cfg = ExperimentConfig::preset(Preset::Paper2Level);
    cfg.physics = cfg.physics.with_seed(seed).with_noise(noise, noise);
    let sim = simulate(&cfg)?;
    let response = build_response(&sim.control.field, &cfg.physics)?;
    let oracle = reconstruct(&sim.record, &response)?;
    println!(
        "oracle: rank {}, condition {:.1}, residual {:.2e}, fidelity {:.6}",
        oracle.rank,
        oracle.condition_number,
        oracle.residual_norm,
        qops::fidelity(&oracle.estimate, &sim.truth)?
    );
    println!("{:>4} {:>14} {:>10}", "n", "|oracle-bfn|", "fidelity");
    for n in [1, 2, 5, 10, 20, 40] {
        let run = run_bfn(
            &sim.record,
            &sim.control.field,
            &cfg.physics,
            &BfnOptions::iterations(n),
            Some(&sim.truth_run.trajectory),
        )?;
        let gap = qops::frobenius_distance(oracle.estimate.matrix(), run.final_estimate.matrix());
        println!("{n:>4} {gap:>14.3e} {:>10.6}", run.fidelity_vs_truth.unwrap());
    }
    Ok(())
}
