//! Drives the experiment with a control phase read from a `t,theta` CSV,
//! e.g. one produced by an external optimizer.
//!
//! cargo run --release --example external_control -- [control.csv]

use std::fs::File;
use std::path::PathBuf;

use spin_bfn::cli::{run_experiment, ControlSpec, ExperimentConfig, Preset};

fn main() -> spin_bfn::Result<()> {
    let mut cfg = ExperimentConfig::preset(Preset::PaperSpin1);
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            // A chirped phase written on the fly stands in for an optimized control.
            let p = std::env::temp_dir().join("spin_bfn_chirp.csv");
            let mut out = csv::Writer::from_writer(File::create(&p)?);
            out.write_record(["t", "theta"])?;
            for i in 0..=40 {
                let t = i as f64 / 40.0 * cfg.physics.t_horizon;
                out.serialize((t, 2.0 * t + 6.0 * t * t))?;
            }
            out.flush()?;
            p
        }
    };
    cfg.control = ControlSpec::Csv { path: path.clone() };
    let (sim, run) = run_experiment(&cfg)?;
    let ControlSpec::Table { times, .. } = &sim.control.spec else {
        unreachable!("CSV controls resolve to tables");
    };
    println!("control from {} ({} samples)", path.display(), times.len());
    println!("fidelity after {} iterations: {:.4}", run.iterations, run.fidelity_vs_truth.unwrap());
    Ok(())
}
