//! Fans out independent (seed, gamma, noise) runs and writes one CSV.
//!
//! cargo run --release --example noise_sweep -- [out.csv]

use std::fs::File;

use spin_bfn::cli::{sweep, write_sweep_csv, ExperimentConfig, Preset, SweepSpec};

fn main() -> spin_bfn::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sweep.csv".into());
    let cfg = ExperimentConfig::preset(Preset::Paper2Level);
    let spec = SweepSpec {
        seeds: (0..20).collect(),
        gammas: vec![0.1, 0.25, 0.5, 1.0],
        noise_levels: vec![0.0, 0.05, 0.1, 0.2],
    };
    let rows = sweep(&cfg, &spec)?;
    write_sweep_csv(File::create(&out)?, &rows)?;

    println!("{:>6} {:>6} {:>10} {:>10} {:>9}", "gamma", "noise", "median F", "median V", "env dec");
    for &gamma in &spec.gammas {
        for &noise in &spec.noise_levels {
            let group: Vec<_> = rows.iter().filter(|r| r.gamma == gamma && r.noise == noise).collect();
            let mut f: Vec<f64> = group.iter().map(|r| r.fidelity).collect();
            let mut v: Vec<f64> = group.iter().map(|r| r.v_ratio).collect();
            f.sort_by(f64::total_cmp);
            v.sort_by(f64::total_cmp);
            let decreasing = group.iter().filter(|r| r.envelope_decreasing).count();
            println!(
                "{gamma:>6} {noise:>6} {:>10.4} {:>10.2e} {:>6}/{}",
                f[f.len() / 2],
                v[v.len() / 2],
                decreasing,
                group.len()
            );
        }
    }
    println!("{} runs written to {out}", rows.len());
    Ok(())
}
