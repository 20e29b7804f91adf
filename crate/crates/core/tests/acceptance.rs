//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::Instant;

use spin_bfn::bfn::{envelope_decreasing, lyapunov_diagnostics, proof_chain};
use spin_bfn::cli::{run_experiment, validate, EstimateInputs, ExperimentConfig, Preset};
use spin_bfn::controls::{precondition_holds, sample_random_field};
use spin_bfn::dynamics::simulate_truth;
use spin_bfn::oracle::{build_response, reconstruct};
use spin_bfn::qops::{self, DensityMatrix};
use spin_bfn::{ControlField, PhysicsConfig};

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn two_level(seed: u64, noise: f64, n: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(Preset::Paper2Level);
    cfg.physics = cfg.physics.with_seed(seed).with_noise(noise, noise);
    cfg.n_iterations = n;
    cfg
}

fn spin_one(noise: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(Preset::PaperSpin1);
    cfg.physics = cfg.physics.with_noise(noise, noise);
    cfg
}

fn lyapunov_identities() -> Outcome {
    let start = Instant::now();
    let (_, run) = run_experiment(&two_level(0, 0.0, 10)).unwrap();
    let report = lyapunov_diagnostics(&run).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        report.forward_identity_max_rel < 0.01 && report.backward_identity_max_rel < 0.01 && secs < 5.0,
        format!(
            "forward max rel {:.2e}, backward max rel {:.2e}, {secs:.2} s",
            report.forward_identity_max_rel, report.backward_identity_max_rel
        ),
    )
}

fn discrete_decrease() -> Outcome {
    let start = Instant::now();
    let (_, run) = run_experiment(&two_level(0, 0.0, 10)).unwrap();
    let report = lyapunov_diagnostics(&run).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        report.max_decrement_rel_error < 0.01 && report.strictly_decreasing && secs < 10.0,
        format!(
            "max rel error {:.2e}, strictly decreasing {}, {secs:.2} s",
            report.max_decrement_rel_error, report.strictly_decreasing
        ),
    )
}

fn two_level_convergence() -> Outcome {
    let cfg = two_level(0, 0.0, 10);
    let (sim, run) = run_experiment(&cfg).unwrap();
    let ratio = run.vk_sequence[10] / run.vk_sequence[0];
    let fidelity = run.fidelity_vs_truth.unwrap();
    let response = build_response(&sim.control.field, &cfg.physics).unwrap();
    let oracle = reconstruct(&sim.record, &response).unwrap();
    let distance = qops::frobenius_distance(oracle.estimate.matrix(), run.final_estimate.matrix());
    let oracle_truth = qops::frobenius_distance(oracle.estimate.matrix(), sim.truth.matrix());
    outcome(
        ratio < 1e-2 && fidelity >= 0.99 && distance < 1e-2,
        format!(
            "V10/V0 {ratio:.2e}, fidelity {fidelity:.5}, |oracle - bfn|_F {distance:.2e} \
             (oracle vs truth {oracle_truth:.1e})"
        ),
    )
}

fn two_level_robustness() -> Outcome {
    let start = Instant::now();
    let mut fidelities = Vec::new();
    let mut decreasing = 0;
    for seed in 0..20 {
        let (_, run) = run_experiment(&two_level(seed, 0.1, 10)).unwrap();
        fidelities.push(run.fidelity_vs_truth.unwrap());
        if envelope_decreasing(&run.vk_sequence) {
            decreasing += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    fidelities.sort_by(f64::total_cmp);
    let median = 0.5 * (fidelities[9] + fidelities[10]);
    outcome(
        median >= 0.9 && decreasing >= 18 && secs < 120.0,
        format!(
            "median fidelity {median:.4} (min {:.4}), envelope decreasing {decreasing}/20, {secs:.1} s",
            fidelities[0]
        ),
    )
}

fn spin_one_experiment() -> Outcome {
    let start = Instant::now();
    let (_, noisy) = run_experiment(&spin_one(0.1)).unwrap();
    let (_, clean) = run_experiment(&spin_one(0.0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (f_noisy, f_clean) = (noisy.fidelity_vs_truth.unwrap(), clean.fidelity_vs_truth.unwrap());
    outcome(
        f_noisy >= 0.90 && f_clean >= 0.95 && secs <= 60.0,
        format!(
            "fidelity {f_noisy:.4} at 10% noise, {f_clean:.4} noiseless, {:.4} s per iteration, {secs:.1} s total",
            noisy.wall_seconds / noisy.iterations as f64
        ),
    )
}

fn precondition_machinery() -> Outcome {
    let cfg = two_level(0, 0.0, 10);
    let still = ControlField::from_knots(cfg.physics.b0, 1.0, &[0.7; 10]).unwrap();
    let truth = DensityMatrix::random_pure(2, &mut spin_bfn::rng::stream_rng(0, spin_bfn::rng::Stream::TruthState));
    let record = simulate_truth(&truth, &still, &cfg.physics).unwrap().record;
    let inputs = EstimateInputs {
        physics: cfg.physics.clone(),
        field: still.clone(),
        record,
        truth: Some(truth),
        n_iterations: 1,
    };
    let (report, _) = validate(&inputs).unwrap();
    let flagged = !precondition_holds(&still) && report.failed_hypothesis.is_some() && report.response_rank < 3;

    let mut passing = 0;
    for seed in 0..1000 {
        if sample_random_field(&cfg.physics, seed).is_ok_and(|f| precondition_holds(&f)) {
            passing += 1;
        }
    }
    outcome(
        flagged && passing == 1000,
        format!(
            "constant phase: rank {}, flagged {flagged}; random splines passing {passing}/1000",
            report.response_rank
        ),
    )
}

fn rk4_order() -> f64 {
    let mut cfg = PhysicsConfig::paper_two_level();
    let field = sample_random_field(&cfg, 1).unwrap();
    let rho0 = DensityMatrix::random_pure(2, &mut spin_bfn::rng::stream_rng(1, spin_bfn::rng::Stream::TruthState));
    let mut finals = Vec::new();
    for steps in [100, 200, 400, 6400] {
        cfg.steps_per_pass = steps;
        let run = simulate_truth(&rho0, &field, &cfg).unwrap();
        finals.push(run.trajectory.last().unwrap().clone());
    }
    let e1 = qops::frobenius_distance(&finals[0], &finals[3]);
    let e2 = qops::frobenius_distance(&finals[1], &finals[3]);
    let e3 = qops::frobenius_distance(&finals[2], &finals[3]);
    0.5 * ((e1 / e2).log2() + (e2 / e3).log2())
}

fn structural_invariants() -> Outcome {
    let mut trace: f64 = 0.0;
    let mut herm: f64 = 0.0;
    for cfg in [two_level(0, 0.0, 10), two_level(0, 0.1, 10), spin_one(0.1)] {
        let (_, run) = run_experiment(&cfg).unwrap();
        trace = trace.max(run.max_trace_drift);
        herm = herm.max(run.max_hermitian_drift);
    }
    let order = rk4_order();
    outcome(
        trace < 1e-9 && herm < 1e-10 && (3.5..4.5).contains(&order),
        format!("trace drift {trace:.1e}, hermiticity drift {herm:.1e}, observed RK4 order {order:.2}"),
    )
}

fn proof_chain_asymptotics() -> Outcome {
    let cfg = two_level(0, 0.0, 11);
    let (sim, run) = run_experiment(&cfg).unwrap();
    let rows = proof_chain(&run, &sim.control.field).unwrap();
    let (a, b) = (&rows[1], &rows[10]);
    let ratios = [
        ("Z", a.z.abs() / b.z.abs()),
        ("Zdot", a.z_dot.abs() / b.z_dot.abs()),
        ("Zddot", a.z_ddot.abs() / b.z_ddot.abs()),
        ("BxY-ByX", a.field_combination.abs() / b.field_combination.abs()),
        ("dBxY-dByX", a.rate_combination.abs() / b.rate_combination.abs()),
    ];
    let pass = ratios.iter().all(|(_, r)| *r >= 10.0);
    let detail = ratios
        .iter()
        .map(|(name, r)| format!("{name} {r:.1}x"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("k=1 to k=10 decrease: {detail}"))
}

fn main() {
    let criteria: [Check; 8] = [
        ("1 Lyapunov identities", lyapunov_identities),
        ("2 discrete decrease identity", discrete_decrease),
        ("3 two-level convergence", two_level_convergence),
        ("4 two-level robustness", two_level_robustness),
        ("5 spin-1 experiment", spin_one_experiment),
        ("6 observability precondition", precondition_machinery),
        ("7 structural invariants", structural_invariants),
        ("8 proof-chain asymptotics", proof_chain_asymptotics),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("acceptance {name}: {tag} ({})", result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
