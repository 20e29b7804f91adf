//! A constant-phase field leaves the record blind to part of the state;
//! a random spline phase does not.

use spin_bfn::controls::{check_theorem_precondition, precondition_holds, sample_random_field};
use spin_bfn::oracle::build_response;
use spin_bfn::qops::{angular_momentum, commutator_span_rank, Axis};
use spin_bfn::{ControlField, PhysicsConfig, Spin};

fn main() -> spin_bfn::Result<()> {
    let cfg = PhysicsConfig::paper_two_level();
    let fields = [
        ("constant phase", ControlField::from_knots(cfg.b0, cfg.t_horizon, &[0.9; 10])?),
        ("random spline", sample_random_field(&cfg, 0)?),
    ];
    for (name, field) in &fields {
        let response = build_response(field, &cfg)?;
        println!(
            "{name:>15}: Bx(0)By'(0) - By(0)Bx'(0) = {:+.3e}, holds {}, response rank {}/3, singular values [{}]",
            check_theorem_precondition(field),
            precondition_holds(field),
            response.rank(),
            response
                .singular_values
                .iter()
                .map(|s| format!("{s:.2e}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }

    let passing = (0..1000).filter(|&s| sample_random_field(&cfg, s).is_ok()).count();
    println!("random spline draws satisfying the precondition: {passing}/1000");

    for spin in [Spin::HALF, Spin::ONE] {
        let fz = angular_momentum(spin, Axis::Z);
        let fx = angular_momentum(spin, Axis::X);
        let fy = angular_momentum(spin, Axis::Y);
        let quad = &fx * &fx;
        let d = spin.dim();
        println!(
            "spin {spin}: Lie span of Fz with Fx, Fy has dimension {} (with Fx^2: {}), need {}",
            commutator_span_rank(&fz, &[fx.clone(), fy.clone()], 6),
            commutator_span_rank(&fz, &[fx, fy, quad], 6),
            d * d - 1
        );
    }
    Ok(())
}
