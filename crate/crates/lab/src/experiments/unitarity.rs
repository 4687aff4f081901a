//! Unitarity and contraction invariants of the split-step propagator.

use ndarray::Array2;

use hardy_core::grid::C64;
use hardy_core::operator::GeneratorSpec;
use hardy_core::potentials::PotentialForm;
use hardy_core::propagator::{split_step_flow, EvolutionParams};

use super::{Context, RunResult};
use crate::bundle::ExperimentOutput;

pub fn run(ctx: &Context, out: &mut ExperimentOutput) -> RunResult {
    let params = ctx.evolution_params()?;
    let u0 = ctx.gaussian_data(0.25);

    // a = 0 with Hermitian A and V: every sub-step is unitary.
    ctx.potential
        .validate_sampled(&ctx.grid, &[0.0, 0.5, 1.0])?;
    let traj = split_step_flow(&u0, &ctx.generator, &ctx.potential, None, &params)?;
    let n0 = u0.norm();
    let drift = traj
        .fields()
        .iter()
        .map(|f| (f.norm() - n0).abs() / n0)
        .fold(0.0f64, f64::max);
    out.metric("norm_drift", drift);
    out.verdict("unitarity_drift", drift <= 1e-9);
    out.series(
        "norms_schrodinger",
        crate::bundle::csv_table(&[
            ("t", traj.times()),
            (
                "norm",
                &traj.fields().iter().map(|f| f.norm()).collect::<Vec<_>>(),
            ),
        ]),
    );

    // a = 1, b = 0 with A + V Hermitian negative semidefinite: recorded norms
    // are non-increasing. A negative-definite generator replaces the
    // spec-supplied one for this half.
    let m = ctx.fiber_dim;
    let neg = GeneratorSpec::new(Array2::from_shape_fn((m, m), |(i, j)| {
        if i == j {
            C64::new(-0.4 - 0.1 * i as f64, 0.0)
        } else if i.abs_diff(j) == 1 {
            C64::new(0.1, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))?;
    let well = PotentialForm::GaussianWell {
        depth: 0.8,
        width: 2.0,
        coupling: 0.3,
    }
    .build(m)?;
    let heat_params = EvolutionParams::new(1.0, 0.0, params.t_end, params.steps)?
        .with_record_every(params.record_every.min(50))?;
    let heat = split_step_flow(&u0, &neg, &well, None, &heat_params)?;
    let norms: Vec<f64> = heat.fields().iter().map(|f| f.norm()).collect();
    let max_increase = norms
        .windows(2)
        .map(|w| (w[1] - w[0]) / norms[0])
        .fold(f64::NEG_INFINITY, f64::max);
    out.metric("max_norm_increase", max_increase.max(0.0));
    out.verdict("parabolic_contraction", max_increase <= 1e-10);
    out.series(
        "norms_heat",
        crate::bundle::csv_table(&[("t", heat.times()), ("norm", &norms)]),
    );
    Ok(())
}
