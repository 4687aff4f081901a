//! Coupled-system instantiation: the generator a_mj = g_m 2^{sj} projected
//! onto its Hermitian part, evolved as a free system flow.

use hardy_core::potentials::build_system_case;
use hardy_core::propagator::{free_flow, split_step_flow};

use super::{Context, RunError, RunResult};
use crate::bundle::ExperimentOutput;

pub fn run(ctx: &Context, out: &mut ExperimentOutput) -> RunResult {
    let params = ctx.evolution_params()?;
    out.metric("projection_distance", ctx.generator_projection_distance);

    // The symmetric construction g_m = 2^{sm} needs no projection at all.
    let s = match &ctx.spec.generator {
        Some(crate::runspec::GeneratorBlock::System { s, .. }) => *s,
        _ => {
            return Err(RunError::Other(
                "system-case needs a system generator".into(),
            ))
        }
    };
    let n = ctx.fiber_dim;
    let g_sym: Vec<f64> = (1..=n).map(|m| 2f64.powf(s * m as f64)).collect();
    let (_, sym_distance) = build_system_case(&g_sym, s, n)?;
    out.metric("symmetric_case_distance", sym_distance);
    out.verdict("symmetric_case_exact", sym_distance <= 1e-12);

    // Free system evolution: Hermitian A keeps the flow unitary, and the
    // split-step path must agree with the exact spectral flow.
    let u0 = ctx.gaussian_data(0.25);
    let pot = hardy_core::operator::PotentialSpec::zero(n);
    let traj = split_step_flow(&u0, &ctx.generator, &pot, None, &params)?;
    let n0 = u0.norm();
    let drift = traj
        .fields()
        .iter()
        .map(|f| (f.norm() - n0).abs() / n0)
        .fold(0.0f64, f64::max);
    out.metric("norm_drift", drift);
    out.verdict("system_unitary", drift <= 1e-9);

    let exact = free_flow(
        &u0,
        &ctx.generator,
        params.t_end,
        (params.coeff_a, params.coeff_b),
    )?;
    let rel = traj.last().sub(&exact)?.norm() / exact.norm();
    out.metric("exact_flow_error", rel);
    out.verdict("system_free_oracle", rel <= 1e-6);
    Ok(())
}
