//! Appell transformation audit: the transformed free flow must solve the
//! transformed equation, the α = β branch must be the identity, and the
//! surrogate norm identity must hold at the endpoints.

use hardy_core::appell::{appell_field, appell_solution_residual, AppellParams};
use hardy_core::diagnostics::weighted_norm;
use hardy_core::grid::{Field, Trajectory};
use hardy_core::operator::PotentialSpec;
use hardy_core::propagator::free_flow;

use super::{Context, RunError, RunResult};
use crate::bundle::ExperimentOutput;

pub fn run(ctx: &Context, out: &mut ExperimentOutput) -> RunResult {
    let w = ctx
        .spec
        .weights
        .as_ref()
        .ok_or_else(|| RunError::Other("missing weights".into()))?;
    let e = ctx
        .spec
        .evolution
        .as_ref()
        .ok_or_else(|| RunError::Other("missing evolution".into()))?;
    let coeff = (e.a, e.b);
    let samples = e.steps.max(256);

    // Source trajectory: exact free flow of a contained Gaussian, recorded
    // 4x finer than the output sampling.
    let u0 = ctx.gaussian_data(0.25);
    let times: Vec<f64> = (0..=samples).map(|j| j as f64 / samples as f64).collect();
    let fields = times
        .iter()
        .map(|&t| free_flow(&u0, &ctx.generator, t, coeff))
        .collect::<hardy_core::Result<Vec<Field>>>()?;
    let u = Trajectory::new(times, fields, "free source".into())?;
    let pot = PotentialSpec::zero(ctx.fiber_dim);

    let p = AppellParams::new(w.alpha, w.beta, coeff, w.gamma)?;
    let residual = appell_solution_residual(&u, &p, &ctx.generator, &pot, None, 128)?;
    out.metric("residual", residual);
    out.verdict("residual_small", residual <= 1e-4);

    // Identity branch: α = β leaves the trajectory untouched to rounding.
    let p_id = AppellParams::new(w.alpha, w.alpha, coeff, w.gamma)?;
    let check_times: Vec<f64> = (0..=8).map(|j| j as f64 * 0.125).collect();
    let tilde_id = appell_field(&u, &p_id, &check_times)?;
    let mut ident_defect = 0.0f64;
    for (i, &t) in check_times.iter().enumerate() {
        let j = (t * samples as f64).round() as usize;
        let d = tilde_id.field(i).sub(u.field(j))?.norm() / u.field(j).norm().max(1e-300);
        ident_defect = ident_defect.max(d);
    }
    out.metric("identity_defect", ident_defect);
    out.verdict("identity_exact", ident_defect <= 1e-12);

    // Surrogate norm identity at the exact endpoints of the time map.
    let gamma_probe = 0.04;
    let p_probe = AppellParams::new(w.alpha, w.beta, coeff, gamma_probe)?;
    let tilde = appell_field(&u, &p_probe, &[0.0, 0.5, 1.0])?;
    let mut norm_defect = 0.0f64;
    for (i, t) in [(0usize, 0.0f64), (2, 1.0)] {
        let lhs = weighted_norm(tilde.field(i), gamma_probe)?;
        let src = if t == 0.0 { u.field(0) } else { u.last() };
        let rhs = weighted_norm(src, p_probe.nu_exponent(t))?;
        norm_defect = norm_defect.max((lhs - rhs).abs() / rhs);
    }
    out.metric("norm_identity_defect", norm_defect);
    out.verdict("norm_bookkeeping", norm_defect <= 1e-5);

    // Time map series for the bundle.
    let ts: Vec<f64> = (0..=32).map(|j| j as f64 / 32.0).collect();
    let ss: Vec<f64> = ts.iter().map(|&t| p.s_of(t)).collect();
    let scales: Vec<f64> = ts.iter().map(|&t| p.scale(t)).collect();
    out.series(
        "time_map",
        crate::bundle::csv_table(&[("t", &ts), ("s", &ss), ("scale", &scales)]),
    );
    Ok(())
}
