//! Parabolic backward-uniqueness surrogate: heat evolution of compactly
//! supported data cannot decay faster than the heat kernel at t = 1; the
//! fitted Gaussian exponent stays at or below 1/4. Oracle: explicit
//! heat-kernel convolution composed with e^{tA}.

use hardy_core::diagnostics::decay_fit;
use hardy_core::grid::{Field, C64};
use hardy_core::linalg::{expm, matvec_into};
use hardy_core::operator::PotentialSpec;
use hardy_core::propagator::split_step_flow;

use super::{Context, RunResult};
use crate::bundle::ExperimentOutput;

/// Compactly supported radial bump: plateau to `plateau`, polynomial ramp to
/// zero at `radius` (the carleman cutoff profile reused as data).
fn bump(r: f64, plateau: f64, radius: f64) -> f64 {
    if r <= plateau {
        1.0
    } else if r >= radius {
        0.0
    } else {
        let s = (r - plateau) / (radius - plateau);
        1.0 - s
            * s
            * s
            * s
            * s
            * (126.0 - 420.0 * s + 540.0 * s * s - 315.0 * s.powi(3) + 70.0 * s.powi(4))
    }
}

pub fn run(ctx: &Context, out: &mut ExperimentOutput) -> RunResult {
    let params = ctx.evolution_params()?;
    let m = ctx.fiber_dim;
    let amps: Vec<f64> = (0..m).map(|j| 1.0 / (1.0 + 0.6 * j as f64)).collect();
    let amps0 = amps.clone();
    let u0 = Field::from_fn(ctx.grid.clone(), m, move |x, fib| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let b = bump(r, 0.5, 1.0);
        for (o, a) in fib.iter_mut().zip(amps0.iter()) {
            *o = C64::new(a * b, 0.0);
        }
    });

    let pot = PotentialSpec::zero(m);
    let traj = split_step_flow(&u0, &ctx.generator, &pot, None, &params)?;
    let t_end = params.t_end;

    // Heat-kernel convolution oracle: free-space kernel on the samples
    // (images are beyond e^{−(2L−r)²/4t}), then the fiber map e^{tA}.
    let grid = &ctx.grid;
    let n = grid.points();
    let h = grid.spacing();
    let coords = grid.axis_coords().to_vec();
    let mut oracle = Field::zeros(ctx.grid.clone(), m);
    let kernel =
        |d: f64| (-d * d / (4.0 * t_end)).exp() / (4.0 * std::f64::consts::PI * t_end).sqrt();
    for i in 0..n {
        let mut acc = vec![C64::new(0.0, 0.0); m];
        for j in 0..n {
            let g = kernel(coords[i] - coords[j]);
            if g == 0.0 {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(u0.values().row(j).iter()) {
                *a += g * v;
            }
        }
        for (fib, a) in acc.iter().enumerate() {
            oracle.values_mut()[(i, fib)] = a * h;
        }
    }
    let e_a = expm(&ctx.generator.matrix().mapv(|z| z * t_end));
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for node in 0..grid.node_count() {
        let mut row = oracle.values_mut().row_mut(node);
        let slice = row.as_slice_mut().unwrap();
        matvec_into(&e_a, slice, &mut buf);
        slice.copy_from_slice(&buf);
    }
    let oracle_err = traj.last().sub(&oracle)?.norm() / oracle.norm();
    out.metric("oracle_rel_error", oracle_err);
    out.verdict("kernel_oracle", oracle_err <= 1e-8);

    // Fitted decay exponent at t = 1: bounded by the heat-kernel limit 1/4.
    let fit = decay_fit(traj.last(), (2.0, 8.0))?;
    out.metric("fitted_gamma", fit.fitted_gamma);
    out.metric("fit_residual", fit.residual);
    out.verdict("fit_accepted", fit.accepted);
    out.verdict(
        "decay_obstruction",
        fit.fitted_gamma <= 0.25 * (1.0 + 0.05) / t_end.max(1e-12),
    );

    // Profile series: log ‖u(x,1)‖ against x² over the fit window.
    let mut xs = Vec::new();
    let mut logs = Vec::new();
    for node in 0..grid.node_count() {
        let x = coords[node];
        let r = x.abs();
        if (2.0..=8.0).contains(&r) {
            let v = traj.last().fiber_norm(node);
            if v > 1e-14 {
                xs.push(r * r);
                logs.push(v.ln());
            }
        }
    }
    out.series(
        "decay_profile",
        crate::bundle::csv_table(&[("x_squared", &xs), ("log_norm", &logs)]),
    );
    // Final snapshot in the interleaved field layout for external tooling.
    out.series("field_t1", traj.last().to_csv());
    let _ = amps;
    Ok(())
}
