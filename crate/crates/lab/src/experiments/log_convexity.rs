//! Two-time interpolation: the functional F(t) = ‖e^{|x|²μ²(t)}u(·,t)‖^{1/μ(t)}
//! must be logarithmically convex for the free flow and for a Gaussian-
//! bounded Hermitian V₂, and the empirical interpolation constant must be
//! stable under grid/step refinement.

use std::sync::Arc;

use hardy_core::diagnostics::{
    convexity_functional, log_convexity_check, theorem3_interpolation_check, WeightParams,
};
use hardy_core::grid::{Field, Grid, Trajectory};
use hardy_core::operator::weighted_potential_bound;
use hardy_core::propagator::{free_flow, split_step_flow, EvolutionParams};

use super::{Context, RunError, RunResult};
use crate::bundle::ExperimentOutput;

const SAMPLES: usize = 33;
const TOLERANCE: f64 = 1e-3;

fn weight_params(ctx: &Context) -> Result<WeightParams, RunError> {
    let w = ctx
        .spec
        .weights
        .as_ref()
        .ok_or_else(|| RunError::Other("missing weights".into()))?;
    Ok(WeightParams::new(w.alpha, w.beta, w.gamma)?)
}

fn convexity_series(
    ctx: &Context,
    grid: Arc<Grid>,
    steps: usize,
    free: bool,
    w: &WeightParams,
) -> Result<(Vec<f64>, Vec<f64>, Trajectory), RunError> {
    let m = ctx.fiber_dim;
    let u0 = Field::from_fn(grid, m, |x, fib| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let env = (-0.5 * r2).exp();
        for (j, o) in fib.iter_mut().enumerate() {
            *o = hardy_core::C64::new(env / (1.0 + j as f64), 0.0);
        }
    });
    let traj = if free {
        let times: Vec<f64> = (0..SAMPLES)
            .map(|j| j as f64 / (SAMPLES - 1) as f64)
            .collect();
        let fields = times
            .iter()
            .map(|&t| free_flow(&u0, &ctx.generator, t, (0.0, 1.0)))
            .collect::<hardy_core::Result<Vec<_>>>()?;
        Trajectory::new(times, fields, "free".into())?
    } else {
        let params =
            EvolutionParams::new(0.0, 1.0, 1.0, steps)?.with_record_every(steps / (SAMPLES - 1))?;
        split_step_flow(&u0, &ctx.generator, &ctx.potential, None, &params)?
    };
    let f = convexity_functional(&traj, w)?;
    Ok((traj.times().to_vec(), f, traj))
}

pub fn run(ctx: &Context, out: &mut ExperimentOutput) -> RunResult {
    let w = weight_params(ctx)?;
    let params = ctx.evolution_params()?;
    let base_steps = params.steps;

    // Free branch.
    let (times, f_free, _) = convexity_series(ctx, ctx.grid.clone(), base_steps, true, &w)?;
    let rep_free = log_convexity_check(&times, &f_free, TOLERANCE)?;
    out.metric("min_second_diff_free", rep_free.min_second_difference);
    out.verdict("convexity_free", rep_free.verdict);
    out.series(
        "convexity_free",
        convexity_csv(
            &rep_free.times,
            &rep_free.values,
            &rep_free.log_values,
            &rep_free.second_differences,
        ),
    );

    // Bounded Hermitian V₂ branch with its measured constants.
    let bounds = weighted_potential_bound(&ctx.potential, &w, &ctx.grid, 64)?;
    out.metric("m1", bounds.m1);
    out.metric("m2", bounds.m2);
    out.verdict("m2_finite", bounds.m2.is_finite());
    let (times_v, f_v, traj_v) = convexity_series(ctx, ctx.grid.clone(), base_steps, false, &w)?;
    let rep_v = log_convexity_check(&times_v, &f_v, TOLERANCE)?;
    out.metric("min_second_diff_potential", rep_v.min_second_difference);
    out.verdict("convexity_potential", rep_v.verdict);
    out.series(
        "convexity_potential",
        convexity_csv(
            &rep_v.times,
            &rep_v.values,
            &rep_v.log_values,
            &rep_v.second_differences,
        ),
    );

    // Empirical interpolation constant and its refinement stability:
    // doubled P, halved dt.
    let interp = theorem3_interpolation_check(&traj_v, &w, bounds.m1, bounds.m2)?;
    let c_base = interp.max_log_gap;
    out.metric("empirical_constant", c_base);
    if let Some(n) = interp.empirical_n {
        out.metric("empirical_n", n);
    }
    let g = ctx.spec.grid.as_ref().expect("validated");
    let fine_grid = Grid::new(g.dim, g.half_width, g.points * 2)?;
    let bounds_fine = weighted_potential_bound(&ctx.potential, &w, &fine_grid, 64)?;
    let (_, _, traj_fine) = convexity_series(ctx, fine_grid, base_steps * 2, false, &w)?;
    let interp_fine = theorem3_interpolation_check(&traj_fine, &w, bounds_fine.m1, bounds_fine.m2)?;
    let c_fine = interp_fine.max_log_gap;
    out.metric("empirical_constant_refined", c_fine);
    let stability = (c_fine - c_base).abs() / c_base.abs().max(1e-300);
    out.metric("constant_stability_rel", stability);
    out.verdict(
        "interpolation_constant_stable",
        c_base.is_finite() && stability <= 0.10,
    );
    Ok(())
}

fn convexity_csv(t: &[f64], f: &[f64], logf: &[f64], d2: &[f64]) -> String {
    // Second differences are interior quantities; pad edges for a rectangular
    // table (column: t, F, logF, second_difference).
    let mut padded = vec![f64::NAN];
    padded.extend_from_slice(d2);
    padded.push(f64::NAN);
    crate::bundle::csv_table(&[
        ("t", t),
        ("F", f),
        ("logF", logf),
        ("second_difference", &padded),
    ])
}
