//! Free-propagator oracle: the split-step flow with V ≡ 0 against the exact
//! spectral flow, plus the Strang order measurement on a static well.

use hardy_core::operator::PotentialSpec;
use hardy_core::potentials::PotentialForm;
use hardy_core::propagator::{free_flow, split_step_flow, EvolutionParams};

use super::{Context, RunResult};
use crate::bundle::ExperimentOutput;

pub fn run(ctx: &Context, out: &mut ExperimentOutput) -> RunResult {
    let params = ctx.evolution_params()?;
    let coeff = (params.coeff_a, params.coeff_b);
    let u0 = ctx.gaussian_data(0.25);
    let zero_pot = PotentialSpec::zero(ctx.fiber_dim);

    let start = std::time::Instant::now();
    let traj = split_step_flow(&u0, &ctx.generator, &zero_pot, None, &params)?;
    let exact = free_flow(&u0, &ctx.generator, params.t_end, coeff)?;
    let rel = traj.last().sub(&exact)?.norm() / exact.norm();
    out.metric("relative_error", rel);
    out.verdict("free_oracle_error", rel <= 1e-6);

    // Convergence order: V ≡ 0 makes the splitting exact step by step, so
    // the order is measured with a static Hermitian well against an 8x finer
    // split-step reference.
    let pot = PotentialForm::GaussianWell {
        depth: 1.0,
        width: 2.0,
        coupling: 0.3,
    }
    .build(ctx.fiber_dim)?;
    let t_end = 0.5;
    let reference = {
        let p = EvolutionParams::new(coeff.0, coeff.1, t_end, 4000)?;
        split_step_flow(&u0, &ctx.generator, &pot, None, &p)?
            .last()
            .clone()
    };
    let mut dts = Vec::new();
    let mut errors = Vec::new();
    for steps in [125usize, 250, 500] {
        let p = EvolutionParams::new(coeff.0, coeff.1, t_end, steps)?;
        let traj = split_step_flow(&u0, &ctx.generator, &pot, None, &p)?;
        dts.push(t_end / steps as f64);
        errors.push(traj.last().sub(&reference)?.norm() / reference.norm());
    }
    let order_12 = (errors[0] / errors[1]).log2();
    let order_23 = (errors[1] / errors[2]).log2();
    out.metric("order_coarse", order_12);
    out.metric("order_fine", order_23);
    out.verdict(
        "convergence_order",
        (1.8..=2.2).contains(&order_12) && (1.8..=2.2).contains(&order_23),
    );
    out.series(
        "convergence",
        crate::bundle::csv_table(&[("dt", &dts), ("error", &errors)]),
    );

    let wall = start.elapsed().as_secs_f64();
    out.metric("wall_time_s", wall);
    out.verdict("runtime_budget", wall < 10.0);
    Ok(())
}
