//! Cross-scheme and regularization identities: Duhamel validation on
//! every registry potential, the regularization identity u_ε = e^{εtW}u, and
//! the empirical constants of the linear-weight and two-time sup bounds.

use hardy_core::diagnostics::{linear_weighted_norm, mu, weighted_norm, WeightParams};
use hardy_core::operator::weighted_potential_bound;
use hardy_core::potentials::PotentialForm;
use hardy_core::propagator::{
    duhamel_flow, regularized_identity_residual, split_step_flow, EvolutionParams,
    RegularizedFlowParams,
};

use super::{Context, RunError, RunResult};
use crate::bundle::ExperimentOutput;

pub fn run(ctx: &Context, out: &mut ExperimentOutput) -> RunResult {
    let w = ctx
        .spec
        .weights
        .as_ref()
        .ok_or_else(|| RunError::Other("missing weights".into()))?;
    let wp = WeightParams::new(w.alpha, w.beta, w.gamma)?;
    let params = ctx.evolution_params()?;
    let u0 = ctx.gaussian_data(0.5);
    let m = ctx.fiber_dim;

    // Cross-scheme: Duhamel vs split-step at t = 1 on every registry entry.
    let registry = [
        PotentialForm::Zero,
        PotentialForm::GaussianWell {
            depth: 0.6,
            width: 2.0,
            coupling: 0.2,
        },
        PotentialForm::ModulatedGaussian {
            strength: 0.3,
            width: 1.5,
            omega: 2.0,
            depth_mod: 0.5,
            coupling: 0.2,
        },
        PotentialForm::WellPlusModulated {
            depth: 0.6,
            well_width: 2.0,
            strength: 0.3,
            mod_width: 1.5,
            omega: 2.0,
            depth_mod: 0.5,
            coupling: 0.2,
        },
        PotentialForm::IntegralKernel {
            strength: 0.4,
            width: 1.5,
            rate: 2.0,
        },
    ];
    let cross_params = EvolutionParams::new(0.0, 1.0, 1.0, 1000)?;
    let mut max_cross = 0.0f64;
    for form in &registry {
        let pot = form.build(m)?;
        let duh = duhamel_flow(&u0, &ctx.generator, &pot, &cross_params)?;
        let split = split_step_flow(&u0, &ctx.generator, &pot, None, &cross_params)?;
        let rel = duh.last().sub(split.last())?.norm() / split.last().norm();
        out.metric(&format!("cross_scheme_{}", form.id()), rel);
        max_cross = max_cross.max(rel);
    }
    out.metric("cross_scheme_max", max_cross);
    out.verdict("duhamel_cross_validation", max_cross <= 1e-5);

    // Regularization identity on the V₁-only configuration.
    let v1_pot = PotentialForm::GaussianWell {
        depth: 0.5,
        width: 2.0,
        coupling: 0.2,
    }
    .build(m)?;
    let reg_params = EvolutionParams::new(0.0, 1.0, 1.0, 2000)?.with_record_every(500)?;
    let reg_traj = split_step_flow(&u0, &ctx.generator, &v1_pot, None, &reg_params)?;
    let mut max_identity = 0.0f64;
    for eps in [0.01, 0.1] {
        let residuals =
            regularized_identity_residual(&reg_traj, &ctx.generator, &v1_pot, eps, 2.5e-4)?;
        let worst = residuals
            .iter()
            .skip(1)
            .map(|(_, r)| *r)
            .fold(0.0f64, f64::max);
        out.metric(&format!("reg_identity_eps_{eps}"), worst);
        max_identity = max_identity.max(worst);
        // Regularized parameter bookkeeping echoed for the record.
        let rp = RegularizedFlowParams::new(eps, w.alpha, w.beta, 1.0 / (w.alpha * w.beta))?;
        out.metric(&format!("gamma_eps_{eps}"), rp.gamma_eps);
    }
    out.verdict("regularization_identity", max_identity <= 1e-6);

    // Empirical constant of the linear-weight sup bound
    // sup_t ‖e^{λ·x}u(t)‖ ≤ N[‖e^{λ·x}u(0)‖ + ‖e^{λ·x}u(1)‖] (F ≡ 0 here).
    let run = split_step_flow(&u0, &ctx.generator, &ctx.potential, None, &params)?;
    let dim = ctx.grid.dim();
    let mut n51 = 0.0f64;
    for lam in [-1.0, -0.5, 0.5, 1.0] {
        let lambda = vec![lam; dim];
        let sup = run
            .fields()
            .iter()
            .map(|f| linear_weighted_norm(f, &lambda))
            .collect::<hardy_core::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        let ends = linear_weighted_norm(run.field(0), &lambda)?
            + linear_weighted_norm(run.last(), &lambda)?;
        n51 = n51.max(sup / ends);
    }
    out.metric("lemma51_empirical_n", n51);
    out.verdict("lemma51_finite", n51.is_finite() && n51 > 0.0);

    // Two-time sup bound: sup_t ‖e^{|x|²μ²(t)}u‖ + ‖√(t(1−t))e^{|x|²μ²(t)}∇u‖_Z
    // against the endpoint data, with the operator-norm constants measured.
    let bounds = weighted_potential_bound(&ctx.potential, &wp, &ctx.grid, 64)?;
    out.metric("sup_v_norm", bounds.m1);
    let mut sup_weighted = 0.0f64;
    for (i, f) in run.fields().iter().enumerate() {
        let m_t = mu(run.times()[i], &wp);
        sup_weighted = sup_weighted.max(weighted_norm(f, m_t * m_t)?);
    }
    // ‖√(t(1−t)) e^{|x|²μ²(t)} ∇u‖_Z with the time-dependent weight: the
    // gradient-norm helper handles a fixed γ, so accumulate the trapezoid in
    // t here with γ = μ²(t_i) per snapshot.
    let mut grad_z2 = 0.0f64;
    {
        let times = run.times();
        for (i, f) in run.fields().iter().enumerate() {
            let t = times[i];
            let tw = t * (1.0 - t);
            if tw == 0.0 {
                continue;
            }
            let dt_loc = if i + 1 == run.len() {
                times[i] - times[i - 1]
            } else if i == 0 {
                times[1] - times[0]
            } else {
                (times[i + 1] - times[i - 1]) / 2.0
            };
            let m_t = mu(t, &wp);
            let mut sub = 0.0f64;
            for g in f.spectral_gradient() {
                let n = weighted_norm(&g, m_t * m_t)?;
                sub += n * n;
            }
            grad_z2 += dt_loc * tw * sub;
        }
    }
    let end0 = weighted_norm(run.field(0), 1.0 / (w.beta * w.beta))?;
    let end1 = weighted_norm(run.last(), 1.0 / (w.alpha * w.alpha))?;
    let sup_plain = run.fields().iter().map(|f| f.norm()).fold(0.0f64, f64::max);
    let denom = (bounds.m1.exp()) * (end0 + end1 + sup_plain);
    let n_51 = (sup_weighted + grad_z2.sqrt()) / denom;
    out.metric("theorem51_empirical_n", n_51);
    out.verdict("theorem51_finite", n_51.is_finite());
    out.series(
        "weighted_sup",
        crate::bundle::csv_table(&[
            ("t", run.times()),
            (
                "weighted_norm",
                &run.fields()
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        let m_t = mu(run.times()[i], &wp);
                        weighted_norm(f, m_t * m_t).unwrap_or(f64::NAN)
                    })
                    .collect::<Vec<_>>(),
            ),
        ]),
    );
    Ok(())
}
