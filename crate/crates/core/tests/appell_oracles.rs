//! Appell-transformation oracles: the transformed free flow must solve the
//! transformed equation (residual check), norms must map per the surrogate
//! identity with the ν exponent, and the weighted potential bound must
//! transfer with the β/α factor.

use std::sync::Arc;

use hardy_core::appell::{appell_field, appell_potential, appell_solution_residual, AppellParams};
use hardy_core::diagnostics::weighted_norm;
use hardy_core::grid::{Field, Grid, Trajectory, C64};
use hardy_core::linalg::spectral_norm;
use hardy_core::operator::{GeneratorSpec, PotentialSpec};
use hardy_core::potentials::PotentialForm;
use hardy_core::propagator::{free_flow, split_step_flow, EvolutionParams};

fn source_free_trajectory(
    grid: Arc<Grid>,
    gamma0: f64,
    coeff: (f64, f64),
    samples: usize,
) -> Trajectory {
    let gen = GeneratorSpec::zero(1);
    let u0 = Field::from_scalar_fn(grid, move |x| C64::new((-gamma0 * x[0] * x[0]).exp(), 0.0));
    if coeff == (0.0, 1.0) {
        let times: Vec<f64> = (0..=samples).map(|j| j as f64 / samples as f64).collect();
        let fields: Vec<Field> = times
            .iter()
            .map(|&t| free_flow(&u0, &gen, t, coeff).unwrap())
            .collect();
        Trajectory::new(times, fields, "free".into()).unwrap()
    } else {
        let params = EvolutionParams::new(coeff.0, coeff.1, 1.0, 2 * samples)
            .unwrap()
            .with_record_every(2)
            .unwrap();
        split_step_flow(&u0, &gen, &PotentialSpec::zero(1), None, &params).unwrap()
    }
}

#[test]
fn residual_of_transformed_free_flow() {
    // α = 1, β = 2, a+ib = i: the transformed field solves the transformed
    // equation with discrete residual well under 1e−4.
    let grid = Grid::new(1, 32.0, 1024).unwrap();
    let u = source_free_trajectory(grid, 0.25, (0.0, 1.0), 512);
    let p = AppellParams::new(1.0, 2.0, (0.0, 1.0), 0.0).unwrap();
    let gen = GeneratorSpec::zero(1);
    let pot = PotentialSpec::zero(1);
    let res = appell_solution_residual(&u, &p, &gen, &pot, None, 128).unwrap();
    assert!(res <= 1e-4, "Appell residual {res:.3e}");

    // Corruption probe: 1% multiplicative noise pushes the residual far above
    // the pass threshold.
    let out_times: Vec<f64> = (0..=128).map(|j| j as f64 / 128.0).collect();
    let tilde = appell_field(&u, &p, &out_times).unwrap();
    let mut noisy_fields = Vec::new();
    for (i, f) in tilde.fields().iter().enumerate() {
        let mut g = f.clone();
        let phase = (i as f64 * 0.37).sin();
        for v in g.values_mut().iter_mut() {
            *v *= 1.0 + 0.01 * phase;
        }
        noisy_fields.push(g);
    }
    let noisy = Trajectory::new(out_times.clone(), noisy_fields, "noisy".into()).unwrap();
    let tilde_pot = appell_potential(&pot, &p);
    let res_noisy =
        hardy_core::appell::trajectory_residual(&noisy, &gen, &tilde_pot, None, (0.0, 1.0))
            .unwrap();
    assert!(
        res_noisy > 1e-2,
        "corruption probe residual {res_noisy:.3e}"
    );
}

#[test]
fn identity_branch_residual_matches_source_equation() {
    // α = β: the transform is the identity, so the residual equals the source
    // equation's own residual.
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let u = source_free_trajectory(grid, 0.25, (0.0, 1.0), 128);
    let p = AppellParams::new(1.5, 1.5, (0.0, 1.0), 0.0).unwrap();
    let gen = GeneratorSpec::zero(1);
    let pot = PotentialSpec::zero(1);
    let res_direct =
        hardy_core::appell::trajectory_residual(&u, &gen, &pot, None, (0.0, 1.0)).unwrap();
    let out_times = u.times().to_vec();
    let tilde = appell_field(&u, &p, &out_times).unwrap();
    for (a, b) in tilde.fields().iter().zip(u.fields()) {
        assert!(a.sub(b).unwrap().norm() <= 1e-12 * b.norm().max(1e-300));
    }
    let res_tilde = appell_solution_residual(&u, &p, &gen, &pot, None, 128).unwrap();
    assert!((res_tilde - res_direct).abs() <= 1e-10 + 1e-6 * res_direct);
}

#[test]
fn unweighted_norm_contracts_in_the_dissipative_branch() {
    // a = ε > 0, α < β: ‖ũ(·,t)‖ ≤ ‖u(·,s)‖ (the Re η factor is ≤ 1).
    let grid = Grid::new(1, 32.0, 512).unwrap();
    let u = source_free_trajectory(grid, 0.25, (0.05, 1.0), 256);
    let p = AppellParams::new(1.0, 2.0, (0.05, 1.0), 0.0).unwrap();
    let out_times: Vec<f64> = (0..=16).map(|j| j as f64 / 16.0).collect();
    let tilde = appell_field(&u, &p, &out_times).unwrap();
    for (i, &t) in out_times.iter().enumerate() {
        let s = p.s_of(t);
        // Interpolate ‖u(·,s)‖ from neighbouring snapshots (norms vary slowly).
        let j = ((s / u.time_step()).round() as usize).min(u.len() - 1);
        let norm_u = u.field(j).norm();
        let norm_t = tilde.field(i).norm();
        assert!(
            norm_t <= norm_u * (1.0 + 1e-4),
            "t={t}: {norm_t} vs {norm_u}"
        );
    }
}

#[test]
fn weighted_norm_surrogate_identity() {
    // ‖e^{γ|x|²}ũ(·,t)‖ = ‖e^{ν(t)|y|²}u(·,s)‖ at the endpoints, where the
    // time map is exact: s(0) = 0, s(1) = 1.
    let grid = Grid::new(1, 32.0, 1024).unwrap();
    for coeff in [(0.0, 1.0), (0.05, 1.0)] {
        let u = source_free_trajectory(grid.clone(), 0.25, coeff, 256);
        let gamma = 0.04;
        let p = AppellParams::new(1.0, 2.0, coeff, gamma).unwrap();
        let out_times = vec![0.0, 0.5, 1.0];
        let tilde = appell_field(&u, &p, &out_times).unwrap();
        for (i, t) in [(0usize, 0.0f64), (2, 1.0)].iter() {
            let lhs = weighted_norm(tilde.field(*i), gamma).unwrap();
            let src = if *t == 0.0 { u.field(0) } else { u.last() };
            let rhs = weighted_norm(src, p.nu_exponent(*t)).unwrap();
            let rel = (lhs - rhs).abs() / rhs;
            assert!(
                rel <= 1e-5,
                "surrogate identity defect {rel:.3e} at t={t}, coeff {coeff:?}"
            );
        }
    }
}

#[test]
fn weighted_potential_bound_transfers() {
    // sup_t ‖e^{|x|²μ²(t)}Ṽ(·,t)‖_B ≤ (β/α)·M₁ with M₁ the (1/αβ)-weighted
    // sup of V₁ (the reading that makes the transfer provable).
    let (alpha, beta) = (1.0, 2.0);
    let pot = PotentialForm::GaussianWell {
        depth: 0.8,
        width: 1.2,
        coupling: 0.25,
    }
    .build(2)
    .unwrap();
    let p = AppellParams::new(alpha, beta, (0.0, 1.0), 0.0).unwrap();
    let tilde = appell_potential(&pot, &p);
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let mut m1_weighted = 0.0f64;
    let mut lhs = 0.0f64;
    let mut x = [0.0f64; 1];
    for node in 0..grid.node_count() {
        grid.node_coords(node, hardy_core::Domain::Physical, &mut x);
        let y2 = x[0] * x[0];
        m1_weighted =
            m1_weighted.max((y2 / (alpha * beta)).exp() * spectral_norm(&pot.eval(&x, 0.0)));
    }
    for it in 0..=32 {
        let t = it as f64 / 32.0;
        let mu = p.mu(t);
        for node in 0..grid.node_count() {
            grid.node_coords(node, hardy_core::Domain::Physical, &mut x);
            let w = (x[0] * x[0] * mu * mu).exp();
            lhs = lhs.max(w * spectral_norm(&tilde.eval(&x, t)));
        }
    }
    assert!(
        lhs <= (beta / alpha) * m1_weighted * (1.0 + 1e-6),
        "transfer violated: {lhs} vs {}",
        (beta / alpha) * m1_weighted
    );
    // The bound is attained at t = 0 up to sampling.
    assert!(lhs >= 0.9 * (beta / alpha) * m1_weighted);
}

#[test]
fn out_of_range_interpolation_is_rejected() {
    // A wide source field cannot be sampled at √(β/α)-scaled points without
    // wrapping onto real mass.
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let gen = GeneratorSpec::zero(1);
    let u0 = Field::from_scalar_fn(grid, |x| C64::new((-x[0] * x[0] / 30.0).exp(), 0.0));
    let times: Vec<f64> = (0..=8).map(|j| j as f64 / 8.0).collect();
    let fields: Vec<Field> = times
        .iter()
        .map(|&t| free_flow(&u0, &gen, t, (0.0, 1.0)).unwrap())
        .collect();
    let u = Trajectory::new(times.clone(), fields, "wide".into()).unwrap();
    let p = AppellParams::new(1.0, 2.0, (0.0, 1.0), 0.0).unwrap();
    assert!(matches!(
        appell_field(&u, &p, &times),
        Err(hardy_core::Error::InterpolationOutOfRange { .. })
    ));
}
