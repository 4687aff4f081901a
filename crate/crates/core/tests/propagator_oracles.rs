//! Propagator oracles: quadrature of the Fourier integral for the free flow,
//! heat-kernel convolution for the dissipative flow, unitarity/contraction
//! invariants, Strang order measurement, and the Duhamel cross-checks.

use std::sync::Arc;

use ndarray::array;

use hardy_core::grid::{Field, Grid, C64};
use hardy_core::operator::{GeneratorSpec, PotentialSpec};
use hardy_core::potentials::PotentialForm;
use hardy_core::propagator::{
    duhamel_flow, free_flow, regularized_flow, regularized_identity_residual, split_step_flow,
    EvolutionParams,
};

fn grid512() -> Arc<Grid> {
    Grid::new(1, 16.0, 512).unwrap()
}

/// Potential-coupled Schrödinger runs scatter faint tails; the wider box
/// keeps them below the 1e-12 containment threshold through t = 1.
fn grid512_wide() -> Arc<Grid> {
    Grid::new(1, 20.0, 512).unwrap()
}

fn grid256_wide() -> Arc<Grid> {
    Grid::new(1, 20.0, 256).unwrap()
}

fn gaussian(grid: Arc<Grid>, gamma: f64) -> Field {
    Field::from_scalar_fn(grid, move |x| C64::new((-gamma * x[0] * x[0]).exp(), 0.0))
}

fn hermitian_gen2() -> GeneratorSpec {
    GeneratorSpec::new(array![
        [C64::new(0.3, 0.0), C64::new(0.1, 0.2)],
        [C64::new(0.1, -0.2), C64::new(-0.4, 0.0)]
    ])
    .unwrap()
}

/// Quadrature oracle for the free Schrödinger evolution of e^{−x²}:
/// u(x,t) = (1/2π) ∫ √π e^{−ξ²/4} e^{−iξ²t} e^{iξx} dξ.
fn free_gaussian_oracle(x: f64, t: f64) -> C64 {
    let n = 40000;
    let (a, b) = (-60.0, 60.0);
    let h = (b - a) / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=n {
        let xi = a + j as f64 * h;
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        let fhat = std::f64::consts::PI.sqrt() * (-xi * xi / 4.0).exp();
        acc += w * fhat * C64::from_polar(1.0, -xi * xi * t + xi * x);
    }
    acc * h / (2.0 * std::f64::consts::PI)
}

#[test]
fn free_flow_matches_fourier_quadrature() {
    let grid = grid512();
    let f = gaussian(grid.clone(), 1.0);
    let gen = GeneratorSpec::zero(1);
    let t = 0.5;
    let u = free_flow(&f, &gen, t, (0.0, 1.0)).unwrap();
    // Oracle self-check against the closed form (1+4it)^{−1/2} e^{−x²/(1+4it)}.
    let z = C64::new(1.0, 4.0 * t);
    let closed = |x: f64| (-C64::new(x * x, 0.0) / z).exp() / z.sqrt();
    let mut max_err = 0.0f64;
    for &node in &[0usize, 100, 256, 300, 400] {
        let x = grid.axis_coords()[node];
        let oracle = free_gaussian_oracle(x, t);
        assert!(
            (oracle - closed(x)).norm() < 1e-12,
            "oracle self-check at x={x}"
        );
        max_err = max_err.max((u.values()[(node, 0)] - oracle).norm());
    }
    assert!(
        max_err < 1e-8,
        "free flow vs quadrature oracle: {max_err:.3e}"
    );
}

#[test]
fn free_flow_identity_isometry_and_reversal() {
    let grid = grid512();
    let gen = hermitian_gen2();
    let f = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0]).exp(), 0.0);
        fib[1] = C64::new(0.0, 0.5 * (-x[0] * x[0] / 2.0).exp());
    });
    // t = 0 is the identity.
    let u0 = free_flow(&f, &gen, 0.0, (0.0, 1.0)).unwrap();
    assert_eq!(f.sub(&u0).unwrap().norm(), 0.0);
    // Unitary per mode for a = 0, Hermitian A.
    let u = free_flow(&f, &gen, 0.8, (0.0, 1.0)).unwrap();
    assert!((u.norm() - f.norm()).abs() <= 1e-12 * f.norm());
    // Reversible for a = 0.
    let back = free_flow(&u, &gen, -0.8, (0.0, 1.0)).unwrap();
    assert!(back.sub(&f).unwrap().norm() <= 1e-11 * f.norm());
    // Dissipative backward time is rejected.
    assert!(free_flow(&f, &gen, -0.1, (1.0, 0.0)).is_err());
}

#[test]
fn split_step_free_agrees_with_exact_flow() {
    let grid = grid512();
    let gen = hermitian_gen2();
    let pot = PotentialSpec::zero(2);
    let u0 = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0] / 4.0).exp(), 0.0);
        fib[1] = C64::new(0.3 * (-x[0] * x[0] / 3.0).exp(), 0.0);
    });
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 1000).unwrap();
    let traj = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
    let exact = free_flow(&u0, &gen, 1.0, (0.0, 1.0)).unwrap();
    let err = traj.last().sub(&exact).unwrap().norm() / exact.norm();
    assert!(err <= 1e-6, "free split-step error {err:.3e}");
}

#[test]
fn unitarity_norm_drift_over_thousand_steps() {
    let grid = grid512_wide();
    let gen = hermitian_gen2();
    let pot = PotentialForm::GaussianWell {
        depth: 1.0,
        width: 2.0,
        coupling: 0.3,
    }
    .build(2)
    .unwrap();
    let u0 = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0] / 4.0).exp(), 0.0);
        fib[1] = C64::new(0.0, 0.4 * (-x[0] * x[0] / 5.0).exp());
    });
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 1000)
        .unwrap()
        .with_record_every(100)
        .unwrap();
    let traj = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
    let n0 = u0.norm();
    for f in traj.fields() {
        assert!(
            (f.norm() - n0).abs() <= 1e-9 * n0,
            "drift {:.3e}",
            (f.norm() - n0).abs() / n0
        );
    }
}

#[test]
fn parabolic_contraction_norms_non_increasing() {
    let grid = grid512();
    // A and V both Hermitian negative semidefinite.
    let gen = GeneratorSpec::new(array![
        [C64::new(-0.5, 0.0), C64::new(0.1, 0.0)],
        [C64::new(0.1, 0.0), C64::new(-0.4, 0.0)]
    ])
    .unwrap();
    let pot = PotentialForm::GaussianWell {
        depth: 0.8,
        width: 2.0,
        coupling: 0.3,
    }
    .build(2)
    .unwrap();
    let u0 = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0] / 4.0).exp(), 0.0);
        fib[1] = C64::new(0.2 * (-x[0] * x[0] / 4.0).exp(), 0.0);
    });
    let params = EvolutionParams::new(1.0, 0.0, 1.0, 1000)
        .unwrap()
        .with_record_every(50)
        .unwrap();
    let traj = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
    let norms: Vec<f64> = traj.fields().iter().map(|f| f.norm()).collect();
    for w in norms.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-10 * norms[0],
            "norms increased: {} -> {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn heat_flow_matches_kernel_formula() {
    // a = 1, b = 0, A = 0, V = 0, u0 = e^{−x²}: at time t the solution is
    // (1+4t)^{−1/2} e^{−x²/(1+4t)}.
    let grid = grid512();
    let gen = GeneratorSpec::zero(1);
    let pot = PotentialSpec::zero(1);
    let u0 = gaussian(grid.clone(), 1.0);
    let params = EvolutionParams::new(1.0, 0.0, 0.5, 500).unwrap();
    let traj = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
    let t: f64 = 0.5;
    let exact = Field::from_scalar_fn(grid, move |x| {
        C64::new(
            (1.0 + 4.0 * t).powf(-0.5) * (-x[0] * x[0] / (1.0 + 4.0 * t)).exp(),
            0.0,
        )
    });
    let err = traj.last().sub(&exact).unwrap().norm() / exact.norm();
    assert!(err <= 1e-6, "heat kernel error {err:.3e}");
}

#[test]
fn strang_order_two_with_potential() {
    // With V = 0 the splitting is exact, so the order measurement runs with a
    // static Hermitian well against a fine-dt reference.
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let gen = hermitian_gen2();
    let pot = PotentialForm::GaussianWell {
        depth: 1.0,
        width: 2.0,
        coupling: 0.3,
    }
    .build(2)
    .unwrap();
    let u0 = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0] / 4.0).exp(), 0.0);
        fib[1] = C64::new(0.0, 0.5 * (-x[0] * x[0] / 3.0).exp());
    });
    let reference = {
        let params = EvolutionParams::new(0.0, 1.0, 0.5, 4000).unwrap();
        split_step_flow(&u0, &gen, &pot, None, &params)
            .unwrap()
            .last()
            .clone()
    };
    let mut errors = Vec::new();
    for steps in [125usize, 250, 500] {
        let params = EvolutionParams::new(0.0, 1.0, 0.5, steps).unwrap();
        let traj = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
        errors.push(traj.last().sub(&reference).unwrap().norm() / reference.norm());
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(
            (1.8..=2.2).contains(&order),
            "measured order {order:.3}, errors {errors:?}"
        );
    }
}

#[test]
fn blowup_and_containment_guards() {
    let grid = grid512();
    let gen = GeneratorSpec::zero(1);
    let pot = PotentialSpec::zero(1);
    // Wide data violates containment at t = 0.
    let wide = gaussian(grid.clone(), 1.0 / 64.0);
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 10).unwrap();
    assert!(split_step_flow(&wide, &gen, &pot, None, &params).is_err());

    // A strong positive Hermitian potential under heat flow grows without
    // bound; the blowup guard rejects the run long before overflow.
    let grow = PotentialSpec::new(
        1,
        Some(Arc::new(|x: &[f64]| {
            ndarray::Array2::from_elem((1, 1), C64::new(40.0 * (-x[0] * x[0] / 9.0).exp(), 0.0))
        })),
        None,
        true,
        true,
        "pump",
    );
    let u0 = gaussian(grid, 1.0);
    let params = EvolutionParams::new(1.0, 0.0, 1.0, 800)
        .unwrap()
        .with_record_every(80)
        .unwrap();
    let res = split_step_flow(&u0, &gen, &grow, None, &params);
    assert!(matches!(res, Err(hardy_core::Error::Blowup(_))), "{res:?}");
}

#[test]
fn duhamel_reduces_to_semigroup_without_v2() {
    let grid = grid256_wide();
    let gen = hermitian_gen2();
    let pot = PotentialForm::GaussianWell {
        depth: 0.6,
        width: 2.0,
        coupling: 0.2,
    }
    .build(2)
    .unwrap();
    let u0 = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0] / 4.0).exp(), 0.0);
        fib[1] = C64::new(0.1 * (-x[0] * x[0] / 4.0).exp(), 0.0);
    });
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 500)
        .unwrap()
        .with_record_every(100)
        .unwrap();
    let duh = duhamel_flow(&u0, &gen, &pot, &params).unwrap();
    let split = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
    for (a, b) in duh.fields().iter().zip(split.fields()) {
        let err = a.sub(b).unwrap().norm() / b.norm().max(1e-300);
        assert!(err <= 1e-8, "V2-free Duhamel differs: {err:.3e}");
    }
}

#[test]
fn duhamel_first_correction_scales_linearly() {
    let grid = grid256_wide();
    let gen = GeneratorSpec::zero(1);
    let u0 = gaussian(grid, 0.25);
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 400).unwrap();
    let correction = |strength: f64| -> f64 {
        let pot = PotentialForm::ModulatedGaussian {
            strength,
            width: 1.5,
            omega: 2.0,
            depth_mod: 0.5,
            coupling: 0.0,
        }
        .build(1)
        .unwrap();
        let duh = duhamel_flow(&u0, &gen, &pot, &params).unwrap();
        let free = free_flow(&u0, &gen, 1.0, (0.0, 1.0)).unwrap();
        duh.last().sub(&free).unwrap().norm()
    };
    let c1 = correction(0.02);
    let c2 = correction(0.01);
    let ratio = c1 / c2;
    assert!(
        (ratio - 2.0).abs() <= 0.1,
        "correction ratio {ratio:.4}, expected 2 within 5%"
    );
}

#[test]
fn duhamel_cross_validates_split_step() {
    let grid = grid256_wide();
    let gen = hermitian_gen2();
    let pot = PotentialForm::WellPlusModulated {
        depth: 0.6,
        well_width: 2.0,
        strength: 0.3,
        mod_width: 1.5,
        omega: 2.0,
        depth_mod: 0.5,
        coupling: 0.2,
    }
    .build(2)
    .unwrap();
    let u0 = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0] / 4.0).exp(), 0.0);
        fib[1] = C64::new(0.0, 0.3 * (-x[0] * x[0] / 4.0).exp());
    });
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 1000).unwrap();
    let duh = duhamel_flow(&u0, &gen, &pot, &params).unwrap();
    let split = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
    let err = duh.last().sub(split.last()).unwrap().norm() / split.last().norm();
    assert!(err <= 1e-5, "cross-scheme error {err:.3e}");
}

#[test]
fn regularized_flow_identity_and_smoothing() {
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let gen = GeneratorSpec::zero(1);
    let pot = PotentialSpec::zero(1);
    let u0 = gaussian(grid.clone(), 0.25);
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 200)
        .unwrap()
        .with_record_every(50)
        .unwrap();
    let traj = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();

    // ε = 0 is the identity on the trajectory.
    let same = regularized_flow(&traj, &gen, &pot, 0.0, 1e-3).unwrap();
    for (a, b) in same.fields().iter().zip(traj.fields()) {
        assert_eq!(a.sub(b).unwrap().norm(), 0.0);
    }

    // ε > 0, V₁ = 0, A = 0: every mode is damped by exactly e^{−εt|ξ|²}.
    let eps = 0.1;
    let reg = regularized_flow(&traj, &gen, &pot, eps, 1e-3).unwrap();
    let i = 2; // t = 0.5
    let t = traj.times()[i];
    let before = traj.field(i).dft_forward();
    let after = reg.field(i).dft_forward();
    let freqs = traj.grid().axis_freqs().to_vec();
    let scale = before.max_fiber_norm();
    for &k in &[1usize, 5, 20, 40] {
        let expect = before.values()[(k, 0)] * (-eps * t * freqs[k] * freqs[k]).exp();
        let got = after.values()[(k, 0)];
        // Absolute FFT rounding noise dominates the tiny high modes.
        assert!(
            (got - expect).norm() <= 1e-12 * scale,
            "mode {k} damping mismatch: {:.3e}",
            (got - expect).norm() / scale
        );
    }
}

#[test]
fn manufactured_source_drives_exact_solution() {
    // u(x,t) = e^{iωt}ψ with ψ = e^{−x²/3} solves ∂ₜu = i[Δu + F] for the
    // closed-form source F = (ω + 2/3 − 4x²/9)u; the split-step flow with
    // that source must track u to O(dt²).
    let grid = Grid::new(1, 32.0, 512).unwrap();
    let gen = GeneratorSpec::zero(1);
    let pot = PotentialSpec::zero(1);
    let omega = 1.5;
    let psi = |x: f64| (-x * x / 3.0).exp();
    let u0 = Field::from_scalar_fn(grid.clone(), move |x| C64::new(psi(x[0]), 0.0));
    let source = move |x: &[f64], t: f64, out: &mut [C64]| {
        let lap_coeff = 4.0 * x[0] * x[0] / 9.0 - 2.0 / 3.0; // Δψ/ψ
        out[0] = C64::from_polar(psi(x[0]), omega * t) * (omega - lap_coeff);
    };
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 1000).unwrap();
    let traj = split_step_flow(&u0, &gen, &pot, Some(&source), &params).unwrap();
    let exact = u0.scaled(C64::from_polar(1.0, omega));
    let err = traj.last().sub(&exact).unwrap().norm() / exact.norm();
    assert!(err <= 1e-5, "manufactured-source error {err:.3e}");

    // The Appell transform of the sourced solution solves the transformed
    // equation with the transformed source.
    let fine = EvolutionParams::new(0.0, 1.0, 1.0, 1024)
        .unwrap()
        .with_record_every(2)
        .unwrap();
    let u = split_step_flow(&u0, &gen, &pot, Some(&source), &fine).unwrap();
    let p = hardy_core::appell::AppellParams::new(1.0, 2.0, (0.0, 1.0), 0.0).unwrap();
    let res = hardy_core::appell::appell_solution_residual(
        &u,
        &p,
        &gen,
        &pot,
        Some(Arc::new(source)),
        128,
    )
    .unwrap();
    assert!(res <= 1e-4, "Appell residual with source {res:.3e}");
}

#[test]
fn heat_flow_2d_matches_kernel_formula() {
    // 2D heat evolution of e^{−r²}: (1+4t)^{−1} e^{−r²/(1+4t)}. The box is
    // sized so the spread solution stays contained through t = 0.5.
    let grid = Grid::new(2, 12.0, 64).unwrap();
    let gen = GeneratorSpec::zero(1);
    let pot = PotentialSpec::zero(1);
    let u0 = Field::from_scalar_fn(grid.clone(), |x| {
        C64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
    });
    let params = EvolutionParams::new(1.0, 0.0, 0.5, 100).unwrap();
    let traj = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
    let t: f64 = 0.5;
    let exact = Field::from_scalar_fn(grid, move |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        C64::new(
            (1.0 + 4.0 * t).powi(-1) * (-r2 / (1.0 + 4.0 * t)).exp(),
            0.0,
        )
    });
    let err = traj.last().sub(&exact).unwrap().norm() / exact.norm();
    assert!(err <= 1e-6, "2D heat kernel error {err:.3e}");

    // And the 2D Schrödinger flow stays unitary.
    let u1 = free_flow(&u0, &GeneratorSpec::zero(1), 0.7, (0.0, 1.0)).unwrap();
    assert!((u1.norm() - u0.norm()).abs() <= 1e-12 * u0.norm());
}

#[test]
fn duhamel_rejects_non_contractive_iteration() {
    // A very strong V₂ makes the Picard iterates grow for ~30 sweeps; the
    // 50-iteration budget reports no-convergence instead of looping on.
    let grid = Grid::new(1, 16.0, 128).unwrap();
    let gen = GeneratorSpec::zero(1);
    let pot = PotentialForm::ModulatedGaussian {
        strength: 30.0,
        width: 4.0,
        omega: 1.0,
        depth_mod: 0.0,
        coupling: 0.0,
    }
    .build(1)
    .unwrap();
    let u0 = gaussian(grid, 0.25);
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 200).unwrap();
    let res = duhamel_flow(&u0, &gen, &pot, &params);
    assert!(
        matches!(res, Err(hardy_core::Error::NoConvergence(50))),
        "expected no-convergence, got {res:?}"
    );
}

#[test]
fn scheme_dispatcher() {
    use hardy_core::propagator::{evolve, Scheme};
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let gen = hermitian_gen2();
    let u0 = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0] / 4.0).exp(), 0.0);
        fib[1] = C64::new(0.2 * (-x[0] * x[0] / 4.0).exp(), 0.0);
    });
    let zero = PotentialSpec::zero(2);
    let params = EvolutionParams::new(0.0, 1.0, 0.5, 100)
        .unwrap()
        .with_record_every(50)
        .unwrap()
        .with_scheme(Scheme::ExactFree);
    let exact = evolve(&u0, &gen, &zero, &params).unwrap();
    let split = evolve(
        &u0,
        &gen,
        &zero,
        &params.clone().with_scheme(Scheme::StrangSplit),
    )
    .unwrap();
    assert_eq!(exact.len(), split.len());
    let err = exact.last().sub(split.last()).unwrap().norm() / exact.last().norm();
    assert!(err <= 1e-6);
    // Exact-free refuses a nonzero potential.
    let well = PotentialForm::GaussianWell {
        depth: 0.5,
        width: 2.0,
        coupling: 0.2,
    }
    .build(2)
    .unwrap();
    assert!(evolve(&u0, &gen, &well, &params).is_err());
}

#[test]
fn regularized_parameter_bookkeeping() {
    use hardy_core::propagator::RegularizedFlowParams;
    let p = RegularizedFlowParams::new(0.05, 1.0, 2.0, 0.5).unwrap();
    assert_eq!(p.alpha_eps, 1.1);
    assert_eq!(p.beta_eps, 2.1);
    assert!((p.gamma_eps - 0.5 / 1.1).abs() < 1e-15);
    assert!(RegularizedFlowParams::new(1.5, 1.0, 2.0, 0.5).is_err());
}

#[test]
fn regularization_identity_residual_small() {
    // u from a Schrödinger run with V₁ only; u_ε via the smoothed Duhamel
    // construction must match e^{εtW}u(t).
    let grid = grid256_wide();
    let gen = hermitian_gen2();
    let pot = PotentialForm::GaussianWell {
        depth: 0.5,
        width: 2.0,
        coupling: 0.2,
    }
    .build(2)
    .unwrap();
    let u0 = Field::from_fn(grid, 2, |x, fib| {
        fib[0] = C64::new((-x[0] * x[0] / 4.0).exp(), 0.0);
        fib[1] = C64::new(0.2 * (-x[0] * x[0] / 4.0).exp(), 0.0);
    });
    let params = EvolutionParams::new(0.0, 1.0, 1.0, 2000)
        .unwrap()
        .with_record_every(500)
        .unwrap();
    let traj = split_step_flow(&u0, &gen, &pot, None, &params).unwrap();
    for eps in [0.01, 0.1] {
        let residuals = regularized_identity_residual(&traj, &gen, &pot, eps, 2.5e-4).unwrap();
        for (t, r) in &residuals[1..] {
            assert!(*r <= 1e-6, "identity residual {r:.3e} at t={t}, eps={eps}");
        }
    }
}
