//! Carleman weights and inequality harnesses for the Schrödinger and
//! parabolic cases, plus the cutoff constructions used in the uniqueness
//! arguments.
//!
//! The weights, with drift along the first coordinate axis e₁,
//!
//!   ϰ(x,t) = μ|x + Rt(1−t)e₁|² − R²t(1−t)/(8μ)
//!   σ(ε,t) = (1+ε)R²t(1−t)/(16μ)
//!   χ(t)   = R²t(1−t)(1−2t)/6
//!
//! give, for every smooth υ compactly supported in R^n × (0,1),
//!
//!   R√(ε/8μ)‖e^{ϰ−σ}υ‖ ≤ ‖e^{ϰ−σ}(∂ₜ − i(Δ+A))υ‖           (Schrödinger)
//!   R√(ε/8μ)‖e^{ϰ−σ+χ}υ‖ ≤ ‖e^{ϰ−σ+χ}(∂ₜ − Δ − A)υ‖       (parabolic)
//!
//! with space-time L² norms. The harness evaluates both sides by quadrature
//! after shifting the weight exponent by its maximum over the test-field
//! support: the ratio is invariant under that shift and the shifted weight
//! stays representable in double precision.
//!
//! σ carries the R² factor: the printed form without it does not reproduce
//! the (1+ε)R²/8μ term of the commutator identity. The printed reading stays
//! available behind `literal_sigma`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{fd4_time_derivative, Domain, Field, Grid, Trajectory, C64};
use crate::operator::GeneratorSpec;

/// Carleman weight parameters: μ (the weight strength, distinct from the
/// interpolation function μ(t)), ε, and the drift scale R.
#[derive(Clone, Copy, Debug)]
pub struct CarlemanParams {
    pub mu_c: f64,
    pub epsilon: f64,
    pub big_r: f64,
    /// Use the printed σ without the R² factor.
    pub literal_sigma: bool,
}

impl CarlemanParams {
    /// The drift direction e₁ is the first coordinate axis of the grid.
    pub const DRIFT_AXIS: usize = 0;

    pub fn new(mu_c: f64, epsilon: f64, big_r: f64) -> Result<CarlemanParams> {
        if !(mu_c > 0.0 && epsilon > 0.0 && big_r > 0.0) {
            return Err(Error::InvalidParams(
                "Carleman parameters must be positive".into(),
            ));
        }
        Ok(CarlemanParams {
            mu_c,
            epsilon,
            big_r,
            literal_sigma: false,
        })
    }

    /// Admissible μ window for a decay exponent γ:
    /// (1+ε)^{3/2} / (2(1−ε)³) < μ ≤ γ/(1+ε).
    pub fn window(epsilon: f64, gamma: f64) -> (f64, f64) {
        let lo = (1.0 + epsilon).powf(1.5) / (2.0 * (1.0 - epsilon).powi(3));
        let hi = gamma / (1.0 + epsilon);
        (lo, hi)
    }

    pub fn admissible_for(&self, gamma: f64) -> bool {
        let (lo, hi) = Self::window(self.epsilon, gamma);
        self.mu_c > lo && self.mu_c <= hi
    }

    /// Drift position Rt(1−t) along e₁.
    pub fn drift(&self, t: f64) -> f64 {
        self.big_r * t * (1.0 - t)
    }
}

/// ϰ(x,t) with the drift applied along the first coordinate axis.
pub fn weight_kappa(x: &[f64], t: f64, p: &CarlemanParams) -> f64 {
    let d = p.drift(t);
    let mut y2 = (x[0] + d) * (x[0] + d);
    for v in x.iter().skip(1) {
        y2 += v * v;
    }
    p.mu_c * y2 - p.big_r * p.big_r * t * (1.0 - t) / (8.0 * p.mu_c)
}

/// σ(ε,t); carries the R² factor unless `literal_sigma` is set.
pub fn weight_sigma(t: f64, p: &CarlemanParams) -> f64 {
    let sfac = if p.literal_sigma {
        1.0
    } else {
        p.big_r * p.big_r
    };
    (1.0 + p.epsilon) * sfac * t * (1.0 - t) / (16.0 * p.mu_c)
}

/// χ(t) = R²t(1−t)(1−2t)/6, odd about t = 1/2.
pub fn weight_chi(t: f64, p: &CarlemanParams) -> f64 {
    p.big_r * p.big_r * t * (1.0 - t) * (1.0 - 2.0 * t) / 6.0
}

/// Ninth-order polynomial smoothstep q(r) = 630 ∫₀ʳ s⁴(1−s)⁴ ds:
/// q(0) = 0, q(1) = 1 with four vanishing derivatives at both ends, so the
/// spectral Laplacian of cutoff products converges fast enough for the
/// residual-identity checks at desk-scale resolution.
fn smoothstep(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if r >= 1.0 {
        1.0
    } else {
        r.powi(5) * (126.0 - 420.0 * r + 540.0 * r * r - 315.0 * r.powi(3) + 70.0 * r.powi(4))
    }
}

fn smoothstep_d1(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        630.0 * r.powi(4) * (1.0 - r).powi(4)
    }
}

fn smoothstep_d2(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        2520.0 * r.powi(3) * (1.0 - r).powi(3) * (1.0 - 2.0 * r)
    }
}

/// Space and time cutoffs of the uniqueness proofs: θ_M = 1 on |x| ≤ M,
/// 0 on |x| > 2M; η_R = 1 on [1/R, 1−1/R], 0 outside (1/2R, 1−1/2R).
/// Profiles are polynomial smoothsteps with explicit derivatives.
#[derive(Clone, Copy, Debug)]
pub struct CutoffSpec {
    pub m_radius: f64,
    pub r_t: f64,
}

impl CutoffSpec {
    pub fn new(m_radius: f64, r_t: f64) -> Result<CutoffSpec> {
        if !(m_radius > 0.0 && r_t > 2.0) {
            return Err(Error::InvalidParams("cutoff needs M > 0 and R > 2".into()));
        }
        Ok(CutoffSpec { m_radius, r_t })
    }

    pub fn theta(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        1.0 - smoothstep((r - self.m_radius) / self.m_radius)
    }

    /// ∇θ_M.
    pub fn grad_theta(&self, x: &[f64], out: &mut [f64]) {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let m = self.m_radius;
        if r <= m || r >= 2.0 * m || r == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let dprof = -smoothstep_d1((r - m) / m) / m;
        for (o, v) in out.iter_mut().zip(x.iter()) {
            *o = dprof * v / r;
        }
    }

    /// Δθ_M (radial Laplacian of the profile).
    pub fn lap_theta(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let m = self.m_radius;
        if r <= m || r >= 2.0 * m || r == 0.0 {
            return 0.0;
        }
        let s = (r - m) / m;
        -smoothstep_d2(s) / (m * m) - (n - 1.0) / r * smoothstep_d1(s) / m
    }

    pub fn eta(&self, t: f64) -> f64 {
        let rt = self.r_t;
        let lo0 = 0.5 / rt;
        let lo1 = 1.0 / rt;
        let rise = smoothstep((t - lo0) / (lo1 - lo0));
        let fall = smoothstep((1.0 - t - lo0) / (lo1 - lo0));
        rise * fall
    }

    pub fn eta_prime(&self, t: f64) -> f64 {
        let rt = self.r_t;
        let lo0 = 0.5 / rt;
        let lo1 = 1.0 / rt;
        let w = lo1 - lo0;
        let rise = smoothstep((t - lo0) / w);
        let fall = smoothstep((1.0 - t - lo0) / w);
        let drise = smoothstep_d1((t - lo0) / w) / w;
        let dfall = -smoothstep_d1((1.0 - t - lo0) / w) / w;
        drise * fall + rise * dfall
    }

    /// Whether (x, t) lies on the plateau where θ = 1 and η = 1.
    pub fn on_plateau(&self, x: &[f64], t: f64) -> bool {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        r <= self.m_radius && t >= 1.0 / self.r_t && t <= 1.0 - 1.0 / self.r_t
    }
}

/// One Carleman inequality evaluation. `ratio` = rhs / (prefactor·lhs) with
/// prefactor R√(ε/8μ); the inequality holds iff ratio ≥ 1.
#[derive(Clone, Copy, Debug)]
pub struct CarlemanRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub prefactor: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

/// Shared harness: weight exponent w(x,t) and operator Pυ per slice.
fn carleman_ratio_impl(
    v: &Trajectory,
    gen: &GeneratorSpec,
    p: &CarlemanParams,
    with_chi: bool,
    schrodinger: bool,
) -> Result<CarlemanRatio> {
    check_compact_support(v)?;
    let grid = v.grid().clone();
    let dim = grid.dim();
    let dt = v.time_step();
    let hq = grid.quad_weight(Domain::Physical);

    let max_val = v
        .fields()
        .iter()
        .map(|f| f.max_fiber_norm())
        .fold(0.0f64, f64::max);
    if max_val == 0.0 {
        return Ok(CarlemanRatio {
            lhs: 0.0,
            rhs: 0.0,
            prefactor: 0.0,
            ratio: 0.0,
            degenerate: true,
        });
    }

    // Normalization shift: the maximum of w + ln‖υ‖ over the field. Dividing
    // both sides by e^{shift} leaves the ratio unchanged and puts the largest
    // weighted value at 1, so the quadrature never overflows; contributions
    // that underflow after the shift are genuinely negligible.
    let mut x = [0.0f64; 3];
    let mut shift = f64::NEG_INFINITY;
    for (i, f) in v.fields().iter().enumerate() {
        let t = v.times()[i];
        for node in 0..grid.node_count() {
            let fv = f.fiber_norm(node);
            if fv > 0.0 {
                grid.node_coords(node, Domain::Physical, &mut x[..dim]);
                let mut w = weight_kappa(&x[..dim], t, p) - weight_sigma(t, p);
                if with_chi {
                    w += weight_chi(t, p);
                }
                shift = shift.max(w + fv.ln());
            }
        }
    }

    // P υ per slice: ∂ₜυ − i(Δ+A)υ or ∂ₜυ − (Δ+A)υ. The first/last two
    // slices vanish identically (compact support), so the interior fd4 range
    // carries the whole integral. Both quadratures run over the exact
    // support of υ: P is local, so the true Pυ vanishes with υ, and the
    // spectral Laplacian's global roundoff residue would otherwise be
    // amplified by the weight far beyond the field (shrinking the right side
    // this way only makes the inequality check stricter).
    let (dtimes, dfields) = fd4_time_derivative(v)?;
    let mut lhs2 = 0.0f64;
    let mut rhs2 = 0.0f64;
    for (j, t) in dtimes.iter().copied().enumerate() {
        let i = j + 2;
        let f = v.field(i);
        let lap = f.spectral_laplacian();
        let af = gen.apply(f)?;
        let mut pf = dfields[j].clone();
        let z = if schrodinger {
            C64::new(0.0, -1.0)
        } else {
            C64::new(-1.0, 0.0)
        };
        pf.add_scaled_in_place(z, &lap)?;
        pf.add_scaled_in_place(z, &af)?;
        for node in 0..grid.node_count() {
            let fv = f.fiber_norm(node);
            if fv == 0.0 {
                continue;
            }
            grid.node_coords(node, Domain::Physical, &mut x[..dim]);
            let mut w = weight_kappa(&x[..dim], t, p) - weight_sigma(t, p);
            if with_chi {
                w += weight_chi(t, p);
            }
            lhs2 += (2.0 * (w - shift) + 2.0 * fv.ln()).exp();
            let pv = pf.fiber_norm(node);
            if pv > 0.0 {
                rhs2 += (2.0 * (w - shift) + 2.0 * pv.ln()).exp();
            }
        }
    }
    lhs2 *= hq * dt;
    rhs2 *= hq * dt;

    let prefactor = p.big_r * (p.epsilon / (8.0 * p.mu_c)).sqrt();
    let lhs = lhs2.sqrt();
    let rhs = rhs2.sqrt();
    Ok(CarlemanRatio {
        lhs,
        rhs,
        prefactor,
        ratio: rhs / (prefactor * lhs),
        degenerate: false,
    })
}

/// The Carleman inequality for the free Schrödinger operator ∂ₜ − i(Δ+A).
pub fn carleman_ratio_schrodinger(
    v: &Trajectory,
    gen: &GeneratorSpec,
    p: &CarlemanParams,
) -> Result<CarlemanRatio> {
    carleman_ratio_impl(v, gen, p, false, true)
}

/// Parabolic counterpart for ∂ₜ − Δ − A with the χ correction in the weight.
pub fn carleman_ratio_parabolic(
    v: &Trajectory,
    gen: &GeneratorSpec,
    p: &CarlemanParams,
) -> Result<CarlemanRatio> {
    carleman_ratio_impl(v, gen, p, true, false)
}

fn check_compact_support(v: &Trajectory) -> Result<()> {
    if v.len() < 33 {
        return Err(Error::InvalidParams(
            "need at least 33 uniform time samples".into(),
        ));
    }
    if !v.is_uniform() {
        return Err(Error::InvalidParams(
            "test field needs a uniform time grid".into(),
        ));
    }
    let max_val = v
        .fields()
        .iter()
        .map(|f| f.max_fiber_norm())
        .fold(0.0f64, f64::max);
    if max_val == 0.0 {
        return Ok(()); // degenerate, handled by the caller
    }
    let nt = v.len();
    for i in [0, 1, nt - 2, nt - 1] {
        if v.field(i).max_fiber_norm() > 1e-12 * max_val {
            return Err(Error::SupportViolation("temporal"));
        }
    }
    for f in v.fields() {
        if f.boundary_ratio() * f.max_fiber_norm() > 1e-12 * max_val {
            return Err(Error::SupportViolation("spatial"));
        }
    }
    Ok(())
}

/// υ = η_R θ_M u and the commutator source of the cutoff identity
///
///   ∂ₜυ − z(Δ + A + V)υ = η'_R θ_M u − z η_R (2∇θ_M·∇u + u Δθ_M)
///
/// for a solution u of ∂ₜu = z(Δ + A + V)u with z = a+ib.
pub fn cutoff_compose(
    u: &Trajectory,
    c: &CutoffSpec,
    coeff: (f64, f64),
) -> Result<(Trajectory, Trajectory)> {
    let grid = u.grid().clone();
    let dim = grid.dim();
    let z = C64::new(coeff.0, coeff.1);
    let mut x = [0.0f64; 3];
    let mut gtheta = [0.0f64; 3];
    let mut cut_fields = Vec::with_capacity(u.len());
    let mut src_fields = Vec::with_capacity(u.len());
    for (i, f) in u.fields().iter().enumerate() {
        let t = u.times()[i];
        let eta = c.eta(t);
        let etap = c.eta_prime(t);
        let grads = f.spectral_gradient();
        let mut cut = f.clone();
        let mut src = Field::zeros(grid.clone(), f.fiber_dim());
        for node in 0..grid.node_count() {
            grid.node_coords(node, Domain::Physical, &mut x[..dim]);
            let th = c.theta(&x[..dim]);
            c.grad_theta(&x[..dim], &mut gtheta[..dim]);
            let lth = c.lap_theta(&x[..dim]);
            for fib in 0..f.fiber_dim() {
                let uv = f.values()[(node, fib)];
                cut.values_mut()[(node, fib)] = eta * th * uv;
                let mut commut = lth * uv;
                for (k, gk) in grads.iter().enumerate() {
                    commut += 2.0 * gtheta[k] * gk.values()[(node, fib)];
                }
                src.values_mut()[(node, fib)] = etap * th * uv - z * eta * commut;
            }
        }
        cut_fields.push(cut);
        src_fields.push(src);
    }
    let digest = format!(
        "cutoff(M={}, R={}) of {}",
        c.m_radius,
        c.r_t,
        u.params_digest()
    );
    let cut = Trajectory::new(u.times().to_vec(), cut_fields, digest.clone())?;
    let src = Trajectory::new(u.times().to_vec(), src_fields, digest)?;
    Ok((cut, src))
}

/// Relative residual of the cutoff identity
///
///   ∂ₜυ − z(Δ + A + V)υ − source = 0,   υ = η_R θ_M u,
///
/// over the interior sample range. The time product rule on the analytic
/// cutoff factor is exact, so ∂ₜυ = η'θu + ηθ∂ₜu with only the smooth
/// solution u differentiated by fd4; the spatial commutator structure is
/// what the residual actually probes.
pub fn cutoff_residual(
    u: &Trajectory,
    c: &CutoffSpec,
    gen: &GeneratorSpec,
    pot: &crate::operator::PotentialSpec,
    coeff: (f64, f64),
) -> Result<f64> {
    let (upsilon, source) = cutoff_compose(u, c, coeff)?;
    let (dtimes, du) = fd4_time_derivative(u)?;
    let grid = u.grid().clone();
    let dim = grid.dim();
    let z = C64::new(coeff.0, coeff.1);
    let mut x = [0.0f64; 3];
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (j, &t) in dtimes.iter().enumerate() {
        let i = j + 2;
        let ups = upsilon.field(i);
        let rhs = crate::operator::equation_rhs(gen, pot, ups, t)?;
        let eta = c.eta(t);
        let etap = c.eta_prime(t);
        let mut res = rhs.scaled(-z);
        res.add_scaled_in_place(C64::new(-1.0, 0.0), source.field(i))?;
        for node in 0..grid.node_count() {
            grid.node_coords(node, Domain::Physical, &mut x[..dim]);
            let th = c.theta(&x[..dim]);
            for fib in 0..u.fiber_dim() {
                let dtu = etap * th * u.field(i).values()[(node, fib)]
                    + eta * th * du[j].values()[(node, fib)];
                res.values_mut()[(node, fib)] += dtu;
            }
        }
        num += res.norm().powi(2);
        den += ups.norm().powi(2);
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

/// Reproducible smooth space-time test field: per fiber a Gaussian envelope
/// (truncated by an exactly compactly supported polynomial mask, so support
/// checks are strict while derivatives stay spectrally clean), a plane-wave
/// phase, and random amplitude mixing.
pub fn random_test_field<R: Rng>(
    grid: std::sync::Arc<Grid>,
    fiber_dim: usize,
    times: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    let dim = grid.dim();
    let l = grid.half_width();
    let xc: Vec<f64> = (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let sx = rng.gen_range(0.6..1.2);
    let kx: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let tc = rng.gen_range(0.42..0.58);
    let st = rng.gen_range(0.035..0.05);
    let amps: Vec<C64> = (0..fiber_dim)
        .map(|_| {
            C64::from_polar(
                rng.gen_range(0.3..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let mask = |s: f64| -> f64 {
        // (1 − s²)³ on |s| < 1: identically zero outside, ≈ 1 where the
        // Gaussian carries mass (the Gaussian is ~e^{-64} at the mask edge).
        if s.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - s * s;
            q * q * q
        }
    };
    let support_x = 8.0 * sx;
    if xc.iter().any(|c| c.abs() + support_x >= l) {
        return Err(Error::SupportViolation("spatial"));
    }
    let mut fields = Vec::with_capacity(times.len());
    for &t in times {
        let gt = (-((t - tc) / st).powi(2)).exp() * mask((t - tc) / (8.0 * st));
        let f = Field::from_fn(grid.clone(), fiber_dim, |x, fib| {
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for k in 0..dim {
                r2 += (x[k] - xc[k]) * (x[k] - xc[k]);
                phase += kx[k] * x[k];
            }
            let env = (-(r2 / (sx * sx))).exp() * mask(r2.sqrt() / support_x) * gt;
            let val = C64::from_polar(env, phase);
            for (o, a) in fib.iter_mut().zip(amps.iter()) {
                *o = a * val;
            }
        });
        fields.push(f);
    }
    Trajectory::new(times.to_vec(), fields, "random-test-field".into())
}
