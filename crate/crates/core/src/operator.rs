//! The abstract operator data: Hermitian generator A, operator potential
//! V = V₁ + V₂, the sesquilinear form Φ(A,V), and the symmetric /
//! skew-symmetric splitting of the conjugated evolution generator.
//!
//! For a real weight exponent w(x,t) and coefficient a+ib the conjugated
//! generator splits as
//!
//!   S = a(Δ + A + |∇w|²) − ib(2∇w·∇ + Δw) + ∂ₜw        (symmetric)
//!   K = ib(Δ + A + |∇w|²) − a(2∇w·∇ + Δw)              (skew-symmetric)
//!
//! and the convexity machinery rests on the sign of S_t + \[S,K\]. Three
//! weight families have closed-form quadratic forms (S_t f + \[S,K\]f, f):
//!
//!   w = γ|x|²:                γ(a²+b²) ∫ 8|∇f|² + 32γ²|x|²‖f‖² dx
//!   Schrödinger Carleman:     32μ³∫|x+Rt(1−t)e₁ − (R/16μ²)e₁|²‖f‖²
//!                              + 8μ‖∇_{x'}f‖² + 8μ‖i∂₁f − R(1/2−t)f‖²
//!                              + [R² + (1+ε)R²]/(8μ)·‖f‖²
//!   parabolic Carleman:       32μ³∫|x+Rt(1−t)e₁ + (4μ(1−2t)−1)R/(16μ²)e₁|²‖f‖²
//!                              + 8μ‖∇f‖² + [R² + (1+ε)R²]/(8μ)·‖f‖²
//!
//! A brute mode re-derives the same number by composing the discrete S and K
//! operators with a finite-difference S_t; the two routes agreeing is the
//! module's correctness oracle.

use std::sync::Arc;

use ndarray::Array2;

use crate::carleman::CarlemanParams;
use crate::error::{Error, Result};
use crate::grid::{Domain, Field, Grid, C64};
use crate::linalg;

/// Hermitian generator on the fiber.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    matrix: Array2<C64>,
}

impl GeneratorSpec {
    /// Accepts matrices Hermitian to 1e-12 in the max-entry norm.
    pub fn new(matrix: Array2<C64>) -> Result<GeneratorSpec> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::ShapeMismatch(
                "generator matrix must be square".into(),
            ));
        }
        let defect = linalg::hermitian_defect(&matrix);
        if defect > 1e-12 {
            return Err(Error::NonHermitian(defect));
        }
        Ok(GeneratorSpec { matrix })
    }

    pub fn zero(fiber_dim: usize) -> GeneratorSpec {
        GeneratorSpec {
            matrix: Array2::zeros((fiber_dim, fiber_dim)),
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    #[inline]
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        linalg::matvec_into(&self.matrix, x, y);
    }

    /// A applied nodewise to a field.
    pub fn apply(&self, v: &Field) -> Result<Field> {
        if v.fiber_dim() != self.fiber_dim() {
            return Err(Error::ShapeMismatch(
                "generator/field fiber mismatch".into(),
            ));
        }
        let mut out = v.clone();
        let mut buf = vec![C64::new(0.0, 0.0); self.fiber_dim()];
        for node in 0..v.grid().node_count() {
            let row = v.values().row(node);
            self.matvec_into(row.as_slice().unwrap(), &mut buf);
            out.values_mut()
                .row_mut(node)
                .as_slice_mut()
                .unwrap()
                .copy_from_slice(&buf);
        }
        Ok(out)
    }
}

type MatrixFn1 = dyn Fn(&[f64]) -> Array2<C64> + Send + Sync;
type MatrixFn2 = dyn Fn(&[f64], f64) -> Array2<C64> + Send + Sync;

/// Operator potential V(x,t) = V₁(x) + V₂(x,t).
#[derive(Clone)]
pub struct PotentialSpec {
    fiber_dim: usize,
    v1: Option<Arc<MatrixFn1>>,
    v2: Option<Arc<MatrixFn2>>,
    hermitian_v1: bool,
    hermitian_v2: bool,
    registry_id: String,
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("fiber_dim", &self.fiber_dim)
            .field("registry_id", &self.registry_id)
            .field("has_v1", &self.v1.is_some())
            .field("has_v2", &self.v2.is_some())
            .finish()
    }
}

impl PotentialSpec {
    pub fn new(
        fiber_dim: usize,
        v1: Option<Arc<MatrixFn1>>,
        v2: Option<Arc<MatrixFn2>>,
        hermitian_v1: bool,
        hermitian_v2: bool,
        registry_id: impl Into<String>,
    ) -> PotentialSpec {
        PotentialSpec {
            fiber_dim,
            v1,
            v2,
            hermitian_v1,
            hermitian_v2,
            registry_id: registry_id.into(),
        }
    }

    pub fn zero(fiber_dim: usize) -> PotentialSpec {
        PotentialSpec::new(fiber_dim, None, None, true, true, "zero")
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn registry_id(&self) -> &str {
        &self.registry_id
    }

    pub fn hermitian_flags(&self) -> (bool, bool) {
        (self.hermitian_v1, self.hermitian_v2)
    }

    pub fn has_v1(&self) -> bool {
        self.v1.is_some()
    }

    pub fn has_v2(&self) -> bool {
        self.v2.is_some()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.v2.is_some()
    }

    pub fn is_zero(&self) -> bool {
        self.v1.is_none() && self.v2.is_none()
    }

    pub fn eval_v1(&self, x: &[f64]) -> Array2<C64> {
        match &self.v1 {
            Some(f) => f(x),
            None => Array2::zeros((self.fiber_dim, self.fiber_dim)),
        }
    }

    pub fn eval_v2(&self, x: &[f64], t: f64) -> Array2<C64> {
        match &self.v2 {
            Some(f) => f(x, t),
            None => Array2::zeros((self.fiber_dim, self.fiber_dim)),
        }
    }

    /// Full potential V₁(x) + V₂(x,t).
    pub fn eval(&self, x: &[f64], t: f64) -> Array2<C64> {
        let mut v = self.eval_v1(x);
        if self.v2.is_some() {
            v += &self.eval_v2(x, t);
        }
        v
    }

    /// Restriction to the time-independent part.
    pub fn v1_only(&self) -> PotentialSpec {
        PotentialSpec {
            fiber_dim: self.fiber_dim,
            v1: self.v1.clone(),
            v2: None,
            hermitian_v1: self.hermitian_v1,
            hermitian_v2: true,
            registry_id: format!("{}#v1", self.registry_id),
        }
    }

    /// Check the Hermitian flags against samples; entries must also be finite.
    pub fn validate_sampled(&self, grid: &Grid, times: &[f64]) -> Result<()> {
        let dim = grid.dim();
        let mut x = [0.0f64; 3];
        let stride = (grid.node_count() / 64).max(1);
        for node in (0..grid.node_count()).step_by(stride) {
            grid.node_coords(node, Domain::Physical, &mut x[..dim]);
            let v1 = self.eval_v1(&x[..dim]);
            if v1.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidParams("V1 sample not finite".into()));
            }
            if self.hermitian_v1 && linalg::hermitian_defect(&v1) > 1e-12 {
                return Err(Error::NonHermitian(linalg::hermitian_defect(&v1)));
            }
            for &t in times {
                let v2 = self.eval_v2(&x[..dim], t);
                if v2.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::InvalidParams("V2 sample not finite".into()));
                }
                if self.hermitian_v2 && linalg::hermitian_defect(&v2) > 1e-12 {
                    return Err(Error::NonHermitian(linalg::hermitian_defect(&v2)));
                }
            }
        }
        Ok(())
    }
}

/// Δf + Af + V(·,t)f, the spatial right-hand side of the evolution equation.
pub fn equation_rhs(gen: &GeneratorSpec, pot: &PotentialSpec, f: &Field, t: f64) -> Result<Field> {
    let mut rhs = f.spectral_laplacian();
    rhs.add_scaled_in_place(C64::new(1.0, 0.0), &gen.apply(f)?)?;
    if !pot.is_zero() {
        let grid = f.grid().clone();
        let dim = grid.dim();
        let m = f.fiber_dim();
        let mut x = [0.0f64; 3];
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for node in 0..grid.node_count() {
            grid.node_coords(node, Domain::Physical, &mut x[..dim]);
            let v = pot.eval(&x[..dim], t);
            linalg::matvec_into(&v, f.values().row(node).as_slice().unwrap(), &mut buf);
            for (fib, b) in buf.iter().enumerate() {
                rhs.values_mut()[(node, fib)] += b;
            }
        }
    }
    Ok(rhs)
}

/// Φ(A,V)υ = a Re((A+V)υ,υ)_H − b Im((A+V)υ,υ)_H, nodewise.
pub fn phi_form(
    gen: &GeneratorSpec,
    pot: &PotentialSpec,
    v: &Field,
    t: f64,
    coeff: (f64, f64),
) -> Result<Vec<f64>> {
    if v.fiber_dim() != gen.fiber_dim() || v.fiber_dim() != pot.fiber_dim() {
        return Err(Error::ShapeMismatch("phi_form fiber mismatch".into()));
    }
    let (a, b) = coeff;
    let grid = v.grid().clone();
    let dim = grid.dim();
    let m = v.fiber_dim();
    let mut x = [0.0f64; 3];
    let mut buf = vec![C64::new(0.0, 0.0); m];
    let mut out = vec![0.0f64; grid.node_count()];
    for (node, o) in out.iter_mut().enumerate() {
        grid.node_coords(node, Domain::Physical, &mut x[..dim]);
        let op = {
            let mut w = pot.eval(&x[..dim], t);
            w += gen.matrix();
            w
        };
        let row = v.values().row(node);
        linalg::matvec_into(&op, row.as_slice().unwrap(), &mut buf);
        let mut ip = C64::new(0.0, 0.0);
        for (p, q) in buf.iter().zip(row.iter()) {
            ip += p * q.conj();
        }
        *o = a * ip.re - b * ip.im;
    }
    Ok(out)
}

/// Weight families with closed-form splitting data.
#[derive(Clone, Debug)]
pub enum WeightKind {
    /// w = γ|x|² (γ taken from the split).
    GaussianQuadratic,
    /// w = ϰ − σ, the Schrödinger Carleman weight (coefficient must be i).
    CarlemanSchrodinger(CarlemanParams),
    /// w = ϰ − σ + χ, the parabolic Carleman weight (coefficient must be 1).
    CarlemanParabolic(CarlemanParams),
}

/// Derivatives of the weight exponent at one (x, t).
#[derive(Clone, Copy, Debug)]
pub struct WeightData {
    pub w: f64,
    pub grad: [f64; 3],
    pub lap: f64,
    pub wt: f64,
}

/// The (a+ib, γ, weight) bundle defining one S/K splitting.
#[derive(Clone, Debug)]
pub struct SkewSplit {
    pub gamma: f64,
    pub coeff: (f64, f64),
    pub kind: WeightKind,
}

impl SkewSplit {
    pub fn gaussian(gamma: f64, coeff: (f64, f64)) -> SkewSplit {
        SkewSplit {
            gamma,
            coeff,
            kind: WeightKind::GaussianQuadratic,
        }
    }

    pub fn carleman_schrodinger(p: CarlemanParams) -> SkewSplit {
        SkewSplit {
            gamma: 1.0,
            coeff: (0.0, 1.0),
            kind: WeightKind::CarlemanSchrodinger(p),
        }
    }

    pub fn carleman_parabolic(p: CarlemanParams) -> SkewSplit {
        SkewSplit {
            gamma: 1.0,
            coeff: (1.0, 0.0),
            kind: WeightKind::CarlemanParabolic(p),
        }
    }

    /// Weight exponent w(x,t).
    pub fn weight_exponent(&self, x: &[f64], t: f64) -> f64 {
        self.weight_data(x, t).w
    }

    pub fn weight_data(&self, x: &[f64], t: f64) -> WeightData {
        let mut d = WeightData {
            w: 0.0,
            grad: [0.0; 3],
            lap: 0.0,
            wt: 0.0,
        };
        let n = x.len();
        match &self.kind {
            WeightKind::GaussianQuadratic => {
                let g = self.gamma;
                let x2: f64 = x.iter().map(|v| v * v).sum();
                d.w = g * x2;
                for k in 0..n {
                    d.grad[k] = 2.0 * g * x[k];
                }
                d.lap = 2.0 * g * n as f64;
                d.wt = 0.0;
            }
            WeightKind::CarlemanSchrodinger(p) | WeightKind::CarlemanParabolic(p) => {
                let mu = p.mu_c;
                let r = p.big_r;
                let drift = r * t * (1.0 - t);
                let drift_dot = r * (1.0 - 2.0 * t);
                let sfac = if p.literal_sigma { 1.0 } else { r * r };
                let y1 = x[0] + drift;
                let mut y2 = y1 * y1;
                for v in x.iter().skip(1) {
                    y2 += v * v;
                }
                d.w = mu * y2
                    - r * r * t * (1.0 - t) / (8.0 * mu)
                    - (1.0 + p.epsilon) * sfac * t * (1.0 - t) / (16.0 * mu);
                d.grad[0] = 2.0 * mu * y1;
                for k in 1..n {
                    d.grad[k] = 2.0 * mu * x[k];
                }
                d.lap = 2.0 * mu * n as f64;
                d.wt = 2.0 * mu * y1 * drift_dot
                    - r * r * (1.0 - 2.0 * t) / (8.0 * mu)
                    - (1.0 + p.epsilon) * sfac * (1.0 - 2.0 * t) / (16.0 * mu);
                if let WeightKind::CarlemanParabolic(_) = self.kind {
                    d.w += r * r * t * (1.0 - t) * (1.0 - 2.0 * t) / 6.0;
                    d.wt += r * r * (1.0 - 6.0 * t + 6.0 * t * t) / 6.0;
                }
            }
        }
        d
    }

    /// (Lv, Gv) with L = Δ + A + |∇w|² and G = 2∇w·∇ + Δw.
    fn apply_lg(&self, gen: &GeneratorSpec, v: &Field, t: f64) -> Result<(Field, Field)> {
        if v.fiber_dim() != gen.fiber_dim() {
            return Err(Error::ShapeMismatch("split/field fiber mismatch".into()));
        }
        let grid = v.grid().clone();
        let dim = grid.dim();
        let lap = v.spectral_laplacian();
        let grads = v.spectral_gradient();
        let av = gen.apply(v)?;
        let mut lv = lap;
        lv.values_mut().zip_mut_with(av.values(), |l, a| *l += a);
        let mut gv = Field::zeros(grid.clone(), v.fiber_dim());
        let mut x = [0.0f64; 3];
        for node in 0..grid.node_count() {
            grid.node_coords(node, Domain::Physical, &mut x[..dim]);
            let wd = self.weight_data(&x[..dim], t);
            let grad_sq: f64 = wd.grad[..dim].iter().map(|g| g * g).sum();
            for fib in 0..v.fiber_dim() {
                let vv = v.values()[(node, fib)];
                lv.values_mut()[(node, fib)] += grad_sq * vv;
                let mut adv = C64::new(0.0, 0.0);
                for (k, gk) in grads.iter().enumerate() {
                    adv += 2.0 * wd.grad[k] * gk.values()[(node, fib)];
                }
                gv.values_mut()[(node, fib)] = adv + wd.lap * vv;
            }
        }
        Ok((lv, gv))
    }

    /// S v at time t.
    pub fn apply_s(&self, gen: &GeneratorSpec, v: &Field, t: f64) -> Result<Field> {
        let (a, b) = self.coeff;
        let (lv, gv) = self.apply_lg(gen, v, t)?;
        let grid = v.grid().clone();
        let dim = grid.dim();
        let mut out = lv.scaled(C64::new(a, 0.0));
        out.add_scaled_in_place(C64::new(0.0, -b), &gv)?;
        let mut x = [0.0f64; 3];
        for node in 0..grid.node_count() {
            grid.node_coords(node, Domain::Physical, &mut x[..dim]);
            let wt = self.weight_data(&x[..dim], t).wt;
            for fib in 0..v.fiber_dim() {
                out.values_mut()[(node, fib)] += wt * v.values()[(node, fib)];
            }
        }
        Ok(out)
    }

    /// K v at time t.
    pub fn apply_k(&self, gen: &GeneratorSpec, v: &Field, t: f64) -> Result<Field> {
        let (a, b) = self.coeff;
        let (lv, gv) = self.apply_lg(gen, v, t)?;
        let mut out = lv.scaled(C64::new(0.0, b));
        out.add_scaled_in_place(C64::new(-a, 0.0), &gv)?;
        Ok(out)
    }

    /// Quadratic form (S_t v + \[S,K\]v, v).
    pub fn commutator_form(
        &self,
        gen: &GeneratorSpec,
        v: &Field,
        t: f64,
        mode: CommutatorMode,
    ) -> Result<f64> {
        match mode {
            CommutatorMode::Brute => self.commutator_brute(gen, v, t),
            CommutatorMode::ClosedForm => self.commutator_closed(v, t),
        }
    }

    fn commutator_brute(&self, gen: &GeneratorSpec, v: &Field, t: f64) -> Result<f64> {
        // 5-point centered stencil; the weight families are polynomial in t of
        // degree <= 4, so this S_t is exact to rounding.
        let delta = 1e-4;
        let mut st = self.apply_s(gen, v, t - 2.0 * delta)?;
        st.add_scaled_in_place(C64::new(-8.0, 0.0), &self.apply_s(gen, v, t - delta)?)?;
        st.add_scaled_in_place(C64::new(8.0, 0.0), &self.apply_s(gen, v, t + delta)?)?;
        st.add_scaled_in_place(C64::new(-1.0, 0.0), &self.apply_s(gen, v, t + 2.0 * delta)?)?;
        let st = st.scaled(C64::new(1.0 / (12.0 * delta), 0.0));

        let kv = self.apply_k(gen, v, t)?;
        let skv = self.apply_s(gen, &kv, t)?;
        let sv = self.apply_s(gen, v, t)?;
        let ksv = self.apply_k(gen, &sv, t)?;

        let mut total = st;
        total.add_scaled_in_place(C64::new(1.0, 0.0), &skv)?;
        total.add_scaled_in_place(C64::new(-1.0, 0.0), &ksv)?;
        Ok(total.inner_product(v)?.re)
    }

    fn commutator_closed(&self, v: &Field, t: f64) -> Result<f64> {
        let grid = v.grid().clone();
        let dim = grid.dim();
        let hq = grid.quad_weight(Domain::Physical);
        let (a, b) = self.coeff;
        let grads = v.spectral_gradient();
        let mut x = [0.0f64; 3];
        match &self.kind {
            WeightKind::GaussianQuadratic => {
                let g = self.gamma;
                let grad_sq: f64 = grads.iter().map(|gk| gk.norm().powi(2)).sum();
                let mut moment = 0.0;
                for node in 0..grid.node_count() {
                    grid.node_coords(node, Domain::Physical, &mut x[..dim]);
                    let x2: f64 = x[..dim].iter().map(|v| v * v).sum();
                    moment += x2 * v.fiber_norm(node).powi(2);
                }
                moment *= hq;
                Ok(g * (a * a + b * b) * (8.0 * grad_sq + 32.0 * g * g * moment))
            }
            WeightKind::CarlemanSchrodinger(p) => {
                if (a, b) != (0.0, 1.0) {
                    return Err(Error::UnsupportedWeightKind(
                        "Schrödinger Carleman closed form needs coefficient i",
                    ));
                }
                let mu = p.mu_c;
                let r = p.big_r;
                let sfac = if p.literal_sigma { 1.0 } else { r * r };
                let drift = r * t * (1.0 - t);
                let shift = drift - r / (16.0 * mu * mu);
                let mut moment = 0.0;
                let mut cross = 0.0; // ‖i∂₁v − R(1/2−t)v‖²
                let c_half = r * (0.5 - t);
                for node in 0..grid.node_count() {
                    grid.node_coords(node, Domain::Physical, &mut x[..dim]);
                    let mut y2 = (x[0] + shift) * (x[0] + shift);
                    for xv in x[1..dim].iter() {
                        y2 += xv * xv;
                    }
                    moment += y2 * v.fiber_norm(node).powi(2);
                    for fib in 0..v.fiber_dim() {
                        let term = C64::new(0.0, 1.0) * grads[0].values()[(node, fib)]
                            - c_half * v.values()[(node, fib)];
                        cross += term.norm_sqr();
                    }
                }
                moment *= hq;
                cross *= hq;
                let perp: f64 = grads.iter().skip(1).map(|gk| gk.norm().powi(2)).sum();
                let c_const = r * r / (8.0 * mu) + (1.0 + p.epsilon) * sfac / (8.0 * mu);
                Ok(32.0 * mu.powi(3) * moment
                    + 8.0 * mu * perp
                    + 8.0 * mu * cross
                    + c_const * v.norm().powi(2))
            }
            WeightKind::CarlemanParabolic(p) => {
                if (a, b) != (1.0, 0.0) {
                    return Err(Error::UnsupportedWeightKind(
                        "parabolic Carleman closed form needs coefficient 1",
                    ));
                }
                let mu = p.mu_c;
                let r = p.big_r;
                let sfac = if p.literal_sigma { 1.0 } else { r * r };
                let drift = r * t * (1.0 - t);
                let shift = drift + (4.0 * mu * (1.0 - 2.0 * t) - 1.0) * r / (16.0 * mu * mu);
                let mut moment = 0.0;
                for node in 0..grid.node_count() {
                    grid.node_coords(node, Domain::Physical, &mut x[..dim]);
                    let mut y2 = (x[0] + shift) * (x[0] + shift);
                    for xv in x[1..dim].iter() {
                        y2 += xv * xv;
                    }
                    moment += y2 * v.fiber_norm(node).powi(2);
                }
                moment *= hq;
                let grad_sq: f64 = grads.iter().map(|gk| gk.norm().powi(2)).sum();
                let c_const = r * r / (8.0 * mu) + (1.0 + p.epsilon) * sfac / (8.0 * mu);
                Ok(32.0 * mu.powi(3) * moment + 8.0 * mu * grad_sq + c_const * v.norm().powi(2))
            }
        }
    }

    /// The commutator lower bound εR²/(8μ)·‖v‖² for the Carleman kinds.
    pub fn carleman_lower_bound(&self, v: &Field) -> Result<f64> {
        match &self.kind {
            WeightKind::CarlemanSchrodinger(p) | WeightKind::CarlemanParabolic(p) => {
                Ok(p.epsilon * p.big_r * p.big_r / (8.0 * p.mu_c) * v.norm().powi(2))
            }
            WeightKind::GaussianQuadratic => Err(Error::UnsupportedWeightKind(
                "lower bound is specific to the Carleman weights",
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutatorMode {
    ClosedForm,
    Brute,
}

/// Measured operator-norm constants of the interpolation estimates: M₁
/// bounds sup_t ‖V(·,t)‖_B, M₂ is the Gaussian-weighted V₂ constant
/// sup_t ‖e^{|x|²μ²(t)}V₂(·,t)‖_B · e^{2 sup_t ‖Re V₂‖_B}. Sampled sups are
/// lower bounds of the true sups.
#[derive(Clone, Copy, Debug)]
pub struct PotentialBounds {
    pub m1: f64,
    pub m2: f64,
    pub weighted_v2_sup: f64,
    pub re_v2_sup: f64,
}

/// Sample the M₁/M₂ constants on the grid nodes and a uniform time lattice.
/// Raises `WeightOverflow` when the weighted sup of V₂ is attained on the
/// outermost node shell (the sampled surrogate for an unbounded weighted
/// norm on a growing domain).
pub fn weighted_potential_bound(
    pot: &PotentialSpec,
    weight: &crate::diagnostics::WeightParams,
    grid: &Grid,
    time_samples: usize,
) -> Result<PotentialBounds> {
    let dim = grid.dim();
    let nt = time_samples.max(2);
    let mut x = [0.0f64; 3];
    let mut m1 = 0.0f64;
    let mut weighted_sup = 0.0f64;
    let mut re_sup = 0.0f64;
    let mut weighted_argmax_boundary = false;
    for it in 0..nt {
        let t = it as f64 / (nt - 1) as f64;
        let mu_t = crate::diagnostics::mu(t, weight);
        let mut t_weighted_sup = 0.0f64;
        let mut t_arg_boundary = false;
        for node in 0..grid.node_count() {
            grid.node_coords(node, Domain::Physical, &mut x[..dim]);
            let x2: f64 = x[..dim].iter().map(|v| v * v).sum();
            let v = pot.eval(&x[..dim], t);
            m1 = m1.max(linalg::spectral_norm(&v));
            if pot.has_v2() {
                let v2 = pot.eval_v2(&x[..dim], t);
                let s2 = linalg::spectral_norm(&v2);
                let wexp = x2 * mu_t * mu_t;
                let wval = if wexp + s2.max(1e-300).ln() > crate::grid::WEIGHT_CAP.ln() {
                    f64::INFINITY
                } else {
                    wexp.exp() * s2
                };
                if wval > t_weighted_sup {
                    t_weighted_sup = wval;
                    t_arg_boundary = is_outer_shell(grid, node);
                }
                let re_part = (&v2 + &linalg::conj_transpose(&v2)).mapv(|z| z * 0.5);
                re_sup = re_sup.max(linalg::spectral_norm(&re_part));
            }
        }
        if t_weighted_sup > weighted_sup {
            weighted_sup = t_weighted_sup;
            weighted_argmax_boundary = t_arg_boundary;
        }
    }
    if pot.has_v2()
        && (weighted_sup.is_infinite() || (weighted_argmax_boundary && weighted_sup > 0.0))
    {
        return Err(Error::WeightOverflow {
            node: 0,
            cap: crate::grid::WEIGHT_CAP,
        });
    }
    let m2 = weighted_sup * (2.0 * re_sup).exp();
    Ok(PotentialBounds {
        m1,
        m2,
        weighted_v2_sup: weighted_sup,
        re_v2_sup: re_sup,
    })
}

fn is_outer_shell(grid: &Grid, node: usize) -> bool {
    let p = grid.points();
    let mut rem = node;
    for _ in 0..grid.dim() {
        let k = rem % p;
        if k == 0 || k == p - 1 {
            return true;
        }
        rem /= p;
    }
    false
}
