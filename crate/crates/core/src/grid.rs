//! Periodic spectral discretization of R^n and the algebra of H-valued fields.
//!
//! R^n is truncated to the box [-L, L)^n with P nodes per axis (P a power of
//! two). Fields take values in a complex m-dimensional fiber (the truncation
//! of the abstract Hilbert space H). The discrete Fourier transform is scaled
//! to approximate the continuous Fourier integral
//!
//!   f̂(ξ) = ∫ f(x) e^{-iξ·x} dx,   f(x) = (2π)^{-n} ∫ f̂(ξ) e^{iξ·x} dξ,
//!
//! so that forward output values are samples of f̂ on the dual grid
//! ξ_k = πk/L. With the quadrature weights h^n (physical) and (2L)^{-n}
//! (frequency) the transform is unitary between the two weighted l² spaces,
//! which makes the discrete Parseval identity exact up to rounding.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Weighted field values above this cap raise `WeightOverflow`.
pub const WEIGHT_CAP: f64 = 1e200;
/// Default boundary/max ratio above which a run is considered to have leaked
/// mass to the box boundary.
pub const CONTAINMENT_TOL: f64 = 1e-12;

/// Which grid a field lives on; fixes node coordinates and the quadrature
/// weight used by `inner_product`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Physical,
    Frequency,
}

/// Periodic uniform grid on [-L, L)^n with spectral frequencies ξ_k = πk/L
/// in the standard DFT ordering (k = 0, 1, ..., P/2-1, -P/2, ..., -1).
pub struct Grid {
    dim: usize,
    half_width: f64,
    points: usize,
    spacing: f64,
    coords: Vec<f64>,
    freqs: Vec<f64>,
    grad_freqs: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("half_width", &self.half_width)
            .field("points", &self.points)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl Grid {
    /// Build a grid; `points` must be a power of two >= 8, `dim` in 1..=3.
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Arc<Grid>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::NonPowerOfTwo(points));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid("half_width must be positive and finite"));
        }
        // 2L/P is exact in binary floating point for P a power of two.
        let spacing = 2.0 * half_width / points as f64;
        let coords = (0..points)
            .map(|j| -half_width + j as f64 * spacing)
            .collect();
        let base = std::f64::consts::PI / half_width;
        let freqs: Vec<f64> = (0..points)
            .map(|k| {
                let k_signed = if k < points / 2 {
                    k as i64
                } else {
                    k as i64 - points as i64
                };
                base * k_signed as f64
            })
            .collect();
        // First-derivative symbol with the unpaired Nyquist mode zeroed; this
        // keeps the discrete gradient exactly skew-adjoint.
        let mut grad_freqs = freqs.clone();
        grad_freqs[points / 2] = 0.0;
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(points);
        let fft_inv = planner.plan_fft_inverse(points);
        Ok(Arc::new(Grid {
            dim,
            half_width,
            points,
            spacing,
            coords,
            freqs,
            grad_freqs,
            fft_fwd,
            fft_inv,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes P^n.
    pub fn node_count(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Physical axis coordinates (same for every axis).
    pub fn axis_coords(&self) -> &[f64] {
        &self.coords
    }

    /// Per-axis frequency list in DFT ordering.
    pub fn axis_freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Quadrature weight per node for the given domain.
    pub fn quad_weight(&self, domain: Domain) -> f64 {
        match domain {
            Domain::Physical => self.spacing.powi(self.dim as i32),
            Domain::Frequency => (2.0 * self.half_width).powi(-(self.dim as i32)),
        }
    }

    /// Decompose a flat node index into per-axis indices (row-major, axis 0
    /// slowest).
    #[inline]
    pub fn node_multi_index(&self, node: usize, out: &mut [usize]) {
        let mut rem = node;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.points;
            rem /= self.points;
        }
    }

    /// Coordinates of a node in the given domain.
    #[inline]
    pub fn node_coords(&self, node: usize, domain: Domain, out: &mut [f64]) {
        let axis = match domain {
            Domain::Physical => &self.coords,
            Domain::Frequency => &self.freqs,
        };
        let mut rem = node;
        for a in (0..self.dim).rev() {
            out[a] = axis[rem % self.points];
            rem /= self.points;
        }
    }

    /// |ξ|² per node, in DFT ordering.
    pub fn xi_squared(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        let mut idx = vec![0usize; self.dim];
        for (node, v) in out.iter_mut().enumerate() {
            self.node_multi_index(node, &mut idx);
            *v = idx.iter().map(|&k| self.freqs[k] * self.freqs[k]).sum();
        }
        out
    }

    /// Whether a node touches the outermost layer on any axis.
    #[inline]
    fn is_boundary_node(&self, node: usize) -> bool {
        let mut rem = node;
        for _ in 0..self.dim {
            let k = rem % self.points;
            if k == 0 || k == self.points - 1 {
                return true;
            }
            rem /= self.points;
        }
        false
    }

    fn same_grid(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.points == other.points && self.half_width == other.half_width
    }
}

/// H-valued grid function: a complex m-vector at each of the P^n nodes.
/// Values are stored row-major over nodes, fiber-major within a node.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    fiber_dim: usize,
    domain: Domain,
    values: Array2<C64>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("fiber_dim", &self.fiber_dim)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Field {
    pub fn zeros(grid: Arc<Grid>, fiber_dim: usize) -> Field {
        assert!(fiber_dim >= 1, "fiber_dim must be >= 1");
        let nodes = grid.node_count();
        Field {
            grid,
            fiber_dim,
            domain: Domain::Physical,
            values: Array2::zeros((nodes, fiber_dim)),
        }
    }

    /// Build a physical-space field from a per-node closure receiving the node
    /// coordinates and writing the fiber vector.
    pub fn from_fn(
        grid: Arc<Grid>,
        fiber_dim: usize,
        mut f: impl FnMut(&[f64], &mut [C64]),
    ) -> Field {
        let mut field = Field::zeros(grid, fiber_dim);
        let mut x = [0.0f64; 3];
        let dim = field.grid.dim();
        for node in 0..field.grid.node_count() {
            field
                .grid
                .node_coords(node, Domain::Physical, &mut x[..dim]);
            let mut row = field.values.row_mut(node);
            f(&x[..dim], row.as_slice_mut().expect("contiguous row"));
        }
        field
    }

    /// Scalar (m = 1) field from a pointwise function.
    pub fn from_scalar_fn(grid: Arc<Grid>, mut f: impl FnMut(&[f64]) -> C64) -> Field {
        Field::from_fn(grid, 1, |x, fiber| fiber[0] = f(x))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &Array2<C64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<C64> {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if !self.grid.same_grid(&other.grid)
            || self.fiber_dim != other.fiber_dim
            || self.domain != other.domain
        {
            return Err(Error::ShapeMismatch(format!(
                "fields differ: grid {:?}/{:?}, fiber {}/{}, domain {:?}/{:?}",
                self.grid, other.grid, self.fiber_dim, other.fiber_dim, self.domain, other.domain
            )));
        }
        Ok(())
    }

    /// Forward transform: values become samples of the Fourier integral
    /// f̂(ξ_k) on the dual grid.
    pub fn dft_forward(&self) -> Field {
        assert_eq!(
            self.domain,
            Domain::Physical,
            "dft_forward expects a physical field"
        );
        let mut out = self.clone();
        fft_all_axes(&mut out, true);
        out.domain = Domain::Frequency;
        out
    }

    /// Inverse transform back to physical space.
    pub fn dft_inverse(&self) -> Field {
        assert_eq!(
            self.domain,
            Domain::Frequency,
            "dft_inverse expects a frequency field"
        );
        let mut out = self.clone();
        fft_all_axes(&mut out, false);
        out.domain = Domain::Physical;
        out
    }

    /// Quadrature inner product h^n Σ ⟨f(x), g(x)⟩_H, conjugate-linear in the
    /// second argument: ⟨f, g⟩ = Σ f_j conj(g_j).
    pub fn inner_product(&self, other: &Field) -> Result<C64> {
        self.check_compatible(other)?;
        let w = self.grid.quad_weight(self.domain);
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc += a * b.conj();
        }
        Ok(acc * w)
    }

    /// Quadrature L² norm.
    pub fn norm(&self) -> f64 {
        let w = self.grid.quad_weight(self.domain);
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        (s * w).sqrt()
    }

    /// Pointwise fiber norm ‖f(x)‖_H at a node.
    #[inline]
    pub fn fiber_norm(&self, node: usize) -> f64 {
        self.values
            .row(node)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest fiber norm over all nodes.
    pub fn max_fiber_norm(&self) -> f64 {
        (0..self.grid.node_count()).fold(0.0f64, |m, n| m.max(self.fiber_norm(n)))
    }

    /// Spectral gradient: one field per axis, computed by multiplying mode k
    /// by iξ_k (Nyquist zeroed).
    pub fn spectral_gradient(&self) -> Vec<Field> {
        assert_eq!(self.domain, Domain::Physical);
        let hat = self.dft_forward();
        let dim = self.grid.dim();
        let mut out = Vec::with_capacity(dim);
        let mut idx = vec![0usize; dim];
        for axis in 0..dim {
            let mut g = hat.clone();
            for node in 0..g.grid.node_count() {
                g.grid.node_multi_index(node, &mut idx);
                let xi = g.grid.grad_freqs[idx[axis]];
                let factor = C64::new(0.0, xi);
                for v in g.values.row_mut(node).iter_mut() {
                    *v *= factor;
                }
            }
            out.push(g.dft_inverse());
        }
        out
    }

    /// Spectral Laplacian (symbol -|ξ|², true Nyquist retained).
    pub fn spectral_laplacian(&self) -> Field {
        assert_eq!(self.domain, Domain::Physical);
        let mut hat = self.dft_forward();
        let xi2 = hat.grid.xi_squared();
        for node in 0..hat.grid.node_count() {
            let factor = -xi2[node];
            for v in hat.values.row_mut(node).iter_mut() {
                *v *= factor;
            }
        }
        hat.dft_inverse()
    }

    /// Multiply every fiber vector by e^{w(x)} where `w` is the exponent.
    /// Raises `WeightOverflow` if any weighted value would exceed 1e200.
    pub fn apply_weight(&self, w: impl Fn(&[f64]) -> f64) -> Result<Field> {
        let mut out = self.clone();
        let dim = self.grid.dim();
        let mut x = [0.0f64; 3];
        let cap_log = WEIGHT_CAP.ln();
        for node in 0..self.grid.node_count() {
            self.grid.node_coords(node, self.domain, &mut x[..dim]);
            let expnt = w(&x[..dim]);
            if !expnt.is_finite() {
                return Err(Error::WeightOverflow {
                    node,
                    cap: WEIGHT_CAP,
                });
            }
            let plain = expnt.exp();
            for v in out.values.row_mut(node).iter_mut() {
                let m = v.norm();
                if m == 0.0 {
                    continue;
                }
                if plain.is_finite() && m * plain <= WEIGHT_CAP {
                    *v *= plain;
                } else {
                    // Evaluate |v| e^w in log space to dodge intermediate
                    // overflow before comparing with the cap.
                    let log_val = expnt + m.ln();
                    if log_val > cap_log {
                        return Err(Error::WeightOverflow {
                            node,
                            cap: WEIGHT_CAP,
                        });
                    }
                    *v = (*v / m) * log_val.exp();
                }
            }
        }
        Ok(out)
    }

    /// max over boundary nodes of ‖f‖_H divided by max over all nodes.
    /// Returns 0 for the zero field.
    pub fn boundary_ratio(&self) -> f64 {
        let mut max_all = 0.0f64;
        let mut max_bdy = 0.0f64;
        for node in 0..self.grid.node_count() {
            let v = self.fiber_norm(node);
            max_all = max_all.max(v);
            if self.grid.is_boundary_node(node) {
                max_bdy = max_bdy.max(v);
            }
        }
        if max_all == 0.0 {
            0.0
        } else {
            max_bdy / max_all
        }
    }

    /// Abort-style containment check: boundary values must stay below
    /// `tol` of the field maximum.
    pub fn containment_check(&self, tol: f64, t: f64) -> Result<()> {
        let ratio = self.boundary_ratio();
        if ratio > tol {
            Err(Error::ContainmentViolation { t, ratio, tol })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.values += &other.values;
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.values -= &other.values;
        Ok(out)
    }

    pub fn scaled(&self, c: C64) -> Field {
        let mut out = self.clone();
        out.values.mapv_inplace(|z| z * c);
        out
    }

    /// self += c · other
    pub fn add_scaled_in_place(&mut self, c: C64, other: &Field) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += c * b;
        }
        Ok(())
    }

    /// CSV serialization: one row per node, interleaved real/imag parts,
    /// fiber-major within the node.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = (0..self.fiber_dim)
            .flat_map(|j| [format!("re{j}"), format!("im{j}")])
            .collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for node in 0..self.grid.node_count() {
            let row: Vec<String> = self
                .values
                .row(node)
                .iter()
                .flat_map(|z| [format!("{:.17e}", z.re), format!("{:.17e}", z.im)])
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// In-place n-dimensional FFT with the continuous-Fourier scaling and the
/// (-1)^{Σk} phase that accounts for the x-origin at -L.
fn fft_all_axes(field: &mut Field, forward: bool) {
    let grid = field.grid.clone();
    let p = grid.points;
    let dim = grid.dim;
    let nodes = grid.node_count();
    let m = field.fiber_dim;
    let plan = if forward {
        grid.fft_fwd.clone()
    } else {
        grid.fft_inv.clone()
    };

    // Phase and scale. Forward: scale h^n applied together with the phase
    // after the raw FFT. Inverse: phase and (2L)^{-n} applied before.
    let scale = if forward {
        grid.spacing.powi(dim as i32)
    } else {
        (2.0 * grid.half_width).powi(-(dim as i32))
    };
    let apply_phase_scale = |field: &mut Field| {
        let mut idx = vec![0usize; dim];
        for node in 0..nodes {
            field.grid.node_multi_index(node, &mut idx);
            let parity: usize = idx.iter().sum();
            let f = if parity % 2 == 0 { scale } else { -scale };
            for v in field.values.row_mut(node).iter_mut() {
                *v *= f;
            }
        }
    };

    if !forward {
        apply_phase_scale(field);
    }

    let mut line = vec![C64::new(0.0, 0.0); p];
    for axis in 0..dim {
        // Row-major layout: stride along `axis` is P^(dim-1-axis).
        let stride = p.pow((dim - 1 - axis) as u32);
        let n_lines = nodes / p;
        for line_idx in 0..n_lines {
            // Base node of this line: enumerate all index combos with the
            // chosen axis fixed at 0.
            let outer = line_idx / stride; // combined index of axes before `axis`
            let inner = line_idx % stride; // combined index of axes after `axis`
            let base = outer * stride * p + inner;
            for fiber in 0..m {
                for (j, l) in line.iter_mut().enumerate() {
                    *l = field.values[(base + j * stride, fiber)];
                }
                plan.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    field.values[(base + j * stride, fiber)] = *l;
                }
            }
        }
    }

    if forward {
        apply_phase_scale(field);
    }
}

/// Time samples of a field: one snapshot per strictly increasing time,
/// starting at t = 0, all sharing one grid and fiber dimension.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<Field>,
    params_digest: String,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<Field>, params_digest: String) -> Result<Trajectory> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::ShapeMismatch("times/fields length mismatch".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParams(
                "trajectory must start at t = 0".into(),
            ));
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParams(
                    "trajectory times must be strictly increasing".into(),
                ));
            }
        }
        let first = &fields[0];
        for f in &fields[1..] {
            first.check_compatible(f)?;
        }
        Ok(Trajectory {
            times,
            fields,
            params_digest,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> &Field {
        &self.fields[i]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.fields[0].grid()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fields[0].fiber_dim()
    }

    pub fn params_digest(&self) -> &str {
        &self.params_digest
    }

    pub fn last(&self) -> &Field {
        self.fields.last().expect("non-empty trajectory")
    }

    /// Whether the time grid is uniform to relative tolerance 1e-9.
    pub fn is_uniform(&self) -> bool {
        if self.times.len() < 2 {
            return true;
        }
        let dt = self.times[1] - self.times[0];
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs())
    }

    pub fn time_step(&self) -> f64 {
        debug_assert!(self.is_uniform());
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }
}

/// Fourth-order central time derivative of a uniformly sampled trajectory,
/// returned on the interior sample range [2, J-2).
pub fn fd4_time_derivative(traj: &Trajectory) -> Result<(Vec<f64>, Vec<Field>)> {
    if !traj.is_uniform() {
        return Err(Error::InvalidParams(
            "fd4 derivative needs a uniform time grid".into(),
        ));
    }
    let j = traj.len();
    if j < 5 {
        return Err(Error::InvalidParams(
            "fd4 derivative needs at least 5 samples".into(),
        ));
    }
    let dt = traj.time_step();
    let mut times = Vec::with_capacity(j - 4);
    let mut fields = Vec::with_capacity(j - 4);
    for i in 2..j - 2 {
        let mut d = traj.field(i - 2).scaled(C64::new(1.0 / (12.0 * dt), 0.0));
        d.add_scaled_in_place(C64::new(-8.0 / (12.0 * dt), 0.0), traj.field(i - 1))?;
        d.add_scaled_in_place(C64::new(8.0 / (12.0 * dt), 0.0), traj.field(i + 1))?;
        d.add_scaled_in_place(C64::new(-1.0 / (12.0 * dt), 0.0), traj.field(i + 2))?;
        times.push(traj.times()[i]);
        fields.push(d);
    }
    Ok((times, fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1d() -> Arc<Grid> {
        Grid::new(1, 16.0, 512).unwrap()
    }

    #[test]
    fn make_grid_spacing() {
        let g = grid1d();
        assert_eq!(g.spacing(), 0.0625);
        assert_eq!(g.spacing() * g.points() as f64, 2.0 * g.half_width());
    }

    #[test]
    fn make_grid_rejects_non_power_of_two() {
        assert!(matches!(
            Grid::new(1, 16.0, 500),
            Err(Error::NonPowerOfTwo(500))
        ));
        assert!(matches!(
            Grid::new(4, 16.0, 512),
            Err(Error::InvalidDimension(4))
        ));
        assert!(matches!(
            Grid::new(1, 16.0, 4),
            Err(Error::NonPowerOfTwo(4))
        ));
    }

    #[test]
    fn grid_2d_frequency_layout() {
        let g = Grid::new(2, 8.0, 64).unwrap();
        assert_eq!(g.node_count(), 4096);
        let max_abs = g.axis_freqs().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert_eq!(max_abs, std::f64::consts::PI / 8.0 * 32.0);
        // Frequencies are negation-closed in the aliased (mod 2π/h) sense:
        // every non-Nyquist mode has a literal partner, and the Nyquist mode
        // is its own negative modulo P.
        for (k, &xi) in g.axis_freqs().iter().enumerate() {
            if k == g.points() / 2 {
                continue;
            }
            assert!(g.axis_freqs().iter().any(|&y| (y + xi).abs() < 1e-12));
        }
    }

    #[test]
    fn constant_field_energy_in_zero_mode() {
        let g = grid1d();
        let c = C64::new(0.7, -0.2);
        let f = Field::from_scalar_fn(g.clone(), |_| c);
        let hat = f.dft_forward();
        let expected = c * (2.0 * g.half_width());
        assert!((hat.values()[(0, 0)] - expected).norm() < 1e-9 * expected.norm());
        for node in 1..g.node_count() {
            assert!(hat.values()[(node, 0)].norm() < 1e-9 * expected.norm());
        }
    }

    #[test]
    fn roundtrip_identity() {
        let g = grid1d();
        let f = Field::from_fn(g, 2, |x, fib| {
            fib[0] = C64::new((-x[0] * x[0] / 3.0).exp(), 0.1 * x[0].sin());
            fib[1] = C64::new(x[0].cos(), (-x[0] * x[0] / 5.0).exp());
        });
        let back = f.dft_forward().dft_inverse();
        let err = f.sub(&back).unwrap().norm() / f.norm();
        assert!(err < 1e-12, "roundtrip error {err}");
    }

    #[test]
    fn parseval_quadrature() {
        let g = grid1d();
        let f = Field::from_scalar_fn(g.clone(), |x| C64::new((-x[0] * x[0]).exp(), 0.0));
        let h = Field::from_scalar_fn(g, |x| C64::new(x[0].sin(), (-x[0] * x[0] / 2.0).exp()));
        let lhs = f.inner_product(&h).unwrap();
        let rhs = f.dft_forward().inner_product(&h.dft_forward()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-10 * f.norm() * h.norm());
    }

    #[test]
    fn gaussian_transform_matches_fourier_integral() {
        // Oracle: direct quadrature of ∫ e^{-x²} e^{-iξx} dx on a fine grid,
        // independent of the FFT path.
        let g = grid1d();
        let f = Field::from_scalar_fn(g.clone(), |x| C64::new((-x[0] * x[0]).exp(), 0.0));
        let hat = f.dft_forward();
        let n_quad = 20000;
        let (a, b) = (-18.0, 18.0);
        let hq = (b - a) / n_quad as f64;
        for &k in &[0usize, 3, 17, 64, 300] {
            let xi = g.axis_freqs()[k];
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..=n_quad {
                let x = a + j as f64 * hq;
                let w = if j == 0 || j == n_quad { 0.5 } else { 1.0 };
                acc += w * C64::new((-x * x).exp(), 0.0) * C64::from_polar(1.0, -xi * x);
            }
            acc *= hq;
            let anal = std::f64::consts::PI.sqrt() * (-xi * xi / 4.0).exp();
            assert!((acc.re - anal).abs() < 1e-12, "oracle self-check");
            assert!((hat.values()[(k, 0)] - acc).norm() < 1e-10, "mode {k}");
        }
    }

    #[test]
    fn inner_product_gaussian_quadrature() {
        let g = grid1d();
        let f = Field::from_scalar_fn(g, |x| C64::new((-x[0] * x[0]).exp(), 0.0));
        let ip = f.inner_product(&f).unwrap();
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        assert!(ip.im.abs() < 1e-14);
        assert!((ip.re - exact).abs() < 1e-10);
        assert!(ip.re >= 0.0);
    }

    #[test]
    fn inner_product_disjoint_fiber_supports() {
        let g = grid1d();
        let f = Field::from_fn(g.clone(), 2, |x, fib| {
            fib[0] = if x[0] < 0.0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            fib[1] = C64::new(0.0, 0.0);
        });
        let h = Field::from_fn(g, 2, |x, fib| {
            fib[0] = C64::new(0.0, 0.0);
            fib[1] = if x[0] >= 0.0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
        });
        assert_eq!(f.inner_product(&h).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn spectral_gradient_band_limited_and_gaussian() {
        let g = grid1d();
        let l = g.half_width();
        let s = Field::from_scalar_fn(g.clone(), |x| {
            C64::new((std::f64::consts::PI * x[0] / l).sin(), 0.0)
        });
        let ds = &s.spectral_gradient()[0];
        let mut max_err = 0.0f64;
        for node in 0..g.node_count() {
            let x = g.axis_coords()[node];
            let exact = (std::f64::consts::PI / l) * (std::f64::consts::PI * x / l).cos();
            max_err = max_err.max((ds.values()[(node, 0)].re - exact).abs());
        }
        assert!(max_err < 1e-10, "sin gradient error {max_err}");

        let f = Field::from_scalar_fn(g.clone(), |x| C64::new((-x[0] * x[0]).exp(), 0.0));
        let df = &f.spectral_gradient()[0];
        let mut max_err = 0.0f64;
        for node in 0..g.node_count() {
            let x = g.axis_coords()[node];
            let exact = -2.0 * x * (-x * x).exp();
            max_err = max_err.max((df.values()[(node, 0)].re - exact).abs());
        }
        assert!(max_err < 1e-8, "gaussian gradient error {max_err}");
    }

    #[test]
    fn constant_gradient_is_zero() {
        let g = grid1d();
        let f = Field::from_scalar_fn(g, |_| C64::new(1.0, -2.0));
        let df = &f.spectral_gradient()[0];
        assert!(df.norm() < 1e-12);
    }

    #[test]
    fn apply_weight_identity_and_overflow() {
        let g = grid1d();
        let f = Field::from_scalar_fn(g.clone(), |x| C64::new((-x[0] * x[0]).exp(), 0.0));
        let w0 = f.apply_weight(|_| 0.0).unwrap();
        assert_eq!(f.sub(&w0).unwrap().norm(), 0.0);
        // γ = 0 Gaussian weight is the identity.
        let wg = f.apply_weight(|x| 0.0 * (x[0] * x[0])).unwrap();
        assert_eq!(f.sub(&wg).unwrap().norm(), 0.0);
        // γ = 1 on a unit Gaussian is exactly representable (e^{x²}e^{-x²} = 1),
        // but on a field supported past |x| ≈ 12 the weighted values pass the
        // 1e200 cap: 2x² at the box edge reaches e^{512}.
        let c = Field::from_scalar_fn(g, |_| C64::new(1.0, 0.0));
        assert!(c.apply_weight(|x| x[0] * x[0]).is_ok());
        let res = c.apply_weight(|x| 2.0 * x[0] * x[0]);
        assert!(matches!(res, Err(Error::WeightOverflow { .. })));
    }

    #[test]
    fn apply_weight_log_space_path() {
        let g = grid1d();
        // Tiny field times huge weight stays representable: e^{-600}·e^{720} = e^{120}.
        let f = Field::from_scalar_fn(g.clone(), |_| C64::new(1e-300, 0.0));
        let w = f.apply_weight(|_| 720.0).unwrap();
        let expected = (720.0 + (1e-300f64).ln()).exp();
        assert!((w.values()[(0, 0)].re - expected).abs() < 1e-9 * expected);
        // And past the cap it errors.
        let res = f.apply_weight(|_| 1200.0);
        assert!(matches!(res, Err(Error::WeightOverflow { .. })));
        let _ = g;
    }

    #[test]
    fn containment_and_boundary_ratio() {
        let g = grid1d();
        let tight = Field::from_scalar_fn(g.clone(), |x| C64::new((-x[0] * x[0]).exp(), 0.0));
        assert!(tight.containment_check(1e-12, 0.0).is_ok());
        let wide = Field::from_scalar_fn(g, |x| C64::new((-x[0] * x[0] / 64.0).exp(), 0.0));
        assert!(matches!(
            wide.containment_check(1e-12, 0.0),
            Err(Error::ContainmentViolation { .. })
        ));
    }

    #[test]
    fn trajectory_invariants() {
        let g = grid1d();
        let f = Field::zeros(g, 1);
        assert!(Trajectory::new(vec![0.0, 0.5], vec![f.clone(), f.clone()], String::new()).is_ok());
        assert!(
            Trajectory::new(vec![0.1, 0.5], vec![f.clone(), f.clone()], String::new()).is_err()
        );
        assert!(Trajectory::new(vec![0.0, 0.0], vec![f.clone(), f], String::new()).is_err());
    }

    #[test]
    fn roundtrip_2d_and_3d() {
        for (dim, l, p) in [(2usize, 8.0, 64), (3usize, 6.0, 32)] {
            let g = Grid::new(dim, l, p).unwrap();
            let f = Field::from_fn(g.clone(), 2, |x, fib| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                fib[0] = C64::new((-r2 / 2.0).exp(), x[0].sin() * 0.1);
                fib[1] = C64::from_polar((-r2 / 3.0).exp(), x[dim - 1]);
            });
            let back = f.dft_forward().dft_inverse();
            let err = f.sub(&back).unwrap().norm() / f.norm();
            assert!(err < 1e-12, "dim {dim} roundtrip {err}");
            let h = Field::from_fn(g.clone(), 2, |x, fib| {
                fib[0] = C64::new(x[0].cos(), 0.0);
                fib[1] = C64::new((-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.2);
            });
            let lhs = f.inner_product(&h).unwrap();
            let rhs = f.dft_forward().inner_product(&h.dft_forward()).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-10 * f.norm() * h.norm(),
                "dim {dim} parseval"
            );
            // Gradient of a separable Gaussian along the last axis.
            let gauss = Field::from_scalar_fn(g.clone(), |x| {
                C64::new((-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
            });
            let grads = gauss.spectral_gradient();
            assert_eq!(grads.len(), dim);
            let mut x = vec![0.0; dim];
            let mut max_err = 0.0f64;
            for node in (0..g.node_count()).step_by(7) {
                g.node_coords(node, Domain::Physical, &mut x);
                let r2: f64 = x.iter().map(|v| v * v).sum();
                for (a, ga) in grads.iter().enumerate() {
                    let exact = -2.0 * x[a] * (-r2).exp();
                    max_err = max_err.max((ga.values()[(node, 0)].re - exact).abs());
                }
            }
            assert!(max_err < 1e-6, "dim {dim} gradient error {max_err}");
        }
    }

    #[test]
    fn roundtrip_large_grid_wide_fiber() {
        let g = Grid::new(1, 16.0, 1024).unwrap();
        let f = Field::from_fn(g, 8, |x, fib| {
            for (j, o) in fib.iter_mut().enumerate() {
                *o = C64::from_polar(
                    (-x[0] * x[0] / (2.0 + j as f64)).exp(),
                    0.3 * j as f64 * x[0],
                );
            }
        });
        let back = f.dft_forward().dft_inverse();
        assert!(f.sub(&back).unwrap().norm() <= 1e-12 * f.norm());
    }

    #[test]
    fn csv_layout_interleaved_fiber_major() {
        let g = Grid::new(1, 16.0, 8).unwrap();
        let f = Field::from_fn(g, 2, |x, fib| {
            fib[0] = C64::new(x[0], 1.0);
            fib[1] = C64::new(2.0 * x[0], -1.0);
        });
        let csv = f.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "re0,im0,re1,im1");
        let first: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(first, vec![-16.0, 1.0, -32.0, -1.0]);
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn fd4_derivative_of_polynomial_times() {
        // u(x, t) = g(x)·(1 + t + t² + t³ + t⁴); 4th-order FD is exact for
        // degree <= 4.
        let g = grid1d();
        let base = Field::from_scalar_fn(g, |x| C64::new((-x[0] * x[0]).exp(), 0.0));
        let times: Vec<f64> = (0..9).map(|j| j as f64 * 0.1).collect();
        let fields: Vec<Field> = times
            .iter()
            .map(|&t| base.scaled(C64::new(1.0 + t + t * t + t.powi(3) + t.powi(4), 0.0)))
            .collect();
        let traj = Trajectory::new(times.clone(), fields, String::new()).unwrap();
        let (ts, ds) = fd4_time_derivative(&traj).unwrap();
        for (t, d) in ts.iter().zip(ds.iter()) {
            let expect = base.scaled(C64::new(1.0 + 2.0 * t + 3.0 * t * t + 4.0 * t.powi(3), 0.0));
            let err = d.sub(&expect).unwrap().norm() / expect.norm();
            assert!(err < 1e-10, "fd4 error {err} at t={t}");
        }
    }
}
