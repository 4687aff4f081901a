//! Dense m×m complex helpers for the fiber: matrix exponential by
//! scaling-and-squaring with the diagonal Padé(13) approximant (Higham 2005),
//! Hermitian eigenvalues by cyclic Jacobi, and the spectral norm.
//!
//! Fibers are small (m <= 8 in practice), so plain O(m³) kernels are fine and
//! deterministic across platforms to ~1e-13.

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Padé(13) numerator coefficients b_0..b_13 (Higham 2005, Table 10.4).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn eye(m: usize) -> Array2<C64> {
    Array2::from_diag_elem(m, C64::new(1.0, 0.0))
}

fn one_norm(a: &Array2<C64>) -> f64 {
    let m = a.ncols();
    (0..m)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve A X = B for small dense complex systems by partial-pivot LU.
fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let m = a.nrows();
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..m {
        let mut piv = col;
        let mut best = lu[(col, col)].norm();
        for r in col + 1..m {
            let v = lu[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if piv != col {
            for j in 0..m {
                lu.swap((col, j), (piv, j));
                x.swap((col, j), (piv, j));
            }
        }
        let d = lu[(col, col)];
        for r in col + 1..m {
            let f = lu[(r, col)] / d;
            lu[(r, col)] = f;
            for j in col + 1..m {
                let v = lu[(col, j)];
                lu[(r, j)] -= f * v;
            }
            for j in 0..m {
                let v = x[(col, j)];
                x[(r, j)] -= f * v;
            }
        }
    }
    for col in (0..m).rev() {
        let d = lu[(col, col)];
        for j in 0..m {
            x[(col, j)] /= d;
        }
        for r in 0..col {
            let f = lu[(r, col)];
            for j in 0..m {
                let v = x[(col, j)];
                x[(r, j)] -= f * v;
            }
        }
    }
    x
}

/// exp(A) for a square complex matrix. Fibers of dimension 1 and 2 use the
/// closed forms (2×2: exp(A) = e^{s}[cosh(δ)I + sinh(δ)/δ·(A − sI)] with
/// s = tr A/2 and δ² = det(A − sI) negated); larger fibers go through
/// Padé(13) scaling-and-squaring.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let m = a.nrows();
    assert_eq!(m, a.ncols(), "expm needs a square matrix");
    if m == 1 {
        let mut out = Array2::zeros((1, 1));
        out[(0, 0)] = a[(0, 0)].exp();
        return out;
    }
    if m == 2 {
        return expm2(a);
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a1 = a.mapv(|z| z / C64::new((1u64 << s) as f64, 0.0));

    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let id = eye(m);
    let c = |k: usize| C64::new(PADE13[k], 0.0);

    let u_inner = &a6 * c(13) + &a4 * c(11) + &a2 * c(9);
    let u = a1.dot(&(a6.dot(&u_inner) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &id * c(1)));
    let v_inner = &a6 * c(12) + &a4 * c(10) + &a2 * c(8);
    let v = a6.dot(&v_inner) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);

    // exp(A1) ≈ (V - U)^{-1}(V + U), then square s times.
    let mut e = solve(&(&v - &u), &(&v + &u));
    for _ in 0..s {
        e = e.dot(&e);
    }
    e
}

fn expm2(a: &Array2<C64>) -> Array2<C64> {
    let s = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let d00 = a[(0, 0)] - s;
    let d11 = a[(1, 1)] - s;
    // D = A − sI is traceless, so D² = δ²I with δ² = −det D.
    let delta2 = -(d00 * d11 - a[(0, 1)] * a[(1, 0)]);
    let delta = delta2.sqrt();
    let (ch, sh_over) = if delta.norm() < 1e-8 {
        // cosh δ and sinh δ/δ by series; the δ⁴ truncation error is below
        // machine precision in this range.
        (
            C64::new(1.0, 0.0) + delta2 * 0.5 + delta2 * delta2 / 24.0,
            C64::new(1.0, 0.0) + delta2 / 6.0 + delta2 * delta2 / 120.0,
        )
    } else {
        (delta.cosh(), delta.sinh() / delta)
    };
    let es = s.exp();
    let mut out = Array2::zeros((2, 2));
    out[(0, 0)] = es * (ch + sh_over * d00);
    out[(0, 1)] = es * sh_over * a[(0, 1)];
    out[(1, 0)] = es * sh_over * a[(1, 0)];
    out[(1, 1)] = es * (ch + sh_over * d11);
    out
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations, ascending.
pub fn hermitian_eigenvalues(a: &Array2<C64>) -> Vec<f64> {
    let m = a.nrows();
    assert_eq!(m, a.ncols());
    if m == 1 {
        return vec![a[(0, 0)].re];
    }
    if m == 2 {
        let tr = a[(0, 0)].re + a[(1, 1)].re;
        let det = a[(0, 0)].re * a[(1, 1)].re - a[(0, 1)].norm_sqr();
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        return vec![(tr - disc) / 2.0, (tr + disc) / 2.0];
    }
    let mut w = a.clone();
    let scale = one_norm(a).max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..m {
            for q in p + 1..m {
                off += w[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() < 1e-15 * scale {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = w[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = w[(p, p)].re;
                let aqq = w[(q, q)].re;
                // Unitary 2×2 diagonalization: phase out a_pq, then rotate.
                let phase = apq / C64::new(apq.norm(), 0.0);
                // Zero B_pq = e^{iφ}[(β−α)sc + r(c²−s²)]: with τ = (β−α)/2r
                // the stable root of rt² − 2rτt − r = 0 is t = −sgn(τ)/(|τ|+√(1+τ²)).
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = -tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                // Columns: [p] <- c·[p] + s·phase*·[q]; [q] <- -s·phase·[p] + c·[q]
                for r in 0..m {
                    let wrp = w[(r, p)];
                    let wrq = w[(r, q)];
                    w[(r, p)] = wrp * cth + wrq * phase.conj() * sth;
                    w[(r, q)] = -wrp * phase * sth + wrq * cth;
                }
                for rcol in 0..m {
                    let wpc = w[(p, rcol)];
                    let wqc = w[(q, rcol)];
                    w[(p, rcol)] = wpc * cth + wqc * phase * sth;
                    w[(q, rcol)] = -wpc * phase.conj() * sth + wqc * cth;
                }
            }
        }
    }
    let mut evals: Vec<f64> = (0..m).map(|i| w[(i, i)].re).collect();
    evals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    evals
}

/// Spectral (operator 2-) norm via the largest eigenvalue of A^H A.
pub fn spectral_norm(a: &Array2<C64>) -> f64 {
    let ah = conj_transpose(a);
    let g = ah.dot(a);
    let evals = hermitian_eigenvalues(&g);
    evals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn conj_transpose(a: &Array2<C64>) -> Array2<C64> {
    let (r, c) = a.dim();
    Array2::from_shape_fn((c, r), |(i, j)| a[(j, i)].conj())
}

/// max_{ij} |A_ij - conj(A_ji)|.
pub fn hermitian_defect(a: &Array2<C64>) -> f64 {
    let m = a.nrows();
    let mut d = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            d = d.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    d
}

/// Frobenius norm.
pub fn fro_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// y <- M·x on fiber slices.
#[inline]
pub fn matvec_into(m: &Array2<C64>, x: &[C64], y: &mut [C64]) {
    let n = m.nrows();
    for (i, yi) in y.iter_mut().enumerate().take(n) {
        let mut acc = C64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate().take(n) {
            acc += m[(i, j)] * xj;
        }
        *yi = acc;
    }
}
