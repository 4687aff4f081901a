//! Registry of closed-form potentials. Run specifications reference entries
//! by id so experiments stay reproducible from parameters alone.
//!
//! All entries are Hermitian. Fiber coupling uses the symmetric nearest-
//! neighbour pattern I + c·J (J the 0/1 super/sub-diagonal matrix), positive
//! definite for |c| < 1/2. The integral-kernel entry realizes the
//! K(x,τ,τ',t) potentials as an m×m midpoint-quadrature matrix over the unit
//! τ-interval.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::C64;
use crate::operator::PotentialSpec;

/// Closed-form registry entries.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialForm {
    /// V ≡ 0.
    Zero,
    /// V₁(x) = −depth·e^{−|x|²/width²}·(I + coupling·J).
    GaussianWell {
        depth: f64,
        width: f64,
        coupling: f64,
    },
    /// V₂(x,t) = strength·e^{−|x|²/width²}(1 + depth_mod·cos(omega t))·(I + coupling·J).
    ModulatedGaussian {
        strength: f64,
        width: f64,
        omega: f64,
        depth_mod: f64,
        coupling: f64,
    },
    /// GaussianWell as V₁ plus ModulatedGaussian as V₂.
    WellPlusModulated {
        depth: f64,
        well_width: f64,
        strength: f64,
        mod_width: f64,
        omega: f64,
        depth_mod: f64,
        coupling: f64,
    },
    /// V₂(x,t)_{jk} = (1/m)·strength·e^{−|x|²/width²}·cos(π(τ_j−τ_k))·(1 + sin(rate·t)/2),
    /// τ_j = (j+1/2)/m.
    IntegralKernel {
        strength: f64,
        width: f64,
        rate: f64,
    },
}

impl PotentialForm {
    pub fn id(&self) -> &'static str {
        match self {
            PotentialForm::Zero => "zero",
            PotentialForm::GaussianWell { .. } => "gaussian-well",
            PotentialForm::ModulatedGaussian { .. } => "modulated-gaussian",
            PotentialForm::WellPlusModulated { .. } => "well-plus-modulated",
            PotentialForm::IntegralKernel { .. } => "integral-kernel",
        }
    }

    /// All registry ids, for validation messages and sweeps.
    pub fn registry_ids() -> &'static [&'static str] {
        &[
            "zero",
            "gaussian-well",
            "modulated-gaussian",
            "well-plus-modulated",
            "integral-kernel",
        ]
    }

    pub fn build(&self, fiber_dim: usize) -> Result<PotentialSpec> {
        if fiber_dim == 0 {
            return Err(Error::InvalidParams("fiber_dim must be >= 1".into()));
        }
        let spec = match self.clone() {
            PotentialForm::Zero => PotentialSpec::zero(fiber_dim),
            PotentialForm::GaussianWell {
                depth,
                width,
                coupling,
            } => {
                check_positive("width", width)?;
                let c = coupling_matrix(fiber_dim, coupling);
                let v1 = move |x: &[f64]| -> Array2<C64> {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let s = -depth * (-r2 / (width * width)).exp();
                    c.mapv(|z| z * s)
                };
                PotentialSpec::new(fiber_dim, Some(Arc::new(v1)), None, true, true, self.id())
            }
            PotentialForm::ModulatedGaussian {
                strength,
                width,
                omega,
                depth_mod,
                coupling,
            } => {
                check_positive("width", width)?;
                let c = coupling_matrix(fiber_dim, coupling);
                let v2 = move |x: &[f64], t: f64| -> Array2<C64> {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let s = strength
                        * (-r2 / (width * width)).exp()
                        * (1.0 + depth_mod * (omega * t).cos());
                    c.mapv(|z| z * s)
                };
                PotentialSpec::new(fiber_dim, None, Some(Arc::new(v2)), true, true, self.id())
            }
            PotentialForm::WellPlusModulated {
                depth,
                well_width,
                strength,
                mod_width,
                omega,
                depth_mod,
                coupling,
            } => {
                check_positive("well_width", well_width)?;
                check_positive("mod_width", mod_width)?;
                let c1 = coupling_matrix(fiber_dim, coupling);
                let c2 = c1.clone();
                let v1 = move |x: &[f64]| -> Array2<C64> {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let s = -depth * (-r2 / (well_width * well_width)).exp();
                    c1.mapv(|z| z * s)
                };
                let v2 = move |x: &[f64], t: f64| -> Array2<C64> {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let s = strength
                        * (-r2 / (mod_width * mod_width)).exp()
                        * (1.0 + depth_mod * (omega * t).cos());
                    c2.mapv(|z| z * s)
                };
                PotentialSpec::new(
                    fiber_dim,
                    Some(Arc::new(v1)),
                    Some(Arc::new(v2)),
                    true,
                    true,
                    self.id(),
                )
            }
            PotentialForm::IntegralKernel {
                strength,
                width,
                rate,
            } => {
                check_positive("width", width)?;
                let m = fiber_dim;
                // Quadrature matrix over τ: symmetric real, hence Hermitian.
                let base = Array2::from_shape_fn((m, m), |(j, k)| {
                    let tau_j = (j as f64 + 0.5) / m as f64;
                    let tau_k = (k as f64 + 0.5) / m as f64;
                    C64::new(
                        (std::f64::consts::PI * (tau_j - tau_k)).cos() / m as f64,
                        0.0,
                    )
                });
                let v2 = move |x: &[f64], t: f64| -> Array2<C64> {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let s =
                        strength * (-r2 / (width * width)).exp() * (1.0 + 0.5 * (rate * t).sin());
                    base.mapv(|z| z * s)
                };
                PotentialSpec::new(fiber_dim, None, Some(Arc::new(v2)), true, true, self.id())
            }
        };
        Ok(spec)
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive")))
    }
}

fn coupling_matrix(m: usize, coupling: f64) -> Array2<C64> {
    Array2::from_shape_fn((m, m), |(i, j)| {
        if i == j {
            C64::new(1.0, 0.0)
        } else if i.abs_diff(j) == 1 {
            C64::new(coupling, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Coupled-system generator A = \[a_mj\], a_mj = g_m 2^{sj}, projected onto
/// its Hermitian part (A + A†)/2. Returns the generator and the Frobenius
/// distance ‖(A − A†)/2‖_F of the input from the symmetry hypothesis.
pub fn build_system_case(
    g: &[f64],
    s: f64,
    n: usize,
) -> Result<(crate::operator::GeneratorSpec, f64)> {
    if g.len() != n || n == 0 {
        return Err(Error::InvalidParams(format!(
            "system case needs len(g) = N >= 1, got {} vs {}",
            g.len(),
            n
        )));
    }
    let a = Array2::from_shape_fn((n, n), |(m, j)| {
        C64::new(g[m] * 2f64.powf(s * (j + 1) as f64), 0.0)
    });
    let at = crate::linalg::conj_transpose(&a);
    let herm = (&a + &at).mapv(|z| z * 0.5);
    let skew = (&a - &at).mapv(|z| z * 0.5);
    let distance = crate::linalg::fro_norm(&skew);
    Ok((crate::operator::GeneratorSpec::new(herm)?, distance))
}
