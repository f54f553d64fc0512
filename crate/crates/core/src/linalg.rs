//! Fixed-size 3×3 complex linear algebra.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::C64;

pub type Mat3 = Matrix3<C64>;
pub type Vec3 = Vector3<C64>;

/// Largest deviation from Hermiticity tolerated by [`expm_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// `max |H - H†|` entry-wise.
pub fn hermiticity_error(h: &Mat3) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(-i H dt)` for Hermitian `H`, through its spectral decomposition.
pub fn expm_hermitian(h: &Mat3, dt: f64) -> Result<Mat3> {
    let err = hermiticity_error(h);
    if !(err <= HERMITIAN_TOL * (1.0 + h.norm())) {
        return Err(Error::invalid(format!(
            "generator is not Hermitian (|H - H†| = {err:e})"
        )));
    }
    if !dt.is_finite() {
        return Err(Error::invalid(format!("time step must be finite, got {dt}")));
    }
    if dt == 0.0 || h.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(Mat3::identity());
    }
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::invalid("Hermitian eigendecomposition did not converge"))?;
    let phases = Vector3::from_iterator(eig.eigenvalues.iter().map(|&e| C64::new(0.0, -e * dt).exp()));
    let v = &eig.eigenvectors;
    Ok(v * Mat3::from_diagonal(&phases) * v.adjoint())
}

pub fn norm_sqr(v: &Vec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
