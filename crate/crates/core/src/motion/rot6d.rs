//! Continuous 6-DOF rotation decoding.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

// Residual norms below this (relative to the input scale) count as
// degenerate rather than being silently repaired.
const DEGENERATE_EPS: f64 = 1e-12;

/// Decodes a 6-value rotation representation into a proper rotation
/// matrix.
///
/// The six values are read as two 3-vectors `(u, w)`. The first matrix
/// column is `u` normalized, the second is `w` orthogonalized against
/// the first and normalized (Gram-Schmidt), and the third is their
/// cross product. The decoding is invariant to positive scaling of
/// either input vector.
///
/// Returns [`Error::DegenerateRotation`] when `u` is (numerically) zero
/// or `w` is parallel to `u`.
pub fn rot6d_to_matrix(r6: &[f64; 6]) -> Result<Matrix3<f64>> {
    if !r6.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "6-DOF rotation input",
        });
    }
    let u = Vector3::new(r6[0], r6[1], r6[2]);
    let w = Vector3::new(r6[3], r6[4], r6[5]);

    let u_norm = u.norm();
    if u_norm <= DEGENERATE_EPS {
        return Err(Error::DegenerateRotation);
    }
    let c0 = u / u_norm;

    let residual = w - c0 * c0.dot(&w);
    let r_norm = residual.norm();
    if r_norm <= DEGENERATE_EPS * w.norm().max(1.0) {
        return Err(Error::DegenerateRotation);
    }
    let c1 = residual / r_norm;
    let c2 = c0.cross(&c1);

    Ok(Matrix3::from_columns(&[c0, c1, c2]))
}
