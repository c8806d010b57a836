use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Reciprocal condition estimates below this are treated as singular.
pub(crate) const RCOND_FLOOR: f64 = 1e-12;

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts `a`, rejecting it when `1 / (|A| |A^-1|)` falls below [`RCOND_FLOOR`].
pub(crate) fn checked_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = a.clone().lu().try_inverse().ok_or(Error::SingularSystem)?;
    guard(a, &inv)?;
    Ok(inv)
}

/// Solves `a x = b` with the same conditioning guard as [`checked_inverse`].
pub(crate) fn checked_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::SingularSystem)?;
    guard(a, &inv)?;
    lu.solve(b).ok_or(Error::SingularSystem)
}

fn guard(a: &DMatrix<f64>, inv: &DMatrix<f64>) -> Result<()> {
    let norm = inf_norm(a);
    let inv_norm = inf_norm(inv);
    if !inv_norm.is_finite() || norm == 0.0 || 1.0 / (norm * inv_norm) < RCOND_FLOOR {
        return Err(Error::SingularSystem);
    }
    Ok(())
}
