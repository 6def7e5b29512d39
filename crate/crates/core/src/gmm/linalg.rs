use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Cholesky factor of a symmetric matrix, adding `reg * I` (doubling each time)
/// until the factorization succeeds. Returns the possibly-regularized matrix and
/// its lower factor.
pub fn cholesky_with_jitter(mut a: DMatrix<f64>, reg: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix contains non-finite entries"));
    }
    let sym = (&a + a.transpose()) * 0.5;
    a = sym;
    let mut bump = reg.max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if let Some(c) = Cholesky::new(a.clone()) {
            let l = c.unpack();
            if l.diagonal().iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Ok((a, l));
            }
        }
        for i in 0..a.nrows() {
            a[(i, i)] += bump;
        }
        bump *= 2.0;
    }
    Err(Error::Training(
        "covariance could not be made positive definite".into(),
    ))
}

pub(crate) fn log_det_from_chol(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// `vᵀ (L Lᵀ)⁻¹ v`.
pub(crate) fn inv_quad(l: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let z = l.solve_lower_triangular(v).expect("non-singular factor");
    z.norm_squared()
}

/// `tr((L Lᵀ)⁻¹ A)`.
pub(crate) fn inv_trace(l: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let y = l.solve_lower_triangular(a).expect("non-singular factor");
    let z = l
        .transpose()
        .solve_upper_triangular(&y)
        .expect("non-singular factor");
    z.trace()
}
