//! Small dense linear algebra used by the smooth-mode velocity field.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Systems up to this dimension are assembled densely and factorized;
/// larger ones go through conjugate gradients on Hessian-vector products.
pub const DENSE_SOLVE_MAX_DIM: usize = 512;

pub const CG_TOLERANCE: f64 = 1e-12;

pub(crate) fn check_dim(expected: usize, v: &Vector) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Solves `A d = b` for symmetric positive-definite `A` via Cholesky.
pub fn solve_spd(a: Matrix, b: &Vector) -> Result<Vector> {
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::LinearSolve("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Conjugate gradients for `A d = b` where `A` is only available as a
/// matrix-vector product. Stops on relative residual `tol`.
pub fn conjugate_gradient<F>(apply: F, b: &Vector, tol: f64, max_iter: usize) -> Result<Vector>
where
    F: Fn(&Vector) -> Vector,
{
    let n = b.len();
    let mut x = Vector::zeros(n);
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        let ap = apply(&p);
        let curvature = p.dot(&ap);
        if !(curvature > 0.0) {
            return Err(Error::LinearSolve(format!(
                "non-positive curvature {curvature:e} in conjugate gradients"
            )));
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_next = r.dot(&r);
        p *= rr_next / rr;
        p += &r;
        rr = rr_next;
    }
    if rr.sqrt() <= tol * b_norm {
        Ok(x)
    } else {
        Err(Error::LinearSolve(format!(
            "conjugate gradients did not reach tolerance in {max_iter} iterations"
        )))
    }
}
