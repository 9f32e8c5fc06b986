//! Smooth mode: `(λI + ∇²φ(x)) ẋ = −(∇φ(x) + ∇ψ(x))`, integrated explicitly.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, conjugate_gradient, solve_spd, Matrix, Vector, CG_TOLERANCE, DENSE_SOLVE_MAX_DIM};
use crate::objective::{ObjectiveSpec, SmoothConvex};

use super::{DynamicsParams, FlowState};

/// Velocity field `F(x) = −(λI + ∇²φ(x))⁻¹ (∇φ(x) + ∇ψ(x))`.
pub(crate) fn field(phi: &dyn SmoothConvex, spec: &ObjectiveSpec, lambda: f64, x: &Vector, t: f64) -> Result<Vector> {
    if !all_finite(x) {
        return Err(Error::NonFinite { t });
    }
    let rhs = -(phi.gradient(x) + spec.smooth.gradient(x));
    if !all_finite(&rhs) {
        return Err(Error::NonFinite { t });
    }
    let n = x.len();
    let f = if n <= DENSE_SOLVE_MAX_DIM {
        let a = phi.hessian(x) + Matrix::identity(n, n) * lambda;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        solve_spd(a, &rhs)?
    } else {
        conjugate_gradient(|d| d * lambda + phi.hessian_vec(x, d), &rhs, CG_TOLERANCE, 10 * n)?
    };
    if !all_finite(&f) {
        return Err(Error::NonFinite { t });
    }
    Ok(f)
}

/// Energy-rate density `λ‖ẋ‖² + ⟨ẋ, v̇⟩` with `ẋ = F(x)`, `v̇ = ∇²φ(x) ẋ`.
pub(crate) fn dissipation_rate(phi: &dyn SmoothConvex, lambda: f64, x: &Vector, xdot: &Vector) -> f64 {
    let vdot = phi.hessian_vec(x, xdot);
    lambda * xdot.norm_squared() + xdot.dot(&vdot)
}

/// Cubic Hermite midpoint of a step from `(x0, F0)` to `(x1, F1)`.
pub(crate) fn hermite_midpoint(x0: &Vector, x1: &Vector, f0: &Vector, f1: &Vector, h: f64) -> Vector {
    (x0 + x1) * 0.5 + (f0 - f1) * (h / 8.0)
}

pub(crate) fn smooth_phi(spec: &ObjectiveSpec) -> Result<&dyn SmoothConvex> {
    match &spec.convex {
        crate::objective::ConvexTerm::Smooth(phi) => Ok(phi.as_ref()),
        crate::objective::ConvexTerm::Prox(_) => Err(Error::WrongMode {
            required: crate::objective::ConvexMode::Smooth,
        }),
    }
}

/// One classical RK4 step. `k1` may carry a cached `F(x)`.
pub(crate) fn rk4(
    phi: &dyn SmoothConvex,
    spec: &ObjectiveSpec,
    lambda: f64,
    s: &FlowState,
    h: f64,
    k1: Option<&Vector>,
) -> Result<FlowState> {
    let t = s.t;
    let x = &s.x;
    let k1 = match k1 {
        Some(k) => k.clone(),
        None => field(phi, spec, lambda, x, t)?,
    };
    let k2 = field(phi, spec, lambda, &(x + &k1 * (h / 2.0)), t)?;
    let k3 = field(phi, spec, lambda, &(x + &k2 * (h / 2.0)), t)?;
    let k4 = field(phi, spec, lambda, &(x + &k3 * h), t)?;
    let x_next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if !all_finite(&x_next) {
        return Err(Error::NonFinite { t: t + h });
    }
    let v_next = phi.gradient(&x_next);
    Ok(FlowState {
        t: t + h,
        x: x_next,
        v: v_next,
    })
}

/// Advances one RK4 step of the Hessian-damped flow; `v` is recomputed as
/// `∇φ(x)` at the new point.
pub fn step_smooth(spec: &ObjectiveSpec, params: &DynamicsParams, s: &FlowState, h: f64) -> Result<FlowState> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let phi = smooth_phi(spec)?;
    rk4(phi, spec, params.lambda, s, h, None)
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) struct DopriStep {
    pub state: FlowState,
    /// Scaled RMS error; accept when `≤ 1`.
    pub error: f64,
    /// `F(x_next)` (first-same-as-last stage).
    pub k_last: Vector,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn dopri5(
    phi: &dyn SmoothConvex,
    spec: &ObjectiveSpec,
    lambda: f64,
    s: &FlowState,
    h: f64,
    k1: &Vector,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<DopriStep> {
    let x = &s.x;
    let mut k: Vec<Vector> = Vec::with_capacity(7);
    k.push(k1.clone());
    for i in 1..7 {
        let mut xi = x.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[i][j] != 0.0 {
                xi.axpy(h * A[i][j], kj, 1.0);
            }
        }
        k.push(field(phi, spec, lambda, &xi, s.t + C[i] * h)?);
    }
    // row 6 of A holds the fifth-order weights, so stage 7 was taken at x_next
    let mut x_next = x.clone();
    for (j, kj) in k.iter().take(6).enumerate() {
        x_next.axpy(h * A[6][j], kj, 1.0);
    }
    let mut err = Vector::zeros(x.len());
    for (e, kj) in E.iter().zip(&k) {
        err.axpy(h * e, kj, 1.0);
    }
    let n = x.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(x.iter().zip(x_next.iter()))
        .map(|(e, (a, b))| {
            let sc = abs_tol + rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    let v_next = phi.gradient(&x_next);
    Ok(DopriStep {
        state: FlowState {
            t: s.t + h,
            x: x_next,
            v: v_next,
        },
        error: (sum / n).sqrt(),
        k_last: k.pop().expect("seven stages"),
    })
}
