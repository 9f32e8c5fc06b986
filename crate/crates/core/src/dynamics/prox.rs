//! Prox mode: semi-implicit discretization of `v ∈ ∂φ(x)`,
//! `λẋ + v̇ + v + ∇ψ(x) = 0`.
//!
//! The step is implicit in `∂φ` and in the damping `v`, explicit in `∇ψ`:
//!
//! ```text
//! λ(x⁺ − x) + (1 + h) v⁺ − v + h∇ψ(x) = 0,   v⁺ ∈ ∂φ(x⁺)
//! ```
//!
//! which resolves to a single proximal evaluation
//! `x⁺ = prox_{γφ}(x + (v − h∇ψ(x))/λ)` with `γ = (1 + h)/λ`, and
//! `v⁺ = (w − x⁺)/γ`.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, Vector};
use crate::objective::{ConvexMode, ObjectiveSpec};

use super::{DynamicsParams, FlowState};

pub(crate) struct ProxStep {
    pub state: FlowState,
    pub grad_psi: Vector,
}

pub(crate) fn prox_step(spec: &ObjectiveSpec, lambda: f64, s: &FlowState, h: f64) -> Result<ProxStep> {
    if spec.mode() != ConvexMode::Prox {
        return Err(Error::WrongMode {
            required: ConvexMode::Prox,
        });
    }
    let grad_psi = spec.smooth.gradient(&s.x);
    let gamma = (1.0 + h) / lambda;
    let w = &s.x + (&s.v - &grad_psi * h) / lambda;
    if !all_finite(&w) {
        return Err(Error::NonFinite { t: s.t + h });
    }
    let x_next = spec.convex.prox(gamma, &w)?;
    let v_next = (&s.x * lambda + &s.v - &grad_psi * h - &x_next * lambda) / (1.0 + h);
    if !all_finite(&x_next) || !all_finite(&v_next) {
        return Err(Error::NonFinite { t: s.t + h });
    }
    Ok(ProxStep {
        state: FlowState {
            t: s.t + h,
            x: x_next,
            v: v_next,
        },
        grad_psi,
    })
}

/// `‖λ(x⁺ − x) + (1 + h)v⁺ − v + h∇ψ(x)‖`.
pub fn prox_equation_residual(lambda: f64, h: f64, before: &FlowState, after: &FlowState, grad_psi: &Vector) -> f64 {
    ((&after.x - &before.x) * lambda + &after.v * (1.0 + h) - &before.v + grad_psi * h).norm()
}

pub fn step_prox(spec: &ObjectiveSpec, params: &DynamicsParams, s: &FlowState, h: f64) -> Result<FlowState> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    Ok(prox_step(spec, params.lambda, s, h)?.state)
}
