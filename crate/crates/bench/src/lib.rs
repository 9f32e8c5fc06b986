//! Shared fixtures for the klflow benchmarks.

use klflow_core::{catalog_make, ConvexMode, DynamicsParams, FlowState, ObjectiveSpec, Result, Vector};

/// Deterministic start with alternating signs and slowly decaying magnitude.
pub fn start(n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|i| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sign * (1.0 + 1.0 / (i as f64 + 1.0))
    }))
}

/// A catalog problem, optionally switched to prox mode.
pub fn problem(name: &str, n: usize, mode: ConvexMode) -> Result<ObjectiveSpec> {
    let spec = catalog_make(name, n, &[])?;
    Ok(match mode {
        ConvexMode::Prox => spec.into_prox_mode(),
        ConvexMode::Smooth => spec,
    })
}

pub fn state(spec: &ObjectiveSpec, x: Vector) -> Result<FlowState> {
    let v = klflow_core::dynamics::initial_velocity(spec, &x, None)?;
    Ok(FlowState { t: 0.0, x, v })
}

pub fn params(step: f64, t_max: f64) -> DynamicsParams {
    DynamicsParams {
        step,
        t_max,
        stop_grad_tol: 0.0,
        stop_step_tol: 0.0,
        ..DynamicsParams::default()
    }
}
