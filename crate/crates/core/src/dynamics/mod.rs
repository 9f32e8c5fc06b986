//! Trajectories of `v(t) ∈ ∂φ(x(t))`, `λẋ + v̇ + v + ∇ψ(x) = 0`.
//!
//! Smooth mode integrates the resolved Hessian-damped field with RK4
//! (fixed step) or Dormand–Prince 5(4) (adaptive). Prox mode uses the
//! semi-implicit proximal scheme in [`prox`].

mod control;
mod prox;
mod smooth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, Vector};
use crate::monitors::{self, MonitorSummary, StepDiagnostics};
use crate::objective::{certify_subgradient, probe_points, subgradient_probe_violation, ConvexMode, ConvexTerm, ObjectiveSpec};

pub use control::{adapt_step, StepDecision};
pub use prox::{prox_equation_residual, step_prox};
pub use smooth::step_smooth;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepPolicy {
    Fixed,
    Adaptive {
        rel_tol: f64,
        abs_tol: f64,
        h_min: f64,
        h_max: f64,
    },
}

impl StepPolicy {
    pub fn adaptive() -> Self {
        StepPolicy::Adaptive {
            rel_tol: 1e-8,
            abs_tol: 1e-8,
            h_min: 1e-12,
            h_max: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsParams {
    pub lambda: f64,
    /// Fixed step, or the initial step under an adaptive policy.
    pub step: f64,
    pub policy: StepPolicy,
    pub t_max: f64,
    /// `0` disables the stationarity stop.
    pub stop_grad_tol: f64,
    /// `0` disables the step-size stop.
    pub stop_step_tol: f64,
    pub sample_stride: usize,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            step: 1e-2,
            policy: StepPolicy::Fixed,
            t_max: 100.0,
            stop_grad_tol: 1e-10,
            stop_step_tol: 1e-12,
            sample_stride: 1,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.stop_grad_tol >= 0.0) {
            return bad(format!("stop_grad_tol must be nonnegative, got {}", self.stop_grad_tol));
        }
        if !(self.stop_step_tol >= 0.0) {
            return bad(format!("stop_step_tol must be nonnegative, got {}", self.stop_step_tol));
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be at least 1".into());
        }
        if let StepPolicy::Adaptive {
            rel_tol,
            abs_tol,
            h_min,
            h_max,
        } = self.policy
        {
            if !(rel_tol >= 0.0 && abs_tol >= 0.0 && rel_tol + abs_tol > 0.0) {
                return bad("adaptive tolerances must be nonnegative and not both zero".into());
            }
            if !(h_min > 0.0 && h_min <= self.step && self.step <= h_max) {
                return bad(format!(
                    "adaptive policy needs 0 < h_min <= step <= h_max, got {h_min}, {}, {h_max}",
                    self.step
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub x: Vector,
    pub v: Vector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    GradTol,
    StepTol,
    TMax,
    Diverged,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub spec: ObjectiveSpec,
    pub params: DynamicsParams,
    pub samples: Vec<FlowState>,
    /// Diagnostics of the step that produced each sample; `None` for the
    /// initial sample.
    pub diagnostics: Vec<Option<StepDiagnostics>>,
    /// Worst monitor values over every accepted step, recorded or not.
    pub summary: MonitorSummary,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Whether `v₀` came from a caller hint rather than the default choice.
    pub v0_from_hint: bool,
}

impl Trajectory {
    pub fn last(&self) -> &FlowState {
        self.samples.last().expect("trajectory has an initial sample")
    }

    pub fn diverged(&self) -> bool {
        self.termination == Termination::Diverged
    }
}

/// Chooses `v₀ ∈ ∂φ(x₀)`.
///
/// Smooth mode returns `∇φ(x₀)`. Prox mode returns a certified hint, else
/// the closed-form minimal-norm subgradient when the term provides one,
/// else `0` when `x₀` is a fixed point of `prox_φ`.
pub fn initial_velocity(spec: &ObjectiveSpec, x0: &Vector, v0_hint: Option<&Vector>) -> Result<Vector> {
    check_dim(spec.dim(), x0)?;
    match &spec.convex {
        ConvexTerm::Smooth(phi) => Ok(phi.gradient(x0)),
        ConvexTerm::Prox(phi) => {
            if !phi.value(x0).is_finite() {
                return Err(Error::InvalidParameter("x0 is outside dom φ".into()));
            }
            if let Some(hint) = v0_hint {
                check_dim(spec.dim(), hint)?;
                return if certify_subgradient(&spec.convex, x0, hint)? {
                    Ok(hint.clone())
                } else {
                    Err(Error::UncertifiedVelocity)
                };
            }
            if let Some(g) = phi.min_norm_subgradient(x0) {
                if certify_subgradient(&spec.convex, x0, &g)? {
                    return Ok(g);
                }
            }
            let zero = Vector::zeros(spec.dim());
            if certify_subgradient(&spec.convex, x0, &zero)? {
                Ok(zero)
            } else {
                Err(Error::UncertifiedVelocity)
            }
        }
    }
}

struct StepOutcome {
    state: FlowState,
    h: f64,
    /// Smooth mode: `F(x_next)`, reused as the next step's first stage.
    field_next: Option<Vector>,
    energy_defect: Option<f64>,
    prox_residual: Option<f64>,
}

/// Integrates from `x₀` until a stopping rule fires.
///
/// Stops on `‖v + ∇ψ(x)‖ ≤ stop_grad_tol` (`GradTol`), on
/// `(‖Δx‖ + ‖Δv‖)/h ≤ stop_step_tol` (`StepTol`), at `t_max` (`TMax`), or
/// when the state stops being finite or the adaptive step collapses
/// (`Diverged`, recorded rather than returned as an error).
pub fn integrate(
    spec: &ObjectiveSpec,
    params: &DynamicsParams,
    x0: &Vector,
    v0_hint: Option<&Vector>,
) -> Result<Trajectory> {
    params.validate()?;
    check_dim(spec.dim(), x0)?;
    if !crate::linalg::all_finite(x0) {
        return Err(Error::InvalidParameter("x0 must be finite".into()));
    }
    let mode = spec.mode();
    if mode == ConvexMode::Prox && matches!(params.policy, StepPolicy::Adaptive { .. }) {
        return Err(Error::InvalidParameter(
            "prox mode integrates with a fixed step only".into(),
        ));
    }
    let v0 = initial_velocity(spec, x0, v0_hint)?;
    let obj0 = spec.value(x0);
    if !obj0.is_finite() {
        return Err(Error::InvalidParameter("Φ(x0) is not finite".into()));
    }

    let lambda = params.lambda;
    let lipschitz = spec.lipschitz();
    let rho = spec.convex.inv_lipschitz();

    let mut state = FlowState {
        t: 0.0,
        x: x0.clone(),
        v: v0,
    };
    let mut obj = obj0;
    let mut stationarity = spec.stationarity(&state.x, &state.v);
    let mut traj = Trajectory {
        spec: spec.clone(),
        params: params.clone(),
        samples: vec![state.clone()],
        diagnostics: vec![None],
        summary: MonitorSummary::new(mode),
        termination: Termination::TMax,
        accepted_steps: 0,
        rejected_steps: 0,
        v0_from_hint: v0_hint.is_some(),
    };
    if params.stop_grad_tol > 0.0 && stationarity <= params.stop_grad_tol {
        traj.termination = Termination::GradTol;
        return Ok(traj);
    }

    let mut h = params.step;
    let mut cached_field: Option<Vector> = None;
    // latest accepted step not yet recorded by the stride
    let mut unrecorded: Option<(FlowState, StepDiagnostics)> = None;

    let termination = loop {
        let remaining = params.t_max - state.t;
        let last_step = remaining <= h * (1.0 + 1e-9);
        let h_try = if last_step { remaining } else { h };

        let outcome = match attempt_step(spec, params, &state, h_try, cached_field.take()) {
            Ok(Attempt::Accepted(outcome, h_next)) => {
                if let Some(h_next) = h_next {
                    h = h_next;
                }
                outcome
            }
            Ok(Attempt::Rejected { h_next, field }) => {
                traj.rejected_steps += 1;
                h = h_next;
                cached_field = field;
                continue;
            }
            Err(Error::NonFinite { .. }) | Err(Error::StepTooSmall { .. }) => break Termination::Diverged,
            Err(e) => return Err(e),
        };

        let mut next = outcome.state;
        if last_step {
            next.t = params.t_max;
        }
        let h_step = outcome.h;
        let obj_next = spec.value(&next.x);
        if !obj_next.is_finite() || !crate::linalg::all_finite(&next.v) {
            break Termination::Diverged;
        }
        let dx = &next.x - &state.x;
        let dv = &next.v - &state.v;
        let stationarity_next = spec.stationarity(&next.x, &next.v);
        let rate_x = dx.norm() / h_step;
        let rate_v = dv.norm() / h_step;
        let subgradient_violation = match mode {
            ConvexMode::Prox => Some(certification_violation(spec, &next)?),
            ConvexMode::Smooth => None,
        };
        let diag = StepDiagnostics {
            t: next.t,
            h: h_step,
            obj: obj_next,
            energy_residual: monitors::energy_identity_residual(obj_next, obj, &dx, &dv, h_step, lambda),
            energy_defect: outcome.energy_defect,
            descent: obj_next - obj,
            cross_term: dx.dot(&dv) / h_step,
            cocoercivity_slack: rho.map(|rho| monitors::cocoercivity_check(&dx, &dv, rho)),
            forcing_slack: monitors::forcing_slack(
                stationarity,
                stationarity_next,
                rate_x,
                rate_v,
                h_step,
                lipschitz,
                lambda,
            ),
            stationarity: stationarity_next,
            step_norm_x: rate_x,
            step_norm_v: rate_v,
            prox_equation_residual: outcome.prox_residual,
            subgradient_violation,
        };
        traj.summary.absorb(&diag, obj0);
        traj.accepted_steps += 1;

        state = next;
        obj = obj_next;
        stationarity = stationarity_next;
        cached_field = outcome.field_next;

        if traj.accepted_steps % params.sample_stride == 0 {
            traj.samples.push(state.clone());
            traj.diagnostics.push(Some(diag));
            unrecorded = None;
        } else {
            unrecorded = Some((state.clone(), diag));
        }

        if params.stop_grad_tol > 0.0 && stationarity <= params.stop_grad_tol {
            break Termination::GradTol;
        }
        if params.stop_step_tol > 0.0 && rate_x + rate_v <= params.stop_step_tol {
            break Termination::StepTol;
        }
        if last_step {
            break Termination::TMax;
        }
    };
    if let Some((s, d)) = unrecorded {
        traj.samples.push(s);
        traj.diagnostics.push(Some(d));
    }
    traj.termination = termination;
    Ok(traj)
}

enum Attempt {
    Accepted(StepOutcome, Option<f64>),
    Rejected { h_next: f64, field: Option<Vector> },
}

fn attempt_step(
    spec: &ObjectiveSpec,
    params: &DynamicsParams,
    state: &FlowState,
    h: f64,
    cached_field: Option<Vector>,
) -> Result<Attempt> {
    let lambda = params.lambda;
    match &spec.convex {
        ConvexTerm::Smooth(phi) => {
            let phi = phi.as_ref();
            let k1 = match cached_field {
                Some(k) => k,
                None => smooth::field(phi, spec, lambda, &state.x, state.t)?,
            };
            let (next, k_last, h_next) = match params.policy {
                StepPolicy::Fixed => {
                    let next = smooth::rk4(phi, spec, lambda, state, h, Some(&k1))?;
                    let k_last = smooth::field(phi, spec, lambda, &next.x, next.t)?;
                    (next, k_last, None)
                }
                StepPolicy::Adaptive { rel_tol, abs_tol, .. } => {
                    let step = smooth::dopri5(phi, spec, lambda, state, h, &k1, rel_tol, abs_tol)?;
                    let decision = adapt_step(step.error, h, &params.policy)?;
                    if !decision.accept {
                        return Ok(Attempt::Rejected {
                            h_next: decision.h_next,
                            field: Some(k1),
                        });
                    }
                    (step.state, step.k_last, Some(decision.h_next))
                }
            };
            let mid = smooth::hermite_midpoint(&state.x, &next.x, &k1, &k_last, h);
            let k_mid = smooth::field(phi, spec, lambda, &mid, state.t + h / 2.0)?;
            let rates = [
                smooth::dissipation_rate(phi, lambda, &state.x, &k1),
                smooth::dissipation_rate(phi, lambda, &mid, &k_mid),
                smooth::dissipation_rate(phi, lambda, &next.x, &k_last),
            ];
            let defect = monitors::energy_identity_defect(spec.value(&next.x), spec.value(&state.x), rates, h);
            Ok(Attempt::Accepted(
                StepOutcome {
                    state: next,
                    h,
                    field_next: Some(k_last),
                    energy_defect: Some(defect),
                    prox_residual: None,
                },
                h_next,
            ))
        }
        ConvexTerm::Prox(_) => {
            let step = prox::prox_step(spec, lambda, state, h)?;
            let residual = prox_equation_residual(lambda, h, state, &step.state, &step.grad_psi);
            Ok(Attempt::Accepted(
                StepOutcome {
                    state: step.state,
                    h,
                    field_next: None,
                    energy_defect: None,
                    prox_residual: Some(residual),
                },
                None,
            ))
        }
    }
}

/// Probe-point violation of `v ∈ ∂φ(x)`; the resolvent test failing is
/// reported as an infinite violation.
fn certification_violation(spec: &ObjectiveSpec, s: &FlowState) -> Result<f64> {
    if !certify_subgradient(&spec.convex, &s.x, &s.v)? {
        return Ok(f64::INFINITY);
    }
    Ok(subgradient_probe_violation(&spec.convex, &s.x, &s.v, &probe_points(&s.x)))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::objective::{catalog_make, CriticalSet, L1Norm, SquaredNorm, Zero};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn state(x: &[f64], v_: &[f64]) -> FlowState {
        FlowState {
            t: 0.0,
            x: v(x),
            v: v(v_),
        }
    }

    fn abs_spec() -> ObjectiveSpec {
        ObjectiveSpec::new(
            "abs",
            Arc::new(Zero::new(1)),
            ConvexTerm::Prox(Arc::new(L1Norm::new(1, 1.0))),
        )
        .unwrap()
    }

    #[test]
    fn rk4_step_matches_closed_form() {
        let spec = catalog_make("quadratic", 1, &[]).unwrap();
        let s = FlowState {
            t: 0.0,
            x: v(&[1.0]),
            v: v(&[1.0]),
        };
        let next = step_smooth(&spec, &DynamicsParams::default(), &s, 0.1).unwrap();
        assert!((next.x[0] - (-0.05f64).exp()).abs() < 1e-7);
        assert_eq!(next.v, next.x);

        // φ = 0, ψ = ½x², λ = 2: ẋ = −x/2
        let spec = ObjectiveSpec::new(
            "psi_only",
            Arc::new(SquaredNorm::new(1, 1.0)),
            ConvexTerm::Smooth(Arc::new(Zero::new(1))),
        )
        .unwrap();
        let params = DynamicsParams {
            lambda: 2.0,
            ..DynamicsParams::default()
        };
        let next = step_smooth(&spec, &params, &state(&[1.0], &[0.0]), 0.1).unwrap();
        assert!((next.x[0] - (-0.05f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn smooth_equilibria_are_fixed() {
        let spec = catalog_make("double_well", 2, &[]).unwrap();
        let params = DynamicsParams::default();
        for c in &spec.critical_set.iter().flat_map(CriticalSet::representatives).collect::<Vec<_>>() {
            let phi = smooth::smooth_phi(&spec).unwrap();
            let mut s = FlowState {
                t: 0.0,
                x: c.clone(),
                v: phi.gradient(c),
            };
            for _ in 0..1000 {
                s = step_smooth(&spec, &params, &s, 1e-2).unwrap();
            }
            assert!((&s.x - c).norm() <= 1e-12, "{c}");
        }
    }

    #[test]
    fn prox_step_examples() {
        let spec = abs_spec();
        let params = DynamicsParams::default();
        let next = step_prox(&spec, &params, &state(&[3.0], &[1.0]), 1.0).unwrap();
        assert!((next.x[0] - 2.0).abs() < 1e-15 && (next.v[0] - 1.0).abs() < 1e-15);
        let next = step_prox(&spec, &params, &state(&[1.0], &[1.0]), 1.0).unwrap();
        assert_eq!(next.x[0], 0.0);
        assert!((next.v[0] - 1.0).abs() < 1e-15);
        let again = step_prox(&spec, &params, &next, 1.0).unwrap();
        assert_eq!(again.x[0], 0.0);
    }

    #[test]
    fn prox_equilibrium_is_fixed() {
        let spec = catalog_make("l1_plus_quadratic", 2, &[]).unwrap();
        let params = DynamicsParams::default();
        let mut s = state(&[0.0, 0.0], &[0.0, 0.0]);
        for _ in 0..1000 {
            s = step_prox(&spec, &params, &s, 1e-2).unwrap();
        }
        assert!(s.x.norm() <= 1e-12 && s.v.norm() <= 1e-12);
    }

    #[test]
    fn initial_velocity_examples() {
        let spec = catalog_make("quadratic", 2, &[]).unwrap();
        assert_eq!(initial_velocity(&spec, &v(&[2.0, 0.0]), None).unwrap(), v(&[2.0, 0.0]));

        let spec = abs_spec();
        assert_eq!(initial_velocity(&spec, &v(&[3.0]), Some(&v(&[1.0]))).unwrap(), v(&[1.0]));
        assert_eq!(initial_velocity(&spec, &v(&[0.0]), Some(&v(&[0.5]))).unwrap(), v(&[0.5]));
        assert!(matches!(
            initial_velocity(&spec, &v(&[3.0]), Some(&v(&[0.5]))),
            Err(Error::UncertifiedVelocity)
        ));
        assert_eq!(initial_velocity(&spec, &v(&[-2.0]), None).unwrap(), v(&[-1.0]));
        assert_eq!(initial_velocity(&spec, &v(&[0.0]), None).unwrap(), v(&[0.0]));
    }

    #[test]
    fn integrate_quadratic_closed_form() {
        let spec = catalog_make("quadratic", 2, &[]).unwrap();
        for policy in [StepPolicy::Fixed, StepPolicy::adaptive()] {
            let params = DynamicsParams {
                t_max: 10.0,
                stop_grad_tol: 0.0,
                stop_step_tol: 0.0,
                policy,
                ..DynamicsParams::default()
            };
            let traj = integrate(&spec, &params, &v(&[1.0, 0.0]), None).unwrap();
            assert_eq!(traj.termination, Termination::TMax);
            let last = traj.last();
            assert_eq!(last.t, 10.0);
            let exact = (-5.0f64).exp();
            assert!((last.x.norm() - exact).abs() / exact < 1e-6, "{policy:?}");
            assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
            let phi = smooth::smooth_phi(&spec).unwrap();
            assert!(traj.samples.iter().all(|s| s.v == phi.gradient(&s.x)));
        }
    }

    #[test]
    fn integrate_quartic_closed_form() {
        let spec = catalog_make("power2p", 1, &[2.0, 0.25]).unwrap();
        let params = DynamicsParams {
            stop_grad_tol: 0.0,
            stop_step_tol: 0.0,
            sample_stride: 100,
            ..DynamicsParams::default()
        };
        let traj = integrate(&spec, &params, &v(&[1.0]), None).unwrap();
        let exact = 201f64.powf(-0.5);
        assert!((traj.last().x[0] - exact).abs() / exact < 1e-2);
    }

    #[test]
    fn l1_prox_run_reaches_zero() {
        let spec = catalog_make("l1_plus_quadratic", 1, &[]).unwrap();
        let params = DynamicsParams {
            step: 0.1,
            ..DynamicsParams::default()
        };
        let traj = integrate(&spec, &params, &v(&[3.0]), None).unwrap();
        assert_eq!(traj.termination, Termination::GradTol);
        assert_eq!(traj.last().x[0], 0.0);
        assert!(traj.summary.max_prox_equation_residual.unwrap() <= 1e-12);
        assert!(traj.summary.max_subgradient_violation.unwrap() <= 1e-12);
        assert!(traj.summary.min_cross_product >= -1e-12);
    }

    fn endpoint_error(spec: &ObjectiveSpec, h: f64) -> f64 {
        let params = DynamicsParams {
            step: h,
            t_max: 1.0,
            stop_grad_tol: 0.0,
            stop_step_tol: 0.0,
            ..DynamicsParams::default()
        };
        let traj = integrate(spec, &params, &v(&[1.0]), None).unwrap();
        (traj.last().x[0] - (-0.5f64).exp()).abs()
    }

    #[test]
    fn convergence_orders() {
        let smooth = catalog_make("quadratic", 1, &[]).unwrap();
        let ratio = endpoint_error(&smooth, 0.1) / endpoint_error(&smooth, 0.05);
        assert!(ratio >= 14.0, "rk4 ratio {ratio}");

        let prox = smooth.into_prox_mode();
        let ratio = endpoint_error(&prox, 0.01) / endpoint_error(&prox, 0.005);
        assert!((ratio - 2.0).abs() < 0.1, "prox ratio {ratio}");
    }

    #[test]
    fn large_dimension_uses_iterative_solve() {
        let n = 600;
        let spec = catalog_make("quadratic", n, &[]).unwrap();
        let x = Vector::from_fn(n, |i, _| (i as f64 * 0.01).sin());
        let s = FlowState {
            t: 0.0,
            x: x.clone(),
            v: x.clone(),
        };
        let next = step_smooth(&spec, &DynamicsParams::default(), &s, 0.1).unwrap();
        assert!((next.x - x * (-0.05f64).exp()).amax() < 1e-7);
    }

    #[test]
    fn stride_records_final_state() {
        let spec = catalog_make("quadratic", 1, &[]).unwrap();
        let params = DynamicsParams {
            t_max: 1.005,
            sample_stride: 7,
            ..DynamicsParams::default()
        };
        let traj = integrate(&spec, &params, &v(&[1.0]), None).unwrap();
        assert_eq!(traj.accepted_steps, 101);
        assert_eq!(traj.samples.len(), 1 + 101 / 7 + 1);
        assert_eq!(traj.last().t, 1.005);
        assert_eq!(traj.samples.len(), traj.diagnostics.len());
    }

    #[test]
    fn unstable_step_diverges() {
        let spec = catalog_make("double_well", 2, &[]).unwrap();
        let params = DynamicsParams {
            step: 10.0,
            ..DynamicsParams::default()
        };
        let traj = integrate(&spec, &params, &v(&[2.0, 0.0]), None).unwrap();
        assert_eq!(traj.termination, Termination::Diverged);
    }

    #[test]
    fn invalid_setup_is_rejected() {
        let spec = catalog_make("quadratic", 1, &[]).unwrap();
        let bad = DynamicsParams {
            stop_grad_tol: -1.0,
            ..DynamicsParams::default()
        };
        assert!(integrate(&spec, &bad, &v(&[1.0]), None).is_err());
        assert!(integrate(&spec, &DynamicsParams::default(), &v(&[1.0, 2.0]), None).is_err());
        let prox = catalog_make("l1_plus_quadratic", 1, &[]).unwrap();
        let adaptive = DynamicsParams {
            policy: StepPolicy::adaptive(),
            ..DynamicsParams::default()
        };
        assert!(integrate(&prox, &adaptive, &v(&[1.0]), None).is_err());
    }

    #[test]
    fn start_at_grad_tol_keeps_one_sample() {
        let spec = catalog_make("quadratic", 1, &[]).unwrap();
        let traj = integrate(&spec, &DynamicsParams::default(), &v(&[0.0]), None).unwrap();
        assert_eq!(traj.termination, Termination::GradTol);
        assert_eq!(traj.samples.len(), 1);
    }
}
