//! Discrete residuals of the dissipation identities and inequalities obeyed
//! by the continuous flow.
//!
//! Rates `ẋ`, `v̇` are forward differences of accepted steps. The continuous
//! statements being monitored are:
//!
//! * energy identity `d/dt Φ(x) + λ‖ẋ‖² + ⟨ẋ, v̇⟩ = 0`;
//! * monotonicity `⟨ẋ, v̇⟩ ≥ ρ‖v̇‖²` (cocoercivity of `∇φ`), `ρ = 0` for
//!   general convex `φ`;
//! * forcing bound `d/dt ½‖v + ∇ψ(x)‖² + ¾‖v̇‖² ≤ L(λ + L)‖ẋ‖²`;
//! * `Φ(x(t))` non-increasing;
//! * Łojasiewicz inequality `|Φ(x) − Φ(x̄)|^θ ≤ C‖x*‖` near `x̄`.

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::objective::{ConvexMode, KlProfile, ObjectiveSpec};

/// Per-step record. Rates are `Δ/h` over the step ending at `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub h: f64,
    pub obj: f64,
    /// Forward-difference energy residual, first order in `h`.
    pub energy_residual: f64,
    /// Energy identity integrated over the step with Simpson's rule on the
    /// exact rates (smooth mode); vanishes at the integrator's order.
    pub energy_defect: Option<f64>,
    pub descent: f64,
    /// `⟨Δx, Δv⟩ / h`.
    pub cross_term: f64,
    /// `⟨Δx, Δv⟩ − ρ‖Δv‖²`, smooth mode only.
    pub cocoercivity_slack: Option<f64>,
    pub forcing_slack: f64,
    pub stationarity: f64,
    pub step_norm_x: f64,
    pub step_norm_v: f64,
    /// `‖λΔx + (1+h)v⁺ − v + h∇ψ(x)‖`, prox mode only.
    pub prox_equation_residual: Option<f64>,
    /// Worst normalized probe violation of `v⁺ ∈ ∂φ(x⁺)`, prox mode only.
    pub subgradient_violation: Option<f64>,
}

/// Worst values of every monitor over all accepted steps of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorSummary {
    pub steps: usize,
    pub max_abs_energy_residual: f64,
    pub max_abs_energy_defect: Option<f64>,
    pub max_descent: f64,
    /// Minimum of `⟨Δx, Δv⟩`.
    pub min_cross_product: f64,
    pub min_cocoercivity_slack: Option<f64>,
    /// Minimum of `slack / h²`; compare against `−10`.
    pub min_cocoercivity_slack_per_h2: Option<f64>,
    pub max_forcing_violation: f64,
    pub max_prox_equation_residual: Option<f64>,
    pub max_subgradient_violation: Option<f64>,
    /// `max_k Φ(x_k) − Φ(x_0)`.
    pub max_objective_excess: f64,
}

impl MonitorSummary {
    pub fn new(mode: ConvexMode) -> Self {
        let smooth = mode == ConvexMode::Smooth;
        let opt = |v: f64, on: bool| if on { Some(v) } else { None };
        Self {
            steps: 0,
            max_abs_energy_residual: 0.0,
            max_abs_energy_defect: opt(0.0, smooth),
            max_descent: f64::NEG_INFINITY,
            min_cross_product: f64::INFINITY,
            min_cocoercivity_slack: opt(f64::INFINITY, smooth),
            min_cocoercivity_slack_per_h2: opt(f64::INFINITY, smooth),
            max_forcing_violation: 0.0,
            max_prox_equation_residual: opt(0.0, !smooth),
            max_subgradient_violation: opt(0.0, !smooth),
            max_objective_excess: 0.0,
        }
    }

    pub fn absorb(&mut self, d: &StepDiagnostics, obj0: f64) {
        fn max_opt(slot: &mut Option<f64>, v: Option<f64>) {
            if let (Some(s), Some(v)) = (slot.as_mut(), v) {
                *s = s.max(v);
            }
        }
        fn min_opt(slot: &mut Option<f64>, v: Option<f64>) {
            if let (Some(s), Some(v)) = (slot.as_mut(), v) {
                *s = s.min(v);
            }
        }
        self.steps += 1;
        self.max_abs_energy_residual = self.max_abs_energy_residual.max(d.energy_residual.abs());
        max_opt(&mut self.max_abs_energy_defect, d.energy_defect.map(f64::abs));
        self.max_descent = self.max_descent.max(d.descent);
        self.min_cross_product = self.min_cross_product.min(d.cross_term * d.h);
        min_opt(&mut self.min_cocoercivity_slack, d.cocoercivity_slack);
        min_opt(
            &mut self.min_cocoercivity_slack_per_h2,
            d.cocoercivity_slack.map(|s| s / (d.h * d.h)),
        );
        self.max_forcing_violation = self.max_forcing_violation.max(d.forcing_slack.max(0.0));
        max_opt(&mut self.max_prox_equation_residual, d.prox_equation_residual);
        max_opt(&mut self.max_subgradient_violation, d.subgradient_violation);
        self.max_objective_excess = self.max_objective_excess.max(d.obj - obj0);
    }
}

/// `(Φ⁺ − Φ)/h + λ‖Δx/h‖² + ⟨Δx/h, Δv/h⟩`.
pub fn energy_identity_residual(
    obj_next: f64,
    obj: f64,
    dx: &Vector,
    dv: &Vector,
    h: f64,
    lambda: f64,
) -> f64 {
    (obj_next - obj) / h + lambda * dx.norm_squared() / (h * h) + dx.dot(dv) / (h * h)
}

/// `(Φ⁺ − Φ)/h + (g₀ + 4g_m + g₁)/6` where `g = λ‖ẋ‖² + ⟨ẋ, v̇⟩` is evaluated
/// from the exact rates at the step start, midpoint and end.
pub fn energy_identity_defect(obj_next: f64, obj: f64, rates: [f64; 3], h: f64) -> f64 {
    (obj_next - obj) / h + (rates[0] + 4.0 * rates[1] + rates[2]) / 6.0
}

/// `⟨Δx, Δv⟩ − ρ‖Δv‖²`. With `ρ = 0` this is plain monotonicity.
pub fn cocoercivity_check(dx: &Vector, dv: &Vector, rho: f64) -> f64 {
    let dv2 = dv.norm_squared();
    let penalty = if dv2 == 0.0 { 0.0 } else { rho * dv2 };
    dx.dot(dv) - penalty
}

/// Discrete forcing inequality, `≤ 0` when satisfied:
/// `(½s⁺² − ½s²)/h + ¾‖Δv/h‖² − L(λ+L)‖Δx/h‖²` with `s = ‖v + ∇ψ(x)‖`.
pub fn forcing_slack(
    s_before: f64,
    s_after: f64,
    rate_x: f64,
    rate_v: f64,
    h: f64,
    lipschitz: f64,
    lambda: f64,
) -> f64 {
    0.5 * (s_after * s_after - s_before * s_before) / h + 0.75 * rate_v * rate_v
        - lipschitz * (lambda + lipschitz) * rate_x * rate_x
}

/// Max positive part of the forcing slack over a consecutive run of steps.
pub fn forcing_inequality_check(
    steps: &[StepDiagnostics],
    initial_stationarity: f64,
    lipschitz: f64,
    lambda: f64,
) -> f64 {
    let mut s = initial_stationarity;
    let mut worst: f64 = 0.0;
    for d in steps {
        let slack = forcing_slack(
            s,
            d.stationarity,
            d.step_norm_x,
            d.step_norm_v,
            d.h,
            lipschitz,
            lambda,
        );
        worst = worst.max(slack);
        s = d.stationarity;
    }
    worst
}

/// Largest increase of `Φ` between consecutive samples (`≤ 0` when monotone).
pub fn monotonicity_check(traj: &Trajectory) -> f64 {
    let objs: Vec<f64> = traj.samples.iter().map(|s| traj.spec.value(&s.x)).collect();
    objs.windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlReport {
    pub theta: f64,
    pub constant: f64,
    pub grid_points: usize,
    /// Points inside the `ε`/`η` neighbourhood that were tested.
    pub points_checked: usize,
    pub violations: usize,
    /// Max of `|Φ(x) − Φ(x̄)|^θ − C‖x*‖`; positive means violated.
    pub max_violation: f64,
    /// Smallest `C` for which the inequality holds on the tested points.
    pub min_constant: f64,
}

impl KlReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

const KL_ROUNDING_TOL: f64 = 1e-12;

/// Checks the Łojasiewicz inequality on `grid` with `x* = ∇φ(x) + ∇ψ(x)`.
/// Smooth mode only; see [`kl_inequality_check_along`] for prox mode.
pub fn kl_inequality_check(spec: &ObjectiveSpec, profile: &KlProfile, grid: &[Vector]) -> Result<KlReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let pairs = grid
        .iter()
        .map(|x| spec.grad_total(x).map(|g| (x.clone(), g.norm())))
        .collect::<Result<Vec<_>>>()?;
    Ok(kl_over_points(spec, profile, &pairs))
}

/// Prox-mode variant: tests the visited samples, with the certified
/// residual `‖v + ∇ψ(x)‖` standing in for `‖x*‖`.
pub fn kl_inequality_check_along(spec: &ObjectiveSpec, profile: &KlProfile, traj: &Trajectory) -> Result<KlReport> {
    if traj.samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let pairs: Vec<(Vector, f64)> = traj
        .samples
        .iter()
        .map(|s| (s.x.clone(), spec.stationarity(&s.x, &s.v)))
        .collect();
    Ok(kl_over_points(spec, profile, &pairs))
}

fn kl_over_points(spec: &ObjectiveSpec, profile: &KlProfile, points: &[(Vector, f64)]) -> KlReport {
    let mut report = KlReport {
        theta: profile.theta,
        constant: profile.constant,
        grid_points: points.len(),
        points_checked: 0,
        violations: 0,
        max_violation: f64::NEG_INFINITY,
        min_constant: 0.0,
    };
    for (x, residual) in points {
        let dist = (x - &profile.critical_point).norm();
        let gap = spec.value(x) - profile.critical_value;
        if !(dist > 0.0 && dist < profile.radius && gap > 0.0 && gap < profile.level_gap) {
            continue;
        }
        report.points_checked += 1;
        let lhs = gap.powf(profile.theta);
        let violation = lhs - profile.constant * residual;
        report.max_violation = report.max_violation.max(violation);
        if violation > KL_ROUNDING_TOL * (1.0 + lhs) {
            report.violations += 1;
        }
        let needed = if *residual > 0.0 {
            lhs / residual
        } else {
            f64::INFINITY
        };
        report.min_constant = report.min_constant.max(needed);
    }
    if report.points_checked == 0 {
        report.max_violation = 0.0;
    }
    report
}

/// `count` points strictly inside the ball `‖x − x̄‖ < ε`, excluding `x̄`.
/// Uniform lattice in 1-D, seeded uniform samples otherwise.
pub fn kl_grid(profile: &KlProfile, count: usize, seed: u64) -> Vec<Vector> {
    use rand::SeedableRng;
    let center = &profile.critical_point;
    let eps = profile.radius;
    if center.len() == 1 {
        return (0..count)
            .map(|k| {
                let s = 2.0 * (k as f64 + 0.5) / count as f64 - 1.0;
                center.add_scalar(s * eps)
            })
            .filter(|x| x != center)
            .collect();
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| crate::objective::sample_ball(&mut rng, center, eps))
        .filter(|x| x != center)
        .collect()
}

/// Max over the final 10% of samples of `‖v + ∇ψ(x)‖` and of
/// `‖Δx‖/h + ‖Δv‖/h`. A single-sample trajectory reports its initial values.
pub fn vanishing_check(traj: &Trajectory) -> Result<(f64, f64)> {
    let n = traj.samples.len();
    if n == 1 {
        let s = &traj.samples[0];
        return Ok((traj.spec.stationarity(&s.x, &s.v), 0.0));
    }
    if n < 10 {
        return Err(Error::TooFewSamples { needed: 10, got: n });
    }
    let start = n - (n / 10).max(1);
    let mut stationarity: f64 = 0.0;
    let mut step: f64 = 0.0;
    for k in start..n {
        let s = &traj.samples[k];
        stationarity = stationarity.max(traj.spec.stationarity(&s.x, &s.v));
        if let Some(d) = &traj.diagnostics[k] {
            step = step.max(d.step_norm_x + d.step_norm_v);
        }
    }
    Ok((stationarity, step))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::objective::{catalog_make, ConvexTerm, PowerNorm, SquaredNorm, Zero};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn energy_residual_euler_step() {
        // φ = 0, ψ = ½x², λ = 1, h = 0.1, x = 1 → explicit Euler gives x⁺ = 0.9
        let obj = 0.5;
        let obj_next = 0.5 * 0.81;
        let r = energy_identity_residual(obj_next, obj, &v(&[-0.1]), &v(&[0.0]), 0.1, 1.0);
        assert!((r - 0.05).abs() < 1e-12);
        assert_eq!(energy_identity_residual(1.0, 1.0, &v(&[0.0]), &v(&[0.0]), 0.1, 1.0), 0.0);
    }

    #[test]
    fn energy_defect_vanishes_for_exact_rates() {
        // ẋ = −x/2 with φ = ½x², ψ = 0, λ = 1: Φ = ½x², g = λ‖ẋ‖² + ⟨ẋ, v̇⟩ = x²/2
        let h = 0.1f64;
        let x = |t: f64| (-t / 2.0).exp();
        let g = |t: f64| x(t).powi(2) / 2.0;
        let d = energy_identity_defect(0.5 * x(h).powi(2), 0.5, [g(0.0), g(h / 2.0), g(h)], h);
        // Simpson error for e^{−t}: h⁴/2880 · max|f⁗|
        assert!(d.abs() < h.powi(4) / 2880.0 * 0.5 * 1.01, "{d}");
    }

    #[test]
    fn cocoercivity_examples() {
        let dx = v(&[0.3, -0.2]);
        assert_eq!(cocoercivity_check(&dx, &dx, 1.0), 0.0);
        assert_eq!(cocoercivity_check(&dx, &v(&[0.0, 0.0]), f64::INFINITY), 0.0);
        assert!(cocoercivity_check(&dx, &(&dx * 2.0), 1.0) < 0.0);
    }

    #[test]
    fn forcing_exact_linear_flow() {
        // φ = 0, ψ = ½x², λ = 1, L = 1: x = e^{−t}, v ≡ 0, s = |x|
        let h = 1e-3;
        let steps: Vec<StepDiagnostics> = (1..=2000)
            .map(|k| {
                let t = k as f64 * h;
                let x = (-t).exp();
                let x_prev = (-(t - h)).exp();
                diag_fixture(t, h, x, (x - x_prev).abs() / h, 0.0)
            })
            .collect();
        assert_eq!(forcing_inequality_check(&steps, 1.0, 1.0, 1.0), 0.0);
        // margin: d/dt ½x² = −x² against 2x² leaves slack ≈ −3x²
        let slack = forcing_slack(1.0, (-h).exp(), ((-h).exp() - 1.0).abs() / h, 0.0, h, 1.0, 1.0);
        assert!((slack + 3.0).abs() < 1e-2);
        // stationary
        assert_eq!(forcing_slack(0.0, 0.0, 0.0, 0.0, h, 1.0, 1.0), 0.0);
    }

    fn diag_fixture(t: f64, h: f64, s: f64, rate_x: f64, rate_v: f64) -> StepDiagnostics {
        StepDiagnostics {
            t,
            h,
            obj: 0.0,
            energy_residual: 0.0,
            energy_defect: None,
            descent: 0.0,
            cross_term: 0.0,
            cocoercivity_slack: None,
            forcing_slack: 0.0,
            stationarity: s,
            step_norm_x: rate_x,
            step_norm_v: rate_v,
            prox_equation_residual: None,
            subgradient_violation: None,
        }
    }

    fn smooth_1d(psi: impl crate::objective::SmoothTerm + 'static) -> ObjectiveSpec {
        ObjectiveSpec::new("fixture", Arc::new(psi), ConvexTerm::Smooth(Arc::new(Zero::new(1)))).unwrap()
    }

    fn profile(theta: f64, constant: f64) -> KlProfile {
        KlProfile {
            theta,
            constant,
            radius: 1.0,
            level_gap: 10.0,
            critical_point: Vector::zeros(1),
            critical_value: 0.0,
        }
    }

    #[test]
    fn kl_tight_profiles() {
        // Φ = x², θ = ½, C = ½: |x| vs ½|2x|
        let spec = smooth_1d(SquaredNorm::new(1, 2.0));
        let p = profile(0.5, 0.5);
        let report = kl_inequality_check(&spec, &p, &kl_grid(&p, 1000, 0)).unwrap();
        assert_eq!(report.points_checked, 1000);
        assert!(report.passed(), "{report:?}");
        assert!((report.min_constant - 0.5).abs() < 1e-12);

        // Φ = x⁴, θ = ¾, C = ¼: |x|³ vs ¼·4|x|³
        let spec = smooth_1d(PowerNorm::new(1, 2, 1.0, 1.0).unwrap());
        let p = profile(0.75, 0.25);
        let report = kl_inequality_check(&spec, &p, &kl_grid(&p, 1000, 0)).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.max_violation.abs() < 1e-12);
    }

    #[test]
    fn kl_wrong_exponent_fails_away_from_origin() {
        // Φ = x², θ = ¾, C = ½: |x|^{3/2} ≤ |x| only for |x| ≤ 1
        let spec = smooth_1d(SquaredNorm::new(1, 2.0));
        let mut p = profile(0.75, 0.5);
        p.radius = 2.0;
        let report = kl_inequality_check(&spec, &p, &kl_grid(&p, 1000, 0)).unwrap();
        assert!(report.violations > 0);
        assert!(report.max_violation > 0.0);
    }

    #[test]
    fn kl_empty_grid_and_filter() {
        let spec = catalog_make("quadratic", 2, &[]).unwrap();
        let p = spec.kl_profile.clone().unwrap();
        assert!(matches!(kl_inequality_check(&spec, &p, &[]), Err(Error::EmptyGrid)));
        // x̄ itself and far points are filtered out
        let report = kl_inequality_check(&spec, &p, &[Vector::zeros(2), v(&[10.0, 0.0])]).unwrap();
        assert_eq!(report.points_checked, 0);
        assert!(report.passed());
    }

    #[test]
    fn kl_grid_stays_inside() {
        let spec = catalog_make("quadratic", 3, &[]).unwrap();
        let p = spec.kl_profile.clone().unwrap();
        let grid = kl_grid(&p, 1000, 9);
        assert_eq!(grid.len(), 1000);
        assert!(grid.iter().all(|x| x.norm() < p.radius && x.norm() > 0.0));
    }
}
