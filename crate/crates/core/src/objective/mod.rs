//! Composite objectives `Φ = φ + ψ`.
//!
//! `φ` is proper, convex and lower semicontinuous and comes in one of two
//! flavours: differentiable with a Hessian (smooth mode), or accessed only
//! through its proximal map (prox mode). `ψ` is smooth, possibly nonconvex,
//! with an `L`-Lipschitz gradient on the declared region.

mod catalog;
mod terms;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, solve_spd, Matrix, Vector};

pub use catalog::{catalog_make, catalog_make_in_region, CATALOG_NAMES, DEFAULT_REGION_RADIUS};
pub use terms::{
    DoubleWell, Huber, L1Norm, NewtonProx, PowerNorm, Rosenbrock, SmoothFn, SquaredNorm, Zero,
};
pub use validate::{sample_ball, validate_oracles, OracleCheck, OracleReport};

/// The smooth, possibly nonconvex part `ψ`.
pub trait SmoothTerm: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    /// Lipschitz constant of `∇ψ`, valid on the spec's region.
    fn lipschitz(&self) -> f64;
}

/// A convex `φ` with gradient and Hessian oracles.
pub trait SmoothConvex: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian_vec(&self, x: &Vector, d: &Vector) -> Vector;

    fn hessian(&self, x: &Vector) -> Matrix {
        let n = self.dim();
        let mut h = Matrix::zeros(n, n);
        let mut e = Vector::zeros(n);
        for j in 0..n {
            e[j] = 1.0;
            h.set_column(j, &self.hessian_vec(x, &e));
            e[j] = 0.0;
        }
        h
    }

    /// `ρ` such that `∇φ` is `1/ρ`-Lipschitz. Infinite for affine `φ`.
    fn inv_lipschitz(&self) -> f64;
}

/// A convex `φ` accessed through its proximal map.
pub trait ProxConvex: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    /// May be `+∞` outside `dom φ`.
    fn value(&self, x: &Vector) -> f64;
    /// `argmin_u ½‖u − y‖² + γ φ(u)`.
    fn prox(&self, gamma: f64, y: &Vector) -> Result<Vector>;
    /// Minimal-norm element of `∂φ(x)` when it is available in closed form.
    fn min_norm_subgradient(&self, _x: &Vector) -> Option<Vector> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvexMode {
    Smooth,
    Prox,
}

impl fmt::Display for ConvexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexMode::Smooth => write!(f, "smooth"),
            ConvexMode::Prox => write!(f, "prox"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ConvexTerm {
    Smooth(Arc<dyn SmoothConvex>),
    Prox(Arc<dyn ProxConvex>),
}

impl ConvexTerm {
    pub fn mode(&self) -> ConvexMode {
        match self {
            ConvexTerm::Smooth(_) => ConvexMode::Smooth,
            ConvexTerm::Prox(_) => ConvexMode::Prox,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexTerm::Smooth(f) => f.dim(),
            ConvexTerm::Prox(f) => f.dim(),
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            ConvexTerm::Smooth(f) => f.value(x),
            ConvexTerm::Prox(f) => f.value(x),
        }
    }

    /// `ρ` in smooth mode, `None` in prox mode.
    pub fn inv_lipschitz(&self) -> Option<f64> {
        match self {
            ConvexTerm::Smooth(f) => Some(f.inv_lipschitz()),
            ConvexTerm::Prox(_) => None,
        }
    }

    pub fn prox(&self, gamma: f64, y: &Vector) -> Result<Vector> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "prox step gamma must be positive, got {gamma}"
            )));
        }
        match self {
            ConvexTerm::Prox(f) => f.prox(gamma, y),
            ConvexTerm::Smooth(_) => Err(Error::WrongMode {
                required: ConvexMode::Prox,
            }),
        }
    }
}

/// Łojasiewicz data at a critical point:
/// `|Φ(x) − Φ(x̄)|^θ ≤ C‖x*‖` for `x*` in the limiting subdifferential,
/// whenever `‖x − x̄‖ < ε` and `Φ(x̄) < Φ(x) < Φ(x̄) + η`.
#[derive(Clone, Debug, PartialEq)]
pub struct KlProfile {
    pub theta: f64,
    pub constant: f64,
    pub radius: f64,
    pub level_gap: f64,
    pub critical_point: Vector,
    pub critical_value: f64,
}

impl KlProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Łojasiewicz exponent must lie in (0,1), got {}",
                self.theta
            )));
        }
        for (name, value) in [
            ("constant", self.constant),
            ("radius", self.radius),
            ("level_gap", self.level_gap),
        ] {
            if !(value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "KL {name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Desingularizing function `s ↦ C s^{1−θ}`.
    pub fn desingularizer(&self, s: f64) -> f64 {
        self.constant * s.powf(1.0 - self.theta)
    }
}

#[derive(Clone, Debug)]
pub struct ObjectiveSpec {
    pub name: String,
    pub smooth: Arc<dyn SmoothTerm>,
    pub convex: ConvexTerm,
    pub coercive: bool,
    /// Declared lower bound of `Φ`.
    pub infimum: Option<f64>,
    pub critical_set: Vec<CriticalSet>,
    pub kl_profile: Option<KlProfile>,
    /// Radius of the ball about the origin on which `L` and `ρ` are valid.
    pub region_radius: f64,
}

impl ObjectiveSpec {
    pub fn new(
        name: impl Into<String>,
        smooth: Arc<dyn SmoothTerm>,
        convex: ConvexTerm,
    ) -> Result<Self> {
        if smooth.dim() != convex.dim() {
            return Err(Error::DimensionMismatch {
                expected: smooth.dim(),
                got: convex.dim(),
            });
        }
        if smooth.dim() == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            smooth,
            convex,
            coercive: false,
            infimum: None,
            critical_set: Vec::new(),
            kl_profile: None,
            region_radius: f64::INFINITY,
        })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn mode(&self) -> ConvexMode {
        self.convex.mode()
    }

    pub fn lipschitz(&self) -> f64 {
        self.smooth.lipschitz()
    }

    /// Replaces a smooth convex term by its Newton-evaluated proximal map.
    pub fn into_prox_mode(mut self) -> Self {
        if let ConvexTerm::Smooth(f) = &self.convex {
            self.convex = ConvexTerm::Prox(Arc::new(NewtonProx::new(f.clone())));
        }
        self
    }

    pub fn eval_objective(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(self.value(x))
    }

    pub(crate) fn value(&self, x: &Vector) -> f64 {
        self.convex.value(x) + self.smooth.value(x)
    }

    /// `∇φ(x) + ∇ψ(x)`; smooth mode only.
    pub fn grad_total(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x)?;
        match &self.convex {
            ConvexTerm::Smooth(f) => Ok(f.gradient(x) + self.smooth.gradient(x)),
            ConvexTerm::Prox(_) => Err(Error::WrongMode {
                required: ConvexMode::Smooth,
            }),
        }
    }

    pub fn prox_convex(&self, gamma: f64, y: &Vector) -> Result<Vector> {
        check_dim(self.dim(), y)?;
        self.convex.prox(gamma, y)
    }

    /// `‖v + ∇ψ(x)‖`, an upper bound on `dist(0, ∂_L Φ(x))` when `v ∈ ∂φ(x)`.
    pub fn subgradient_residual(&self, x: &Vector, v: &Vector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        check_dim(self.dim(), v)?;
        Ok(self.stationarity(x, v))
    }

    pub(crate) fn stationarity(&self, x: &Vector, v: &Vector) -> f64 {
        (v + self.smooth.gradient(x)).norm()
    }

    /// `v̄ = −∇ψ(x̄)`, the limit of `v` at a critical point `x̄`.
    pub fn limit_velocity(&self, x_bar: &Vector) -> Vector {
        -self.smooth.gradient(x_bar)
    }

    /// Nearest declared critical point within `tol` of `x`, if any.
    pub fn nearest_critical_point(&self, x: &Vector, tol: f64) -> Option<Vector> {
        self.critical_set
            .iter()
            .map(|c| c.project(x))
            .map(|c| {
                let d = (&c - x).norm();
                (c, d)
            })
            .filter(|(_, d)| *d <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c)
    }
}

/// A connected piece of the critical set of `Φ`.
#[derive(Clone, Debug, PartialEq)]
pub enum CriticalSet {
    Point(Vector),
    Sphere { center: Vector, radius: f64 },
}

impl CriticalSet {
    /// Closest member of the set to `x`; the center direction is arbitrary
    /// when `x` sits at the center of a sphere.
    pub fn project(&self, x: &Vector) -> Vector {
        match self {
            CriticalSet::Point(c) => c.clone(),
            CriticalSet::Sphere { center, radius } => {
                let d = x - center;
                let r = d.norm();
                if r > 0.0 {
                    center + d * (radius / r)
                } else {
                    let mut e = Vector::zeros(center.len());
                    e[0] = *radius;
                    center + e
                }
            }
        }
    }

    /// A few representative members, for tests and equilibrium checks.
    pub fn representatives(&self) -> Vec<Vector> {
        match self {
            CriticalSet::Point(c) => vec![c.clone()],
            CriticalSet::Sphere { center, radius } => (0..center.len())
                .flat_map(|i| {
                    [1.0, -1.0].map(|sign| {
                        let mut e = center.clone();
                        e[i] += sign * radius;
                        e
                    })
                })
                .collect(),
        }
    }
}

/// Relative tolerance for the prox fixed-point test `prox_γφ(x + γv) = x`.
pub const CERTIFICATION_TOL: f64 = 1e-12;

/// Checks `v ∈ ∂φ(x)`.
///
/// Smooth mode compares against `∇φ(x)`. Prox mode uses the resolvent
/// characterization `v ∈ ∂φ(x) ⇔ prox_φ(x + v) = x`.
pub fn certify_subgradient(convex: &ConvexTerm, x: &Vector, v: &Vector) -> Result<bool> {
    match convex {
        ConvexTerm::Smooth(f) => {
            let g = f.gradient(x);
            Ok((g - v).norm() <= CERTIFICATION_TOL * (1.0 + v.norm()))
        }
        ConvexTerm::Prox(f) => {
            if !f.value(x).is_finite() {
                return Ok(false);
            }
            let u = f.prox(1.0, &(x + v))?;
            Ok((u - x).norm() <= CERTIFICATION_TOL * (1.0 + x.norm() + v.norm()))
        }
    }
}

/// Eight deterministic probe points around `x` at scales from `1e-3` to `10`.
pub fn probe_points(x: &Vector) -> Vec<Vector> {
    let n = x.len();
    let scale = 1.0 + x.amax();
    (0..8)
        .map(|k| {
            let mut d = Vector::from_fn(n, |i, _| ((k * 5 + 3 * i + 1) as f64 * 0.913).sin());
            let norm = d.norm();
            if norm > 0.0 {
                d /= norm;
            }
            let magnitude = 10f64.powi(k as i32 % 4 - 3) * scale * if k >= 4 { 10.0 } else { 1.0 };
            x + d * magnitude
        })
        .collect()
}

/// Worst normalized violation of `φ(z) ≥ φ(x) + ⟨v, z − x⟩` over `probes`.
pub fn subgradient_probe_violation(convex: &ConvexTerm, x: &Vector, v: &Vector, probes: &[Vector]) -> f64 {
    let fx = convex.value(x);
    probes
        .iter()
        .map(|z| {
            let fz = convex.value(z);
            if !fz.is_finite() {
                return 0.0;
            }
            let step = z - x;
            let linear = v.dot(&step);
            let gap = fx + linear - fz;
            gap.max(0.0) / (1.0 + fz.abs() + fx.abs() + linear.abs())
        })
        .fold(0.0, f64::max)
}

/// Newton's method on `u + γ∇φ(u) = y` with backtracking on the strongly
/// convex prox objective.
pub(crate) fn newton_prox(f: &dyn SmoothConvex, gamma: f64, y: &Vector) -> Result<Vector> {
    let n = f.dim();
    let tol = 1e-12 * (1.0 + y.norm());
    let objective = |u: &Vector| 0.5 * (u - y).norm_squared() + gamma * f.value(u);
    let mut u = y.clone();
    for _ in 0..100 {
        let residual = &u - y + f.gradient(&u) * gamma;
        if residual.norm() <= tol {
            return Ok(u);
        }
        let jac = Matrix::identity(n, n) + f.hessian(&u) * gamma;
        let step = solve_spd(jac, &residual)?;
        let current = objective(&u);
        let mut t = 1.0;
        loop {
            let trial = &u - &step * t;
            if objective(&trial) <= current || t < 1e-12 {
                u = trial;
                break;
            }
            t *= 0.5;
        }
    }
    let residual = &u - y + f.gradient(&u) * gamma;
    if residual.norm() <= tol * 10.0 {
        Ok(u)
    } else {
        Err(Error::Prox(format!(
            "Newton prox stalled with residual {:e}",
            residual.norm()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn spec(smooth: impl SmoothTerm + 'static, convex: ConvexTerm) -> ObjectiveSpec {
        ObjectiveSpec::new("fixture", Arc::new(smooth), convex).unwrap()
    }

    #[test]
    fn eval_objective_examples() {
        let s = spec(SquaredNorm::new(2, 1.0), ConvexTerm::Smooth(Arc::new(Zero::new(2))));
        assert_eq!(s.eval_objective(&v(&[1.0, 1.0])).unwrap(), 1.0);

        let s = spec(Zero::new(2), ConvexTerm::Prox(Arc::new(L1Norm::new(2, 1.0))));
        assert_eq!(s.eval_objective(&v(&[-2.0, 3.0])).unwrap(), 5.0);

        let s = spec(
            PowerNorm::new(2, 2, 0.25, 1.0).unwrap(),
            ConvexTerm::Smooth(Arc::new(SquaredNorm::new(2, 1.0))),
        );
        assert_eq!(s.eval_objective(&v(&[1.0, 0.0])).unwrap(), 0.75);

        assert!(matches!(
            s.eval_objective(&v(&[1.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn grad_total_examples() {
        let s = spec(
            SquaredNorm::new(2, 1.0),
            ConvexTerm::Smooth(Arc::new(SquaredNorm::new(2, 1.0))),
        );
        assert_eq!(s.grad_total(&v(&[1.0, 2.0])).unwrap(), v(&[2.0, 4.0]));

        let s = spec(
            PowerNorm::new(1, 2, 0.25, 3.0).unwrap(),
            ConvexTerm::Smooth(Arc::new(Zero::new(1))),
        );
        assert_eq!(s.grad_total(&v(&[2.0])).unwrap(), v(&[8.0]));

        let prox = spec(Zero::new(1), ConvexTerm::Prox(Arc::new(L1Norm::new(1, 1.0))));
        assert!(matches!(prox.grad_total(&v(&[1.0])), Err(Error::WrongMode { .. })));
    }

    #[test]
    fn prox_convex_examples() {
        let s = spec(Zero::new(1), ConvexTerm::Prox(Arc::new(L1Norm::new(1, 1.0))));
        assert_eq!(s.prox_convex(1.0, &v(&[3.0])).unwrap(), v(&[2.0]));
        assert_eq!(s.prox_convex(1.0, &v(&[0.5])).unwrap(), v(&[0.0]));
        assert!(s.prox_convex(0.0, &v(&[0.5])).is_err());
        assert!(s.prox_convex(-1.0, &v(&[0.5])).is_err());

        // closed form y / (1 + γ)
        let s = spec(Zero::new(2), ConvexTerm::Prox(Arc::new(SquaredNorm::new(2, 1.0))));
        let y = v(&[3.0, -3.0]);
        assert_eq!(s.prox_convex(2.0, &y).unwrap(), &y / 3.0);
    }

    #[test]
    fn newton_prox_matches_closed_form() {
        let s = spec(Zero::new(2), ConvexTerm::Smooth(Arc::new(SquaredNorm::new(2, 1.0))))
            .into_prox_mode();
        let u = s.prox_convex(2.0, &v(&[3.0, -3.0])).unwrap();
        assert!((u - v(&[1.0, -1.0])).norm() < 1e-12);

        let huber = spec(Zero::new(1), ConvexTerm::Smooth(Arc::new(Huber::new(1, 1.0))))
            .into_prox_mode();
        // prox of Huber(δ=1) with γ=1 at y=5: u = y − γ for |y| > δ + γ
        let u = huber.prox_convex(1.0, &v(&[5.0])).unwrap();
        assert!((u[0] - 4.0).abs() < 1e-12);
        // inside the quadratic zone: u = y / (1 + γ/δ)
        let u = huber.prox_convex(1.0, &v(&[1.0])).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn subgradient_residual_examples() {
        let s = spec(Zero::new(1), ConvexTerm::Smooth(Arc::new(SquaredNorm::new(1, 1.0))));
        assert_eq!(s.subgradient_residual(&v(&[1.0]), &v(&[1.0])).unwrap(), 1.0);

        let shifted = SquaredNorm::centered(1.0, v(&[1.0]));
        let s = spec(shifted, ConvexTerm::Prox(Arc::new(L1Norm::new(1, 1.0))));
        let r = s.subgradient_residual(&v(&[0.5]), &v(&[1.0])).unwrap();
        assert!((r - (1.0f64 + (0.5 - 1.0)).abs()).abs() < 1e-15);

        // x̄ = 1 is critical for ψ = ½(x−1)² with φ = 0 and v = −∇ψ(x̄) = 0
        let s = spec(
            SquaredNorm::centered(1.0, v(&[1.0])),
            ConvexTerm::Smooth(Arc::new(Zero::new(1))),
        );
        assert_eq!(s.subgradient_residual(&v(&[1.0]), &v(&[0.0])).unwrap(), 0.0);
        assert!(s.subgradient_residual(&v(&[1.0, 2.0]), &v(&[0.0])).is_err());
    }

    #[test]
    fn certification_on_kinks() {
        let l1 = ConvexTerm::Prox(Arc::new(L1Norm::new(1, 1.0)));
        assert!(certify_subgradient(&l1, &v(&[3.0]), &v(&[1.0])).unwrap());
        assert!(!certify_subgradient(&l1, &v(&[3.0]), &v(&[0.5])).unwrap());
        assert!(certify_subgradient(&l1, &v(&[0.0]), &v(&[0.5])).unwrap());
        assert!(certify_subgradient(&l1, &v(&[0.0]), &v(&[-1.0])).unwrap());
        assert!(!certify_subgradient(&l1, &v(&[0.0]), &v(&[1.5])).unwrap());

        let x = v(&[0.0]);
        assert_eq!(subgradient_probe_violation(&l1, &x, &v(&[0.5]), &probe_points(&x)), 0.0);
        assert!(subgradient_probe_violation(&l1, &x, &v(&[1.5]), &probe_points(&x)) > 0.0);
    }

    #[test]
    fn kl_profile_validation() {
        let mut p = KlProfile {
            theta: 0.5,
            constant: 1.0,
            radius: 1.0,
            level_gap: 1.0,
            critical_point: Vector::zeros(1),
            critical_value: 0.0,
        };
        assert!(p.validate().is_ok());
        assert_eq!(p.desingularizer(4.0), 2.0);
        p.theta = 1.0;
        assert!(p.validate().is_err());
        p.theta = 0.5;
        p.level_gap = 0.0;
        assert!(p.validate().is_err());
    }
}
