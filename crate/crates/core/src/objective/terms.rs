//! Concrete building blocks for `φ` and `ψ`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

use super::{newton_prox, ProxConvex, SmoothConvex, SmoothTerm};

/// The zero function. Usable as either term.
#[derive(Clone, Debug)]
pub struct Zero {
    dim: usize,
}

impl Zero {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SmoothTerm for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &Vector) -> Vector {
        Vector::zeros(self.dim)
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
}

impl SmoothConvex for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &Vector) -> Vector {
        Vector::zeros(self.dim)
    }
    fn hessian_vec(&self, _x: &Vector, _d: &Vector) -> Vector {
        Vector::zeros(self.dim)
    }
    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::zeros(self.dim, self.dim)
    }
    fn inv_lipschitz(&self) -> f64 {
        f64::INFINITY
    }
}

impl ProxConvex for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }
    fn prox(&self, _gamma: f64, y: &Vector) -> Result<Vector> {
        Ok(y.clone())
    }
    fn min_norm_subgradient(&self, _x: &Vector) -> Option<Vector> {
        Some(Vector::zeros(self.dim))
    }
}

/// `½ s ‖x − c‖²`.
#[derive(Clone, Debug)]
pub struct SquaredNorm {
    scale: f64,
    center: Vector,
}

impl SquaredNorm {
    pub fn new(dim: usize, scale: f64) -> Self {
        Self::centered(scale, Vector::zeros(dim))
    }

    pub fn centered(scale: f64, center: Vector) -> Self {
        Self { scale, center }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl SmoothTerm for SquaredNorm {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        0.5 * self.scale * (x - &self.center).norm_squared()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        (x - &self.center) * self.scale
    }
    fn lipschitz(&self) -> f64 {
        self.scale.abs()
    }
}

impl SmoothConvex for SquaredNorm {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        SmoothTerm::value(self, x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        SmoothTerm::gradient(self, x)
    }
    fn hessian_vec(&self, _x: &Vector, d: &Vector) -> Vector {
        d * self.scale
    }
    fn hessian(&self, _x: &Vector) -> Matrix {
        let n = self.center.len();
        Matrix::identity(n, n) * self.scale
    }
    fn inv_lipschitz(&self) -> f64 {
        1.0 / self.scale
    }
}

impl ProxConvex for SquaredNorm {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        SmoothTerm::value(self, x)
    }
    fn prox(&self, gamma: f64, y: &Vector) -> Result<Vector> {
        let gs = gamma * self.scale;
        Ok((y + &self.center * gs) / (1.0 + gs))
    }
    fn min_norm_subgradient(&self, x: &Vector) -> Option<Vector> {
        Some(SmoothTerm::gradient(self, x))
    }
}

/// `s ‖x‖^{2p}` for integer `p ≥ 1`; the gradient Lipschitz constant is
/// taken on the ball of radius `region_radius`.
#[derive(Clone, Debug)]
pub struct PowerNorm {
    dim: usize,
    p: u32,
    scale: f64,
    region_radius: f64,
}

impl PowerNorm {
    pub fn new(dim: usize, p: u32, scale: f64, region_radius: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("power2p needs p >= 1".into()));
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power2p scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            dim,
            p,
            scale,
            region_radius,
        })
    }

    fn exponent(&self) -> i32 {
        2 * self.p as i32
    }

    fn lipschitz_bound(&self) -> f64 {
        let k = self.exponent() as f64;
        self.scale * k * (k - 1.0) * self.region_radius.powi(self.exponent() - 2)
    }
}

impl SmoothTerm for PowerNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        self.scale * x.norm_squared().powi(self.p as i32)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let k = self.exponent() as f64;
        x * (self.scale * k * x.norm_squared().powi(self.p as i32 - 1))
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz_bound()
    }
}

impl SmoothConvex for PowerNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        SmoothTerm::value(self, x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        SmoothTerm::gradient(self, x)
    }
    fn hessian_vec(&self, x: &Vector, d: &Vector) -> Vector {
        // ∇²(s r^k) = s k r^{k−2} I + s k (k−2) r^{k−4} x xᵀ
        let k = self.exponent() as f64;
        let r2 = x.norm_squared();
        let p = self.p as i32;
        let mut out = d * (self.scale * k * r2.powi(p - 1));
        if p >= 2 {
            out += x * (self.scale * k * (k - 2.0) * r2.powi(p - 2) * x.dot(d));
        }
        out
    }
    fn inv_lipschitz(&self) -> f64 {
        1.0 / self.lipschitz_bound()
    }
}

/// `¼‖x‖⁴ − ½‖x‖²`, nonconvex with a ring of minimizers at `‖x‖ = 1`.
#[derive(Clone, Debug)]
pub struct DoubleWell {
    dim: usize,
    region_radius: f64,
}

impl DoubleWell {
    pub fn new(dim: usize, region_radius: f64) -> Self {
        Self { dim, region_radius }
    }
}

impl SmoothTerm for DoubleWell {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        let r2 = x.norm_squared();
        0.25 * r2 * r2 - 0.5 * r2
    }
    fn gradient(&self, x: &Vector) -> Vector {
        x * (x.norm_squared() - 1.0)
    }
    fn lipschitz(&self) -> f64 {
        // Hessian (r² − 1) I + 2 x xᵀ has spectrum in [−1, 3R² − 1]
        (3.0 * self.region_radius * self.region_radius - 1.0).max(1.0)
    }
}

/// Chained Rosenbrock `Σ b(x_{i+1} − x_i²)² + (1 − x_i)²`.
#[derive(Clone, Debug)]
pub struct Rosenbrock {
    dim: usize,
    b: f64,
    region_radius: f64,
}

impl Rosenbrock {
    pub fn new(dim: usize, b: f64, region_radius: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(
                "rosenbrock needs dimension >= 2".into(),
            ));
        }
        if !(b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rosenbrock b must be positive, got {b}"
            )));
        }
        Ok(Self {
            dim,
            b,
            region_radius,
        })
    }
}

impl SmoothTerm for Rosenbrock {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        (0..self.dim - 1)
            .map(|i| {
                let a = x[i + 1] - x[i] * x[i];
                self.b * a * a + (1.0 - x[i]).powi(2)
            })
            .sum()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim);
        for i in 0..self.dim - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] += -4.0 * self.b * x[i] * a - 2.0 * (1.0 - x[i]);
            g[i + 1] += 2.0 * self.b * a;
        }
        g
    }
    fn lipschitz(&self) -> f64 {
        // Gershgorin bound on the Hessian over the ball of radius R
        let (b, r) = (self.b, self.region_radius);
        2.0 + 12.0 * b * r * r + 4.0 * b * r + 2.0 * b + 8.0 * b * r
    }
}

/// `w ‖x‖₁`.
#[derive(Clone, Debug)]
pub struct L1Norm {
    dim: usize,
    weight: f64,
}

impl L1Norm {
    pub fn new(dim: usize, weight: f64) -> Self {
        Self { dim, weight }
    }
}

impl ProxConvex for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        self.weight * x.lp_norm(1)
    }
    fn prox(&self, gamma: f64, y: &Vector) -> Result<Vector> {
        let t = gamma * self.weight;
        Ok(y.map(|yi| yi.signum() * (yi.abs() - t).max(0.0)))
    }
    fn min_norm_subgradient(&self, x: &Vector) -> Option<Vector> {
        Some(x.map(|xi| if xi == 0.0 { 0.0 } else { self.weight * xi.signum() }))
    }
}

/// Componentwise Huber function with threshold `δ`; `∇φ` is `1/δ`-Lipschitz.
#[derive(Clone, Debug)]
pub struct Huber {
    dim: usize,
    delta: f64,
}

impl Huber {
    pub fn new(dim: usize, delta: f64) -> Self {
        Self { dim, delta }
    }
}

impl SmoothConvex for Huber {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        let d = self.delta;
        x.iter()
            .map(|&xi| {
                if xi.abs() <= d {
                    xi * xi / (2.0 * d)
                } else {
                    xi.abs() - 0.5 * d
                }
            })
            .sum()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let d = self.delta;
        x.map(|xi| if xi.abs() <= d { xi / d } else { xi.signum() })
    }
    fn hessian_vec(&self, x: &Vector, dir: &Vector) -> Vector {
        let d = self.delta;
        x.zip_map(dir, |xi, di| if xi.abs() <= d { di / d } else { 0.0 })
    }
    fn hessian(&self, x: &Vector) -> Matrix {
        let d = self.delta;
        Matrix::from_diagonal(&x.map(|xi| if xi.abs() <= d { 1.0 / d } else { 0.0 }))
    }
    fn inv_lipschitz(&self) -> f64 {
        self.delta
    }
}

/// Proximal map of a smooth convex function evaluated by Newton's method.
#[derive(Clone, Debug)]
pub struct NewtonProx {
    inner: Arc<dyn SmoothConvex>,
}

impl NewtonProx {
    pub fn new(inner: Arc<dyn SmoothConvex>) -> Self {
        Self { inner }
    }
}

impl ProxConvex for NewtonProx {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.inner.value(x)
    }
    fn prox(&self, gamma: f64, y: &Vector) -> Result<Vector> {
        newton_prox(self.inner.as_ref(), gamma, y)
    }
    fn min_norm_subgradient(&self, x: &Vector) -> Option<Vector> {
        Some(self.inner.gradient(x))
    }
}

type ValueFn = dyn Fn(&Vector) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Vector) -> Vector + Send + Sync;

/// A user-supplied `ψ` built from closures.
#[derive(Clone)]
pub struct SmoothFn {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
    lipschitz: f64,
}

impl SmoothFn {
    pub fn new(
        dim: usize,
        lipschitz: f64,
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            lipschitz,
        }
    }
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFn")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl SmoothTerm for SmoothFn {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn soft_threshold() {
        let l1 = L1Norm::new(3, 1.0);
        let u = l1.prox(1.5, &v(&[3.0, -1.0, -2.0])).unwrap();
        assert_eq!(u, v(&[1.5, 0.0, -0.5]));
        assert_eq!(l1.min_norm_subgradient(&v(&[0.0, -2.0, 1.0])).unwrap(), v(&[0.0, -1.0, 1.0]));
    }

    #[test]
    fn power_norm_hessian_matches_finite_differences() {
        let f = PowerNorm::new(3, 3, 0.5, 2.0).unwrap();
        let x = v(&[0.3, -0.7, 0.5]);
        let d = v(&[1.0, 0.5, -0.25]);
        let h = 1e-6;
        let fd = (SmoothConvex::gradient(&f, &(&x + &d * h)) - SmoothConvex::gradient(&f, &(&x - &d * h)))
            / (2.0 * h);
        assert!((fd - f.hessian_vec(&x, &d)).norm() < 1e-7);
    }

    #[test]
    fn rosenbrock_minimum_and_gradient() {
        let r = Rosenbrock::new(3, 100.0, 2.0).unwrap();
        let ones = v(&[1.0, 1.0, 1.0]);
        assert_eq!(r.value(&ones), 0.0);
        assert_eq!(r.gradient(&ones), Vector::zeros(3));
        assert!(Rosenbrock::new(1, 100.0, 2.0).is_err());
    }

    #[test]
    fn huber_pieces() {
        let h = Huber::new(2, 0.5);
        let x = v(&[0.25, -2.0]);
        assert!((h.value(&x) - (0.0625 + 1.75)).abs() < 1e-15);
        assert_eq!(h.gradient(&x), v(&[0.5, -1.0]));
        assert_eq!(h.hessian(&x), Matrix::from_diagonal(&v(&[2.0, 0.0])));
    }

    #[test]
    fn double_well_critical_ring() {
        let w = DoubleWell::new(2, 3.0);
        assert_eq!(w.gradient(&v(&[0.6, 0.8])), Vector::zeros(2));
        assert_eq!(w.lipschitz(), 26.0);
    }
}
