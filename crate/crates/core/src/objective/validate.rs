//! Randomized checks of the oracle invariants: gradient consistency,
//! Lipschitz bounds, convexity, cocoercivity, and prox characterizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::linalg::Vector;

use super::{ConvexTerm, ObjectiveSpec, ProxConvex, SmoothConvex};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub max_violation: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
    /// Largest `‖∇ψ(x) − ∇ψ(y)‖ / ‖x − y‖` seen over sampled pairs.
    pub observed_lipschitz: f64,
    /// Observed order of the central-difference error between steps 1e-3
    /// and 1e-4; `None` when both errors sit at rounding level.
    pub fd_order: Option<f64>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(OracleCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&OracleCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn record(&mut self, name: &'static str, max_violation: f64, tolerance: f64) {
        self.checks.push(OracleCheck {
            name,
            max_violation,
            tolerance,
        });
    }
}

const FD_STEPS: [f64; 2] = [1e-3, 1e-4];

/// Samples uniformly from the ball of radius `radius` centered at `center`.
pub fn sample_ball<R: Rng>(rng: &mut R, center: &Vector, radius: f64) -> Vector {
    let n = center.len();
    let mut dir = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
    let norm = dir.norm();
    if norm > 0.0 {
        dir /= norm;
    }
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    center + dir * r
}

/// Central-difference gradient errors at each step in `FD_STEPS`, normalized
/// by `1 + ‖g‖∞`.
fn fd_errors(value: impl Fn(&Vector) -> f64, grad: &Vector, x: &Vector) -> [f64; 2] {
    let scale = 1.0 + grad.amax();
    FD_STEPS.map(|h| {
        let mut worst: f64 = 0.0;
        let mut xp = x.clone();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = value(&xp);
            xp[i] = x[i] - h;
            let fm = value(&xp);
            xp[i] = x[i];
            worst = worst.max(((fp - fm) / (2.0 * h) - grad[i]).abs());
        }
        worst / scale
    })
}

/// Runs the oracle invariant checks on `samples` random points drawn from
/// the spec's region. Violations are reported, never raised.
pub fn validate_oracles(spec: &ObjectiveSpec, samples: usize, seed: u64) -> OracleReport {
    let samples = samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.dim();
    let radius = if spec.region_radius.is_finite() {
        spec.region_radius
    } else {
        1.0
    };
    let origin = Vector::zeros(n);
    let mut report = OracleReport::default();

    let points: Vec<(Vector, Vector)> = (0..samples)
        .map(|_| {
            (
                sample_ball(&mut rng, &origin, radius),
                sample_ball(&mut rng, &origin, radius),
            )
        })
        .collect();

    // ψ: gradient consistency and Lipschitz bound
    let psi = spec.smooth.as_ref();
    let mut fd = [0.0f64; 2];
    let mut lip_violation: f64 = 0.0;
    let lip = psi.lipschitz();
    for (x, y) in &points {
        let e = fd_errors(|z| psi.value(z), &psi.gradient(x), x);
        fd = [fd[0].max(e[0]), fd[1].max(e[1])];
        let dx = (x - y).norm();
        if dx > 0.0 {
            let ratio = (psi.gradient(x) - psi.gradient(y)).norm() / dx;
            report.observed_lipschitz = report.observed_lipschitz.max(ratio);
            lip_violation = lip_violation.max((ratio - lip).max(0.0) / (1.0 + lip));
        }
    }

    match &spec.convex {
        ConvexTerm::Smooth(phi) => {
            let (e, checks) = smooth_convex_checks(phi.as_ref(), &points, &mut rng);
            fd = [fd[0].max(e[0]), fd[1].max(e[1])];
            for (name, value, tol) in checks {
                report.record(name, value, tol);
            }
        }
        ConvexTerm::Prox(phi) => {
            for (name, value, tol) in prox_checks(phi.as_ref(), &points) {
                report.record(name, value, tol);
            }
        }
    }

    report.record("gradient_fd", fd[1], 1e-6);
    report.record("lipschitz", lip_violation, 1e-8);
    report.fd_order = if fd[0] > 1e-9 {
        Some((fd[0] / fd[1]).log10())
    } else {
        None
    };
    // order check only meaningful when truncation error dominates rounding
    let order_shortfall = report.fd_order.map_or(0.0, |q| (1.9 - q).max(0.0));
    report.record("gradient_fd_order", order_shortfall, 0.0);
    report
}

type CheckRow = (&'static str, f64, f64);

fn smooth_convex_checks<R: Rng>(
    phi: &dyn SmoothConvex,
    points: &[(Vector, Vector)],
    rng: &mut R,
) -> ([f64; 2], Vec<CheckRow>) {
    let rho = phi.inv_lipschitz();
    let n = phi.dim();
    let mut fd = [0.0f64; 2];
    let (mut convexity, mut cocoercive, mut psd, mut hess_fd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (x, y) in points {
        let gx = phi.gradient(x);
        let gy = phi.gradient(y);
        let e = fd_errors(|z| phi.value(z), &gx, x);
        fd = [fd[0].max(e[0]), fd[1].max(e[1])];

        let fx = phi.value(x);
        let fy = phi.value(y);
        let gap = fy - fx - gx.dot(&(y - x));
        convexity = convexity.max((-gap).max(0.0) / (1.0 + fx.abs() + fy.abs()));

        let dg = &gx - &gy;
        let lhs = dg.dot(&(x - y));
        let rhs = if dg.norm_squared() == 0.0 {
            0.0
        } else {
            rho * dg.norm_squared()
        };
        cocoercive = cocoercive.max((rhs - lhs).max(0.0) / (1.0 + lhs.abs()));

        let d = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let hd = phi.hessian_vec(x, &d);
        let q = d.dot(&hd);
        psd = psd.max((-q).max(0.0) / (1.0 + d.norm_squared()));

        let h = 1e-6;
        let fd_hd = (phi.gradient(&(x + &d * h)) - phi.gradient(&(x - &d * h))) / (2.0 * h);
        hess_fd = hess_fd.max((fd_hd - &hd).amax() / (1.0 + hd.amax()));
    }
    (
        fd,
        vec![
            ("convexity", convexity, 1e-10),
            ("cocoercivity", cocoercive, 1e-10),
            ("hessian_psd", psd, 1e-10),
            // piecewise Hessians (Huber) are only a.e. derivatives of ∇φ
            ("hessian_fd", hess_fd, 1e-4),
        ],
    )
}

fn prox_checks(phi: &dyn ProxConvex, points: &[(Vector, Vector)]) -> Vec<CheckRow> {
    let gamma = 1.0;
    let (mut subgrad, mut firm, mut failures) = (0.0f64, 0.0f64, 0usize);
    for (y1, y2) in points {
        let (u1, u2) = match (phi.prox(gamma, y1), phi.prox(gamma, y2)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                failures += 1;
                continue;
            }
        };
        // (y − u)/γ ∈ ∂φ(u), tested at the other sample
        let g = (y1 - &u1) / gamma;
        let fu = phi.value(&u1);
        for z in [&u2, y2] {
            let fz = phi.value(z);
            let lin = g.dot(&(z - &u1));
            let gap = fz - fu - lin;
            subgrad = subgrad.max((-gap).max(0.0) / (1.0 + fz.abs() + fu.abs() + lin.abs()));
        }
        let du = &u1 - &u2;
        let lhs = du.norm_squared();
        let rhs = du.dot(&(y1 - y2));
        firm = firm.max((lhs - rhs).max(0.0) / (1.0 + rhs.abs()));
    }
    vec![
        ("prox_subgradient", subgrad, 1e-10),
        ("prox_firm_nonexpansive", firm, 1e-10),
        ("prox_failures", failures as f64, 0.0),
    ]
}
