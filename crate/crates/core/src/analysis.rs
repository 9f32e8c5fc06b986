//! Limit points, σ-tails and decay-rate classification of trajectories.

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Distance below which a sample counts as having arrived at the limit.
pub const ARRIVAL_TOL: f64 = 1e-13;
/// Minimum coefficient of determination for a fitted regime.
pub const MIN_R2: f64 = 0.99;
/// Fraction of the time span, counted from the end, used for fits.
pub const FIT_WINDOW_FRACTION: f64 = 0.6;
/// Samples required in the fit window.
pub const MIN_FIT_SAMPLES: usize = 50;
/// Radius within which the final sample is snapped to a declared critical
/// point before measuring distances.
pub const SNAP_RADIUS: f64 = 0.1;
// distances at or below this are rounding noise and carry no slope information
const FIT_FLOOR: f64 = 1e-14;
const SIGMA_SAMPLES_MAX: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitSetEstimate {
    pub x_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub stationarity: f64,
    pub objective_value: f64,
    pub cluster_radius: f64,
}

impl LimitSetEstimate {
    pub fn x(&self) -> Vector {
        Vector::from_column_slice(&self.x_bar)
    }

    pub fn v(&self) -> Vector {
        Vector::from_column_slice(&self.v_bar)
    }
}

/// Takes the final sample as the limit representative and measures how far
/// the trailing `window_fraction` of samples strays from it.
pub fn estimate_limit(traj: &Trajectory, window_fraction: f64) -> Result<LimitSetEstimate> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window_fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    if traj.diverged() {
        return Err(Error::Diverged);
    }
    let last = traj.last();
    let n = traj.samples.len();
    let window = ((n as f64 * window_fraction).ceil() as usize).clamp(1, n);
    let cluster_radius = traj.samples[n - window..]
        .iter()
        .map(|s| (&s.x - &last.x).norm())
        .fold(0.0, f64::max);
    Ok(LimitSetEstimate {
        x_bar: last.x.as_slice().to_vec(),
        v_bar: last.v.as_slice().to_vec(),
        stationarity: traj.spec.stationarity(&last.x, &last.v),
        objective_value: traj.spec.value(&last.x),
        cluster_radius,
    })
}

/// Reference pair `(x̄, v̄)` for distance measurements: the declared critical
/// point nearest to the final sample when one lies within [`SNAP_RADIUS`]
/// (with `v̄ = −∇ψ(x̄)`), otherwise the limit estimate itself.
pub fn rate_reference(traj: &Trajectory, limit: &LimitSetEstimate) -> (Vector, Vector) {
    let x = limit.x();
    match traj.spec.nearest_critical_point(&x, SNAP_RADIUS) {
        Some(c) => {
            let v = traj.spec.limit_velocity(&c);
            (c, v)
        }
        None => (x, limit.v()),
    }
}

/// `σ_j = Σ_{i ≥ j} (‖Δx_i‖ + ‖Δv_i‖)` for every sample index `j`.
pub fn sigma_profile(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.diverged() {
        return Err(Error::Diverged);
    }
    let n = traj.samples.len();
    let mut sigma = vec![0.0; n];
    for j in (0..n.saturating_sub(1)).rev() {
        let (a, b) = (&traj.samples[j], &traj.samples[j + 1]);
        sigma[j] = sigma[j + 1] + (&b.x - &a.x).norm() + (&b.v - &a.v).norm();
    }
    Ok(sigma)
}

/// Discrete σ-tail from sample `k` to the end of the trajectory.
pub fn sigma_tail(traj: &Trajectory, k: usize) -> Result<f64> {
    let len = traj.samples.len();
    if k >= len {
        return Err(Error::IndexOutOfRange { index: k, len });
    }
    if traj.diverged() {
        return Err(Error::Diverged);
    }
    Ok(traj.samples.windows(2).skip(k).map(|w| {
        (&w[1].x - &w[0].x).norm() + (&w[1].v - &w[0].v).norm()
    }).sum())
}

/// Largest `‖x_k − x̄‖ + ‖v_k − v̄‖ − σ_k` over all samples; `≤ 0` when the
/// tail bound holds everywhere.
pub fn sigma_dominance_violation(traj: &Trajectory, x_bar: &Vector, v_bar: &Vector) -> Result<f64> {
    let sigma = sigma_profile(traj)?;
    Ok(traj
        .samples
        .iter()
        .zip(&sigma)
        .map(|(s, sg)| (&s.x - x_bar).norm() + (&s.v - v_bar).norm() - sg)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Finite,
    Exponential,
    Polynomial,
    Undetermined,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Finite => "FINITE",
            Regime::Exponential => "EXPONENTIAL",
            Regime::Polynomial => "POLYNOMIAL",
            Regime::Undetermined => "UNDETERMINED",
        })
    }
}

/// Fitted `d ≈ a·e^{−bt}` (exponential) or `d ≈ a·t^{−b}` (polynomial).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub regime: Regime,
    pub coefficients: Option<Coefficients>,
    pub fit_window: (f64, f64),
    pub fit_r2: f64,
    pub theta_implied: Option<f64>,
    pub arrival_time: Option<f64>,
    pub exponential_fit: Option<LinearFit>,
    pub polynomial_fit: Option<LinearFit>,
    pub sigma_samples: Vec<(f64, f64)>,
}

impl RateEstimate {
    /// Decay exponent `q` of a polynomial fit.
    pub fn exponent(&self) -> Option<f64> {
        match self.regime {
            Regime::Polynomial => self.coefficients.map(|c| c.b),
            _ => None,
        }
    }
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if syy == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Some(LinearFit { slope, intercept, r2 })
}

/// `θ = (1 + q)/(1 + 2q)`, the exponent whose predicted decay is `t^{−q}`.
pub fn theta_from_exponent(q: f64) -> f64 {
    (1.0 + q) / (1.0 + 2.0 * q)
}

/// Classifies a decay series.
///
/// `x_dist[k]` is the position distance used for exact arrival and `d[k]`
/// the full distance used for fits. Arrival needs at least three trailing
/// samples within [`ARRIVAL_TOL`] of the limit and bit-identical to the
/// final position.
pub fn classify_series(times: &[f64], positions_equal_last: &[bool], x_dist: &[f64], d: &[f64]) -> Result<RateEstimate> {
    let n = times.len();
    if x_dist.len() != n || d.len() != n || positions_equal_last.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d.len().min(x_dist.len()).min(positions_equal_last.len()),
        });
    }
    if n == 0 {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: 0,
        });
    }
    let t0 = times[0];
    let t_end = times[n - 1];
    let t_start = t_end - FIT_WINDOW_FRACTION * (t_end - t0);
    let window: Vec<usize> = (0..n).filter(|&k| times[k] >= t_start).collect();
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: window.len(),
        });
    }

    let mut estimate = RateEstimate {
        regime: Regime::Undetermined,
        coefficients: None,
        fit_window: (t_start, t_end),
        fit_r2: 0.0,
        theta_implied: None,
        arrival_time: None,
        exponential_fit: None,
        polynomial_fit: None,
        sigma_samples: Vec::new(),
    };

    let arrived_run = (0..n)
        .rev()
        .take_while(|&k| x_dist[k] <= ARRIVAL_TOL && positions_equal_last[k])
        .count();
    if arrived_run >= 3 {
        estimate.regime = Regime::Finite;
        estimate.arrival_time = Some(times[n - arrived_run]);
        estimate.fit_r2 = 1.0;
        return Ok(estimate);
    }

    let usable: Vec<usize> = window.into_iter().filter(|&k| d[k] > FIT_FLOOR).collect();
    let log_d: Vec<f64> = usable.iter().map(|&k| d[k].ln()).collect();
    let ts: Vec<f64> = usable.iter().map(|&k| times[k]).collect();
    estimate.exponential_fit = linear_fit(&ts, &log_d);
    let positive: Vec<(f64, f64)> = ts
        .iter()
        .zip(&log_d)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, y)| (t.ln(), *y))
        .collect();
    let (log_t, log_dp): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
    estimate.polynomial_fit = linear_fit(&log_t, &log_dp);
    if usable.len() < MIN_FIT_SAMPLES / 5 {
        return Ok(estimate);
    }

    let exp = estimate
        .exponential_fit
        .filter(|f| f.r2 >= MIN_R2 && f.slope < 0.0);
    let poly = estimate
        .polynomial_fit
        .filter(|f| f.r2 >= MIN_R2 && f.slope < 0.0);
    let pick_exp = match (exp, poly) {
        (Some(e), Some(p)) => Some(e.r2 >= p.r2),
        (Some(_), None) => Some(true),
        (None, Some(_)) => Some(false),
        (None, None) => None,
    };
    match pick_exp {
        Some(true) => {
            let f = exp.expect("picked");
            estimate.regime = Regime::Exponential;
            estimate.coefficients = Some(Coefficients {
                a: f.intercept.exp(),
                b: -f.slope,
            });
            estimate.fit_r2 = f.r2;
        }
        Some(false) => {
            let f = poly.expect("picked");
            let q = -f.slope;
            estimate.regime = Regime::Polynomial;
            estimate.coefficients = Some(Coefficients {
                a: f.intercept.exp(),
                b: q,
            });
            estimate.fit_r2 = f.r2;
            estimate.theta_implied = Some(theta_from_exponent(q));
        }
        None => {
            estimate.fit_r2 = exp
                .or(estimate.exponential_fit)
                .map_or(0.0, |f| f.r2)
                .max(estimate.polynomial_fit.map_or(0.0, |f| f.r2));
        }
    }
    Ok(estimate)
}

/// Classifies the decay of `d_k = ‖x_k − x̄‖ + ‖v_k − v̄‖` into the finite,
/// exponential or polynomial regime.
pub fn classify_rate(traj: &Trajectory, x_bar: &Vector, v_bar: &Vector) -> Result<RateEstimate> {
    let n = traj.spec.dim();
    if x_bar.len() != n || v_bar.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x_bar.len(),
        });
    }
    let last_x = &traj.last().x;
    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let equal_last: Vec<bool> = traj.samples.iter().map(|s| &s.x == last_x).collect();
    let x_dist: Vec<f64> = traj.samples.iter().map(|s| (&s.x - x_bar).norm()).collect();
    let d: Vec<f64> = traj
        .samples
        .iter()
        .zip(&x_dist)
        .map(|(s, dx)| dx + (&s.v - v_bar).norm())
        .collect();
    let mut estimate = classify_series(&times, &equal_last, &x_dist, &d)?;
    if !traj.diverged() {
        let sigma = sigma_profile(traj)?;
        let stride = (sigma.len() / SIGMA_SAMPLES_MAX).max(1);
        estimate.sigma_samples = sigma
            .iter()
            .zip(&times)
            .enumerate()
            .filter(|(k, _)| k % stride == 0 || *k + 1 == sigma.len())
            .map(|(_, (s, t))| (*t, *s))
            .collect();
    }
    Ok(estimate)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PredictedRegime {
    pub regime: Regime,
    /// Polynomial exponent `(1 − θ)/(2θ − 1)`.
    pub exponent: Option<f64>,
}

/// Decay regime implied by a Łojasiewicz exponent `θ ∈ (0, 1)`.
pub fn predicted_regime(theta: f64) -> Result<PredictedRegime> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("θ must lie in (0, 1), got {theta}")));
    }
    Ok(if (theta - 0.5).abs() <= 1e-12 {
        PredictedRegime {
            regime: Regime::Exponential,
            exponent: None,
        }
    } else if theta < 0.5 {
        PredictedRegime {
            regime: Regime::Finite,
            exponent: None,
        }
    } else {
        PredictedRegime {
            regime: Regime::Polynomial,
            exponent: Some((1.0 - theta) / (2.0 * theta - 1.0)),
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectiveLimitEntry {
    pub limit_value: f64,
    /// `max − min` of `Φ` over the final 10% of samples.
    pub oscillation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectiveLimitReport {
    pub entries: Vec<ObjectiveLimitEntry>,
    /// Spread of limit values across trajectories; reported, not enforced.
    pub limit_spread: f64,
    pub tolerance: f64,
}

impl ObjectiveLimitReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

pub fn objective_limit_check(trajectories: &[Trajectory], tolerance: f64) -> ObjectiveLimitReport {
    let entries: Vec<ObjectiveLimitEntry> = trajectories
        .iter()
        .map(|traj| {
            let n = traj.samples.len();
            let tail = &traj.samples[n - (n / 10).max(1)..];
            let values: Vec<f64> = tail.iter().map(|s| traj.spec.value(&s.x)).collect();
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let oscillation = hi - lo;
            ObjectiveLimitEntry {
                limit_value: *values.last().expect("nonempty tail"),
                oscillation,
                passed: oscillation <= tolerance && !traj.diverged(),
            }
        })
        .collect();
    let hi = entries.iter().map(|e| e.limit_value).fold(f64::NEG_INFINITY, f64::max);
    let lo = entries.iter().map(|e| e.limit_value).fold(f64::INFINITY, f64::min);
    ObjectiveLimitReport {
        limit_spread: if entries.is_empty() { 0.0 } else { hi - lo },
        entries,
        tolerance,
    }
}
