//! Benchmark objectives. All entries are coercive, so trajectories stay in
//! a bounded sublevel set and the declared `L`, `ρ` apply on the region.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Vector;

use super::terms::{DoubleWell, Huber, L1Norm, PowerNorm, Rosenbrock, SquaredNorm, Zero};
use super::{ConvexTerm, CriticalSet, KlProfile, ObjectiveSpec};

pub const DEFAULT_REGION_RADIUS: f64 = 3.0;

pub const CATALOG_NAMES: [&str; 6] = [
    "quadratic",
    "power2p",
    "double_well",
    "rosenbrock_plus_l2",
    "l1_plus_quadratic",
    "huber_plus_quartic",
];

/// Builds a catalog objective with constants valid on the default region.
///
/// | name | φ | ψ | params |
/// |---|---|---|---|
/// | `quadratic` | ½s‖x‖² | 0 | `[s=1]` |
/// | `power2p` | 0 | s‖x‖^{2p} | `[p, s=1]` |
/// | `double_well` | ½μ‖x‖² | ¼‖x‖⁴ − ½‖x‖² | `[μ=0.5]`, μ ∈ (0,1) |
/// | `rosenbrock_plus_l2` | ½μ‖x‖² | Rosenbrock with coupling b | `[b=10, μ=1]`, n ≥ 2 |
/// | `l1_plus_quadratic` | w‖x‖₁ (prox) | ½‖x‖² | `[w=1]` |
/// | `huber_plus_quartic` | Huber_δ | ¼‖x‖⁴ | `[δ=1]` |
pub fn catalog_make(name: &str, n: usize, params: &[f64]) -> Result<ObjectiveSpec> {
    catalog_make_in_region(name, n, params, DEFAULT_REGION_RADIUS)
}

pub fn catalog_make_in_region(
    name: &str,
    n: usize,
    params: &[f64],
    region_radius: f64,
) -> Result<ObjectiveSpec> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(region_radius > 0.0) || !region_radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "region radius must be positive and finite, got {region_radius}"
        )));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("params must be finite".into()));
    }
    let r = region_radius;
    let origin = Vector::zeros(n);
    let mut spec = match name {
        "quadratic" => {
            let [s] = take_params(name, params, [1.0])?;
            positive(name, "s", s)?;
            let mut spec = ObjectiveSpec::new(
                name,
                Arc::new(Zero::new(n)),
                ConvexTerm::Smooth(Arc::new(SquaredNorm::new(n, s))),
            )?;
            spec.kl_profile = Some(KlProfile {
                theta: 0.5,
                constant: 1.0 / (2.0 * s).sqrt(),
                radius: r,
                level_gap: 0.5 * s * r * r,
                critical_point: origin.clone(),
                critical_value: 0.0,
            });
            spec.infimum = Some(0.0);
            spec.critical_set = vec![CriticalSet::Point(origin)];
            spec
        }
        "power2p" => {
            if params.is_empty() {
                return Err(Error::InvalidParameter("power2p needs params [p, s?]".into()));
            }
            let [p, s] = take_params(name, params, [f64::NAN, 1.0])?;
            if p < 1.0 || p.fract() != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "power2p needs integer p >= 1, got {p}"
                )));
            }
            positive(name, "s", s)?;
            let p = p as u32;
            let mut spec = ObjectiveSpec::new(
                name,
                Arc::new(PowerNorm::new(n, p, s, r)?),
                ConvexTerm::Smooth(Arc::new(Zero::new(n))),
            )?;
            // Φ = s r^{2p}: |Φ|^θ = s^θ r^{2p−1} and ‖∇Φ‖ = 2p s r^{2p−1}
            let theta = 1.0 - 1.0 / (2.0 * p as f64);
            spec.kl_profile = Some(KlProfile {
                theta,
                constant: s.powf(theta - 1.0) / (2.0 * p as f64),
                radius: r,
                level_gap: s * r.powi(2 * p as i32),
                critical_point: origin.clone(),
                critical_value: 0.0,
            });
            spec.infimum = Some(0.0);
            spec.critical_set = vec![CriticalSet::Point(origin)];
            spec
        }
        "double_well" => {
            let [mu] = take_params(name, params, [0.5])?;
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "double_well needs mu in (0,1), got {mu}"
                )));
            }
            let mut spec = ObjectiveSpec::new(
                name,
                Arc::new(DoubleWell::new(n, r)),
                ConvexTerm::Smooth(Arc::new(SquaredNorm::new(n, mu))),
            )?;
            // ∇Φ = (μ − 1 + ‖x‖²) x: the origin and the sphere ‖x‖² = 1 − μ
            spec.critical_set = vec![
                CriticalSet::Point(origin.clone()),
                CriticalSet::Sphere {
                    center: origin,
                    radius: (1.0 - mu).sqrt(),
                },
            ];
            spec.infimum = Some(-0.25 * (1.0 - mu).powi(2));
            spec
        }
        "rosenbrock_plus_l2" => {
            let [b, mu] = take_params(name, params, [10.0, 1.0])?;
            positive(name, "mu", mu)?;
            let mut spec = ObjectiveSpec::new(
                name,
                Arc::new(Rosenbrock::new(n, b, r)?),
                ConvexTerm::Smooth(Arc::new(SquaredNorm::new(n, mu))),
            )?;
            spec.infimum = Some(0.0);
            spec
        }
        "l1_plus_quadratic" => {
            let [w] = take_params(name, params, [1.0])?;
            positive(name, "w", w)?;
            let mut spec = ObjectiveSpec::new(
                name,
                Arc::new(SquaredNorm::new(n, 1.0)),
                ConvexTerm::Prox(Arc::new(L1Norm::new(n, w))),
            )?;
            spec.infimum = Some(0.0);
            spec.critical_set = vec![CriticalSet::Point(origin)];
            spec
        }
        "huber_plus_quartic" => {
            let [delta] = take_params(name, params, [1.0])?;
            positive(name, "delta", delta)?;
            let mut spec = ObjectiveSpec::new(
                name,
                Arc::new(PowerNorm::new(n, 2, 0.25, r)?),
                ConvexTerm::Smooth(Arc::new(Huber::new(n, delta))),
            )?;
            spec.infimum = Some(0.0);
            spec.critical_set = vec![CriticalSet::Point(origin)];
            spec
        }
        other => return Err(Error::UnknownCatalogEntry(other.to_string())),
    };
    spec.coercive = true;
    spec.region_radius = r;
    Ok(spec)
}

/// Fills trailing defaults; NaN defaults mark required parameters.
fn take_params<const N: usize>(name: &str, params: &[f64], defaults: [f64; N]) -> Result<[f64; N]> {
    if params.len() > N {
        return Err(Error::InvalidParameter(format!(
            "{name} takes at most {N} params, got {}",
            params.len()
        )));
    }
    let mut out = defaults;
    out[..params.len()].copy_from_slice(params);
    if out.iter().any(|p| p.is_nan()) {
        return Err(Error::InvalidParameter(format!("{name} is missing a required param")));
    }
    Ok(out)
}

fn positive(name: &str, param: &str, value: f64) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name}: {param} must be positive, got {value}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ConvexMode;

    /// Smallest C with |Φ(x) − Φ(x̄)|^θ ≤ C‖∇Φ(x)‖ over a dense 1-D grid.
    fn grid_min_constant(spec: &ObjectiveSpec, theta: f64) -> f64 {
        (1..=4000)
            .map(|k| {
                let x = Vector::from_element(1, k as f64 * spec.region_radius / 4000.0);
                let lhs = spec.value(&x).abs().powf(theta);
                lhs / spec.grad_total(&x).unwrap().norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn quadratic_profile() {
        let spec = catalog_make("quadratic", 2, &[]).unwrap();
        let kl = spec.kl_profile.as_ref().unwrap();
        assert_eq!(kl.theta, 0.5);
        assert_eq!(kl.critical_point, Vector::zeros(2));
        assert_eq!(spec.mode(), ConvexMode::Smooth);

        let one_d = catalog_make("quadratic", 1, &[]).unwrap();
        let c = grid_min_constant(&one_d, 0.5);
        assert!((c - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((kl.constant - c).abs() < 1e-12);
    }

    #[test]
    fn power2p_profile() {
        let spec = catalog_make("power2p", 1, &[2.0]).unwrap();
        let x = Vector::from_element(1, 1.5);
        assert_eq!(spec.eval_objective(&x).unwrap(), 1.5f64.powi(4));
        let kl = spec.kl_profile.clone().unwrap();
        assert_eq!(kl.theta, 0.75);
        let c = grid_min_constant(&spec, 0.75);
        assert!((c - 0.25).abs() < 1e-12);
        assert!((kl.constant - c).abs() < 1e-12);

        let scaled = catalog_make("power2p", 1, &[3.0, 1.0 / 6.0]).unwrap();
        let kl = scaled.kl_profile.clone().unwrap();
        assert!((kl.theta - 5.0 / 6.0).abs() < 1e-15);
        let c = grid_min_constant(&scaled, kl.theta);
        assert!((kl.constant - c).abs() < 1e-9 * c);
    }

    #[test]
    fn l1_is_prox_mode() {
        let spec = catalog_make("l1_plus_quadratic", 1, &[1.0]).unwrap();
        assert_eq!(spec.mode(), ConvexMode::Prox);
        assert!(spec.coercive);
        let x = Vector::from_element(1, -2.0);
        assert_eq!(spec.eval_objective(&x).unwrap(), 2.0 + 2.0);
    }

    #[test]
    fn declared_critical_points_are_critical() {
        for name in ["quadratic", "double_well", "huber_plus_quartic"] {
            let spec = catalog_make(name, 3, &[]).unwrap();
            for c in spec.critical_set.iter().flat_map(CriticalSet::representatives) {
                assert!(spec.grad_total(&c).unwrap().norm() < 1e-12, "{name}");
            }
        }
        let spec = catalog_make("power2p", 2, &[3.0]).unwrap();
        assert_eq!(spec.grad_total(&Vector::zeros(2)).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn double_well_ring_is_critical() {
        let spec = catalog_make("double_well", 3, &[0.3]).unwrap();
        let x = Vector::from_column_slice(&[0.4, -1.2, 2.0]);
        let c = spec.nearest_critical_point(&x, f64::INFINITY).unwrap();
        assert!((c.norm() - 0.7f64.sqrt()).abs() < 1e-15);
        assert!(spec.grad_total(&c).unwrap().norm() < 1e-12);
    }

    #[test]
    fn double_well_infimum() {
        let spec = catalog_make("double_well", 2, &[0.5]).unwrap();
        let x = Vector::from_column_slice(&[0.5f64.sqrt(), 0.0]);
        assert!((spec.value(&x) - spec.infimum.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn invalid_requests() {
        assert!(matches!(
            catalog_make("banana", 2, &[]),
            Err(Error::UnknownCatalogEntry(_))
        ));
        assert!(catalog_make("power2p", 1, &[]).is_err());
        assert!(catalog_make("power2p", 1, &[1.5]).is_err());
        assert!(catalog_make("double_well", 2, &[1.2]).is_err());
        assert!(catalog_make("quadratic", 2, &[1.0, 2.0]).is_err());
        assert!(catalog_make("rosenbrock_plus_l2", 1, &[]).is_err());
        assert!(catalog_make("quadratic", 0, &[]).is_err());
    }
}
