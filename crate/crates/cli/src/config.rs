//! Experiment configuration, read from a JSON document.

use std::path::{Path, PathBuf};

use klflow_core::objective::{catalog_make_in_region, DEFAULT_REGION_RADIUS};
use klflow_core::{ConvexMode, DynamicsParams, ObjectiveSpec, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub dynamics: DynamicsParams,
    pub initial: InitialConfig,
    /// Checks enforced by `run` and `sweep`; defaults depend on the mode.
    #[serde(default)]
    pub checks: Option<Vec<CheckConfig>>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub kl: KlConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Overrides the seeds of `initial.random_ball` and the KL grid.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_workers() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    pub dim: usize,
    #[serde(default)]
    pub params: Vec<f64>,
    /// `prox` forces proximal access to a smooth `φ`.
    #[serde(default)]
    pub mode: Option<ConvexMode>,
    #[serde(default)]
    pub region_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Point(Vec<f64>),
    RandomBall {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        count: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub name: String,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsConfig {
    pub dir: PathBuf,
    pub trajectory_csv: bool,
    pub report_json: bool,
    pub gnuplot: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("klflow-out"),
            trajectory_csv: true,
            report_json: true,
            gnuplot: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda: Option<Vec<f64>>,
    pub step: Option<Vec<f64>>,
    /// Number of initial points; overrides `initial.random_ball.count`.
    pub starts: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KlConfig {
    /// Replaces the catalog exponent, e.g. to confirm a wrong θ is caught.
    pub theta: Option<f64>,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for KlConfig {
    fn default() -> Self {
        Self {
            theta: None,
            grid_points: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { samples: 200, seed: 0 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Applies `--seed`, then checks everything that can be checked without
    /// running.
    pub fn prepare(mut self, seed: Option<u64>) -> Result<Self, CliError> {
        if let Some(seed) = seed.or(self.seed) {
            self.seed = Some(seed);
            self.kl.seed = seed;
            self.validation.seed = seed;
            if let InitialConfig::RandomBall { seed: s, .. } = &mut self.initial {
                *s = seed;
            }
        }
        self.dynamics.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        let spec = self.build_spec()?;
        for check in self.checks.iter().flatten() {
            crate::checks::CheckKind::parse(&check.name)?;
            if !(check.tolerance >= 0.0) {
                return Err(CliError::Config(format!(
                    "check {} needs a nonnegative tolerance",
                    check.name
                )));
            }
        }
        if let Some(theta) = self.kl.theta {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(CliError::Config(format!("kl.theta must lie in (0,1), got {theta}")));
            }
        }
        let points = self.initial_points()?;
        if let Some(p) = points.iter().find(|p| p.len() != spec.dim()) {
            return Err(CliError::Config(format!(
                "initial point has dimension {}, problem has {}",
                p.len(),
                spec.dim()
            )));
        }
        Ok(self)
    }

    pub fn build_spec(&self) -> Result<ObjectiveSpec, CliError> {
        let p = &self.problem;
        let radius = p.region_radius.unwrap_or(DEFAULT_REGION_RADIUS);
        let spec = catalog_make_in_region(&p.name, p.dim, &p.params, radius)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(match (p.mode, spec.mode()) {
            (Some(ConvexMode::Prox), ConvexMode::Smooth) => spec.into_prox_mode(),
            (Some(ConvexMode::Smooth), ConvexMode::Prox) => {
                return Err(CliError::Config(format!(
                    "{} has a nonsmooth convex term; smooth mode is unavailable",
                    p.name
                )))
            }
            _ => spec,
        })
    }

    /// Initial points in a deterministic order. `starts_override` replaces
    /// the random-ball count.
    pub fn initial_points_with(&self, starts_override: Option<usize>) -> Result<Vec<Vector>, CliError> {
        match &self.initial {
            InitialConfig::Point(x) => {
                if starts_override.is_some_and(|s| s != 1) {
                    return Err(CliError::Config(
                        "sweep.starts needs a random_ball initial condition".into(),
                    ));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::Config("initial point must be finite".into()));
                }
                Ok(vec![Vector::from_column_slice(x)])
            }
            InitialConfig::RandomBall {
                center,
                radius,
                seed,
                count,
            } => {
                let count = starts_override.unwrap_or(*count);
                if count == 0 {
                    return Err(CliError::Config("initial point count must be positive".into()));
                }
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(CliError::Config(format!("random_ball radius must be nonnegative, got {radius}")));
                }
                let center = Vector::from_column_slice(center);
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..count)
                    .map(|_| klflow_core::objective::sample_ball(&mut rng, &center, *radius))
                    .collect())
            }
        }
    }

    pub fn initial_points(&self) -> Result<Vec<Vector>, CliError> {
        self.initial_points_with(self.sweep.as_ref().and_then(|s| s.starts))
    }
}
