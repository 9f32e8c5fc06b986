//! Enforced monitor checks and their outcomes.

use klflow_core::analysis::{objective_limit_check, sigma_dominance_violation, LimitSetEstimate};
use klflow_core::monitors::monotonicity_check;
use klflow_core::{ConvexMode, Termination, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::CheckConfig;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    /// `max |energy_defect|` (smooth mode).
    EnergyIdentity,
    /// `−min (⟨Δx,Δv⟩ − ρ‖Δv‖²)/h²` (smooth mode).
    Cocoercivity,
    /// `−min ⟨Δx,Δv⟩`.
    CrossProduct,
    Forcing,
    Monotonicity,
    ObjectiveLimit,
    /// Final stationarity above `stop_grad_tol`; only meaningful on a
    /// `GRAD_TOL` run.
    Vanishing,
    SigmaTail,
    /// Prox mode.
    ProxEquation,
    /// Prox mode.
    Subgradient,
}

impl CheckKind {
    pub const ALL: [CheckKind; 10] = [
        CheckKind::EnergyIdentity,
        CheckKind::Cocoercivity,
        CheckKind::CrossProduct,
        CheckKind::Forcing,
        CheckKind::Monotonicity,
        CheckKind::ObjectiveLimit,
        CheckKind::Vanishing,
        CheckKind::SigmaTail,
        CheckKind::ProxEquation,
        CheckKind::Subgradient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::EnergyIdentity => "energy_identity",
            CheckKind::Cocoercivity => "cocoercivity",
            CheckKind::CrossProduct => "cross_product",
            CheckKind::Forcing => "forcing",
            CheckKind::Monotonicity => "monotonicity",
            CheckKind::ObjectiveLimit => "objective_limit",
            CheckKind::Vanishing => "vanishing",
            CheckKind::SigmaTail => "sigma_tail",
            CheckKind::ProxEquation => "prox_equation",
            CheckKind::Subgradient => "subgradient",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| CliError::Config(format!("unknown check {name:?}")))
    }
}

/// Checks enforced when the config lists none.
pub fn default_checks(mode: ConvexMode) -> Vec<CheckConfig> {
    let mut list = vec![
        ("monotonicity", 1e-10),
        ("objective_limit", 1e-10),
        ("vanishing", 0.0),
        ("sigma_tail", 1e-10),
    ];
    match mode {
        ConvexMode::Smooth => list.push(("cocoercivity", 10.0)),
        ConvexMode::Prox => {
            list.push(("prox_equation", 1e-12));
            list.push(("subgradient", 1e-10));
            list.push(("cross_product", 1e-12));
        }
    }
    list.into_iter()
        .map(|(name, tolerance)| CheckConfig {
            name: name.into(),
            tolerance,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub tolerance: f64,
    /// Worst value, oriented so that `worst ≤ tolerance` passes.
    pub worst: Option<f64>,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl CheckOutcome {
    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

fn outcome(check: &CheckConfig, worst: Option<f64>, note: Option<String>) -> CheckOutcome {
    let status = match worst {
        None => CheckStatus::Skipped,
        Some(w) if w <= check.tolerance => CheckStatus::Pass,
        Some(_) => CheckStatus::Fail,
    };
    CheckOutcome {
        name: check.name.clone(),
        tolerance: check.tolerance,
        worst,
        status,
        note,
    }
}

pub fn evaluate(check: &CheckConfig, traj: &Trajectory, limit: Option<&LimitSetEstimate>) -> Result<CheckOutcome, CliError> {
    let kind = CheckKind::parse(&check.name)?;
    let s = &traj.summary;
    let none = |why: &str| Ok(outcome(check, None, Some(why.to_string())));
    let value = |v: f64| Ok(outcome(check, Some(v), None));
    if s.steps == 0 && !matches!(kind, CheckKind::Vanishing | CheckKind::SigmaTail | CheckKind::ObjectiveLimit) {
        return value(0.0);
    }
    match kind {
        CheckKind::EnergyIdentity => match s.max_abs_energy_defect {
            Some(v) => value(v),
            None => none("smooth mode only"),
        },
        CheckKind::Cocoercivity => match s.min_cocoercivity_slack_per_h2 {
            Some(v) if v.is_finite() => value(-v),
            Some(_) => none("no finite cocoercivity constant"),
            None => none("smooth mode only"),
        },
        CheckKind::CrossProduct => value(-s.min_cross_product),
        CheckKind::Forcing => value(s.max_forcing_violation),
        CheckKind::Monotonicity => value(monotonicity_check(traj).max(s.max_descent)),
        CheckKind::ObjectiveLimit => {
            let report = objective_limit_check(std::slice::from_ref(traj), check.tolerance);
            value(report.entries[0].oscillation)
        }
        CheckKind::Vanishing => {
            if traj.termination != Termination::GradTol {
                return none("run did not stop on the stationarity tolerance");
            }
            match limit {
                Some(l) => value((l.stationarity - traj.params.stop_grad_tol).max(0.0)),
                None => none("no limit estimate"),
            }
        }
        CheckKind::SigmaTail => match limit {
            Some(l) => value(
                sigma_dominance_violation(traj, &l.x(), &l.v()).map_err(|e| CliError::Run(e.to_string()))?,
            ),
            None => none("no limit estimate"),
        },
        CheckKind::ProxEquation => match s.max_prox_equation_residual {
            Some(v) => value(v),
            None => none("prox mode only"),
        },
        CheckKind::Subgradient => match s.max_subgradient_violation {
            Some(v) => value(v),
            None => none("prox mode only"),
        },
    }
}
