//! Hessian-damped and proximal flows for composite objectives `Φ = φ + ψ`
//! with `φ` convex and `ψ` smooth, together with discrete monitors of their
//! Lyapunov and Kurdyka–Łojasiewicz structure and decay-rate analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod monitors;
pub mod objective;

pub use analysis::{
    classify_rate, estimate_limit, objective_limit_check, predicted_regime, rate_reference, sigma_tail,
    LimitSetEstimate, RateEstimate, Regime,
};
pub use dynamics::{integrate, DynamicsParams, FlowState, StepPolicy, Termination, Trajectory};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use monitors::{KlReport, MonitorSummary, StepDiagnostics};
pub use objective::{catalog_make, ConvexMode, ConvexTerm, CriticalSet, KlProfile, ObjectiveSpec};
