//! Joint video encoding-rate and secure edge-cache placement for QoE.
//!
//! The model layer ([`catalog`], [`qoe`]) is generic over the float type;
//! solvers and the harness work in `f64` through the aliases below.

pub mod baselines;
pub mod bnb;
pub mod catalog;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod options;
pub mod oracle;
pub mod qoe;
pub mod relaxed;
pub mod scalar;
pub mod solution;

pub use error::{Error, Result};
pub use options::SolverOptions;
pub use scalar::Scalar;
pub use solution::{Counters, Scheme, SolveResult, SolveStatus};

pub use catalog::{Placement, ScenarioConfig};

pub type Scenario = catalog::Scenario<f64>;
pub type VideoFile = catalog::VideoFile<f64>;
pub type EncodingPlan = catalog::EncodingPlan<f64>;
pub type FeasibilityReport = qoe::FeasibilityReport<f64>;
pub type ObjectiveBreakdown = qoe::ObjectiveBreakdown<f64>;
