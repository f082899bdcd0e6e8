//! Risk-management decision engine for automated-vehicle maneuver selection.
//!
//! Every maneuver is scored by the expectation value of its outcomes
//! (magnitude × probability, summed per action) and the lowest-risk
//! maneuver is chosen with a trace that shows how each number was formed.
//! Around that core sit valuation (monetization, fatality modifiers,
//! certainty weighting), attribute-exclusion fairness, a seeded Monte Carlo
//! simulator, deontological and trolley baselines, and a risk-distribution
//! audit.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the file format and the
//! command-line tool use.

pub mod audit;
pub mod baselines;
pub mod catalog;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod fairness;
pub mod format;
pub mod risk;
pub mod scalar;
pub mod scenario;
pub mod simulate;
pub mod valuation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Scenario = scenario::Scenario<f64>;
pub type ActionAlternative = scenario::ActionAlternative<f64>;
pub type Outcome = scenario::Outcome<f64>;
pub type Probability = scenario::Probability<f64>;
pub type DecisionResult = risk::DecisionResult<f64>;
pub type SimulationEstimate = simulate::SimulationEstimate<f64>;
pub type RiskDistribution = audit::RiskDistribution<f64>;

pub type ScenarioF32 = scenario::Scenario<f32>;
pub type DecisionResultF32 = risk::DecisionResult<f32>;
