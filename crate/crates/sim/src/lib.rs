//! Monte-Carlo scenarios: AR(1) Gaussian designs with randomly placed
//! active sets, the probability that the lasso path picks up the true
//! variables first, and the FWER / true-positive comparison of the
//! desparsified lasso with the covariance-test protocols.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod event_b;
pub mod generate;
pub mod runner;
pub mod tables;

pub use config::{ScenarioConfig, ScenarioFile, SigmaRule, SignPattern};
pub use error::{Result, SimError};
pub use event_b::{figure_grid, prob_event_b, EventBPoint};
pub use generate::{gen_ar1_design, gen_response, place_active, Replicate};
pub use tables::{run_table, run_table_comparison, Method, ScenarioSummary};
