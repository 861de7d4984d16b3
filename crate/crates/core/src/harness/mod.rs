//! Scenario configuration, trajectory runs, sweeps, certification and the
//! table of closed-form charging results.

pub mod certify;
pub mod config;
pub mod csvio;
pub mod scaling;
pub mod table1;
pub mod trajectory;
pub mod validate;

pub use certify::{certify_rows, CertifyReport, Violation};
pub use config::ScenarioConfig;
pub use scaling::{fit_exponent, ScalingResult};
pub use trajectory::{find_tf, run_trajectory, Summary, TfResult, Trajectory};
