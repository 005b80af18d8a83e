//! IO and command-line layer over `aberdip-core`: JSON scenario configs,
//! CSV and JSON outputs, sweeps and the even/odd cancellation battery.

pub mod config;
pub mod error;
mod locate;
pub mod output;
pub mod run;

pub use config::{Scenario, ScenarioConfig};
pub use error::{CliError, CliResult};
