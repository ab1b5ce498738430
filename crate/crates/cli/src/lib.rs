//! Configuration-driven experiment runner over the `morreylab` toolkit.

pub mod config;
pub mod corpus;
pub mod error;
pub mod output;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
pub use run::{run, Command, Format, Outcome};
