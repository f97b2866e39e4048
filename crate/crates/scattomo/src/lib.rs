//! Command-line experiments for multiphoton scattering tomography: configuration, file formats,
//! parallel drivers and one entry point per subcommand.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;
pub mod schema;

pub use config::ExperimentConfig;
pub use error::CliError;
