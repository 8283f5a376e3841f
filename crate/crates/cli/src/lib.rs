//! Configuration, physical scaling, file formats, parallel sweeps and the
//! command line of the Schrödinger–Poisson laboratory.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod physical;
pub mod sweep;

pub use cli::run_cli;
pub use config::{read_config, Mode, RunConfig};
pub use error::CliError;
pub use output::{read_artifact, write_artifact, write_solution};
pub use physical::{epsilon_from_physical, PhysicalParams};
