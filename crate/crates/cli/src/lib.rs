//! Command-line front end of the simulator: configuration, sweeps, figure
//! presets, CSV/SVG output and the validation harness.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod svg;
pub mod sweep;
pub mod validate;

pub use error::{CliError, CliResult};
