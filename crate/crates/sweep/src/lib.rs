//! Parameter sweeps over cell conditions and their CSV output.

pub mod analysis;
pub mod config;
pub mod error;
pub mod run;
pub mod scenario;
pub mod table;

pub use config::SweepSpec;
pub use error::{Result, SweepError};
pub use run::run_scenario;
pub use table::{emit_csv, write_csv, ResultTable};
