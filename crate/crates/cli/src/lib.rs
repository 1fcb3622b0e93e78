//! Batch front end: parse presentation files, run their checks, emit JSON reports.

pub mod error;
pub mod run;
pub mod source;
pub mod workspace;

pub use error::{CliError, CliResult, EXIT_BUDGET, EXIT_FAIL, EXIT_INPUT, EXIT_PASS};
pub use run::{run, write_reports, Report, RunOptions, RunOutput};
pub use workspace::{parse, parse_with_budget, parse_window_spec, Workspace};
