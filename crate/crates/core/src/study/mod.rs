//! Configuration-driven studies: convergence, identities, dimensions and
//! inverse estimates, reported as CSV rows with pass/fail verdicts.

mod config;
mod report;
mod run;

pub use config::{GeometrySource, StudyConfig, StudyKind};
pub use report::{fit_rate, FitSummary, Row, StudyReport, COLUMNS};
pub use run::{run_study, CANCELLATION_DRAWS, CANCELLATION_TOL, ALTERNATING_MAX_D, TELESCOPIC_DRAWS};
