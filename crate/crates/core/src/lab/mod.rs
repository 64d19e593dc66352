//! Experiments: the sharpness family, stability batches, exponent fits and reports.

pub mod checks;
pub mod cover;
mod fit;
mod report;
mod run;
pub mod sharpness;
pub mod stability;

pub use fit::{fit_loglog, LogLogFit};
pub use report::ExponentReport;
pub use run::{git_describe, write_json, write_table, RunConfig, RunManifest};
