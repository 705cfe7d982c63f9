//! Reproduction harness: reference experiments on the loaded string,
//! synthetic small problems checked against independent oracles, and
//! pass/fail verdicts with plot-ready tables.

pub mod experiments;
pub mod instances;
pub mod oracle;
pub mod report;

use nep_core::C64;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] nep_core::Error),
    #[error("oracle mismatch in {case}: computed {found} against reference {reference} (relative {relative:.3e})")]
    OracleMismatch {
        case: String,
        found: C64,
        reference: C64,
        relative: f64,
    },
    #[error("setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
