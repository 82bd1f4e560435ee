//! End-to-end experiments producing recomputable certificates.

pub mod config;
pub mod experiments;
pub mod report;
pub mod suite;

pub use config::ExperimentConfig;
pub use experiments::{bly_check, certify, eigenfunction_check, korevaar_sweep, weyl};
pub use report::{AnnulusRecord, CertificateReport, Check, ConstantDerivation, KRecord, Metric, Relation};
pub use suite::geometry_suite;
