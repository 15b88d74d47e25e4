//! Special functions, confidence bounds and the certification pipeline.

pub mod beta;
pub mod bounds;
pub mod certify;
pub mod fair;

pub use beta::{beta_pdf, inv_reg_inc_beta, reg_inc_beta};
pub use bounds::{chsh_lower_bound, chsh_lower_bound_from, psucc_lower_bound, ConfidenceLevel, PsuccBound};
pub use certify::{certify, certify_counts, certify_with_significance, CertificationReport};
pub use fair::{fair_sampling_test, FairSamplingDiagnostic, PartyDiagnostic, TestMethod, DEFAULT_SIGNIFICANCE};
