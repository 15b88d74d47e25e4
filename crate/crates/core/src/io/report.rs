use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::stats::CertificationReport;

pub const TOOLKIT_NAME: &str = "qfccert";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit: String,
    pub version: String,
    /// SHA-256 of the event log bytes.
    pub input_sha256: String,
    /// SHA-256 of the canonical JSON of the analysis parameters.
    pub config_sha256: String,
    pub generated_unix_seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub provenance: Provenance,
    pub parameters: serde_json::Value,
    pub report: CertificationReport,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ReportDocument {
    pub fn new(report: CertificationReport, input: &[u8], parameters: serde_json::Value) -> Self {
        let config_sha256 = sha256_hex(parameters.to_string().as_bytes());
        let generated_unix_seconds = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            provenance: Provenance {
                toolkit: TOOLKIT_NAME.into(),
                version: TOOLKIT_VERSION.into(),
                input_sha256: sha256_hex(input),
                config_sha256,
                generated_unix_seconds,
            },
            parameters,
            report,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
