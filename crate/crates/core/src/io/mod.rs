//! File formats: the event log and the certification report document.

pub mod eventlog;
pub mod report;

pub use eventlog::{format_event_log, parse_event_log, write_entry, write_event_log, write_header, COLUMNS, HEADER};
pub use report::{sha256_hex, Provenance, ReportDocument, TOOLKIT_VERSION};
