//! Fairness logs, transparency cards, document diffs and log-to-card sync.
//!
//! All documents are YAML. Serialization is deterministic: fixed section
//! order, sorted keys inside log sections, two-space indentation.

pub mod card;
pub mod diff;
pub mod log;
mod sync;

pub use card::{
    parse_card, parse_model_card, serialize_card, serialize_model_card, Card, CardField, CardKind,
    CardValue, DataCard, DataCardField, ModelCard, ModelCardSection, QuantEntry, UseCaseCard,
};
pub use diff::{apply_diff, diff_documents, diff_values, Change, DiffEntry, DiffError, DocumentDiff, DocumentKind};
pub use log::{
    parse_fairness_log, serialize_fairness_log, FairnessLog, MetricGroup, VariableKind, SCHEMA_VERSION,
};
pub use sync::{card_metric_name, provenance, provenance_timestamp, sync_log_to_card, SyncError, SyncOutcome};
