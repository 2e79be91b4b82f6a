//! Bindings from evidence elements to artifact fields, and evaluation of a
//! case against a set of artifacts.

mod binding;
mod evaluate;
mod report;
mod timeline;

pub use binding::{
    check_evidence, digest_bytes, parse_bindings, resolve_binding, serialize_bindings, Artifact, ArtifactError,
    ArtifactSet, Check, EvidenceBinding, EvidenceResult, Resolved, Source,
};
pub use evaluate::{evaluate_case, ArtifactSeen, CaseEvaluation, EvaluateError};
pub use report::{generate_report, parse_machine_report, status_label, ReportFormat, ReportSubject};
pub use timeline::{build_timeline, Timeline, TimelineEntry, TimelineError, Transition};
