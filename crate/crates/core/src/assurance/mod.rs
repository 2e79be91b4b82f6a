//! Argument-based assurance cases.
//!
//! An [`AssuranceCase`] is a directed graph of goal, context, strategy,
//! property-claim and evidence elements. Support links run from a claim to
//! whatever supports it; context elements attach to the claims they scope.

mod diagram;
mod format;
mod model;
mod rollup;
mod validate;

pub use diagram::render_diagram;
pub use format::{parse_case, serialize_case, ParsedCase};
pub use model::{
    create_case, eid, AssuranceCase, CaseError, Component, Element, ElementId, ElementKind,
    EvidenceQuality, Level, Link, Quality, TaxonomyTag,
};
pub use rollup::{rollup_status, CaseStatus, ElementStatus, EvidenceState, Reason};
pub use validate::{unsupported_claims, validate_case, Diagnostic, Rule};
