//! RAID records (risks, assumptions, issues, dependencies) and their
//! issue-tracker payloads.

mod payload;
mod record;
mod tracker;

pub use payload::{extract_raid_key, extract_raids, idempotency_key, plan_submission, to_issue_payload, IssuePayload};
pub use record::{Origin, RaidKind, RaidRecord, Severity};
pub use tracker::{submit_all, HttpTracker, IssueTracker, TrackerError};
