use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::record::{Origin, RaidKind, RaidRecord, Severity};
use crate::artifacts::FairnessLog;
use crate::evidence::CaseEvaluation;

const KEY_OPEN: &str = "<!-- raid-key: ";
const KEY_CLOSE: &str = " -->";

/// Declared log risks first, then one Issue per failing evidence in id order.
///
/// Declared records without an experiment id inherit the log's.
pub fn extract_raids(log: &FairnessLog, evaluation: Option<&CaseEvaluation>) -> Vec<RaidRecord> {
    let experiment_id = &log.general.experiment_id;
    let mut records: Vec<RaidRecord> = log
        .risks
        .iter()
        .flatten()
        .cloned()
        .map(|mut r| {
            r.origin.experiment_id.get_or_insert_with(|| experiment_id.clone());
            r
        })
        .collect();
    if let Some(evaluation) = evaluation {
        for (id, result) in evaluation.failing_evidence() {
            let subject = if result.subject.is_empty() {
                "evidence check"
            } else {
                result.subject.as_str()
            };
            records.push(RaidRecord {
                kind: RaidKind::Issue,
                title: format!("Evidence {id} failing: {subject}"),
                description: result.detail.clone(),
                severity: Severity::High,
                linked_elements: vec![id.clone()],
                labels: Vec::new(),
                origin: Origin {
                    experiment_id: Some(experiment_id.clone()),
                    evidence_id: Some(id.clone()),
                },
            });
        }
    }
    records
}

/// Wire form of an issue. Only `title`, `body` and `labels` are sent; the key
/// travels inside the body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuePayload {
    pub title: String,
    pub body: String,
    pub labels: Vec<String>,
    #[serde(skip)]
    pub idempotency_key: String,
}

impl IssuePayload {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("payload serializes");
        text.push('\n');
        text
    }

    /// Parse a wire payload and recover its key from the body footer.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut payload: IssuePayload = serde_json::from_str(text)?;
        payload.idempotency_key = extract_raid_key(&payload.body).unwrap_or_default();
        Ok(payload)
    }
}

/// Stable over description, severity, labels and linked elements.
pub fn idempotency_key(record: &RaidRecord) -> String {
    let material = serde_json::json!([
        record.kind.as_str(),
        record.title,
        record.origin.experiment_id,
        record.origin.evidence_id.as_ref().map(|e| e.as_str()),
    ]);
    hex::encode(Sha256::digest(material.to_string().as_bytes()))
}

pub fn to_issue_payload(record: &RaidRecord) -> IssuePayload {
    let key = idempotency_key(record);
    let mut body = String::new();
    if !record.description.is_empty() {
        let _ = writeln!(body, "{}\n", record.description);
    }
    let _ = writeln!(body, "- **Kind:** {}", record.kind);
    let _ = writeln!(body, "- **Severity:** {}", record.severity.as_str());
    let linked = if record.linked_elements.is_empty() {
        "none".to_string()
    } else {
        record
            .linked_elements
            .iter()
            .map(|e| e.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = writeln!(body, "- **Linked elements:** {linked}");
    let _ = writeln!(
        body,
        "- **Origin:** experiment {}, evidence {}",
        record.origin.experiment_id.as_deref().unwrap_or("none"),
        record.origin.evidence_id.as_ref().map(|e| e.as_str()).unwrap_or("none"),
    );
    let _ = write!(body, "\n{KEY_OPEN}{key}{KEY_CLOSE}\n");

    let mut labels = vec![record.kind.label(), record.severity.as_str().to_string()];
    for label in &record.labels {
        if !labels.contains(label) {
            labels.push(label.clone());
        }
    }
    IssuePayload {
        title: format!("[RAID:{}] {}", record.kind, record.title),
        body,
        labels,
        idempotency_key: key,
    }
}

/// The key in a `<!-- raid-key: ... -->` footer, if the body has one.
pub fn extract_raid_key(body: &str) -> Option<String> {
    let start = body.rfind(KEY_OPEN)? + KEY_OPEN.len();
    let rest = &body[start..];
    let key = &rest[..rest.find(KEY_CLOSE)?];
    (!key.is_empty() && key.chars().all(|c| c.is_ascii_hexdigit())).then(|| key.to_string())
}

/// Payloads whose key is not already filed, in their original order.
pub fn plan_submission(payloads: &[IssuePayload], existing_keys: &BTreeSet<String>) -> Vec<IssuePayload> {
    payloads
        .iter()
        .filter(|p| !existing_keys.contains(&p.idempotency_key))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assurance::{eid, CaseStatus, EvidenceState};
    use crate::evidence::EvidenceResult;
    use chrono::TimeZone;

    fn risk() -> RaidRecord {
        RaidRecord::new(RaidKind::Risk, "dataset representation gap")
    }

    fn evaluation(states: &[(&str, EvidenceState, &str)]) -> CaseEvaluation {
        CaseEvaluation {
            case_id: "fin".into(),
            evaluated_at: chrono::Utc.with_ymd_and_hms(2024, 5, 2, 0, 0, 0).unwrap(),
            evidence_results: states
                .iter()
                .map(|(id, s, subject)| (eid(id), EvidenceResult::new(*s, "detail", *subject)))
                .collect(),
            rollup: CaseStatus::default(),
            artifacts_seen: Vec::new(),
        }
    }

    #[test]
    fn title_and_labels() {
        let p = to_issue_payload(&risk());
        assert_eq!(p.title, "[RAID:Risk] dataset representation gap");
        assert!(p.labels.contains(&"risk".to_string()) && p.labels.contains(&"medium".to_string()));
        assert_eq!(extract_raid_key(&p.body), Some(p.idempotency_key.clone()));
    }

    #[test]
    fn key_ignores_description_and_labels() {
        let mut other = risk();
        other.description = "different".into();
        other.labels.push("data".into());
        other.severity = Severity::High;
        assert_eq!(idempotency_key(&risk()), idempotency_key(&other));
        other.title.push('!');
        assert_ne!(idempotency_key(&risk()), idempotency_key(&other));
    }

    #[test]
    fn wire_shape_is_exact() {
        let json: serde_json::Value = serde_json::from_str(&to_issue_payload(&risk()).to_json()).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["body", "labels", "title"]);
        let back = IssuePayload::from_json(&to_issue_payload(&risk()).to_json()).unwrap();
        assert_eq!(back, to_issue_payload(&risk()));
    }

    #[test]
    fn declared_first_then_failures() {
        let mut log = FairnessLog::new("fin-001", "finbert");
        log.risks = Some(vec![RaidRecord::new(RaidKind::Risk, "Large numbers can influence predictions")]);
        let eval = evaluation(&[
            ("E2", EvidenceState::Failing, "accuracy"),
            ("E1", EvidenceState::Stale, ""),
            ("E3", EvidenceState::Passing, ""),
        ]);
        let records = extract_raids(&log, Some(&eval));
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].origin.experiment_id.as_deref(), Some("fin-001"));
        assert_eq!(records[1].title, "Evidence E2 failing: accuracy");
        assert_eq!(records[1].severity, Severity::High);
        assert_eq!(records[1].origin.evidence_id, Some(eid("E2")));
    }

    #[test]
    fn plan_is_set_difference() {
        let a = to_issue_payload(&risk());
        let b = to_issue_payload(&RaidRecord::new(RaidKind::Assumption, "labels are correct"));
        let c = to_issue_payload(&RaidRecord::new(RaidKind::Dependency, "upstream tokenizer"));
        let existing: BTreeSet<String> = [b.idempotency_key.clone()].into();
        assert_eq!(plan_submission(&[a.clone(), b.clone(), c.clone()], &existing), vec![a.clone(), c.clone()]);
        assert!(plan_submission(&[b.clone()], &existing).is_empty());
        assert_eq!(plan_submission(&[a.clone()], &BTreeSet::new()), vec![a]);
    }
}
