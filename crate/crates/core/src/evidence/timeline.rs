use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_yaml::Value;

use super::binding::{ArtifactSet, EvidenceBinding};
use super::evaluate::{evaluate_case, CaseEvaluation, EvaluateError};
use crate::artifacts::{diff_values, DocumentDiff};
use crate::assurance::{AssuranceCase, ElementId, ElementStatus};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimelineError {
    #[error("snapshot {index} at {instant} is not later than the one before it")]
    UnorderedSnapshots { index: usize, instant: DateTime<Utc> },
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub element: ElementId,
    pub from: ElementStatus,
    pub to: ElementStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub instant: DateTime<Utc>,
    pub evaluation: CaseEvaluation,
    /// Status changes relative to the previous entry; empty for the first.
    pub transitions: Vec<Transition>,
    /// Per-artifact changes relative to the previous snapshot. Artifacts
    /// that did not change are left out.
    pub artifact_changes: BTreeMap<String, DocumentDiff>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub case_id: String,
    pub entries: Vec<TimelineEntry>,
}

impl Timeline {
    pub fn latest(&self) -> Option<&CaseEvaluation> {
        self.entries.last().map(|e| &e.evaluation)
    }
}

/// Evaluate the case at each snapshot. Instants must strictly increase.
pub fn build_timeline(
    case: &AssuranceCase,
    bindings: &[EvidenceBinding],
    snapshots: &[(DateTime<Utc>, ArtifactSet)],
) -> Result<Timeline, TimelineError> {
    for (index, pair) in snapshots.windows(2).enumerate() {
        if pair[1].0 <= pair[0].0 {
            return Err(TimelineError::UnorderedSnapshots {
                index: index + 1,
                instant: pair[1].0,
            });
        }
    }

    let mut entries: Vec<TimelineEntry> = Vec::with_capacity(snapshots.len());
    let mut previous: Option<&ArtifactSet> = None;
    for (instant, artifacts) in snapshots {
        let evaluation = evaluate_case(case, bindings, artifacts, *instant)?;
        let (transitions, artifact_changes) = match (entries.last(), previous) {
            (Some(last), Some(before)) => (
                transitions(&last.evaluation, &evaluation),
                artifact_changes(before, artifacts),
            ),
            _ => (Vec::new(), BTreeMap::new()),
        };
        entries.push(TimelineEntry {
            instant: *instant,
            evaluation,
            transitions,
            artifact_changes,
        });
        previous = Some(artifacts);
    }
    Ok(Timeline {
        case_id: case.case_id.clone(),
        entries,
    })
}

fn transitions(before: &CaseEvaluation, after: &CaseEvaluation) -> Vec<Transition> {
    after
        .rollup
        .statuses
        .iter()
        .filter_map(|(id, &to)| {
            let from = before.rollup.get(id)?;
            (from != to).then(|| Transition {
                element: id.clone(),
                from,
                to,
            })
        })
        .collect()
}

fn artifact_changes(before: &ArtifactSet, after: &ArtifactSet) -> BTreeMap<String, DocumentDiff> {
    let mut names: Vec<&str> = before.names().chain(after.names()).collect();
    names.sort_unstable();
    names.dedup();
    names
        .into_iter()
        .filter_map(|name| {
            let old = before.get(name).map(|a| &a.document).unwrap_or(&Value::Null);
            let new = after.get(name).map(|a| &a.document).unwrap_or(&Value::Null);
            let diff = diff_values(old, new);
            (!diff.is_empty()).then(|| (name.to_string(), diff))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assurance::{eid, Element};
    use crate::doc::parse_instant;
    use crate::evidence::binding::Check;

    fn case() -> AssuranceCase {
        AssuranceCase::create("fin", "Finance", Element::goal("G1", "fair"))
            .unwrap()
            .add_element(Element::claim("P1", "accurate"))
            .unwrap()
            .add_element(Element::evidence("E1", "gate"))
            .unwrap()
            .link("G1", "P1")
            .unwrap()
            .link("P1", "E1")
            .unwrap()
    }

    fn snapshot(ts: &str, value: f64) -> (DateTime<Utc>, ArtifactSet) {
        let text = format!("metric: {{name: accuracy, value: {value}, thresholds: 0.88, bigger_is_better: true}}\n");
        (parse_instant(ts).unwrap(), ArtifactSet::new().with_text("log.yaml", &text).unwrap())
    }

    fn bindings() -> Vec<EvidenceBinding> {
        vec![EvidenceBinding::new(eid("E1"), "log.yaml", "metric", vec![Check::MetricGate])]
    }

    #[test]
    fn single_snapshot_has_no_changes() {
        let tl = build_timeline(&case(), &bindings(), &[snapshot("2024-05-01T00:00:00Z", 0.57)]).unwrap();
        assert_eq!(tl.entries.len(), 1);
        assert!(tl.entries[0].transitions.is_empty());
        assert!(tl.entries[0].artifact_changes.is_empty());
    }

    #[test]
    fn records_transitions_and_diffs() {
        let snaps = [
            snapshot("2024-05-01T00:00:00Z", 0.57),
            snapshot("2024-06-01T00:00:00Z", 0.91),
            snapshot("2024-07-01T00:00:00Z", 0.91),
        ];
        let tl = build_timeline(&case(), &bindings(), &snaps).unwrap();
        let second = &tl.entries[1];
        assert!(second
            .transitions
            .contains(&Transition { element: eid("G1"), from: ElementStatus::Failing, to: ElementStatus::Supported }));
        assert_eq!(second.artifact_changes["log.yaml"].len(), 1);
        assert!(tl.entries[2].transitions.is_empty());
        assert!(tl.entries[2].artifact_changes.is_empty());
    }

    #[test]
    fn rejects_unordered_instants() {
        let snaps = [snapshot("2024-06-01T00:00:00Z", 0.9), snapshot("2024-06-01T00:00:00Z", 0.9)];
        let err = build_timeline(&case(), &bindings(), &snaps).unwrap_err();
        assert!(matches!(err, TimelineError::UnorderedSnapshots { index: 1, .. }));
    }
}
