//! Propagation of evidence outcomes up the argument graph.
//!
//! Property claims take the best of their children (one supported child is
//! enough) while strategies and goals need every child supported. A failing
//! child vetoes support at every level, so failure reaches the root along
//! every path above it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::{AssuranceCase, CaseError, ElementId, ElementKind};
use super::validate::topological_order;

/// Outcome of checking one piece of evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceState {
    Passing,
    Failing,
    Missing,
    Stale,
}

impl EvidenceState {
    pub fn as_str(self) -> &'static str {
        match self {
            EvidenceState::Passing => "passing",
            EvidenceState::Failing => "failing",
            EvidenceState::Missing => "missing",
            EvidenceState::Stale => "stale",
        }
    }
}

impl fmt::Display for EvidenceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementStatus {
    Supported,
    Unsupported,
    Failing,
    Stale,
    NotEvaluated,
}

impl ElementStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementStatus::Supported => "supported",
            ElementStatus::Unsupported => "unsupported",
            ElementStatus::Failing => "failing",
            ElementStatus::Stale => "stale",
            ElementStatus::NotEvaluated => "not_evaluated",
        }
    }

    /// Position in the improvement order `Failing < {Unsupported, Stale,
    /// NotEvaluated} < Supported`.
    pub fn rank(self) -> u8 {
        match self {
            ElementStatus::Failing => 0,
            ElementStatus::Unsupported | ElementStatus::Stale | ElementStatus::NotEvaluated => 1,
            ElementStatus::Supported => 2,
        }
    }
}

impl fmt::Display for ElementStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<EvidenceState> for ElementStatus {
    fn from(state: EvidenceState) -> Self {
        match state {
            EvidenceState::Passing => ElementStatus::Supported,
            EvidenceState::Failing => ElementStatus::Failing,
            EvidenceState::Missing | EvidenceState::Stale => ElementStatus::Stale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reason {
    pub element: ElementId,
    pub explanation: String,
}

/// Status of every non-Context element, with explanations for each element
/// that is not supported.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CaseStatus {
    pub statuses: BTreeMap<ElementId, ElementStatus>,
    pub reasons: Vec<Reason>,
}

impl CaseStatus {
    /// Every non-Context element marked [`ElementStatus::NotEvaluated`].
    pub fn not_evaluated(case: &AssuranceCase) -> Self {
        CaseStatus {
            statuses: case
                .elements
                .values()
                .filter(|e| e.kind != ElementKind::Context)
                .map(|e| (e.id.clone(), ElementStatus::NotEvaluated))
                .collect(),
            reasons: Vec::new(),
        }
    }

    pub fn get(&self, id: &ElementId) -> Option<ElementStatus> {
        self.statuses.get(id).copied()
    }

    pub fn reason(&self, id: &ElementId) -> Option<&str> {
        self.reasons
            .iter()
            .find(|r| &r.element == id)
            .map(|r| r.explanation.as_str())
    }
}

pub fn rollup_status(
    case: &AssuranceCase,
    evidence_states: &BTreeMap<ElementId, EvidenceState>,
) -> Result<CaseStatus, CaseError> {
    case.ensure_valid()?;

    let evidence_ids: Vec<&ElementId> = case
        .elements_of_kind(ElementKind::Evidence)
        .map(|e| &e.id)
        .collect();
    let missing: Vec<ElementId> = evidence_ids
        .iter()
        .filter(|id| !evidence_states.contains_key(**id))
        .map(|id| (*id).clone())
        .collect();
    let unexpected: Vec<ElementId> = evidence_states
        .keys()
        .filter(|id| case.kind_of(id) != Some(ElementKind::Evidence))
        .cloned()
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(CaseError::IncompleteStates {
            missing,
            unexpected,
        });
    }

    let order = topological_order(case).expect("validated case is acyclic");
    let mut statuses: BTreeMap<ElementId, ElementStatus> = BTreeMap::new();
    let mut reasons: BTreeMap<ElementId, String> = BTreeMap::new();

    // Children before parents.
    for id in order.iter().rev() {
        let kind = case.kind_of(id).expect("ordered ids exist");
        let (status, reason) = match kind {
            ElementKind::Evidence => {
                let state = evidence_states[id];
                let status = ElementStatus::from(state);
                let reason = (status != ElementStatus::Supported)
                    .then(|| format!("evidence is {state}"));
                (status, reason)
            }
            ElementKind::PropertyClaim => {
                let children: Vec<(&ElementId, ElementStatus)> = case
                    .support_children(id)
                    .map(|c| (c, statuses[c]))
                    .collect();
                claim_status(&children)
            }
            ElementKind::GoalClaim | ElementKind::Strategy => {
                let children: Vec<(&ElementId, ElementStatus)> = case
                    .support_children(id)
                    .map(|c| (c, statuses[c]))
                    .collect();
                conjunctive_status(&children)
            }
            ElementKind::Context => unreachable!("context elements are not ordered"),
        };
        statuses.insert(id.clone(), status);
        if let Some(reason) = reason {
            reasons.insert(id.clone(), reason);
        }
    }

    Ok(CaseStatus {
        statuses,
        reasons: reasons
            .into_iter()
            .map(|(element, explanation)| Reason {
                element,
                explanation,
            })
            .collect(),
    })
}

fn first_failing<'a>(children: &[(&'a ElementId, ElementStatus)]) -> Option<&'a ElementId> {
    children
        .iter()
        .find(|(_, s)| *s == ElementStatus::Failing)
        .map(|(c, _)| *c)
}

fn claim_status(children: &[(&ElementId, ElementStatus)]) -> (ElementStatus, Option<String>) {
    if let Some(child) = first_failing(children) {
        return (ElementStatus::Failing, Some(format!("{child} is failing")));
    }
    if children.iter().any(|(_, s)| *s == ElementStatus::Supported) {
        return (ElementStatus::Supported, None);
    }
    let reason = if children.is_empty() {
        "no supporting evidence or sub-claims".to_string()
    } else {
        let names: Vec<&str> = children.iter().map(|(c, _)| c.as_str()).collect();
        format!("none of {} is supported", names.join(", "))
    };
    (ElementStatus::Unsupported, Some(reason))
}

fn conjunctive_status(children: &[(&ElementId, ElementStatus)]) -> (ElementStatus, Option<String>) {
    if let Some(child) = first_failing(children) {
        return (ElementStatus::Failing, Some(format!("{child} is failing")));
    }
    if children.is_empty() {
        return (
            ElementStatus::Unsupported,
            Some("no sub-arguments".to_string()),
        );
    }
    let lacking: Vec<&str> = children
        .iter()
        .filter(|(_, s)| *s != ElementStatus::Supported)
        .map(|(c, _)| c.as_str())
        .collect();
    if lacking.is_empty() {
        (ElementStatus::Supported, None)
    } else {
        (
            ElementStatus::Unsupported,
            Some(format!("{} not supported", lacking.join(", "))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assurance::model::{eid, Element};

    fn states(pairs: &[(&str, EvidenceState)]) -> BTreeMap<ElementId, EvidenceState> {
        pairs.iter().map(|(id, s)| (eid(id), *s)).collect()
    }

    fn single_chain() -> AssuranceCase {
        AssuranceCase::create("c", "t", Element::goal("G1", "goal"))
            .and_then(|c| c.add_element(Element::claim("P1", "p1")))
            .and_then(|c| c.add_element(Element::evidence("E1", "e1")))
            .and_then(|c| c.link("G1", "P1"))
            .and_then(|c| c.link("P1", "E1"))
            .unwrap()
    }

    #[test]
    fn passing_chain_is_supported() {
        let status = rollup_status(&single_chain(), &states(&[("E1", EvidenceState::Passing)])).unwrap();
        assert!(status.statuses.values().all(|s| *s == ElementStatus::Supported));
        assert!(status.reasons.is_empty());
    }

    #[test]
    fn failing_evidence_fails_everything() {
        let status = rollup_status(&single_chain(), &states(&[("E1", EvidenceState::Failing)])).unwrap();
        for id in ["G1", "P1", "E1"] {
            assert_eq!(status.get(&eid(id)), Some(ElementStatus::Failing));
        }
    }

    #[test]
    fn unsupported_sibling_blocks_goal() {
        // G1 -> {P1 -> E1, P2}
        let case = single_chain()
            .add_element(Element::claim("P2", "p2"))
            .and_then(|c| c.link("G1", "P2"))
            .unwrap();
        let status = rollup_status(&case, &states(&[("E1", EvidenceState::Passing)])).unwrap();
        assert_eq!(status.get(&eid("P1")), Some(ElementStatus::Supported));
        assert_eq!(status.get(&eid("P2")), Some(ElementStatus::Unsupported));
        assert_eq!(status.get(&eid("G1")), Some(ElementStatus::Unsupported));
        assert!(status.reason(&eid("G1")).unwrap().contains("P2"));
    }

    #[test]
    fn stale_and_missing_evidence() {
        for state in [EvidenceState::Stale, EvidenceState::Missing] {
            let status = rollup_status(&single_chain(), &states(&[("E1", state)])).unwrap();
            assert_eq!(status.get(&eid("E1")), Some(ElementStatus::Stale));
            assert_eq!(status.get(&eid("P1")), Some(ElementStatus::Unsupported));
            assert_eq!(status.get(&eid("G1")), Some(ElementStatus::Unsupported));
        }
    }

    #[test]
    fn claim_is_disjunctive_with_veto() {
        let case = single_chain()
            .add_element(Element::evidence("E2", "e2"))
            .and_then(|c| c.link("P1", "E2"))
            .unwrap();
        let ok = rollup_status(
            &case,
            &states(&[("E1", EvidenceState::Passing), ("E2", EvidenceState::Stale)]),
        )
        .unwrap();
        assert_eq!(ok.get(&eid("P1")), Some(ElementStatus::Supported));
        let vetoed = rollup_status(
            &case,
            &states(&[("E1", EvidenceState::Passing), ("E2", EvidenceState::Failing)]),
        )
        .unwrap();
        assert_eq!(vetoed.get(&eid("P1")), Some(ElementStatus::Failing));
    }

    #[test]
    fn states_must_cover_evidence_exactly() {
        let err = rollup_status(&single_chain(), &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, CaseError::IncompleteStates { .. }));
        let err = rollup_status(
            &single_chain(),
            &states(&[("E1", EvidenceState::Passing), ("P1", EvidenceState::Passing)]),
        )
        .unwrap_err();
        assert!(matches!(err, CaseError::IncompleteStates { .. }));
    }

    #[test]
    fn context_is_ignored() {
        let case = single_chain()
            .add_element(Element::context("C1", "retail finance, India"))
            .and_then(|c| c.link("C1", "G1"))
            .unwrap();
        let status = rollup_status(&case, &states(&[("E1", EvidenceState::Passing)])).unwrap();
        assert_eq!(status.statuses.len(), 3);
        assert_eq!(status.get(&eid("G1")), Some(ElementStatus::Supported));
    }
}
