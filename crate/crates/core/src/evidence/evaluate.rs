use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::binding::{check_evidence, ArtifactSet, EvidenceBinding, EvidenceResult};
use crate::assurance::{rollup_status, AssuranceCase, CaseError, CaseStatus, ElementId, ElementKind, EvidenceState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("evidence {0} is bound more than once")]
    DuplicateBinding(ElementId),
    #[error("binding targets {0}, which is not an evidence element of the case")]
    NotEvidence(ElementId),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArtifactSeen {
    pub artifact: String,
    pub digest: String,
}

/// One evaluation of a case against a set of artifacts at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEvaluation {
    pub case_id: String,
    pub evaluated_at: DateTime<Utc>,
    pub evidence_results: BTreeMap<ElementId, EvidenceResult>,
    pub rollup: CaseStatus,
    pub artifacts_seen: Vec<ArtifactSeen>,
}

impl CaseEvaluation {
    pub fn root_status(&self, case: &AssuranceCase) -> Option<crate::assurance::ElementStatus> {
        self.rollup.get(&case.root)
    }

    pub fn failing_evidence(&self) -> impl Iterator<Item = (&ElementId, &EvidenceResult)> {
        self.evidence_results
            .iter()
            .filter(|(_, r)| r.state == EvidenceState::Failing)
    }
}

pub fn evaluate_case(
    case: &AssuranceCase,
    bindings: &[EvidenceBinding],
    artifacts: &ArtifactSet,
    now: DateTime<Utc>,
) -> Result<CaseEvaluation, EvaluateError> {
    case.ensure_valid()?;
    let mut by_id: BTreeMap<&ElementId, &EvidenceBinding> = BTreeMap::new();
    for binding in bindings {
        if case.kind_of(&binding.evidence_id) != Some(ElementKind::Evidence) {
            return Err(EvaluateError::NotEvidence(binding.evidence_id.clone()));
        }
        if by_id.insert(&binding.evidence_id, binding).is_some() {
            return Err(EvaluateError::DuplicateBinding(binding.evidence_id.clone()));
        }
    }

    let mut evidence_results = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for element in case.elements_of_kind(ElementKind::Evidence) {
        let result = match by_id.get(&element.id) {
            Some(binding) => {
                if let Some(artifact) = artifacts.get(&binding.source.artifact) {
                    seen.insert(ArtifactSeen {
                        artifact: binding.source.artifact.clone(),
                        digest: artifact.digest.clone(),
                    });
                }
                check_evidence(binding, artifacts, now)
            }
            None => EvidenceResult::new(EvidenceState::Missing, "no binding", ""),
        };
        evidence_results.insert(element.id.clone(), result);
    }

    let states = evidence_results
        .iter()
        .map(|(id, r)| (id.clone(), r.state))
        .collect();
    let rollup = rollup_status(case, &states)?;
    Ok(CaseEvaluation {
        case_id: case.case_id.clone(),
        evaluated_at: now,
        evidence_results,
        rollup,
        artifacts_seen: seen.into_iter().collect(),
    })
}
