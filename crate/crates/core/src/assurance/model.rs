use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::validate::{validate_case, Diagnostic};

/// Identifier of an element, unique within one case (`G1`, `P3`, `E1`, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ElementId(String);

impl ElementId {
    pub fn new(id: impl Into<String>) -> Result<Self, CaseError> {
        let id = id.into();
        if id.trim().is_empty() {
            Err(CaseError::EmptyId)
        } else {
            Ok(ElementId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ElementId {
    type Error = CaseError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        ElementId::new(value)
    }
}

impl From<ElementId> for String {
    fn from(id: ElementId) -> Self {
        id.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shorthand for ids known to be valid at compile time, e.g. in fixtures.
///
/// # Panics
/// On an empty id.
pub fn eid(id: &str) -> ElementId {
    ElementId::new(id).expect("element id must be non-empty")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    #[serde(rename = "goal")]
    GoalClaim,
    Context,
    PropertyClaim,
    Strategy,
    Evidence,
}

impl ElementKind {
    pub const ALL: [ElementKind; 5] = [
        ElementKind::GoalClaim,
        ElementKind::Context,
        ElementKind::PropertyClaim,
        ElementKind::Strategy,
        ElementKind::Evidence,
    ];

    /// Name used in case files.
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::GoalClaim => "goal",
            ElementKind::Context => "context",
            ElementKind::PropertyClaim => "property_claim",
            ElementKind::Strategy => "strategy",
            ElementKind::Evidence => "evidence",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// Whether a link `self -> target` is part of the allowed link matrix.
    pub fn may_link_to(self, target: ElementKind) -> bool {
        use ElementKind::*;
        matches!(
            (self, target),
            (GoalClaim, Strategy)
                | (GoalClaim, PropertyClaim)
                | (Strategy, PropertyClaim)
                | (PropertyClaim, PropertyClaim)
                | (PropertyClaim, Evidence)
                | (Context, GoalClaim)
                | (Context, Strategy)
                | (Context, PropertyClaim)
        )
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lifecycle component a property claim is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Data,
    Model,
    Interaction,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Data, Component::Model, Component::Interaction];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Data => "data",
            Component::Model => "model",
            Component::Interaction => "interaction",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == name)
    }
}

/// Level of a property claim in the stage / component / assessment /
/// implication hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Stage,
    Component,
    Assessment,
    Implication,
}

impl Level {
    pub const ALL: [Level; 4] = [
        Level::Stage,
        Level::Component,
        Level::Assessment,
        Level::Implication,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Stage => "stage",
            Level::Component => "component",
            Level::Assessment => "assessment",
            Level::Implication => "implication",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyTag {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comp: Option<Component>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    #[default]
    Unassessed,
    Low,
    Medium,
    High,
}

impl Quality {
    pub const ALL: [Quality; 4] = [Quality::Unassessed, Quality::Low, Quality::Medium, Quality::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Unassessed => "unassessed",
            Quality::Low => "low",
            Quality::Medium => "medium",
            Quality::High => "high",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.as_str() == name)
    }
}

/// Quality annotations carried by evidence elements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceQuality {
    pub relevance: Quality,
    pub completeness: Quality,
    pub admissibility: Quality,
    pub accuracy: Quality,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub id: ElementId,
    pub kind: ElementKind,
    pub text: String,
    pub taxonomy: Option<TaxonomyTag>,
    /// Present exactly when `kind` is [`ElementKind::Evidence`].
    pub evidence_meta: Option<EvidenceQuality>,
}

impl Element {
    /// An element of the given kind. Evidence elements start with all
    /// quality dimensions unassessed.
    pub fn new(id: ElementId, kind: ElementKind, text: impl Into<String>) -> Self {
        let evidence_meta = (kind == ElementKind::Evidence).then(EvidenceQuality::default);
        Element {
            id,
            kind,
            text: text.into(),
            taxonomy: None,
            evidence_meta,
        }
    }

    pub fn goal(id: &str, text: &str) -> Self {
        Self::new(eid(id), ElementKind::GoalClaim, text)
    }

    pub fn context(id: &str, text: &str) -> Self {
        Self::new(eid(id), ElementKind::Context, text)
    }

    pub fn strategy(id: &str, text: &str) -> Self {
        Self::new(eid(id), ElementKind::Strategy, text)
    }

    pub fn claim(id: &str, text: &str) -> Self {
        Self::new(eid(id), ElementKind::PropertyClaim, text)
    }

    pub fn evidence(id: &str, text: &str) -> Self {
        Self::new(eid(id), ElementKind::Evidence, text)
    }

    pub fn with_taxonomy(mut self, tag: TaxonomyTag) -> Self {
        self.taxonomy = Some(tag);
        self
    }

    pub fn with_quality(mut self, quality: EvidenceQuality) -> Self {
        if self.kind == ElementKind::Evidence {
            self.evidence_meta = Some(quality);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub from: ElementId,
    pub to: ElementId,
}

impl Link {
    pub fn new(from: ElementId, to: ElementId) -> Self {
        Link { from, to }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CaseError {
    #[error("element ids must be non-empty")]
    EmptyId,
    #[error("root element {0} is a {1}, expected a goal")]
    NonGoalRoot(ElementId, ElementKind),
    #[error("element {0} already exists")]
    DuplicateId(ElementId),
    #[error("unknown element {0}")]
    UnknownId(ElementId),
    #[error("links from {from_kind} to {to_kind} are not allowed ({from} -> {to})")]
    IllegalLinkKind {
        from: ElementId,
        to: ElementId,
        from_kind: ElementKind,
        to_kind: ElementKind,
    },
    #[error("link {from} -> {to} would create a cycle")]
    CycleDetected { from: ElementId, to: ElementId },
    #[error("case is invalid: {}", format_diagnostics(.0))]
    InvalidCase(Vec<Diagnostic>),
    #[error("evidence states do not match the evidence elements: missing {missing:?}, unexpected {unexpected:?}")]
    IncompleteStates {
        missing: Vec<ElementId>,
        unexpected: Vec<ElementId>,
    },
}

fn format_diagnostics(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// An argument graph rooted at a single goal.
///
/// Values are never mutated in place by the operations below; each returns
/// a new case. Structure loaded from files may be invalid, which
/// [`validate_case`] reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssuranceCase {
    pub case_id: String,
    pub title: String,
    pub elements: BTreeMap<ElementId, Element>,
    pub links: BTreeSet<Link>,
    pub root: ElementId,
}

impl AssuranceCase {
    pub fn create(
        case_id: impl Into<String>,
        title: impl Into<String>,
        root_goal: Element,
    ) -> Result<Self, CaseError> {
        if root_goal.kind != ElementKind::GoalClaim {
            return Err(CaseError::NonGoalRoot(root_goal.id, root_goal.kind));
        }
        let root = root_goal.id.clone();
        Ok(AssuranceCase {
            case_id: case_id.into(),
            title: title.into(),
            elements: BTreeMap::from([(root.clone(), root_goal)]),
            links: BTreeSet::new(),
            root,
        })
    }

    pub fn add_element(&self, element: Element) -> Result<Self, CaseError> {
        if self.elements.contains_key(&element.id) {
            return Err(CaseError::DuplicateId(element.id));
        }
        let mut next = self.clone();
        next.elements.insert(element.id.clone(), element);
        Ok(next)
    }

    pub fn add_link(&self, from: &ElementId, to: &ElementId) -> Result<Self, CaseError> {
        let from_kind = self.kind_of(from).ok_or_else(|| CaseError::UnknownId(from.clone()))?;
        let to_kind = self.kind_of(to).ok_or_else(|| CaseError::UnknownId(to.clone()))?;
        // Cycles are reported ahead of kind violations: a back edge such as
        // P1 -> G1 closes a loop over support links and is rejected as such.
        // Context links lie outside the inferential subgraph.
        let inferential = from_kind != ElementKind::Context && to_kind != ElementKind::Context;
        if inferential && (from == to || self.reaches(to, from)) {
            return Err(CaseError::CycleDetected {
                from: from.clone(),
                to: to.clone(),
            });
        }
        if !from_kind.may_link_to(to_kind) {
            return Err(CaseError::IllegalLinkKind {
                from: from.clone(),
                to: to.clone(),
                from_kind,
                to_kind,
            });
        }
        let mut next = self.clone();
        next.links.insert(Link::new(from.clone(), to.clone()));
        Ok(next)
    }

    /// Convenience for chained construction with string ids.
    pub fn link(&self, from: &str, to: &str) -> Result<Self, CaseError> {
        self.add_link(&ElementId::new(from)?, &ElementId::new(to)?)
    }

    pub fn kind_of(&self, id: &ElementId) -> Option<ElementKind> {
        self.elements.get(id).map(|e| e.kind)
    }

    pub fn get(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|(k, _)| k.as_str() == id).map(|(_, e)| e)
    }

    pub fn root_element(&self) -> Option<&Element> {
        self.elements.get(&self.root)
    }

    /// Targets of links leaving `id`, in id order.
    pub fn children<'a>(&'a self, id: &'a ElementId) -> impl Iterator<Item = &'a ElementId> + 'a {
        self.links
            .range(Link::new(id.clone(), ElementId(String::new()))..)
            .take_while(move |l| &l.from == id)
            .map(|l| &l.to)
    }

    /// Non-Context children that exist in the case.
    pub(crate) fn support_children<'a>(
        &'a self,
        id: &'a ElementId,
    ) -> impl Iterator<Item = &'a ElementId> + 'a {
        self.children(id)
            .filter(move |c| matches!(self.kind_of(c), Some(k) if k != ElementKind::Context))
    }

    pub fn elements_of_kind(&self, kind: ElementKind) -> impl Iterator<Item = &Element> {
        self.elements.values().filter(move |e| e.kind == kind)
    }

    fn reaches(&self, start: &ElementId, target: &ElementId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            if id == target {
                return true;
            }
            if seen.insert(id) {
                stack.extend(self.support_children(id));
            }
        }
        false
    }

    /// Fail with [`CaseError::InvalidCase`] when validation reports anything.
    pub fn ensure_valid(&self) -> Result<(), CaseError> {
        let diagnostics = validate_case(self);
        if diagnostics.is_empty() {
            Ok(())
        } else {
            Err(CaseError::InvalidCase(diagnostics))
        }
    }
}

/// Free-function form of [`AssuranceCase::create`].
pub fn create_case(
    case_id: impl Into<String>,
    title: impl Into<String>,
    root_goal: Element,
) -> Result<AssuranceCase, CaseError> {
    AssuranceCase::create(case_id, title, root_goal)
}
