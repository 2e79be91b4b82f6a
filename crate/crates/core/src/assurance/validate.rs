use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::Serialize;

use super::model::{AssuranceCase, ElementId, ElementKind};

/// The structural rule a diagnostic reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    UnknownId,
    NonGoalRoot,
    IllegalLinkKind,
    CycleDetected,
    EmptyText,
    EvidenceMetaMismatch,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::UnknownId => "UnknownId",
            Rule::NonGoalRoot => "NonGoalRoot",
            Rule::IllegalLinkKind => "IllegalLinkKind",
            Rule::CycleDetected => "CycleDetected",
            Rule::EmptyText => "EmptyText",
            Rule::EvidenceMetaMismatch => "EvidenceMetaMismatch",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub rule: Rule,
    /// Elements involved, existing or merely referenced. Never empty.
    pub elements: Vec<ElementId>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.elements.iter().map(ElementId::as_str).collect();
        write!(f, "{} [{}]: {}", self.rule, ids.join(", "), self.message)
    }
}

fn diag(rule: Rule, elements: Vec<ElementId>, message: String) -> Diagnostic {
    Diagnostic {
        rule,
        elements,
        message,
    }
}

/// Check every structural invariant of a case. An empty result means the
/// case is valid. Diagnostics are sorted by rule, then element ids.
pub fn validate_case(case: &AssuranceCase) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    match case.elements.get(&case.root) {
        None => out.push(diag(
            Rule::UnknownId,
            vec![case.root.clone()],
            format!("root {} is not an element of the case", case.root),
        )),
        Some(root) if root.kind != ElementKind::GoalClaim => out.push(diag(
            Rule::NonGoalRoot,
            vec![case.root.clone()],
            format!("root {} is a {}, expected a goal", case.root, root.kind),
        )),
        Some(_) => {}
    }

    for element in case.elements.values() {
        if element.text.trim().is_empty() {
            out.push(diag(
                Rule::EmptyText,
                vec![element.id.clone()],
                format!("element {} has no text", element.id),
            ));
        }
        let is_evidence = element.kind == ElementKind::Evidence;
        if is_evidence != element.evidence_meta.is_some() {
            let message = if is_evidence {
                format!("evidence {} lacks quality annotations", element.id)
            } else {
                format!("{} {} carries evidence quality annotations", element.kind, element.id)
            };
            out.push(diag(Rule::EvidenceMetaMismatch, vec![element.id.clone()], message));
        }
    }

    for link in &case.links {
        let endpoints = [&link.from, &link.to];
        let unknown: Vec<ElementId> = endpoints
            .into_iter()
            .filter(|id| !case.elements.contains_key(*id))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            let names: Vec<&str> = unknown.iter().map(ElementId::as_str).collect();
            out.push(diag(
                Rule::UnknownId,
                vec![link.from.clone(), link.to.clone()],
                format!(
                    "link {} -> {} references unknown element(s) {}",
                    link.from,
                    link.to,
                    names.join(", ")
                ),
            ));
            continue;
        }
        let from_kind = case.elements[&link.from].kind;
        let to_kind = case.elements[&link.to].kind;
        if !from_kind.may_link_to(to_kind) {
            out.push(diag(
                Rule::IllegalLinkKind,
                vec![link.from.clone(), link.to.clone()],
                format!(
                    "link {} -> {} goes from {} to {}, which is not allowed",
                    link.from, link.to, from_kind, to_kind
                ),
            ));
        }
    }

    let cyclic = cyclic_elements(case);
    if !cyclic.is_empty() {
        let names: Vec<&str> = cyclic.iter().map(ElementId::as_str).collect();
        out.push(diag(
            Rule::CycleDetected,
            cyclic.clone(),
            format!("support links form a cycle through {}", names.join(", ")),
        ));
    }

    out.sort();
    out
}

/// Elements lying on a cycle of the non-Context subgraph, sorted by id.
pub(crate) fn cyclic_elements(case: &AssuranceCase) -> Vec<ElementId> {
    let graph = support_graph(case);
    let mut ids: BTreeSet<&ElementId> = BTreeSet::new();
    for component in tarjan_scc(&graph) {
        if component.len() > 1 {
            ids.extend(component);
        } else if graph.contains_edge(component[0], component[0]) {
            ids.insert(component[0]);
        }
    }
    ids.into_iter().cloned().collect()
}

fn support_graph(case: &AssuranceCase) -> DiGraphMap<&ElementId, ()> {
    let mut graph = DiGraphMap::new();
    for element in case.elements.values() {
        if element.kind != ElementKind::Context {
            graph.add_node(&element.id);
        }
    }
    for link in &case.links {
        let inferential = |id: &ElementId| {
            matches!(case.kind_of(id), Some(kind) if kind != ElementKind::Context)
        };
        if inferential(&link.from) && inferential(&link.to) {
            graph.add_edge(&link.from, &link.to, ());
        }
    }
    graph
}

/// Non-Context elements in an order where every element precedes its
/// children. `None` when the support subgraph has a cycle.
pub(crate) fn topological_order(case: &AssuranceCase) -> Option<Vec<ElementId>> {
    let mut indegree: BTreeMap<&ElementId, usize> = case
        .elements
        .values()
        .filter(|e| e.kind != ElementKind::Context)
        .map(|e| (&e.id, 0))
        .collect();
    for id in indegree.clone().keys() {
        for child in case.support_children(id) {
            *indegree.get_mut(child)? += 1;
        }
    }
    let mut ready: VecDeque<&ElementId> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| *id)
        .collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(id) = ready.pop_front() {
        order.push(id.clone());
        for child in case.support_children(id) {
            let d = indegree.get_mut(child)?;
            *d -= 1;
            if *d == 0 {
                ready.push_back(child);
            }
        }
    }
    (order.len() == indegree.len()).then_some(order)
}

/// Property claims with no directed path to any evidence element, sorted by id.
///
/// Fails with [`super::CaseError::InvalidCase`] on invalid cases.
pub fn unsupported_claims(case: &AssuranceCase) -> Result<Vec<ElementId>, super::CaseError> {
    case.ensure_valid()?;
    // Walk reverse links from every evidence node; whatever is reached has a
    // path to evidence.
    let mut parents: BTreeMap<&ElementId, Vec<&ElementId>> = BTreeMap::new();
    for link in &case.links {
        parents.entry(&link.to).or_default().push(&link.from);
    }
    let mut reached: BTreeSet<&ElementId> = BTreeSet::new();
    let mut queue: Vec<&ElementId> = case
        .elements_of_kind(ElementKind::Evidence)
        .map(|e| &e.id)
        .collect();
    while let Some(id) = queue.pop() {
        if reached.insert(id) {
            if let Some(ps) = parents.get(id) {
                queue.extend(ps.iter().copied());
            }
        }
    }
    Ok(case
        .elements_of_kind(ElementKind::PropertyClaim)
        .map(|e| &e.id)
        .filter(|id| !reached.contains(id))
        .cloned()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assurance::model::{eid, Element, Link};

    fn chain() -> AssuranceCase {
        AssuranceCase::create("c", "t", Element::goal("G1", "goal"))
            .and_then(|c| c.add_element(Element::claim("P1", "p1")))
            .and_then(|c| c.add_element(Element::claim("P2", "p2")))
            .and_then(|c| c.add_element(Element::evidence("E1", "e1")))
            .and_then(|c| c.link("G1", "P1"))
            .unwrap()
    }

    #[test]
    fn valid_chain_has_no_diagnostics() {
        let case = chain().link("P1", "E1").unwrap();
        assert!(validate_case(&case).is_empty());
    }

    #[test]
    fn dangling_link_is_reported() {
        let mut case = chain();
        case.links.insert(Link::new(eid("P1"), eid("E9")));
        let diags = validate_case(&case);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].rule, Rule::UnknownId);
        assert!(diags[0].elements.contains(&eid("E9")));
    }

    #[test]
    fn goal_to_goal_is_illegal() {
        let mut case = chain().add_element(Element::goal("G2", "second")).unwrap();
        case.links.insert(Link::new(eid("G1"), eid("G2")));
        let rules: Vec<Rule> = validate_case(&case).iter().map(|d| d.rule).collect();
        assert_eq!(rules, vec![Rule::IllegalLinkKind]);
    }

    #[test]
    fn injected_cycle_is_one_diagnostic() {
        let mut case = chain().link("P1", "P2").unwrap();
        case.links.insert(Link::new(eid("P2"), eid("P1")));
        let diags = validate_case(&case);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].rule, Rule::CycleDetected);
        assert_eq!(diags[0].elements, vec![eid("P1"), eid("P2")]);
        assert!(topological_order(&case).is_none());
    }

    #[test]
    fn missing_root_and_non_goal_root() {
        let mut case = chain();
        case.root = eid("X1");
        assert_eq!(validate_case(&case)[0].rule, Rule::UnknownId);
        case.root = eid("P1");
        assert_eq!(validate_case(&case)[0].rule, Rule::NonGoalRoot);
    }

    #[test]
    fn claims_without_evidence() {
        let case = chain().link("P1", "E1").unwrap();
        assert_eq!(unsupported_claims(&case).unwrap(), vec![eid("P2")]);
        let case = chain()
            .link("P1", "P2")
            .and_then(|c| c.link("P2", "E1"))
            .unwrap();
        assert!(unsupported_claims(&case).unwrap().is_empty());
    }

    #[test]
    fn unsupported_claims_requires_valid_case() {
        let mut case = chain();
        case.links.insert(Link::new(eid("E1"), eid("P1")));
        assert!(unsupported_claims(&case).is_err());
    }
}
