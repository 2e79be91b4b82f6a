//! Case file reading and writing.

use std::collections::{BTreeMap, BTreeSet};

use serde_yaml::Value;

use super::model::{
    AssuranceCase, Component, Element, ElementId, ElementKind, EvidenceQuality, Level, Link,
    Quality, TaxonomyTag,
};
use super::validate::{validate_case, Diagnostic};
use crate::doc::{self, DocError, MapBuilder, Node};

/// A case read from a file together with its validation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCase {
    pub case: AssuranceCase,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn parse_case(text: &str) -> Result<ParsedCase, DocError> {
    let tree = doc::parse_text(text)?;
    let root = Node::root(&tree);
    root.mapping()?;

    let case_id = root.req("case_id")?.text()?;
    let title = root.get("title")?.map(|n| n.text()).transpose()?.unwrap_or_default();
    let root_node = root.req("root")?;
    let root_id = element_id(&root_node)?;

    let mut elements = BTreeMap::new();
    for item in root.list_or_empty("elements")? {
        let element = parse_element(&item)?;
        if elements.contains_key(&element.id) {
            return Err(DocError::schema(
                doc::join(&item.path, "id"),
                format!("duplicate element id {}", element.id),
            ));
        }
        elements.insert(element.id.clone(), element);
    }

    let mut links = BTreeSet::new();
    for item in root.list_or_empty("links")? {
        let from = element_id(&item.req("from")?)?;
        let to = element_id(&item.req("to")?)?;
        links.insert(Link::new(from, to));
    }

    let case = AssuranceCase {
        case_id,
        title,
        elements,
        links,
        root: root_id,
    };
    let diagnostics = validate_case(&case);
    Ok(ParsedCase { case, diagnostics })
}

fn element_id(node: &Node<'_>) -> Result<ElementId, DocError> {
    let text = node.text()?;
    ElementId::new(text).map_err(|_| DocError::schema(node.path.clone(), "element id is empty"))
}

fn parse_element(node: &Node<'_>) -> Result<Element, DocError> {
    let id = element_id(&node.req("id")?)?;
    let kind_node = node.req("kind")?;
    let kind_name = kind_node.str()?;
    let kind = ElementKind::parse(&kind_name).ok_or_else(|| {
        let allowed: Vec<&str> = ElementKind::ALL.iter().map(|k| k.as_str()).collect();
        DocError::schema(
            kind_node.path.clone(),
            format!(
                "unknown element kind `{kind_name}`; allowed kinds: {}",
                allowed.join(", ")
            ),
        )
    })?;
    let text = node.req("text")?.text()?;
    let taxonomy = node.get("taxonomy")?.map(|t| parse_taxonomy(&t)).transpose()?;
    let evidence_meta = match node.get("evidence_meta")? {
        Some(meta) if kind != ElementKind::Evidence => {
            return Err(DocError::schema(
                meta.path,
                "evidence_meta is only allowed on evidence elements",
            ))
        }
        Some(meta) => Some(parse_quality(&meta)?),
        None => (kind == ElementKind::Evidence).then(EvidenceQuality::default),
    };
    Ok(Element {
        id,
        kind,
        text,
        taxonomy,
        evidence_meta,
    })
}

fn parse_taxonomy(node: &Node<'_>) -> Result<TaxonomyTag, DocError> {
    let stage = node.opt_str("stage")?;
    let comp = node
        .get("comp")?
        .map(|n| {
            let name = n.str()?;
            Component::parse(&name).ok_or_else(|| {
                DocError::schema(n.path.clone(), format!("unknown component `{name}`; allowed: data, model, interaction"))
            })
        })
        .transpose()?;
    let level = node
        .get("level")?
        .map(|n| {
            let name = n.str()?;
            Level::parse(&name).ok_or_else(|| {
                DocError::schema(
                    n.path.clone(),
                    format!("unknown level `{name}`; allowed: stage, component, assessment, implication"),
                )
            })
        })
        .transpose()?;
    Ok(TaxonomyTag { stage, comp, level })
}

fn parse_quality(node: &Node<'_>) -> Result<EvidenceQuality, DocError> {
    let dim = |key: &str| -> Result<Quality, DocError> {
        match node.get(key)? {
            None => Ok(Quality::Unassessed),
            Some(n) => {
                let name = n.str()?;
                Quality::parse(&name).ok_or_else(|| {
                    DocError::schema(
                        n.path.clone(),
                        format!("unknown quality `{name}`; allowed: unassessed, low, medium, high"),
                    )
                })
            }
        }
    };
    Ok(EvidenceQuality {
        relevance: dim("relevance")?,
        completeness: dim("completeness")?,
        admissibility: dim("admissibility")?,
        accuracy: dim("accuracy")?,
    })
}

/// Render a case file. Elements are ordered by id and links by endpoints, so
/// equal cases always produce identical bytes.
pub fn serialize_case(case: &AssuranceCase) -> String {
    let elements: Vec<Value> = case.elements.values().map(element_value).collect();
    let links: Vec<Value> = case
        .links
        .iter()
        .map(|l| {
            MapBuilder::new()
                .put("from", l.from.as_str())
                .put("to", l.to.as_str())
                .build()
        })
        .collect();
    let tree = MapBuilder::new()
        .put("case_id", case.case_id.as_str())
        .put("title", case.title.as_str())
        .put("root", case.root.as_str())
        .put("elements", Value::Sequence(elements))
        .put("links", Value::Sequence(links))
        .build();
    doc::to_text(&tree)
}

fn element_value(element: &Element) -> Value {
    let taxonomy = element.taxonomy.as_ref().map(|t| {
        MapBuilder::new()
            .put_opt("stage", t.stage.clone())
            .put_opt("comp", t.comp.map(Component::as_str))
            .put_opt("level", t.level.map(Level::as_str))
            .build()
    });
    let meta = element.evidence_meta.map(|q| {
        MapBuilder::new()
            .put("relevance", q.relevance.as_str())
            .put("completeness", q.completeness.as_str())
            .put("admissibility", q.admissibility.as_str())
            .put("accuracy", q.accuracy.as_str())
            .build()
    });
    MapBuilder::new()
        .put("id", element.id.as_str())
        .put("kind", element.kind.as_str())
        .put("text", element.text.as_str())
        .put_opt("taxonomy", taxonomy)
        .put_opt("evidence_meta", meta)
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "case_id: c1\ntitle: t\nroot: G1\nelements:\n  - id: G1\n    kind: goal\n    text: fair\n";

    #[test]
    fn minimal_document_parses() {
        let parsed = parse_case(MINIMAL).unwrap();
        assert!(parsed.diagnostics.is_empty());
        assert_eq!(parsed.case.elements.len(), 1);
    }

    #[test]
    fn missing_root_is_schema_error() {
        let err = parse_case("case_id: c1\nelements: []\n").unwrap_err();
        assert_eq!(err.path(), Some("root"));
    }

    #[test]
    fn unknown_kind_lists_allowed() {
        let text = MINIMAL.replace("kind: goal", "kind: Assumption");
        let err = parse_case(&text).unwrap_err();
        assert_eq!(err.path(), Some("elements/0/kind"));
        let msg = err.to_string();
        for kind in ["goal", "context", "property_claim", "strategy", "evidence"] {
            assert!(msg.contains(kind), "{msg}");
        }
    }

    #[test]
    fn invalid_structure_is_reported_not_rejected() {
        let text = format!("{MINIMAL}links:\n  - from: G1\n    to: P9\n");
        let parsed = parse_case(&text).unwrap();
        assert_eq!(parsed.diagnostics.len(), 1);
    }

    #[test]
    fn syntax_error_has_position() {
        assert!(matches!(
            parse_case("case_id: [unterminated\n"),
            Err(DocError::Syntax { .. })
        ));
    }

    #[test]
    fn evidence_meta_on_claim_is_rejected() {
        let text = format!(
            "{MINIMAL}  - id: P1\n    kind: property_claim\n    text: p\n    evidence_meta:\n      relevance: high\n"
        );
        assert_eq!(parse_case(&text).unwrap_err().path(), Some("elements/1/evidence_meta"));
    }

    #[test]
    fn serialization_is_a_fixpoint() {
        let parsed = parse_case(MINIMAL).unwrap();
        let once = serialize_case(&parsed.case);
        let again = serialize_case(&parse_case(&once).unwrap().case);
        assert_eq!(once, again);
    }
}
