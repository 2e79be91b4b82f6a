use std::fmt;

use serde::{Deserialize, Serialize};
use serde_yaml::Value;

use crate::assurance::ElementId;
use crate::doc::{str_seq, DocError, MapBuilder, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RaidKind {
    Risk,
    Assumption,
    Issue,
    Dependency,
}

impl RaidKind {
    pub const ALL: [RaidKind; 4] = [
        RaidKind::Risk,
        RaidKind::Assumption,
        RaidKind::Issue,
        RaidKind::Dependency,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RaidKind::Risk => "Risk",
            RaidKind::Assumption => "Assumption",
            RaidKind::Issue => "Issue",
            RaidKind::Dependency => "Dependency",
        }
    }

    pub fn label(self) -> String {
        self.as_str().to_lowercase()
    }

    /// Case-insensitive.
    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for RaidKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Low,
    #[default]
    Medium,
    High,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Low, Severity::Medium, Severity::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.as_str().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub experiment_id: Option<String>,
    pub evidence_id: Option<ElementId>,
}

/// A Risk, Assumption, Issue or Dependency entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaidRecord {
    pub kind: RaidKind,
    pub title: String,
    pub description: String,
    pub severity: Severity,
    pub linked_elements: Vec<ElementId>,
    pub labels: Vec<String>,
    pub origin: Origin,
}

impl RaidRecord {
    pub fn new(kind: RaidKind, title: impl Into<String>) -> Self {
        RaidRecord {
            kind,
            title: title.into(),
            description: String::new(),
            severity: Severity::default(),
            linked_elements: Vec::new(),
            labels: Vec::new(),
            origin: Origin::default(),
        }
    }

    pub(crate) fn from_node(node: &Node<'_>) -> Result<Self, DocError> {
        let kind_node = node.req("kind")?;
        let kind_name = kind_node.str()?;
        let kind = RaidKind::parse(&kind_name).ok_or_else(|| {
            DocError::schema(
                kind_node.path.clone(),
                format!("unknown RAID kind `{kind_name}`; allowed: risk, assumption, issue, dependency"),
            )
        })?;
        let title_node = node.req("title")?;
        let title = title_node.text()?;
        if title.trim().is_empty() {
            return Err(DocError::schema(title_node.path, "title must be non-empty"));
        }
        let severity = match node.get("severity")? {
            None => Severity::default(),
            Some(n) => {
                let name = n.str()?;
                Severity::parse(&name).ok_or_else(|| {
                    DocError::schema(n.path.clone(), format!("unknown severity `{name}`; allowed: low, medium, high"))
                })?
            }
        };
        let linked_elements = node
            .list_or_empty("linked_elements")?
            .iter()
            .map(|n| {
                let id = n.text()?;
                ElementId::new(id).map_err(|_| DocError::schema(n.path.clone(), "element id is empty"))
            })
            .collect::<Result<_, _>>()?;
        let labels = match node.get("labels")? {
            Some(n) => n.str_list()?,
            None => Vec::new(),
        };
        let origin = match node.get("origin")? {
            None => Origin::default(),
            Some(o) => Origin {
                experiment_id: o.opt_str("experiment_id")?,
                evidence_id: o
                    .get("evidence_id")?
                    .map(|n| {
                        ElementId::new(n.text()?)
                            .map_err(|_| DocError::schema(n.path.clone(), "element id is empty"))
                    })
                    .transpose()?,
            },
        };
        Ok(RaidRecord {
            kind,
            title,
            description: node.str_or_empty("description")?,
            severity,
            linked_elements,
            labels,
            origin,
        })
    }

    pub(crate) fn to_value(&self) -> Value {
        let linked: Vec<&str> = self.linked_elements.iter().map(ElementId::as_str).collect();
        let origin = MapBuilder::new()
            .put_opt("experiment_id", self.origin.experiment_id.clone())
            .put_opt(
                "evidence_id",
                self.origin.evidence_id.as_ref().map(|e| e.as_str().to_string()),
            )
            .build();
        MapBuilder::new()
            .put("description", self.description.as_str())
            .put("kind", self.kind.label())
            .put("labels", str_seq(&self.labels))
            .put("linked_elements", str_seq(&linked))
            .put("origin", origin)
            .put("severity", self.severity.as_str())
            .put("title", self.title.as_str())
            .build()
    }
}
