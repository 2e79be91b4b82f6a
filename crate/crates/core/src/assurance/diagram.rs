use std::fmt::Write as _;

use super::model::{AssuranceCase, CaseError, ElementKind};
use super::rollup::{CaseStatus, ElementStatus};

const LABEL_LIMIT: usize = 60;

/// Render the case as a Mermaid flowchart: one node per element, one edge
/// per link. With a status, each node carries a class named after its status
/// (context nodes carry `context`).
pub fn render_diagram(case: &AssuranceCase, status: Option<&CaseStatus>) -> Result<String, CaseError> {
    case.ensure_valid()?;
    let mut out = String::from("graph TD\n");
    for element in case.elements.values() {
        let label = escape(&truncate(&element.text));
        let (open, close) = match element.kind {
            ElementKind::GoalClaim => ("[", "]"),
            ElementKind::Context => ("([", "])"),
            ElementKind::Strategy => ("[/", "/]"),
            ElementKind::PropertyClaim => ("(", ")"),
            ElementKind::Evidence => ("[(", ")]"),
        };
        let _ = write!(out, "  {}{open}\"{}: {label}\"{close}", element.id, element.id);
        if let Some(status) = status {
            let class = if element.kind == ElementKind::Context {
                "context"
            } else {
                status
                    .get(&element.id)
                    .unwrap_or(ElementStatus::NotEvaluated)
                    .as_str()
            };
            let _ = write!(out, ":::{class}");
        }
        out.push('\n');
    }
    for link in &case.links {
        let arrow = if case.kind_of(&link.from) == Some(ElementKind::Context) {
            "-.->"
        } else {
            "-->"
        };
        let _ = writeln!(out, "  {} {arrow} {}", link.from, link.to);
    }
    if status.is_some() {
        out.push_str(concat!(
            "  classDef supported fill:#d4f7d4,stroke:#2e7d32\n",
            "  classDef failing fill:#f9d0d0,stroke:#c62828\n",
            "  classDef unsupported fill:#fff3cd,stroke:#b8860b\n",
            "  classDef stale fill:#e8e8e8,stroke:#757575\n",
            "  classDef not_evaluated fill:#ffffff,stroke:#9e9e9e\n",
            "  classDef context fill:#e3f2fd,stroke:#1565c0\n",
        ));
    }
    Ok(out)
}

fn truncate(text: &str) -> String {
    let single_line = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if single_line.chars().count() <= LABEL_LIMIT {
        single_line
    } else {
        let mut cut: String = single_line.chars().take(LABEL_LIMIT).collect();
        cut.push('…');
        cut
    }
}

fn escape(label: &str) -> String {
    label.replace('"', "#quot;")
}
