use std::fmt::Write as _;

use super::evaluate::CaseEvaluation;
use super::timeline::Timeline;
use crate::assurance::{render_diagram, AssuranceCase, CaseError, ElementKind, ElementStatus, EvidenceQuality};
use crate::doc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Markdown,
    Machine,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "markdown" => Some(ReportFormat::Markdown),
            "machine" => Some(ReportFormat::Machine),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ReportSubject<'a> {
    Evaluation(&'a CaseEvaluation),
    Timeline(&'a Timeline),
}

impl<'a> From<&'a CaseEvaluation> for ReportSubject<'a> {
    fn from(e: &'a CaseEvaluation) -> Self {
        ReportSubject::Evaluation(e)
    }
}

impl<'a> From<&'a Timeline> for ReportSubject<'a> {
    fn from(t: &'a Timeline) -> Self {
        ReportSubject::Timeline(t)
    }
}

pub fn status_label(status: ElementStatus) -> &'static str {
    match status {
        ElementStatus::Supported => "PASS",
        ElementStatus::Failing => "FAIL",
        ElementStatus::Unsupported => "UNSUPPORTED",
        ElementStatus::Stale => "STALE",
        ElementStatus::NotEvaluated => "NOT EVALUATED",
    }
}

pub fn generate_report<'a>(
    case: &AssuranceCase,
    subject: impl Into<ReportSubject<'a>>,
    format: ReportFormat,
) -> Result<String, CaseError> {
    let subject = subject.into();
    match format {
        ReportFormat::Machine => {
            let mut json = match subject {
                ReportSubject::Evaluation(e) => serde_json::to_string_pretty(e),
                ReportSubject::Timeline(t) => serde_json::to_string_pretty(t),
            }
            .expect("report types serialize");
            json.push('\n');
            Ok(json)
        }
        ReportFormat::Markdown => markdown(case, subject),
    }
}

/// Read a machine report back. A timeline report yields its latest evaluation.
pub fn parse_machine_report(text: &str) -> Result<CaseEvaluation, serde_json::Error> {
    match serde_json::from_str::<CaseEvaluation>(text) {
        Ok(e) => Ok(e),
        Err(first) => match serde_json::from_str::<Timeline>(text) {
            Ok(t) => t.entries.into_iter().last().map(|e| e.evaluation).ok_or(first),
            Err(_) => Err(first),
        },
    }
}

fn markdown(case: &AssuranceCase, subject: ReportSubject<'_>) -> Result<String, CaseError> {
    let mut out = format!("# Assurance Report: {}\n\n", case.case_id);
    if !case.title.is_empty() {
        let _ = writeln!(out, "{}\n", case.title);
    }
    let evaluation = match subject {
        ReportSubject::Evaluation(e) => Some(e),
        ReportSubject::Timeline(t) => {
            timeline_section(&mut out, case, t);
            t.latest()
        }
    };
    let Some(evaluation) = evaluation else {
        out.push_str("No snapshots were evaluated.\n");
        return Ok(out);
    };

    let root = evaluation
        .rollup
        .get(&case.root)
        .unwrap_or(ElementStatus::NotEvaluated);
    let _ = writeln!(
        out,
        "Evaluated at {}. Root {} is **{}**.\n",
        doc::format_instant(&evaluation.evaluated_at),
        case.root,
        status_label(root)
    );

    out.push_str("## Status\n\n| element | kind | status | detail |\n|---|---|---|---|\n");
    for element in case.elements.values() {
        if element.kind == ElementKind::Context {
            continue;
        }
        let status = evaluation
            .rollup
            .get(&element.id)
            .unwrap_or(ElementStatus::NotEvaluated);
        let detail = match evaluation.evidence_results.get(&element.id) {
            Some(r) => r.detail.as_str(),
            None => evaluation.rollup.reason(&element.id).unwrap_or(""),
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            element.id,
            element.kind,
            status_label(status),
            cell(detail)
        );
    }

    out.push_str("\n## Evidence\n\n");
    for element in case.elements_of_kind(ElementKind::Evidence) {
        let _ = writeln!(out, "### {}: {}\n", element.id, element.text);
        if let Some(r) = evaluation.evidence_results.get(&element.id) {
            let _ = writeln!(out, "- state: {}", r.state);
            if !r.subject.is_empty() {
                let _ = writeln!(out, "- subject: {}", r.subject);
            }
            let _ = writeln!(out, "- detail: {}", r.detail);
        }
        if let Some(q) = &element.evidence_meta {
            let _ = writeln!(out, "- quality: {}", quality(q));
        }
        out.push('\n');
    }

    if !evaluation.artifacts_seen.is_empty() {
        out.push_str("## Artifacts\n\n| artifact | sha256 |\n|---|---|\n");
        for seen in &evaluation.artifacts_seen {
            let _ = writeln!(out, "| {} | `{}` |", seen.artifact, seen.digest);
        }
        out.push('\n');
    }

    out.push_str("## Diagram\n\n```mermaid\n");
    out.push_str(&render_diagram(case, Some(&evaluation.rollup))?);
    out.push_str("```\n");
    Ok(out)
}

fn timeline_section(out: &mut String, case: &AssuranceCase, timeline: &Timeline) {
    out.push_str("## Timeline\n\n| instant | root | transitions | changed artifacts |\n|---|---|---|---|\n");
    for entry in &timeline.entries {
        let root = entry
            .evaluation
            .rollup
            .get(&case.root)
            .unwrap_or(ElementStatus::NotEvaluated);
        let transitions = entry
            .transitions
            .iter()
            .map(|t| format!("{}: {} → {}", t.element, status_label(t.from), status_label(t.to)))
            .collect::<Vec<_>>()
            .join(", ");
        let changed = entry
            .artifact_changes
            .iter()
            .map(|(name, diff)| format!("{name} ({} changes)", diff.len()))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            doc::format_instant(&entry.instant),
            status_label(root),
            cell(&transitions),
            cell(&changed)
        );
    }
    out.push('\n');
    for entry in timeline.entries.iter().filter(|e| !e.artifact_changes.is_empty()) {
        let _ = writeln!(out, "### Changes at {}\n", doc::format_instant(&entry.instant));
        for (name, diff) in &entry.artifact_changes {
            let _ = writeln!(out, "{name}:\n\n```diff\n{diff}```\n");
        }
    }
}

fn quality(q: &EvidenceQuality) -> String {
    format!(
        "relevance {}, completeness {}, admissibility {}, accuracy {}",
        q.relevance.as_str(),
        q.completeness.as_str(),
        q.admissibility.as_str(),
        q.accuracy.as_str()
    )
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assurance::{eid, Element};
    use crate::evidence::{build_timeline, evaluate_case, ArtifactSet, Check, EvidenceBinding};

    fn case() -> AssuranceCase {
        AssuranceCase::create("fin", "Finance", Element::goal("G1", "fair"))
            .unwrap()
            .add_element(Element::context("C1", "credit scoring"))
            .unwrap()
            .add_element(Element::claim("P1", "accurate"))
            .unwrap()
            .add_element(Element::evidence("E1", "accuracy gate"))
            .unwrap()
            .link("G1", "P1")
            .unwrap()
            .link("P1", "E1")
            .unwrap()
            .link("C1", "G1")
            .unwrap()
    }

    fn set(value: f64) -> ArtifactSet {
        let text = format!("m: {{name: accuracy, value: {value}, thresholds: 0.88, bigger_is_better: true}}\n");
        ArtifactSet::new().with_text("log.yaml", &text).unwrap()
    }

    fn bindings() -> Vec<EvidenceBinding> {
        vec![EvidenceBinding::new(eid("E1"), "log.yaml", "m", vec![Check::MetricGate])]
    }

    fn at(ts: &str) -> chrono::DateTime<chrono::Utc> {
        doc::parse_instant(ts).unwrap()
    }

    #[test]
    fn markdown_layout() {
        let eval = evaluate_case(&case(), &bindings(), &set(0.57), at("2024-05-02T00:00:00Z")).unwrap();
        let md = generate_report(&case(), &eval, ReportFormat::Markdown).unwrap();
        assert!(md.starts_with("# Assurance Report: fin\n"));
        assert!(md.contains("| element | kind | status | detail |"));
        assert!(md.contains("| E1 | evidence | FAIL | metric gate failed: accuracy = 0.57"));
        assert!(md.contains("```mermaid\ngraph TD\n"));
        assert!(!md.contains("| C1 |"));
    }

    #[test]
    fn machine_round_trip() {
        let eval = evaluate_case(&case(), &bindings(), &set(0.57), at("2024-05-02T00:00:00Z")).unwrap();
        let json = generate_report(&case(), &eval, ReportFormat::Machine).unwrap();
        assert_eq!(parse_machine_report(&json).unwrap(), eval);
        let keys: Vec<String> = serde_json::from_str::<serde_json::Value>(&json)
            .unwrap()
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        for key in ["evaluated_at", "evidence_results", "rollup", "artifacts_seen"] {
            assert!(keys.iter().any(|k| k == key), "{key}");
        }
    }

    #[test]
    fn timeline_report() {
        let snaps = [(at("2024-05-01T00:00:00Z"), set(0.57)), (at("2024-06-01T00:00:00Z"), set(0.9))];
        let tl = build_timeline(&case(), &bindings(), &snaps).unwrap();
        let md = generate_report(&case(), &tl, ReportFormat::Markdown).unwrap();
        assert!(md.contains("## Timeline"));
        assert!(md.contains("G1: FAIL → PASS"));
        let json = generate_report(&case(), &tl, ReportFormat::Machine).unwrap();
        assert_eq!(parse_machine_report(&json).unwrap(), tl.entries[1].evaluation);
    }
}
