// Re-evaluate a case over three snapshots of the same log.

use fairassure::assurance::{eid, AssuranceCase, Element};
use fairassure::doc::parse_instant;
use fairassure::evidence::{build_timeline, generate_report, ArtifactSet, Check, EvidenceBinding, ReportFormat};

fn snapshot(accuracy: f64, timestamp: &str) -> Result<ArtifactSet, Box<dyn std::error::Error>> {
    let log = format!(
        "general: {{experiment_id: retrain, timestamp: {timestamp}}}\n\
         bias_metrics:\n  groups:\n    - group_name: overall\n      metrics:\n        \
         - {{name: accuracy, value: {accuracy}, thresholds: 0.88, bigger_is_better: true}}\n"
    );
    Ok(ArtifactSet::new().with_text("log.yaml", &log)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = AssuranceCase::create("retrain", "Domain adaptation", Element::goal("G1", "Accuracy holds in the new domain"))?
        .add_element(Element::claim("P1", "Accuracy meets the benchmark"))?
        .add_element(Element::evidence("E1", "Accuracy gate"))?
        .link("G1", "P1")?
        .link("P1", "E1")?;
    let bindings = vec![EvidenceBinding::new(
        eid("E1"),
        "log.yaml",
        "bias_metrics/groups/0/metrics/0",
        vec![Check::MetricGate],
    )];
    let at = |s: &str| parse_instant(s).ok_or("bad instant");
    let snapshots = vec![
        (at("2024-05-01T00:00:00Z")?, snapshot(0.57, "2024-05-01T00:00:00Z")?),
        (at("2024-06-01T00:00:00Z")?, snapshot(0.81, "2024-06-01T00:00:00Z")?),
        (at("2024-07-01T00:00:00Z")?, snapshot(0.89, "2024-07-01T00:00:00Z")?),
    ];
    let timeline = build_timeline(&case, &bindings, &snapshots)?;
    print!("{}", generate_report(&case, &timeline, ReportFormat::Markdown)?);
    Ok(())
}
