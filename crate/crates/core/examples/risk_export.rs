// Turn a declared risk and a failing gate into issue payloads and plan a
// submission against issues that were already filed.

use std::collections::BTreeSet;
use std::path::Path;

use fairassure::artifacts::parse_fairness_log;
use fairassure::assurance::parse_case;
use fairassure::doc::parse_instant;
use fairassure::evidence::{evaluate_case, parse_bindings, ArtifactSet};
use fairassure::risk::{extract_raids, plan_submission, to_issue_payload, RaidKind, RaidRecord, Severity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/finance");
    let case = parse_case(&std::fs::read_to_string(root.join("case.yaml"))?)?.case;
    let bindings = parse_bindings(&std::fs::read_to_string(root.join("bindings.yaml"))?)?;
    let artifacts = ArtifactSet::load_dir(&root.join("artifacts"))?;
    let evaluation = evaluate_case(&case, &bindings, &artifacts, parse_instant("2024-05-15T00:00:00Z").ok_or("bad instant")?)?;

    let (mut log, _) = parse_fairness_log(&std::fs::read_to_string(root.join("artifacts/logs/finbert-indian-news.yaml"))?)?;
    let mut declared = RaidRecord::new(RaidKind::Risk, "Large numbers can influence predictions");
    declared.severity = Severity::Medium;
    declared.description = "Headlines quoting large figures skew the sentiment score".into();
    log.risks = Some(vec![declared]);

    let payloads: Vec<_> = extract_raids(&log, Some(&evaluation)).iter().map(to_issue_payload).collect();
    for p in &payloads {
        println!("{} {:?}", p.title, p.labels);
    }

    let filed: BTreeSet<String> = [payloads[0].idempotency_key.clone()].into();
    let plan = plan_submission(&payloads, &filed);
    println!("{} of {} payloads still to file", plan.len(), payloads.len());
    print!("{}", plan[0].to_json());
    Ok(())
}
