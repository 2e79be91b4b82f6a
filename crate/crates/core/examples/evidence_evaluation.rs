// Evaluate the finance case against its artifacts and print the report.

use std::path::Path;

use fairassure::assurance::parse_case;
use fairassure::doc::parse_instant;
use fairassure::evidence::{evaluate_case, generate_report, parse_bindings, ArtifactSet, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/finance");
    let case = parse_case(&std::fs::read_to_string(root.join("case.yaml"))?)?.case;
    let bindings = parse_bindings(&std::fs::read_to_string(root.join("bindings.yaml"))?)?;
    let artifacts = ArtifactSet::load_dir(&root.join("artifacts"))?;
    let now = parse_instant("2024-05-15T00:00:00Z").ok_or("bad instant")?;

    let evaluation = evaluate_case(&case, &bindings, &artifacts, now)?;
    for (id, result) in &evaluation.evidence_results {
        println!("{id}: {} ({})", result.state, result.detail);
    }
    print!("{}", generate_report(&case, &evaluation, ReportFormat::Markdown)?);
    Ok(())
}
