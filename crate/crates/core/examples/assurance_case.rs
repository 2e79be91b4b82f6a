// Build a small case in code, validate it, roll up evidence and draw it.

use std::collections::BTreeMap;

use fairassure::assurance::{
    eid, render_diagram, rollup_status, serialize_case, unsupported_claims, validate_case, AssuranceCase, CaseError,
    Element, EvidenceState,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = AssuranceCase::create(
        "loan-approval",
        "Loan approval model",
        Element::goal("G1", "The AI system promotes fair and equitable outcomes within the intended context"),
    )?
    .add_element(Element::context("C1", "Consumer loans in one national market"))?
    .add_element(Element::strategy("S1", "Argue over the model component"))?
    .add_element(Element::claim("P1", "Approval rates are comparable across groups"))?
    .add_element(Element::claim("P2", "Error rates are comparable across groups"))?
    .add_element(Element::evidence("E1", "Demographic parity gate"))?
    .link("C1", "G1")?
    .link("G1", "S1")?
    .link("S1", "P1")?
    .link("S1", "P2")?
    .link("P1", "E1")?;

    assert!(validate_case(&case).is_empty());
    let unsupported = unsupported_claims(&case)?;
    let names: Vec<&str> = unsupported.iter().map(|id| id.as_str()).collect();
    println!("claims without evidence: {}", names.join(", "));

    // Closing a loop through the goal is rejected.
    match case.link("P1", "G1") {
        Err(CaseError::CycleDetected { from, to }) => println!("rejected {from} -> {to}: cycle"),
        other => println!("unexpected: {other:?}"),
    }

    let case = case
        .add_element(Element::evidence("E2", "Equalized odds gate"))?
        .link("P2", "E2")?;
    let states = BTreeMap::from([(eid("E1"), EvidenceState::Passing), (eid("E2"), EvidenceState::Failing)]);
    let status = rollup_status(&case, &states)?;
    for (id, s) in &status.statuses {
        println!("{id}: {s}");
    }
    println!("{}", render_diagram(&case, Some(&status))?);
    print!("{}", serialize_case(&case));
    Ok(())
}
