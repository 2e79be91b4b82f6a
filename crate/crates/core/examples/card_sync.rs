// Sync a fairness log into a model card, twice, and apply the diff.

use std::path::Path;

use fairassure::artifacts::{
    apply_diff, card::model_card_value, parse_fairness_log, parse_model_card, serialize_model_card, sync_log_to_card,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/finance");
    let (log, _) = parse_fairness_log(&std::fs::read_to_string(root.join("artifacts/logs/finbert-indian-news.yaml"))?)?;
    let (card, diagnostics) = parse_model_card(&std::fs::read_to_string(root.join("cards/model_card.yaml"))?)?;
    for d in &diagnostics {
        println!("note: {d}");
    }

    let first = sync_log_to_card(&log, &card)?;
    print!("{}", first.diff);
    let patched = apply_diff(&model_card_value(&card), &first.diff)?;
    assert_eq!(patched, model_card_value(&first.card));

    let second = sync_log_to_card(&log, &first.card)?;
    println!("second sync: {} changes", second.diff.len());
    print!("{}", serialize_model_card(&second.card));
    Ok(())
}
