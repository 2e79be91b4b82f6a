// Group rates and the four fairness notions from a prediction file.

use std::fs::File;
use std::path::Path;

use fairassure::metrics::{
    confusion_from_records, evaluate_threshold, group_rates, outcomes, read_prediction_records, BiasMetric,
    FairnessNotions, Threshold,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/metrics/records.csv");
    let records = read_prediction_records(File::open(path)?)?;
    let counts = confusion_from_records(&records);
    for (group, c) in &counts {
        println!("{group}: {c:?}");
        for (name, rate) in group_rates(c).named() {
            println!("  {name:>14} {}", rate.map_or("undefined".to_string(), |r| format!("{r:.4}")));
        }
    }

    let notions = FairnessNotions::compute(&outcomes(&counts));
    for (name, value) in notions.named() {
        match value {
            Ok(v) => {
                let metric = BiasMetric::new(name, *v).with_threshold(Threshold::Scalar(0.1), false);
                println!("{name} = {v:.4} -> {}", evaluate_threshold(&metric)?);
            }
            Err(e) => println!("{name}: {e}"),
        }
    }
    Ok(())
}
