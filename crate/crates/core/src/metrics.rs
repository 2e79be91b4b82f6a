//! Per-group confusion rates and group-fairness notions.
//!
//! Multi-group notions aggregate as the spread across all groups: the
//! difference metrics are `max - min` of a rate and the parity ratio is
//! `min / max`. Rates whose denominator is zero are `None` and never enter an
//! aggregate silently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tps: u64,
    pub fps: u64,
    pub tns: u64,
    pub fns: u64,
}

impl ConfusionCounts {
    pub const fn new(tps: u64, fps: u64, tns: u64, fns: u64) -> Self {
        ConfusionCounts { tps, fps, tns, fns }
    }

    pub fn total(&self) -> u64 {
        self.tps + self.fps + self.tns + self.fns
    }

    pub fn record(&mut self, y_true: bool, y_pred: bool) {
        match (y_true, y_pred) {
            (true, true) => self.tps += 1,
            (false, true) => self.fps += 1,
            (false, false) => self.tns += 1,
            (true, false) => self.fns += 1,
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, rhs: Self) -> Self {
        ConfusionCounts::new(
            self.tps + rhs.tps,
            self.fps + rhs.fps,
            self.tns + rhs.tns,
            self.fns + rhs.fns,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupOutcome {
    pub group_name: String,
    pub counts: ConfusionCounts,
}

impl GroupOutcome {
    pub fn new(group_name: impl Into<String>, counts: ConfusionCounts) -> Self {
        GroupOutcome {
            group_name: group_name.into(),
            counts,
        }
    }
}

fn ratio(numerator: u64, denominator: u64) -> Option<f64> {
    (denominator > 0).then(|| numerator as f64 / denominator as f64)
}

/// Rates derived from one confusion matrix. `None` marks a rate whose
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateBundle {
    pub selection_rate: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
}

impl RateBundle {
    /// `(name, rate)` pairs in a fixed order.
    pub fn named(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("selection_rate", self.selection_rate),
            ("tpr", self.tpr),
            ("fpr", self.fpr),
            ("precision", self.precision),
            ("accuracy", self.accuracy),
            ("f1", self.f1),
        ]
    }
}

pub fn group_rates(counts: &ConfusionCounts) -> RateBundle {
    let ConfusionCounts { tps, fps, tns, fns } = *counts;
    let total = counts.total();
    let tpr = ratio(tps, tps + fns);
    let precision = ratio(tps, tps + fps);
    let f1 = match (precision, tpr) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    RateBundle {
        selection_rate: ratio(tps + fps, total),
        tpr,
        fpr: ratio(fps, fps + tns),
        precision,
        accuracy: ratio(tps + tns, total),
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("at least two groups are required, found {0}")]
    TooFewGroups(usize),
    #[error("{rate} is undefined for group `{group}` (zero denominator)")]
    UndefinedRate { group: String, rate: &'static str },
    #[error("every group has a zero selection rate; the parity ratio is undefined")]
    ZeroDenominator,
    #[error("group `{0}` appears more than once")]
    DuplicateGroup(String),
    #[error("group names must be non-empty")]
    EmptyGroupName,
    #[error("metric `{0}` has no thresholds")]
    MissingThreshold(String),
}

fn check_groups(groups: &[GroupOutcome]) -> Result<(), MetricError> {
    if groups.len() < 2 {
        return Err(MetricError::TooFewGroups(groups.len()));
    }
    let mut seen = BTreeSet::new();
    for g in groups {
        if g.group_name.is_empty() {
            return Err(MetricError::EmptyGroupName);
        }
        if !seen.insert(g.group_name.as_str()) {
            return Err(MetricError::DuplicateGroup(g.group_name.clone()));
        }
    }
    Ok(())
}

/// Collect one rate per group, failing on the first undefined one.
fn rates_of(
    groups: &[GroupOutcome],
    rate: &'static str,
    pick: fn(&RateBundle) -> Option<f64>,
) -> Result<Vec<f64>, MetricError> {
    check_groups(groups)?;
    groups
        .iter()
        .map(|g| {
            pick(&group_rates(&g.counts)).ok_or_else(|| MetricError::UndefinedRate {
                group: g.group_name.clone(),
                rate,
            })
        })
        .collect()
}

fn spread(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

pub fn demographic_parity_difference(groups: &[GroupOutcome]) -> Result<f64, MetricError> {
    let (lo, hi) = spread(&rates_of(groups, "selection_rate", |r| r.selection_rate)?);
    Ok(hi - lo)
}

pub fn demographic_parity_ratio(groups: &[GroupOutcome]) -> Result<f64, MetricError> {
    let (lo, hi) = spread(&rates_of(groups, "selection_rate", |r| r.selection_rate)?);
    if hi == 0.0 {
        return Err(MetricError::ZeroDenominator);
    }
    Ok(lo / hi)
}

pub fn equal_opportunity_difference(groups: &[GroupOutcome]) -> Result<f64, MetricError> {
    let (lo, hi) = spread(&rates_of(groups, "tpr", |r| r.tpr)?);
    Ok(hi - lo)
}

/// The larger of the TPR spread and the FPR spread.
pub fn equalized_odds_difference(groups: &[GroupOutcome]) -> Result<f64, MetricError> {
    let (tpr_lo, tpr_hi) = spread(&rates_of(groups, "tpr", |r| r.tpr)?);
    let (fpr_lo, fpr_hi) = spread(&rates_of(groups, "fpr", |r| r.fpr)?);
    Ok((tpr_hi - tpr_lo).max(fpr_hi - fpr_lo))
}

/// The four notions computed together, each independently fallible.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessNotions {
    pub demographic_parity_difference: Result<f64, MetricError>,
    pub demographic_parity_ratio: Result<f64, MetricError>,
    pub equal_opportunity_difference: Result<f64, MetricError>,
    pub equalized_odds_difference: Result<f64, MetricError>,
}

impl FairnessNotions {
    pub fn compute(groups: &[GroupOutcome]) -> Self {
        FairnessNotions {
            demographic_parity_difference: demographic_parity_difference(groups),
            demographic_parity_ratio: demographic_parity_ratio(groups),
            equal_opportunity_difference: equal_opportunity_difference(groups),
            equalized_odds_difference: equalized_odds_difference(groups),
        }
    }

    pub fn named(&self) -> [(&'static str, &Result<f64, MetricError>); 4] {
        [
            ("demographic_parity_difference", &self.demographic_parity_difference),
            ("demographic_parity_ratio", &self.demographic_parity_ratio),
            ("equal_opportunity_difference", &self.equal_opportunity_difference),
            ("equalized_odds_difference", &self.equalized_odds_difference),
        ]
    }
}

/// Gate for a metric value: a single bound or a closed band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Scalar(f64),
    Interval(f64, f64),
}

impl Threshold {
    pub fn interval(lo: f64, hi: f64) -> Option<Self> {
        (lo <= hi).then_some(Threshold::Interval(lo, hi))
    }

    /// Human-readable requirement, e.g. `>= 0.88` or `in [0.8, 1.25]`.
    pub fn describe(&self, bigger_is_better: bool) -> String {
        match self {
            Threshold::Scalar(t) if bigger_is_better => format!(">= {t}"),
            Threshold::Scalar(t) => format!("<= {t}"),
            Threshold::Interval(lo, hi) => format!("in [{lo}, {hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasMetric {
    pub name: String,
    pub description: String,
    pub value: f64,
    pub thresholds: Option<Threshold>,
    pub bigger_is_better: bool,
    pub notes: Option<String>,
    pub sg: Option<String>,
}

impl BiasMetric {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        BiasMetric {
            name: name.into(),
            description: String::new(),
            value,
            thresholds: None,
            bigger_is_better: false,
            notes: None,
            sg: None,
        }
    }

    pub fn with_threshold(mut self, threshold: Threshold, bigger_is_better: bool) -> Self {
        self.thresholds = Some(threshold);
        self.bigger_is_better = bigger_is_better;
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateOutcome {
    Pass,
    Fail,
}

impl fmt::Display for GateOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateOutcome::Pass => "PASS",
            GateOutcome::Fail => "FAIL",
        })
    }
}

/// Compare a metric against its thresholds. Boundary values pass; intervals
/// ignore `bigger_is_better`. NaN never passes.
pub fn evaluate_threshold(metric: &BiasMetric) -> Result<GateOutcome, MetricError> {
    let threshold = metric
        .thresholds
        .ok_or_else(|| MetricError::MissingThreshold(metric.name.clone()))?;
    let v = metric.value;
    let pass = match threshold {
        Threshold::Scalar(t) if metric.bigger_is_better => v >= t,
        Threshold::Scalar(t) => v <= t,
        Threshold::Interval(lo, hi) => lo <= v && v <= hi,
    };
    Ok(if pass { GateOutcome::Pass } else { GateOutcome::Fail })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub group: String,
    pub y_true: u8,
    pub y_pred: u8,
}

impl PredictionRecord {
    pub fn new(group: impl Into<String>, y_true: u8, y_pred: u8) -> Self {
        PredictionRecord {
            group: group.into(),
            y_true,
            y_pred,
        }
    }
}

/// Partition records by group. Outcomes other than 0 count as positive.
pub fn confusion_from_records(records: &[PredictionRecord]) -> BTreeMap<String, ConfusionCounts> {
    let mut out: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    for r in records {
        out.entry(r.group.clone())
            .or_default()
            .record(r.y_true != 0, r.y_pred != 0);
    }
    out
}

pub fn outcomes(counts: &BTreeMap<String, ConfusionCounts>) -> Vec<GroupOutcome> {
    counts
        .iter()
        .map(|(name, c)| GroupOutcome::new(name.clone(), *c))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum RecordsError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("no prediction records")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Read a `group,y_true,y_pred` file.
pub fn read_prediction_records(input: impl Read) -> Result<Vec<PredictionRecord>, RecordsError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(RecordsError::Empty);
    }
    let expected = ["group", "y_true", "y_pred"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(RecordsError::Malformed {
            line: 1,
            message: format!("expected header `group,y_true,y_pred`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let outcome = |i: usize, column: &str| -> Result<u8, RecordsError> {
            match row.get(i) {
                Some("0") => Ok(0),
                Some("1") => Ok(1),
                other => Err(RecordsError::Malformed {
                    line,
                    message: format!("{column} must be 0 or 1, found {:?}", other.unwrap_or("")),
                }),
            }
        };
        let group = row.get(0).unwrap_or("").to_string();
        if group.is_empty() {
            return Err(RecordsError::Malformed {
                line,
                message: "group must be non-empty".to_string(),
            });
        }
        records.push(PredictionRecord {
            group,
            y_true: outcome(1, "y_true")?,
            y_pred: outcome(2, "y_pred")?,
        });
    }
    if records.is_empty() {
        return Err(RecordsError::Empty);
    }
    Ok(records)
}
