use chrono::{DateTime, Utc};

use super::card::{model_card_value, ModelCard, QuantEntry};
use super::diff::{diff_values, DocumentDiff};
use super::log::FairnessLog;
use crate::doc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SyncError {
    #[error("log {experiment_id} has no timestamp; cannot order it against card entries")]
    MissingTimestamp { experiment_id: String },
    #[error("stale write to `{metric_name}`: log is from {incoming}, card entry is from {existing}")]
    StaleWrite {
        metric_name: String,
        existing: DateTime<Utc>,
        incoming: DateTime<Utc>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncOutcome {
    pub card: ModelCard,
    pub diff: DocumentDiff,
}

/// `name/group` with `/sg` appended when the metric has a subgroup.
pub fn card_metric_name(metric_name: &str, group_name: &str, sg: Option<&str>) -> String {
    match sg {
        Some(sg) => format!("{metric_name}/{group_name}/{sg}"),
        None => format!("{metric_name}/{group_name}"),
    }
}

pub fn provenance(experiment_id: &str, timestamp: &DateTime<Utc>) -> String {
    format!("{experiment_id}@{}", doc::format_instant(timestamp))
}

/// The timestamp part of a provenance string, if it has one.
pub fn provenance_timestamp(provenance: &str) -> Option<DateTime<Utc>> {
    provenance
        .rsplit_once('@')
        .and_then(|(_, ts)| doc::parse_instant(ts))
}

/// Copy every bias metric of the log into the card's quantitative analyses.
///
/// Entries are matched by metric name and replaced in place; new names are
/// appended in log order. An entry written by a newer log than this one makes
/// the whole sync fail with [`SyncError::StaleWrite`] and the card is left as
/// it was.
pub fn sync_log_to_card(log: &FairnessLog, card: &ModelCard) -> Result<SyncOutcome, SyncError> {
    let timestamp = log.general.timestamp.ok_or_else(|| SyncError::MissingTimestamp {
        experiment_id: log.general.experiment_id.clone(),
    })?;
    let stamp = provenance(&log.general.experiment_id, &timestamp);
    let mut next = card.clone();

    for (group_name, metric) in log.metrics() {
        let name = card_metric_name(&metric.name, group_name, metric.sg.as_deref());
        let entry = QuantEntry {
            metric_name: name.clone(),
            group: Some(group_name.to_string()),
            value: metric.value,
            provenance: Some(stamp.clone()),
        };
        match next.quantitative.iter_mut().find(|e| e.metric_name == name) {
            Some(existing) => {
                let existing_ts = existing.provenance.as_deref().and_then(provenance_timestamp);
                if let Some(existing_ts) = existing_ts {
                    if timestamp < existing_ts {
                        return Err(SyncError::StaleWrite {
                            metric_name: name,
                            existing: existing_ts,
                            incoming: timestamp,
                        });
                    }
                }
                *existing = entry;
            }
            None => next.quantitative.push(entry),
        }
    }

    let diff = diff_values(&model_card_value(card), &model_card_value(&next));
    Ok(SyncOutcome { card: next, diff })
}
