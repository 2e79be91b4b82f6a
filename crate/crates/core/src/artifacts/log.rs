//! The per-experiment fairness log.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde_yaml::Value;

use crate::doc::{self, f64_value, str_seq, DocError, MapBuilder, Node, ParseDiagnostic};
use crate::metrics::{BiasMetric, ConfusionCounts, Threshold};
use crate::risk::RaidRecord;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct General {
    pub experiment_id: String,
    pub title: String,
    pub timestamp: Option<DateTime<Utc>>,
    pub authors: Vec<String>,
    pub description: String,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    pub name: String,
    pub size: u64,
    pub source: String,
    pub notes: Option<String>,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableKind {
    Nominal,
    Continuous,
}

impl VariableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Nominal => "nominal",
            VariableKind::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VariableKind,
    pub summary: Option<String>,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataSection {
    pub sample: Sample,
    pub variables: Vec<Variable>,
    pub sensitive_characteristics: Vec<String>,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub name: String,
    pub version: Option<String>,
    pub sample_data: ConfusionCounts,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricGroup {
    pub group_name: String,
    pub metrics: Vec<BiasMetric>,
    pub extra: BTreeMap<String, Value>,
}

impl MetricGroup {
    pub fn new(group_name: impl Into<String>, metrics: Vec<BiasMetric>) -> Self {
        MetricGroup {
            group_name: group_name.into(),
            metrics,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessLog {
    pub general: General,
    pub data: DataSection,
    pub model: ModelSection,
    pub groups: Vec<MetricGroup>,
    pub risks: Option<Vec<RaidRecord>>,
    /// Unknown top-level keys, kept for round-tripping.
    pub extra: BTreeMap<String, Value>,
}

impl FairnessLog {
    /// A log with only the required fields filled in.
    pub fn new(experiment_id: impl Into<String>, model_name: impl Into<String>) -> Self {
        FairnessLog {
            general: General {
                experiment_id: experiment_id.into(),
                title: String::new(),
                timestamp: None,
                authors: Vec::new(),
                description: String::new(),
                extra: BTreeMap::new(),
            },
            data: DataSection::default(),
            model: ModelSection {
                name: model_name.into(),
                version: None,
                sample_data: ConfusionCounts::default(),
                extra: BTreeMap::new(),
            },
            groups: Vec::new(),
            risks: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn group(&self, name: &str) -> Option<&MetricGroup> {
        self.groups.iter().find(|g| g.group_name == name)
    }

    /// `(group_name, metric)` pairs in document order.
    pub fn metrics(&self) -> impl Iterator<Item = (&str, &BiasMetric)> {
        self.groups
            .iter()
            .flat_map(|g| g.metrics.iter().map(move |m| (g.group_name.as_str(), m)))
    }
}

/// Whether an id can be used verbatim as a file name on common platforms.
pub fn is_filesystem_safe(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

const TOP_KEYS: &[&str] = &["schema_version", "general", "data", "model", "bias_metrics", "risks"];

pub fn parse_fairness_log(text: &str) -> Result<(FairnessLog, Vec<ParseDiagnostic>), DocError> {
    let tree = doc::parse_text(text)?;
    parse_fairness_log_value(&tree)
}

pub fn parse_fairness_log_value(tree: &Value) -> Result<(FairnessLog, Vec<ParseDiagnostic>), DocError> {
    let root = Node::root(tree);
    root.mapping()?;
    let mut diags = Vec::new();

    match root.get("schema_version")? {
        None => diags.push(ParseDiagnostic::new(
            "schema_version",
            format!("missing; assuming version {SCHEMA_VERSION}"),
        )),
        Some(v) => {
            let version = v.count()?;
            if version != SCHEMA_VERSION {
                return Err(DocError::schema(
                    v.path,
                    format!("unsupported schema version {version}; expected {SCHEMA_VERSION}"),
                ));
            }
        }
    }

    let general = match root.get("general")? {
        Some(g) => parse_general(&g, &mut diags)?,
        None => return Err(DocError::schema("general/experiment_id", "required field is missing")),
    };
    let data = match root.get("data")? {
        Some(d) => parse_data(&d, &mut diags)?,
        None => {
            diags.push(ParseDiagnostic::new("data", "section missing; using an empty data profile"));
            DataSection::default()
        }
    };
    let model = match root.get("model")? {
        Some(m) => parse_model(&m, &mut diags)?,
        None => return Err(DocError::schema("model/name", "required field is missing")),
    };
    let groups = match root.get("bias_metrics")? {
        Some(b) => parse_bias_metrics(&b, &mut diags)?,
        None => {
            diags.push(ParseDiagnostic::new("bias_metrics", "section missing; no metric groups"));
            Vec::new()
        }
    };
    let risks = root
        .get("risks")?
        .map(|r| r.items()?.iter().map(RaidRecord::from_node).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let extra = root.unknown(TOP_KEYS, &mut diags)?;

    Ok((
        FairnessLog {
            general,
            data,
            model,
            groups,
            risks,
            extra,
        },
        diags,
    ))
}

fn parse_general(node: &Node<'_>, diags: &mut Vec<ParseDiagnostic>) -> Result<General, DocError> {
    let id_node = node.req("experiment_id")?;
    let experiment_id = id_node.text()?;
    if !is_filesystem_safe(&experiment_id) {
        return Err(DocError::schema(
            id_node.path,
            format!("`{experiment_id}` is not filesystem-safe (use letters, digits, `-`, `_`, `.`)"),
        ));
    }
    let timestamp = node.get("timestamp")?.map(|t| t.instant()).transpose()?;
    if timestamp.is_none() {
        diags.push(ParseDiagnostic::new("general/timestamp", "missing timestamp"));
    }
    let authors = match node.get("authors")? {
        Some(a) => a.str_list()?,
        None => Vec::new(),
    };
    Ok(General {
        experiment_id,
        title: node.str_or_empty("title")?,
        timestamp,
        authors,
        description: node.str_or_empty("description")?,
        extra: node.unknown(&["experiment_id", "title", "timestamp", "authors", "description"], diags)?,
    })
}

fn parse_data(node: &Node<'_>, diags: &mut Vec<ParseDiagnostic>) -> Result<DataSection, DocError> {
    let sample = match node.get("sample")? {
        Some(s) => Sample {
            name: s.str_or_empty("name")?,
            size: s.get("size")?.map(|n| n.count()).transpose()?.unwrap_or(0),
            source: s.str_or_empty("source")?,
            notes: s.opt_str("notes")?,
            extra: s.unknown(&["name", "size", "source", "notes"], diags)?,
        },
        None => {
            diags.push(ParseDiagnostic::new("data/sample", "section missing"));
            Sample::default()
        }
    };
    let mut variables = Vec::new();
    for v in node.list_or_empty("variables")? {
        let kind_node = v.req("kind")?;
        let kind = match kind_node.str()?.as_str() {
            "nominal" => VariableKind::Nominal,
            "continuous" => VariableKind::Continuous,
            other => {
                return Err(DocError::schema(
                    kind_node.path,
                    format!("unknown variable kind `{other}`; allowed: nominal, continuous"),
                ))
            }
        };
        variables.push(Variable {
            name: v.req("name")?.text()?,
            kind,
            summary: v.opt_str("summary")?,
            extra: v.unknown(&["name", "kind", "summary"], diags)?,
        });
    }
    let sensitive = match node.get("sensitive_characteristics")? {
        Some(s) => s,
        None => {
            diags.push(ParseDiagnostic::new("data/sensitive_characteristics", "none listed"));
            return Ok(DataSection {
                sample,
                variables,
                sensitive_characteristics: Vec::new(),
                extra: node.unknown(&["sample", "variables", "sensitive_characteristics"], diags)?,
            });
        }
    };
    let sensitive_characteristics = sensitive.str_list()?;
    if !variables.is_empty() {
        let names: BTreeSet<&str> = variables.iter().map(|v| v.name.as_str()).collect();
        if let Some((i, missing)) = sensitive_characteristics
            .iter()
            .enumerate()
            .find(|(_, s)| !names.contains(s.as_str()))
        {
            return Err(DocError::schema(
                doc::join(&sensitive.path, &i.to_string()),
                format!("sensitive characteristic `{missing}` is not a listed variable"),
            ));
        }
    }
    Ok(DataSection {
        sample,
        variables,
        sensitive_characteristics,
        extra: node.unknown(&["sample", "variables", "sensitive_characteristics"], diags)?,
    })
}

fn parse_model(node: &Node<'_>, diags: &mut Vec<ParseDiagnostic>) -> Result<ModelSection, DocError> {
    let name = node.req("name")?.text()?;
    let sample_data = match node.get("sample_data")? {
        Some(s) => parse_counts(&s)?,
        None => {
            diags.push(ParseDiagnostic::new("model/sample_data", "no confusion counts recorded"));
            ConfusionCounts::default()
        }
    };
    Ok(ModelSection {
        name,
        version: node.get("version")?.map(|v| v.text()).transpose()?,
        sample_data,
        extra: node.unknown(&["name", "version", "sample_data"], diags)?,
    })
}

fn parse_counts(node: &Node<'_>) -> Result<ConfusionCounts, DocError> {
    let count = |key: &str| -> Result<u64, DocError> {
        node.get(key)?.map(|n| n.count()).transpose().map(Option::unwrap_or_default)
    };
    Ok(ConfusionCounts {
        tps: count("tps")?,
        fps: count("fps")?,
        tns: count("tns")?,
        fns: count("fns")?,
    })
}

fn parse_bias_metrics(node: &Node<'_>, diags: &mut Vec<ParseDiagnostic>) -> Result<Vec<MetricGroup>, DocError> {
    let mut groups = Vec::new();
    let mut seen = BTreeSet::new();
    for g in node.list_or_empty("groups")? {
        let name_node = g.req("group_name")?;
        let group_name = name_node.text()?;
        if group_name.is_empty() {
            return Err(DocError::schema(name_node.path, "group_name must be non-empty"));
        }
        if !seen.insert(group_name.clone()) {
            return Err(DocError::schema(name_node.path, format!("duplicate group `{group_name}`")));
        }
        let mut metrics = Vec::new();
        for m in g.list_or_empty("metrics")? {
            metrics.push(parse_bias_metric(&m)?);
            ignore_unknown(&m, METRIC_KEYS, diags)?;
        }
        let extra = g.unknown(&["group_name", "metrics"], diags)?;
        groups.push(MetricGroup {
            group_name,
            metrics,
            extra,
        });
    }
    ignore_unknown(node, &["groups"], diags)?;
    Ok(groups)
}

const METRIC_KEYS: &[&str] = &["name", "description", "value", "thresholds", "bigger_is_better", "notes", "sg"];

// Metric entries and the bias_metrics wrapper have no slot for extra keys.
fn ignore_unknown(node: &Node<'_>, known: &[&str], diags: &mut Vec<ParseDiagnostic>) -> Result<(), DocError> {
    let mut found = Vec::new();
    node.unknown(known, &mut found)?;
    diags.extend(found.into_iter().map(|d| ParseDiagnostic::new(d.path, "unknown field ignored")));
    Ok(())
}

/// Read a bias metric entry (`name`, `value`, `thresholds`, ...).
pub fn parse_bias_metric(node: &Node<'_>) -> Result<BiasMetric, DocError> {
    let thresholds = node.get("thresholds")?.map(|t| parse_threshold(&t)).transpose()?;
    Ok(BiasMetric {
        name: node.req("name")?.text()?,
        description: node.str_or_empty("description")?,
        value: node.req("value")?.f64()?,
        thresholds,
        bigger_is_better: node.get("bigger_is_better")?.map(|b| b.bool()).transpose()?.unwrap_or(false),
        notes: node.opt_str("notes")?,
        sg: node.get("sg")?.map(|s| s.text()).transpose()?,
    })
}

fn parse_threshold(node: &Node<'_>) -> Result<Threshold, DocError> {
    match node.value {
        Value::Sequence(_) => {
            let items = node.items()?;
            if items.len() != 2 {
                return Err(DocError::schema(node.path.clone(), "an interval threshold needs exactly [lo, hi]"));
            }
            let lo = items[0].f64()?;
            let hi = items[1].f64()?;
            Threshold::interval(lo, hi)
                .ok_or_else(|| DocError::schema(node.path.clone(), format!("interval [{lo}, {hi}] has lo > hi")))
        }
        _ => Ok(Threshold::Scalar(node.f64()?)),
    }
}

pub fn bias_metric_value(metric: &BiasMetric) -> Value {
    let thresholds = metric.thresholds.map(|t| match t {
        Threshold::Scalar(v) => f64_value(v),
        Threshold::Interval(lo, hi) => Value::Sequence(vec![f64_value(lo), f64_value(hi)]),
    });
    MapBuilder::new()
        .put("bigger_is_better", metric.bigger_is_better)
        .put("description", metric.description.as_str())
        .put("name", metric.name.as_str())
        .put_opt("notes", metric.notes.clone())
        .put_opt("sg", metric.sg.clone())
        .put_opt("thresholds", thresholds)
        .put("value", f64_value(metric.value))
        .build()
}

/// The document tree for a log. Sections appear in a fixed order and keys
/// within each section are sorted.
pub fn fairness_log_value(log: &FairnessLog) -> Value {
    let g = &log.general;
    let general = MapBuilder::new()
        .put("authors", str_seq(&g.authors))
        .put("description", g.description.as_str())
        .put("experiment_id", g.experiment_id.as_str())
        .put_opt("timestamp", g.timestamp.as_ref().map(doc::format_instant))
        .put("title", g.title.as_str())
        .extend(&g.extra)
        .build();

    let s = &log.data.sample;
    let sample = MapBuilder::new()
        .put("name", s.name.as_str())
        .put_opt("notes", s.notes.clone())
        .put("size", s.size)
        .put("source", s.source.as_str())
        .extend(&s.extra)
        .build();
    let variables = log
        .data
        .variables
        .iter()
        .map(|v| {
            MapBuilder::new()
                .put("kind", v.kind.as_str())
                .put("name", v.name.as_str())
                .put_opt("summary", v.summary.clone())
                .extend(&v.extra)
                .build()
        })
        .collect();
    let data = MapBuilder::new()
        .put("sample", sample)
        .put("sensitive_characteristics", str_seq(&log.data.sensitive_characteristics))
        .put("variables", Value::Sequence(variables))
        .extend(&log.data.extra)
        .build();

    let m = &log.model;
    let c = m.sample_data;
    let model = MapBuilder::new()
        .put("name", m.name.as_str())
        .put(
            "sample_data",
            MapBuilder::new()
                .put("fns", c.fns)
                .put("fps", c.fps)
                .put("tns", c.tns)
                .put("tps", c.tps)
                .build(),
        )
        .put_opt("version", m.version.clone())
        .extend(&m.extra)
        .build();

    let groups = log
        .groups
        .iter()
        .map(|group| {
            MapBuilder::new()
                .put("group_name", group.group_name.as_str())
                .put("metrics", Value::Sequence(group.metrics.iter().map(bias_metric_value).collect()))
                .extend(&group.extra)
                .build()
        })
        .collect();
    let bias_metrics = MapBuilder::new().put("groups", Value::Sequence(groups)).build();

    let mut sections = [general, data, model, bias_metrics];
    sections.iter_mut().for_each(doc::sort_keys);
    let [general, data, model, bias_metrics] = sections;

    MapBuilder::new()
        .put("schema_version", SCHEMA_VERSION)
        .put("general", general)
        .put("data", data)
        .put("model", model)
        .put("bias_metrics", bias_metrics)
        .put_opt(
            "risks",
            log.risks
                .as_ref()
                .map(|rs| Value::Sequence(rs.iter().map(RaidRecord::to_value).collect())),
        )
        .extend(&log.extra)
        .build()
}

pub fn serialize_fairness_log(log: &FairnessLog) -> String {
    doc::to_text(&fairness_log_value(log))
}
