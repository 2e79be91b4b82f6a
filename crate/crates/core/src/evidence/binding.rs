use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_yaml::Value;
use sha2::{Digest, Sha256};

use crate::artifacts::log::parse_bias_metric;
use crate::assurance::{ElementId, EvidenceState};
use crate::doc::{self, DocError, MapBuilder, Node};
use crate::metrics::{evaluate_threshold, GateOutcome};

/// One assertion about the value a binding points at.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    Exists,
    Equals(Value),
    /// The value is a bias metric entry; it must meet its own thresholds.
    MetricGate,
    /// The artifact's `general/timestamp` is no older than this.
    FreshWithin(Duration),
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Exists => f.write_str("exists"),
            Check::Equals(v) => write!(f, "equals {}", compact(v)),
            Check::MetricGate => f.write_str("metric_gate"),
            Check::FreshWithin(d) => write!(f, "fresh_within {}", humantime::format_duration(*d)),
        }
    }
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).unwrap_or_else(|_| format!("{v:?}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    /// Artifact name relative to the artifact root, `/`-separated.
    pub artifact: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceBinding {
    pub evidence_id: ElementId,
    pub source: Source,
    /// Conjunctive; the first failing check decides the outcome.
    pub checks: Vec<Check>,
}

impl EvidenceBinding {
    pub fn new(evidence_id: ElementId, artifact: &str, path: &str, checks: Vec<Check>) -> Self {
        EvidenceBinding {
            evidence_id,
            source: Source {
                artifact: artifact.to_string(),
                path: path.to_string(),
            },
            checks,
        }
    }
}

pub fn parse_bindings(text: &str) -> Result<Vec<EvidenceBinding>, DocError> {
    let tree = doc::parse_text(text)?;
    let root = Node::root(&tree);
    // An empty file holds no bindings.
    if tree.is_null() {
        return Ok(Vec::new());
    }
    root.items()?.iter().map(parse_binding).collect()
}

fn parse_binding(node: &Node<'_>) -> Result<EvidenceBinding, DocError> {
    let id_node = node.req("evidence_id")?;
    let evidence_id = ElementId::new(id_node.text()?)
        .map_err(|_| DocError::schema(id_node.path.clone(), "evidence id is empty"))?;
    let checks_node = node.req("checks")?;
    let checks = checks_node
        .items()?
        .iter()
        .map(parse_check)
        .collect::<Result<Vec<_>, _>>()?;
    if checks.is_empty() {
        return Err(DocError::schema(checks_node.path, "at least one check is required"));
    }
    Ok(EvidenceBinding {
        evidence_id,
        source: Source {
            artifact: node.req("artifact")?.str()?,
            path: node.get("path")?.map(|p| p.text()).transpose()?.unwrap_or_default(),
        },
        checks,
    })
}

const CHECK_NAMES: &str = "exists, metric_gate, equals, fresh_within";

fn parse_check(node: &Node<'_>) -> Result<Check, DocError> {
    let unknown = |name: &str| {
        DocError::schema(
            node.path.clone(),
            format!("unknown check `{name}`; allowed: {CHECK_NAMES}"),
        )
    };
    match node.value {
        Value::String(name) => match name.as_str() {
            "exists" => Ok(Check::Exists),
            "metric_gate" => Ok(Check::MetricGate),
            other => Err(unknown(other)),
        },
        Value::Mapping(map) if map.len() == 1 => {
            let (k, v) = map.iter().next().expect("one entry");
            let name = doc::key_text(k);
            let inner = Node {
                value: v,
                path: doc::join(&node.path, &name),
            };
            match name.as_str() {
                "equals" => Ok(Check::Equals(v.clone())),
                "fresh_within" => Ok(Check::FreshWithin(parse_duration(&inner)?)),
                "exists" => Ok(Check::Exists),
                "metric_gate" => Ok(Check::MetricGate),
                other => Err(unknown(other)),
            }
        }
        _ => Err(DocError::schema(
            node.path.clone(),
            format!("expected a check name or a single-key mapping; allowed: {CHECK_NAMES}"),
        )),
    }
}

fn parse_duration(node: &Node<'_>) -> Result<Duration, DocError> {
    match node.value {
        Value::Number(_) => Ok(Duration::from_secs(node.count()?)),
        _ => {
            let text = node.str()?;
            humantime::parse_duration(&text)
                .map_err(|e| DocError::schema(node.path.clone(), format!("invalid duration `{text}`: {e}")))
        }
    }
}

pub fn serialize_bindings(bindings: &[EvidenceBinding]) -> String {
    let items = bindings
        .iter()
        .map(|b| {
            let checks = b
                .checks
                .iter()
                .map(|c| match c {
                    Check::Exists => Value::from("exists"),
                    Check::MetricGate => Value::from("metric_gate"),
                    Check::Equals(v) => MapBuilder::new().put("equals", v.clone()).build(),
                    Check::FreshWithin(d) => MapBuilder::new()
                        .put("fresh_within", humantime::format_duration(*d).to_string())
                        .build(),
                })
                .collect();
            MapBuilder::new()
                .put("evidence_id", b.evidence_id.as_str())
                .put("artifact", b.source.artifact.as_str())
                .put("path", b.source.path.as_str())
                .put("checks", Value::Sequence(checks))
                .build()
        })
        .collect();
    doc::to_text(&Value::Sequence(items))
}

/// A parsed artifact and the digest of the bytes it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub digest: String,
    pub document: Value,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("artifact `{name}`: {source}")]
    Parse { name: String, source: DocError },
    #[error("artifact `{name}`: {source}")]
    Io { name: String, source: std::io::Error },
}

/// Artifacts keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArtifactSet {
    artifacts: BTreeMap<String, Artifact>,
}

impl ArtifactSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_text(&mut self, name: impl Into<String>, text: &str) -> Result<(), ArtifactError> {
        let name = name.into();
        let document = doc::parse_text(text).map_err(|source| ArtifactError::Parse {
            name: name.clone(),
            source,
        })?;
        self.artifacts.insert(
            name,
            Artifact {
                digest: digest_bytes(text.as_bytes()),
                document,
            },
        );
        Ok(())
    }

    pub fn with_text(mut self, name: impl Into<String>, text: &str) -> Result<Self, ArtifactError> {
        self.insert_text(name, text)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.artifacts.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Artifact)> {
        self.artifacts.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Load every `.yaml`, `.yml` and `.json` file below `dir`, keyed by its
    /// `/`-separated path relative to `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, ArtifactError> {
        let mut set = ArtifactSet::new();
        let mut pending = vec![dir.to_path_buf()];
        while let Some(current) = pending.pop() {
            let io_err = |source| ArtifactError::Io {
                name: current.display().to_string(),
                source,
            };
            let mut entries: Vec<_> = std::fs::read_dir(&current)
                .map_err(io_err)?
                .collect::<Result<_, _>>()
                .map_err(io_err)?;
            entries.sort_by_key(|e| e.path());
            for entry in entries {
                let path = entry.path();
                if path.is_dir() {
                    pending.push(path);
                    continue;
                }
                let is_doc = matches!(
                    path.extension().and_then(|e| e.to_str()),
                    Some("yaml" | "yml" | "json")
                );
                if !is_doc {
                    continue;
                }
                let rel = path.strip_prefix(dir).unwrap_or(&path);
                let name = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("/");
                let text = std::fs::read_to_string(&path).map_err(|source| ArtifactError::Io {
                    name: name.clone(),
                    source,
                })?;
                set.insert_text(name, &text)?;
            }
        }
        Ok(set)
    }
}

/// What a binding's source points at.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved<'a> {
    Value(&'a Value),
    Missing(String),
}

pub fn resolve_binding<'a>(binding: &EvidenceBinding, artifacts: &'a ArtifactSet) -> Resolved<'a> {
    let Some(artifact) = artifacts.get(&binding.source.artifact) else {
        return Resolved::Missing("artifact absent".to_string());
    };
    match doc::lookup(&artifact.document, &binding.source.path) {
        Some(v) if !v.is_null() => Resolved::Value(v),
        _ => Resolved::Missing(format!(
            "path `{}` absent in {}",
            binding.source.path, binding.source.artifact
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceResult {
    pub state: EvidenceState,
    pub detail: String,
    /// Name of the gated metric, or the bound path when no metric is involved.
    pub subject: String,
}

impl EvidenceResult {
    pub fn new(state: EvidenceState, detail: impl Into<String>, subject: impl Into<String>) -> Self {
        EvidenceResult {
            state,
            detail: detail.into(),
            subject: subject.into(),
        }
    }
}

pub fn check_evidence(binding: &EvidenceBinding, artifacts: &ArtifactSet, now: DateTime<Utc>) -> EvidenceResult {
    let resolved = resolve_binding(binding, artifacts);
    let mut subject = binding.source.path.clone();
    let mut passed = Vec::new();

    for check in &binding.checks {
        let outcome: Result<String, (EvidenceState, String)> = match check {
            Check::Exists => match &resolved {
                Resolved::Value(_) => Ok(format!("`{}` present", binding.source.path)),
                Resolved::Missing(why) => Err((EvidenceState::Missing, why.clone())),
            },
            Check::Equals(expected) => match &resolved {
                Resolved::Value(v) if *v == expected => Ok(format!("equals {}", compact(expected))),
                Resolved::Value(v) => Err((
                    EvidenceState::Failing,
                    format!("expected {}, found {}", compact(expected), compact(v)),
                )),
                Resolved::Missing(why) => Err((EvidenceState::Missing, why.clone())),
            },
            Check::MetricGate => match &resolved {
                Resolved::Value(v) => {
                    let node = Node {
                        value: v,
                        path: binding.source.path.clone(),
                    };
                    match parse_bias_metric(&node) {
                        Err(e) => Err((EvidenceState::Failing, format!("not a bias metric: {e}"))),
                        Ok(metric) => {
                            subject = metric.name.clone();
                            match evaluate_threshold(&metric) {
                                Err(e) => Err((EvidenceState::Failing, e.to_string())),
                                Ok(outcome) => {
                                    let requirement = metric
                                        .thresholds
                                        .map(|t| t.describe(metric.bigger_is_better))
                                        .unwrap_or_default();
                                    let text = format!("{} = {} (requires {requirement})", metric.name, metric.value);
                                    match outcome {
                                        GateOutcome::Pass => Ok(text),
                                        GateOutcome::Fail => {
                                            Err((EvidenceState::Failing, format!("metric gate failed: {text}")))
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                Resolved::Missing(why) => Err((EvidenceState::Missing, why.clone())),
            },
            Check::FreshWithin(max_age) => freshness(binding, artifacts, now, *max_age),
        };
        match outcome {
            Ok(text) => passed.push(text),
            Err((state, detail)) => return EvidenceResult::new(state, detail, subject),
        }
    }
    EvidenceResult::new(EvidenceState::Passing, passed.join("; "), subject)
}

fn freshness(
    binding: &EvidenceBinding,
    artifacts: &ArtifactSet,
    now: DateTime<Utc>,
    max_age: Duration,
) -> Result<String, (EvidenceState, String)> {
    let artifact = artifacts
        .get(&binding.source.artifact)
        .ok_or_else(|| (EvidenceState::Missing, "artifact absent".to_string()))?;
    let stamp = doc::lookup(&artifact.document, "general/timestamp")
        .and_then(Value::as_str)
        .ok_or_else(|| {
            (
                EvidenceState::Missing,
                format!("{} has no general/timestamp", binding.source.artifact),
            )
        })?;
    let recorded = doc::parse_instant(stamp).ok_or_else(|| {
        (
            EvidenceState::Missing,
            format!("general/timestamp `{stamp}` is not an RFC 3339 instant"),
        )
    })?;
    let limit = chrono::Duration::from_std(max_age).unwrap_or(chrono::Duration::MAX);
    let age = now - recorded;
    let limit_text = humantime::format_duration(max_age);
    if age > limit {
        let age_text = humantime::format_duration(age.to_std().unwrap_or_default());
        Err((
            EvidenceState::Stale,
            format!("recorded {stamp}, {age_text} old, exceeds {limit_text}"),
        ))
    } else {
        Ok(format!("recorded {stamp}, within {limit_text}"))
    }
}
