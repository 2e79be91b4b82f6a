//! Field-path diffs between document trees.
//!
//! Mappings are compared key by key and sequences index by index; a value
//! whose type changes is reported as one `modified` entry at its path.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value};

use crate::doc::{self, DocError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Added,
    Removed,
    Modified,
}

impl Change {
    pub fn as_str(self) -> &'static str {
        match self {
            Change::Added => "added",
            Change::Removed => "removed",
            Change::Modified => "modified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub path: String,
    pub change: Change,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<Value>,
}

impl fmt::Display for DiffEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<Value>| {
            v.as_ref()
                .map(|v| serde_json::to_string(v).unwrap_or_default())
                .unwrap_or_default()
        };
        let path = if self.path.is_empty() { "/" } else { &self.path };
        match self.change {
            Change::Added => write!(f, "+ {path}: {}", show(&self.after)),
            Change::Removed => write!(f, "- {path}: {}", show(&self.before)),
            Change::Modified => write!(f, "~ {path}: {} -> {}", show(&self.before), show(&self.after)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocumentDiff {
    pub entries: Vec<DiffEntry>,
}

impl DocumentDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn count(&self, change: Change) -> usize {
        self.entries.iter().filter(|e| e.change == change).count()
    }
}

impl fmt::Display for DocumentDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for entry in &self.entries {
            writeln!(f, "{entry}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error(transparent)]
    Document(#[from] DocError),
    #[error("documents have different schemas: {before:?} vs {after:?}")]
    SchemaMismatch {
        before: DocumentKind,
        after: DocumentKind,
    },
    #[error("cannot apply change at `{path}`: {message}")]
    Apply { path: String, message: String },
}

/// Schema family of a document, recognised from its top-level keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DocumentKind {
    FairnessLog,
    ModelCard,
    DataCard,
    UseCaseCard,
    AssuranceCase,
    Bindings,
    Other,
}

pub fn detect_kind(tree: &Value) -> DocumentKind {
    let has = |key: &str| doc::child(tree, key).is_some() && matches!(tree, Value::Mapping(_));
    if matches!(tree, Value::Sequence(_)) {
        return DocumentKind::Bindings;
    }
    if has("general") && (has("bias_metrics") || has("model") || has("schema_version")) {
        DocumentKind::FairnessLog
    } else if has("sections") {
        DocumentKind::ModelCard
    } else if has("canvas") || has("table") {
        DocumentKind::UseCaseCard
    } else if has("case_id") && has("elements") {
        DocumentKind::AssuranceCase
    } else if crate::artifacts::card::DataCardField::ALL
        .iter()
        .any(|f| has(f.key()))
    {
        DocumentKind::DataCard
    } else {
        DocumentKind::Other
    }
}

/// Diff two document texts of the same schema family.
pub fn diff_documents(before: &str, after: &str) -> Result<DocumentDiff, DiffError> {
    let before = doc::parse_text(before)?;
    let after = doc::parse_text(after)?;
    let (bk, ak) = (detect_kind(&before), detect_kind(&after));
    if bk != ak {
        return Err(DiffError::SchemaMismatch { before: bk, after: ak });
    }
    Ok(diff_values(&before, &after))
}

pub fn diff_values(before: &Value, after: &Value) -> DocumentDiff {
    let mut entries = Vec::new();
    walk("", before, after, &mut entries);
    DocumentDiff { entries }
}

fn walk(path: &str, before: &Value, after: &Value, out: &mut Vec<DiffEntry>) {
    match (before, after) {
        (Value::Mapping(b), Value::Mapping(a)) => {
            for (k, bv) in b {
                let key = doc::key_text(k);
                let sub = doc::join(path, &key);
                match find(a, &key) {
                    Some(av) => walk(&sub, bv, av, out),
                    None => out.push(DiffEntry {
                        path: sub,
                        change: Change::Removed,
                        before: Some(bv.clone()),
                        after: None,
                    }),
                }
            }
            for (k, av) in a {
                let key = doc::key_text(k);
                if find(b, &key).is_none() {
                    out.push(DiffEntry {
                        path: doc::join(path, &key),
                        change: Change::Added,
                        before: None,
                        after: Some(av.clone()),
                    });
                }
            }
        }
        (Value::Sequence(b), Value::Sequence(a)) => {
            let common = b.len().min(a.len());
            for i in 0..common {
                walk(&doc::join(path, &i.to_string()), &b[i], &a[i], out);
            }
            for (i, bv) in b.iter().enumerate().skip(common) {
                out.push(DiffEntry {
                    path: doc::join(path, &i.to_string()),
                    change: Change::Removed,
                    before: Some(bv.clone()),
                    after: None,
                });
            }
            for (i, av) in a.iter().enumerate().skip(common) {
                out.push(DiffEntry {
                    path: doc::join(path, &i.to_string()),
                    change: Change::Added,
                    before: None,
                    after: Some(av.clone()),
                });
            }
        }
        (b, a) if b == a => {}
        (b, a) => out.push(DiffEntry {
            path: path.to_string(),
            change: Change::Modified,
            before: Some(b.clone()),
            after: Some(a.clone()),
        }),
    }
}

fn find<'a>(map: &'a Mapping, key: &str) -> Option<&'a Value> {
    map.iter().find(|(k, _)| doc::key_text(k) == key).map(|(_, v)| v)
}

/// Apply a diff produced by [`diff_values`] to its `before` document.
pub fn apply_diff(before: &Value, diff: &DocumentDiff) -> Result<Value, DiffError> {
    let mut doc = before.clone();
    let by_change = |c: Change| diff.entries.iter().filter(move |e| e.change == c);

    for entry in by_change(Change::Modified) {
        let after = entry.after.clone().ok_or_else(|| apply_err(&entry.path, "modified entry lacks `after`"))?;
        *slot(&mut doc, &entry.path)? = after;
    }

    // Sequence removals happen at the tail, so go from the highest index down.
    let mut removed: Vec<&DiffEntry> = by_change(Change::Removed).collect();
    removed.sort_by(|a, b| path_order(&b.path, &a.path));
    for entry in removed {
        let (parent, last) = split_last(&entry.path)?;
        match slot(&mut doc, &parent)? {
            Value::Mapping(map) => {
                let key = map
                    .keys()
                    .find(|k| doc::key_text(k) == last)
                    .cloned()
                    .ok_or_else(|| apply_err(&entry.path, "key not present"))?;
                map.remove(&key);
            }
            Value::Sequence(seq) => {
                let i = index(&entry.path, &last, seq.len())?;
                seq.remove(i);
            }
            _ => return Err(apply_err(&entry.path, "parent is not a container")),
        }
    }

    let mut added: Vec<&DiffEntry> = by_change(Change::Added).collect();
    added.sort_by(|a, b| path_order(&a.path, &b.path));
    for entry in added {
        let value = entry.after.clone().ok_or_else(|| apply_err(&entry.path, "added entry lacks `after`"))?;
        let (parent, last) = split_last(&entry.path)?;
        match slot(&mut doc, &parent)? {
            Value::Mapping(map) => {
                map.insert(Value::String(last), value);
            }
            Value::Sequence(seq) => {
                let i = index(&entry.path, &last, seq.len() + 1)?;
                seq.insert(i, value);
            }
            _ => return Err(apply_err(&entry.path, "parent is not a container")),
        }
    }
    Ok(doc)
}

fn apply_err(path: &str, message: &str) -> DiffError {
    DiffError::Apply {
        path: path.to_string(),
        message: message.to_string(),
    }
}

fn index(path: &str, segment: &str, limit: usize) -> Result<usize, DiffError> {
    segment
        .parse::<usize>()
        .ok()
        .filter(|i| *i < limit)
        .ok_or_else(|| apply_err(path, "sequence index out of range"))
}

fn split_last(path: &str) -> Result<(String, String), DiffError> {
    let segments = doc::split_path(path);
    let (last, parent) = segments
        .split_last()
        .ok_or_else(|| apply_err(path, "cannot add or remove the document root"))?;
    let parent = parent.iter().fold(String::new(), |acc, s| doc::join(&acc, s));
    Ok((parent, last.clone()))
}

fn slot<'a>(root: &'a mut Value, path: &str) -> Result<&'a mut Value, DiffError> {
    let mut current = root;
    for segment in doc::split_path(path) {
        current = match current {
            Value::Mapping(map) => map
                .iter_mut()
                .find(|(k, _)| doc::key_text(k) == segment)
                .map(|(_, v)| v)
                .ok_or_else(|| apply_err(path, "path not present"))?,
            Value::Sequence(seq) => {
                let i = index(path, &segment, seq.len())?;
                &mut seq[i]
            }
            _ => return Err(apply_err(path, "path not present")),
        };
    }
    Ok(current)
}

/// Order paths segment-wise, comparing numeric segments as numbers.
fn path_order(a: &str, b: &str) -> Ordering {
    let sa = doc::split_path(a);
    let sb = doc::split_path(b);
    for (x, y) in sa.iter().zip(&sb) {
        let ord = match (x.parse::<usize>(), y.parse::<usize>()) {
            (Ok(i), Ok(j)) => i.cmp(&j),
            _ => x.cmp(y),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    sa.len().cmp(&sb.len())
}
