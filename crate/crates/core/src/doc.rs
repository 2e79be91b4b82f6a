//! Path-aware access to structured text documents.
//!
//! Every artifact handled by this crate is a YAML document. Parsing happens in
//! two steps: the text is read into a generic [`Value`] tree, then the typed
//! readers walk that tree through [`Node`], which remembers the slash-delimited
//! path of every value so schema errors can name the offending field.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_yaml::{Mapping, Value};

/// A failure to read a document: either the text is not well-formed, or it is
/// well-formed but does not match the expected schema.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DocError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
}

impl DocError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        DocError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// The field path for schema errors, `None` for syntax errors.
    pub fn path(&self) -> Option<&str> {
        match self {
            DocError::Schema { path, .. } => Some(path),
            DocError::Syntax { .. } => None,
        }
    }
}

/// A non-fatal finding produced while reading a document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ParseDiagnostic {
    pub path: String,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Parse YAML text into a generic tree.
pub fn parse_text(text: &str) -> Result<Value, DocError> {
    serde_yaml::from_str::<Value>(text).map_err(|err| {
        let (line, column) = err
            .location()
            .map(|loc| (loc.line(), loc.column()))
            .unwrap_or((0, 0));
        DocError::Syntax {
            line,
            column,
            message: err.to_string(),
        }
    })
}

/// Render a tree as YAML text. Mapping order is taken from the tree, so
/// callers control determinism by building trees in a fixed order.
pub fn to_text(value: &Value) -> String {
    // Serializing a Value cannot fail: it contains no non-string map keys
    // that YAML cannot represent.
    serde_yaml::to_string(value).expect("YAML serialization of an in-memory tree")
}

/// Recursively sort every mapping by key.
pub fn sort_keys(value: &mut Value) {
    match value {
        Value::Mapping(map) => {
            let mut entries: Vec<(Value, Value)> = std::mem::take(map).into_iter().collect();
            entries.sort_by(|a, b| key_text(&a.0).cmp(&key_text(&b.0)));
            for (k, mut v) in entries {
                sort_keys(&mut v);
                map.insert(k, v);
            }
        }
        Value::Sequence(seq) => seq.iter_mut().for_each(sort_keys),
        Value::Tagged(tagged) => sort_keys(&mut tagged.value),
        _ => {}
    }
}

/// The text used for a mapping key in paths and orderings.
pub fn key_text(key: &Value) -> String {
    match key {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Null => "null".to_string(),
        other => serde_yaml::to_string(other)
            .unwrap_or_default()
            .trim()
            .to_string(),
    }
}

/// Join a parent path and a child segment. `~` and `/` inside a segment are
/// escaped as `~0` and `~1`.
pub fn join(parent: &str, segment: &str) -> String {
    let escaped = escape_segment(segment);
    if parent.is_empty() {
        escaped
    } else {
        format!("{parent}/{escaped}")
    }
}

pub fn escape_segment(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

pub fn unescape_segment(segment: &str) -> String {
    segment.replace("~1", "/").replace("~0", "~")
}

/// Split a slash-delimited path into unescaped segments. The empty path
/// addresses the document root.
pub fn split_path(path: &str) -> Vec<String> {
    if path.is_empty() {
        Vec::new()
    } else {
        path.split('/').map(unescape_segment).collect()
    }
}

/// Look up a path in a tree. Numeric segments index sequences.
pub fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    let mut current = root;
    for segment in split_path(path) {
        current = child(current, &segment)?;
    }
    Some(current)
}

pub(crate) fn child<'a>(value: &'a Value, segment: &str) -> Option<&'a Value> {
    match value {
        Value::Mapping(map) => map
            .iter()
            .find(|(k, _)| key_text(k) == segment)
            .map(|(_, v)| v),
        Value::Sequence(seq) => segment.parse::<usize>().ok().and_then(|i| seq.get(i)),
        Value::Tagged(tagged) => child(&tagged.value, segment),
        _ => None,
    }
}

pub fn format_instant(instant: &DateTime<Utc>) -> String {
    instant.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_instant(text: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(text.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// A value together with its path in the enclosing document.
#[derive(Debug, Clone)]
pub struct Node<'a> {
    pub value: &'a Value,
    pub path: String,
}

impl<'a> Node<'a> {
    pub fn root(value: &'a Value) -> Self {
        Node {
            value,
            path: String::new(),
        }
    }

    pub fn value(&self) -> &'a Value {
        self.value
    }

    fn err(&self, message: impl Into<String>) -> DocError {
        DocError::schema(self.path.clone(), message)
    }

    fn sub_path(&self, key: &str) -> String {
        join(&self.path, key)
    }

    pub fn mapping(&self) -> Result<&'a Mapping, DocError> {
        match self.value {
            Value::Mapping(map) => Ok(map),
            other => Err(self.err(format!("expected a mapping, found {}", kind_name(other)))),
        }
    }

    /// Optional child; `null` counts as absent.
    pub fn get(&self, key: &str) -> Result<Option<Node<'a>>, DocError> {
        let map = self.mapping()?;
        Ok(map
            .iter()
            .find(|(k, _)| key_text(k) == key)
            .map(|(_, v)| v)
            .filter(|v| !v.is_null())
            .map(|value| Node {
                value,
                path: self.sub_path(key),
            }))
    }

    pub fn req(&self, key: &str) -> Result<Node<'a>, DocError> {
        self.get(key)?
            .ok_or_else(|| DocError::schema(self.sub_path(key), "required field is missing"))
    }

    pub fn items(&self) -> Result<Vec<Node<'a>>, DocError> {
        match self.value {
            Value::Sequence(seq) => Ok(seq
                .iter()
                .enumerate()
                .map(|(i, value)| Node {
                    value,
                    path: self.sub_path(&i.to_string()),
                })
                .collect()),
            other => Err(self.err(format!("expected a list, found {}", kind_name(other)))),
        }
    }

    pub fn str(&self) -> Result<String, DocError> {
        match self.value {
            Value::String(s) => Ok(s.clone()),
            other => Err(self.err(format!("expected a string, found {}", kind_name(other)))),
        }
    }

    /// Accept any scalar and render it as text.
    pub fn text(&self) -> Result<String, DocError> {
        match self.value {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            Value::Bool(b) => Ok(b.to_string()),
            other => Err(self.err(format!("expected text, found {}", kind_name(other)))),
        }
    }

    pub fn f64(&self) -> Result<f64, DocError> {
        match self.value {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| self.err("number is not representable")),
            other => Err(self.err(format!("expected a number, found {}", kind_name(other)))),
        }
    }

    /// Non-negative integer.
    pub fn count(&self) -> Result<u64, DocError> {
        match self.value {
            Value::Number(n) => {
                if let Some(v) = n.as_u64() {
                    Ok(v)
                } else if n.as_i64().is_some() {
                    Err(self.err(format!("count must be non-negative, found {n}")))
                } else {
                    Err(self.err(format!("expected an integer, found {n}")))
                }
            }
            other => Err(self.err(format!("expected an integer, found {}", kind_name(other)))),
        }
    }

    pub fn bool(&self) -> Result<bool, DocError> {
        match self.value {
            Value::Bool(b) => Ok(*b),
            other => Err(self.err(format!("expected true or false, found {}", kind_name(other)))),
        }
    }

    pub fn instant(&self) -> Result<DateTime<Utc>, DocError> {
        let text = self.str()?;
        parse_instant(&text).ok_or_else(|| self.err(format!("`{text}` is not an RFC 3339 instant")))
    }

    pub fn str_list(&self) -> Result<Vec<String>, DocError> {
        self.items()?.iter().map(Node::str).collect()
    }

    pub fn opt_str(&self, key: &str) -> Result<Option<String>, DocError> {
        self.get(key)?.map(|c| c.str()).transpose()
    }

    pub fn str_or_empty(&self, key: &str) -> Result<String, DocError> {
        Ok(self.opt_str(key)?.unwrap_or_default())
    }

    pub fn list_or_empty(&self, key: &str) -> Result<Vec<Node<'a>>, DocError> {
        Ok(match self.get(key)? {
            Some(c) => c.items()?,
            None => Vec::new(),
        })
    }

    /// Collect the keys of this mapping that are not in `known`, emitting one
    /// diagnostic per unknown key. The values are returned for round-tripping.
    pub fn unknown(
        &self,
        known: &[&str],
        diagnostics: &mut Vec<ParseDiagnostic>,
    ) -> Result<BTreeMap<String, Value>, DocError> {
        let map = self.mapping()?;
        let mut extra = BTreeMap::new();
        for (k, v) in map {
            let key = key_text(k);
            if !known.contains(&key.as_str()) {
                diagnostics.push(ParseDiagnostic::new(
                    self.sub_path(&key),
                    "unknown field preserved",
                ));
                extra.insert(key, v.clone());
            }
        }
        Ok(extra)
    }
}

pub(crate) fn kind_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Sequence(_) => "a list",
        Value::Mapping(_) => "a mapping",
        Value::Tagged(_) => "a tagged value",
    }
}

/// Helper for building mappings in a fixed key order.
#[derive(Debug, Default)]
pub struct MapBuilder(Mapping);

impl MapBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(Value::String(key.to_string()), value.into());
        self
    }

    pub fn put_opt<V: Into<Value>>(self, key: &str, value: Option<V>) -> Self {
        match value {
            Some(v) => self.put(key, v),
            None => self,
        }
    }

    pub fn extend(mut self, extra: &BTreeMap<String, Value>) -> Self {
        for (k, v) in extra {
            self.0.insert(Value::String(k.clone()), v.clone());
        }
        self
    }

    pub fn build(self) -> Value {
        Value::Mapping(self.0)
    }
}

pub fn str_seq<S: AsRef<str>>(items: &[S]) -> Value {
    Value::Sequence(
        items
            .iter()
            .map(|s| Value::String(s.as_ref().to_string()))
            .collect(),
    )
}

pub fn f64_value(v: f64) -> Value {
    Value::Number(serde_yaml::Number::from(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_walks_mappings_and_sequences() {
        let doc = parse_text("a:\n  b:\n    - x: 1\n    - x: 2\n").unwrap();
        assert_eq!(lookup(&doc, "a/b/1/x"), Some(&Value::from(2)));
        assert_eq!(lookup(&doc, "a/b/2/x"), None);
        assert_eq!(lookup(&doc, ""), Some(&doc));
    }

    #[test]
    fn escaped_segments_round_trip() {
        let path = join("root", "a/b~c");
        assert_eq!(path, "root/a~1b~0c");
        assert_eq!(split_path(&path), vec!["root", "a/b~c"]);
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_text("a: [1, 2\nb: 3").unwrap_err();
        match err {
            DocError::Syntax { line, .. } => assert!(line >= 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_count_names_path() {
        let doc = parse_text("data:\n  sample:\n    size: -5\n").unwrap();
        let root = Node::root(&doc);
        let err = root
            .req("data")
            .and_then(|d| d.req("sample"))
            .and_then(|s| s.req("size"))
            .and_then(|s| s.count())
            .unwrap_err();
        assert_eq!(err.path(), Some("data/sample/size"));
    }
}
