//! Model, data and use case cards.

use std::collections::{BTreeMap, BTreeSet};

use serde_yaml::Value;

use crate::doc::{self, f64_value, str_seq, DocError, MapBuilder, Node, ParseDiagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardField {
    pub field: String,
    pub value: String,
}

impl CardField {
    pub fn new(field: impl Into<String>, value: impl Into<String>) -> Self {
        CardField {
            field: field.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelCardSection {
    ModelDetails,
    IntendedUse,
    Factors,
    Metrics,
    EvaluationData,
    TrainingData,
    QuantitativeAnalyses,
    EthicalConsiderations,
    CaveatsRecommendations,
}

impl ModelCardSection {
    pub const ALL: [ModelCardSection; 9] = [
        ModelCardSection::ModelDetails,
        ModelCardSection::IntendedUse,
        ModelCardSection::Factors,
        ModelCardSection::Metrics,
        ModelCardSection::EvaluationData,
        ModelCardSection::TrainingData,
        ModelCardSection::QuantitativeAnalyses,
        ModelCardSection::EthicalConsiderations,
        ModelCardSection::CaveatsRecommendations,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ModelCardSection::ModelDetails => "model_details",
            ModelCardSection::IntendedUse => "intended_use",
            ModelCardSection::Factors => "factors",
            ModelCardSection::Metrics => "metrics",
            ModelCardSection::EvaluationData => "evaluation_data",
            ModelCardSection::TrainingData => "training_data",
            ModelCardSection::QuantitativeAnalyses => "quantitative_analyses",
            ModelCardSection::EthicalConsiderations => "ethical_considerations",
            ModelCardSection::CaveatsRecommendations => "caveats_recommendations",
        }
    }
}

/// A structured metric result inside `quantitative_analyses`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantEntry {
    pub metric_name: String,
    pub group: Option<String>,
    pub value: f64,
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCard {
    /// Always holds all nine sections.
    pub sections: BTreeMap<ModelCardSection, Vec<CardField>>,
    /// Structured entries of the quantitative analyses section, written after
    /// its plain fields.
    pub quantitative: Vec<QuantEntry>,
    pub extra_sections: BTreeMap<String, Value>,
    pub extra: BTreeMap<String, Value>,
}

impl Default for ModelCard {
    fn default() -> Self {
        ModelCard {
            sections: ModelCardSection::ALL.iter().map(|s| (*s, Vec::new())).collect(),
            quantitative: Vec::new(),
            extra_sections: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }
}

impl ModelCard {
    pub fn section(&self, section: ModelCardSection) -> &[CardField] {
        self.sections.get(&section).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entry(&self, metric_name: &str) -> Option<&QuantEntry> {
        self.quantitative.iter().find(|e| e.metric_name == metric_name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DataCardField {
    FundingSources,
    DataSubjects,
    Representation,
    CollectionProcess,
    Geographies,
    IntendedUses,
    UnintendedOutcomes,
}

impl DataCardField {
    pub const ALL: [DataCardField; 7] = [
        DataCardField::FundingSources,
        DataCardField::DataSubjects,
        DataCardField::Representation,
        DataCardField::CollectionProcess,
        DataCardField::Geographies,
        DataCardField::IntendedUses,
        DataCardField::UnintendedOutcomes,
    ];

    pub fn key(self) -> &'static str {
        match self {
            DataCardField::FundingSources => "funding_sources",
            DataCardField::DataSubjects => "data_subjects",
            DataCardField::Representation => "representation",
            DataCardField::CollectionProcess => "collection_process",
            DataCardField::Geographies => "geographies",
            DataCardField::IntendedUses => "intended_uses",
            DataCardField::UnintendedOutcomes => "unintended_outcomes",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CardValue {
    Text(String),
    List(Vec<String>),
}

impl CardValue {
    fn to_value(&self) -> Value {
        match self {
            CardValue::Text(t) => Value::String(t.clone()),
            CardValue::List(items) => str_seq(items),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataCard {
    /// Always holds every vocabulary field.
    pub fields: BTreeMap<DataCardField, CardValue>,
    pub extensions: BTreeMap<String, Value>,
}

impl Default for DataCard {
    fn default() -> Self {
        DataCard {
            fields: DataCardField::ALL
                .iter()
                .map(|f| (*f, CardValue::List(Vec::new())))
                .collect(),
            extensions: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relationship {
    pub actor: String,
    pub use_case: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Canvas {
    pub actors: Vec<String>,
    pub use_cases: Vec<String>,
    pub relationships: Vec<Relationship>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UseCaseTable {
    pub intended_purpose: String,
    pub product_type: String,
    pub safety_component: bool,
    pub application_areas: Vec<String>,
    pub other: Vec<CardField>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UseCaseCard {
    pub canvas: Canvas,
    pub table: UseCaseTable,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CardKind {
    Model,
    Data,
    UseCase,
}

impl CardKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "model" | "model_card" => Some(CardKind::Model),
            "data" | "data_card" => Some(CardKind::Data),
            "use_case" | "use-case" | "use_case_card" => Some(CardKind::UseCase),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Card {
    Model(ModelCard),
    Data(DataCard),
    UseCase(UseCaseCard),
}

impl Card {
    pub fn kind(&self) -> CardKind {
        match self {
            Card::Model(_) => CardKind::Model,
            Card::Data(_) => CardKind::Data,
            Card::UseCase(_) => CardKind::UseCase,
        }
    }
}

pub fn parse_card(kind: CardKind, text: &str) -> Result<(Card, Vec<ParseDiagnostic>), DocError> {
    let tree = doc::parse_text(text)?;
    let mut diags = Vec::new();
    let card = match kind {
        CardKind::Model => Card::Model(model_card_from_value(&tree, &mut diags)?),
        CardKind::Data => Card::Data(data_card_from_value(&tree, &mut diags)?),
        CardKind::UseCase => Card::UseCase(use_case_card_from_value(&tree, &mut diags)?),
    };
    Ok((card, diags))
}

pub fn parse_model_card(text: &str) -> Result<(ModelCard, Vec<ParseDiagnostic>), DocError> {
    let tree = doc::parse_text(text)?;
    let mut diags = Vec::new();
    Ok((model_card_from_value(&tree, &mut diags)?, diags))
}

pub fn serialize_card(card: &Card) -> String {
    doc::to_text(&card_value(card))
}

pub fn serialize_model_card(card: &ModelCard) -> String {
    doc::to_text(&model_card_value(card))
}

pub fn card_value(card: &Card) -> Value {
    match card {
        Card::Model(c) => model_card_value(c),
        Card::Data(c) => data_card_value(c),
        Card::UseCase(c) => use_case_card_value(c),
    }
}

fn card_field(node: &Node<'_>) -> Result<CardField, DocError> {
    Ok(CardField {
        field: node.req("field")?.text()?,
        value: node.get("value")?.map(|v| v.text()).transpose()?.unwrap_or_default(),
    })
}

fn card_field_value(f: &CardField) -> Value {
    MapBuilder::new()
        .put("field", f.field.as_str())
        .put("value", f.value.as_str())
        .build()
}

pub(crate) fn model_card_from_value(tree: &Value, diags: &mut Vec<ParseDiagnostic>) -> Result<ModelCard, DocError> {
    let root = Node::root(tree);
    root.mapping()?;
    let mut card = ModelCard::default();
    let sections = match root.get("sections")? {
        Some(s) => s,
        None => {
            diags.push(ParseDiagnostic::new("sections", "missing; all nine sections created empty"));
            card.extra = root.unknown(&["sections"], diags)?;
            return Ok(card);
        }
    };
    for section in ModelCardSection::ALL {
        let items = match sections.get(section.key())? {
            Some(node) => node.items()?,
            None => {
                diags.push(ParseDiagnostic::new(
                    doc::join("sections", section.key()),
                    "section missing; created empty",
                ));
                continue;
            }
        };
        let fields = card.sections.entry(section).or_default();
        for item in items {
            if section == ModelCardSection::QuantitativeAnalyses && item.get("metric_name")?.is_some() {
                card.quantitative.push(QuantEntry {
                    metric_name: item.req("metric_name")?.text()?,
                    group: item.get("group")?.map(|g| g.text()).transpose()?,
                    value: item.req("value")?.f64()?,
                    provenance: item.opt_str("provenance")?,
                });
            } else {
                fields.push(card_field(&item)?);
            }
        }
    }
    let known: Vec<&str> = ModelCardSection::ALL.iter().map(|s| s.key()).collect();
    card.extra_sections = sections.unknown(&known, diags)?;
    card.extra = root.unknown(&["sections"], diags)?;
    Ok(card)
}

pub fn model_card_value(card: &ModelCard) -> Value {
    let mut sections = MapBuilder::new();
    for section in ModelCardSection::ALL {
        let mut items: Vec<Value> = card.section(section).iter().map(card_field_value).collect();
        if section == ModelCardSection::QuantitativeAnalyses {
            items.extend(card.quantitative.iter().map(|e| {
                MapBuilder::new()
                    .put("metric_name", e.metric_name.as_str())
                    .put_opt("group", e.group.clone())
                    .put("value", f64_value(e.value))
                    .put_opt("provenance", e.provenance.clone())
                    .build()
            }));
        }
        sections = sections.put(section.key(), Value::Sequence(items));
    }
    MapBuilder::new()
        .put("sections", sections.extend(&card.extra_sections).build())
        .extend(&card.extra)
        .build()
}

fn card_value_from(node: &Node<'_>) -> Result<CardValue, DocError> {
    match node.value {
        Value::Sequence(_) => Ok(CardValue::List(node.str_list()?)),
        _ => Ok(CardValue::Text(node.text()?)),
    }
}

fn data_card_from_value(tree: &Value, diags: &mut Vec<ParseDiagnostic>) -> Result<DataCard, DocError> {
    let root = Node::root(tree);
    root.mapping()?;
    let mut card = DataCard::default();
    for field in DataCardField::ALL {
        match root.get(field.key())? {
            Some(node) => {
                card.fields.insert(field, card_value_from(&node)?);
            }
            None => diags.push(ParseDiagnostic::new(field.key(), "field missing; created empty")),
        }
    }
    if let Some(ext) = root.get("extensions")? {
        for (k, v) in ext.mapping()? {
            card.extensions.insert(doc::key_text(k), v.clone());
        }
    }
    let mut known: Vec<&str> = DataCardField::ALL.iter().map(|f| f.key()).collect();
    known.push("extensions");
    let mut found = Vec::new();
    let unknown = root.unknown(&known, &mut found)?;
    diags.extend(
        found
            .into_iter()
            .map(|d| ParseDiagnostic::new(d.path, "unknown field moved under extensions")),
    );
    card.extensions.extend(unknown);
    Ok(card)
}

fn data_card_value(card: &DataCard) -> Value {
    let mut out = MapBuilder::new();
    for field in DataCardField::ALL {
        let value = card
            .fields
            .get(&field)
            .map(CardValue::to_value)
            .unwrap_or_else(|| Value::Sequence(Vec::new()));
        out = out.put(field.key(), value);
    }
    if !card.extensions.is_empty() {
        out = out.put("extensions", MapBuilder::new().extend(&card.extensions).build());
    }
    out.build()
}

fn use_case_card_from_value(tree: &Value, diags: &mut Vec<ParseDiagnostic>) -> Result<UseCaseCard, DocError> {
    let root = Node::root(tree);
    root.mapping()?;
    let mut card = UseCaseCard::default();
    match root.get("canvas")? {
        Some(canvas) => {
            let list = |key: &str| -> Result<Vec<String>, DocError> {
                canvas.get(key)?.map(|n| n.str_list()).transpose().map(Option::unwrap_or_default)
            };
            card.canvas.actors = list("actors")?;
            card.canvas.use_cases = list("use_cases")?;
            let actors: BTreeSet<&str> = card.canvas.actors.iter().map(String::as_str).collect();
            let use_cases: BTreeSet<&str> = card.canvas.use_cases.iter().map(String::as_str).collect();
            let mut relationships = Vec::new();
            for rel in canvas.list_or_empty("relationships")? {
                let r = Relationship {
                    actor: rel.req("actor")?.text()?,
                    use_case: rel.req("use_case")?.text()?,
                };
                if !actors.contains(r.actor.as_str()) {
                    return Err(DocError::schema(rel.path, format!("actor `{}` is not declared", r.actor)));
                }
                if !use_cases.contains(r.use_case.as_str()) {
                    return Err(DocError::schema(
                        rel.path,
                        format!("use case `{}` is not declared", r.use_case),
                    ));
                }
                relationships.push(r);
            }
            card.canvas.relationships = relationships;
        }
        None => diags.push(ParseDiagnostic::new("canvas", "section missing; created empty")),
    }
    match root.get("table")? {
        Some(table) => {
            card.table = UseCaseTable {
                intended_purpose: table.str_or_empty("intended_purpose")?,
                product_type: table.str_or_empty("product_type")?,
                safety_component: table.get("safety_component")?.map(|b| b.bool()).transpose()?.unwrap_or(false),
                application_areas: table
                    .get("application_areas")?
                    .map(|n| n.str_list())
                    .transpose()?
                    .unwrap_or_default(),
                other: table
                    .list_or_empty("other")?
                    .iter()
                    .map(card_field)
                    .collect::<Result<_, _>>()?,
            };
        }
        None => diags.push(ParseDiagnostic::new("table", "section missing; created empty")),
    }
    card.extra = root.unknown(&["canvas", "table"], diags)?;
    Ok(card)
}

fn use_case_card_value(card: &UseCaseCard) -> Value {
    let relationships = card
        .canvas
        .relationships
        .iter()
        .map(|r| {
            MapBuilder::new()
                .put("actor", r.actor.as_str())
                .put("use_case", r.use_case.as_str())
                .build()
        })
        .collect();
    let canvas = MapBuilder::new()
        .put("actors", str_seq(&card.canvas.actors))
        .put("use_cases", str_seq(&card.canvas.use_cases))
        .put("relationships", Value::Sequence(relationships))
        .build();
    let t = &card.table;
    let table = MapBuilder::new()
        .put("intended_purpose", t.intended_purpose.as_str())
        .put("product_type", t.product_type.as_str())
        .put("safety_component", t.safety_component)
        .put("application_areas", str_seq(&t.application_areas))
        .put("other", Value::Sequence(t.other.iter().map(card_field_value).collect()))
        .build();
    MapBuilder::new()
        .put("canvas", canvas)
        .put("table", table)
        .extend(&card.extra)
        .build()
}
