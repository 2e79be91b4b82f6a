//! Random generators and independent oracles shared by the property tests
//! and the acceptance harness.
#![allow(dead_code)]

pub mod stub;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_yaml::{Mapping, Value};

use fairassure::artifacts::card::{Canvas, Relationship, UseCaseTable};
use fairassure::artifacts::log::{DataSection, Sample, Variable};
use fairassure::artifacts::{
    CardField, CardValue, DataCard, DataCardField, FairnessLog, MetricGroup, ModelCard, ModelCardSection, QuantEntry,
    UseCaseCard, VariableKind,
};
use fairassure::assurance::{
    AssuranceCase, Component, Element, ElementId, ElementKind, ElementStatus, EvidenceQuality, EvidenceState, Level,
    Link, Quality, TaxonomyTag,
};
use fairassure::metrics::{BiasMetric, ConfusionCounts, PredictionRecord, Threshold};
use fairassure::risk::{Origin, RaidKind, RaidRecord, Severity};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- metrics

/// 2 to 4 groups, at most 1000 records, every group with both labels present
/// and at least one positive prediction overall.
pub fn random_records(rng: &mut impl Rng) -> Vec<PredictionRecord> {
    let groups = rng.gen_range(2..=4);
    let budget = rng.gen_range(groups * 4..=1000);
    let per_group = budget / groups;
    let mut records = Vec::new();
    for g in 0..groups {
        let name = format!("g{g}");
        let n = rng.gen_range(4..=per_group.max(4));
        // Guarantee each label and each prediction once.
        records.push(PredictionRecord::new(&name, 1, 1));
        records.push(PredictionRecord::new(&name, 0, 0));
        records.push(PredictionRecord::new(&name, 1, 0));
        records.push(PredictionRecord::new(&name, 0, 1));
        let p_true: f64 = rng.gen_range(0.05..0.95);
        let p_hit: f64 = rng.gen_range(0.05..0.95);
        let p_false_alarm: f64 = rng.gen_range(0.05..0.95);
        for _ in 4..n {
            let y_true = rng.gen_bool(p_true);
            let y_pred = if y_true { rng.gen_bool(p_hit) } else { rng.gen_bool(p_false_alarm) };
            records.push(PredictionRecord::new(&name, y_true as u8, y_pred as u8));
        }
    }
    records.shuffle(rng);
    records
}

#[derive(Debug, Clone, Copy)]
pub struct OracleNotions {
    pub dp_diff: f64,
    pub dp_ratio: f64,
    pub eo_diff: f64,
    pub eodds_diff: f64,
}

/// Rates straight from the records, one filter pass per rate.
pub fn oracle_notions(records: &[PredictionRecord]) -> OracleNotions {
    let groups: BTreeSet<&str> = records.iter().map(|r| r.group.as_str()).collect();
    let mut selection = Vec::new();
    let mut tpr = Vec::new();
    let mut fpr = Vec::new();
    for g in groups {
        let rows: Vec<&PredictionRecord> = records.iter().filter(|r| r.group == g).collect();
        let predicted = rows.iter().filter(|r| r.y_pred == 1).count() as f64;
        selection.push(predicted / rows.len() as f64);
        let positives: Vec<_> = rows.iter().filter(|r| r.y_true == 1).collect();
        let hits = positives.iter().filter(|r| r.y_pred == 1).count() as f64;
        tpr.push(hits / positives.len() as f64);
        let negatives: Vec<_> = rows.iter().filter(|r| r.y_true == 0).collect();
        let alarms = negatives.iter().filter(|r| r.y_pred == 1).count() as f64;
        fpr.push(alarms / negatives.len() as f64);
    }
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    OracleNotions {
        dp_diff: max(&selection) - min(&selection),
        dp_ratio: min(&selection) / max(&selection),
        eo_diff: max(&tpr) - min(&tpr),
        eodds_diff: (max(&tpr) - min(&tpr)).max(max(&fpr) - min(&fpr)),
    }
}

// ----------------------------------------------------------------- graphs

const KIND_POOL: [ElementKind; 8] = [
    ElementKind::PropertyClaim,
    ElementKind::PropertyClaim,
    ElementKind::PropertyClaim,
    ElementKind::Evidence,
    ElementKind::Evidence,
    ElementKind::Strategy,
    ElementKind::Context,
    ElementKind::GoalClaim,
];

fn prefix(kind: ElementKind) -> &'static str {
    match kind {
        ElementKind::GoalClaim => "G",
        ElementKind::Context => "C",
        ElementKind::Strategy => "S",
        ElementKind::PropertyClaim => "P",
        ElementKind::Evidence => "E",
    }
}

/// Ids index the order nodes were generated in; every link points from a
/// lower index to a higher one, so the case is acyclic.
pub fn random_case(rng: &mut impl Rng, max_nodes: usize) -> AssuranceCase {
    let n = rng.gen_range(1..=max_nodes);
    let goal_text = random_text(rng, true);
    let mut nodes: Vec<Element> = vec![decorate(rng, Element::goal("G0", &goal_text))];
    for i in 1..n {
        let kind = *KIND_POOL.choose(rng).unwrap();
        let id = format!("{}{i}", prefix(kind));
        let element = Element::new(ElementId::new(id).unwrap(), kind, random_text(rng, true));
        nodes.push(decorate(rng, element));
    }
    let density: f64 = rng.gen_range(0.02..0.25);
    let mut links = BTreeSet::new();
    for j in 1..n {
        let to = nodes[j].kind;
        let parents: Vec<usize> = (0..j).filter(|&i| nodes[i].kind.may_link_to(to)).collect();
        if let Some(&p) = parents.choose(rng) {
            if to != ElementKind::GoalClaim || rng.gen_bool(0.5) {
                links.insert(Link::new(nodes[p].id.clone(), nodes[j].id.clone()));
            }
        }
        for &i in &parents {
            if rng.gen_bool(density) {
                links.insert(Link::new(nodes[i].id.clone(), nodes[j].id.clone()));
            }
        }
    }
    AssuranceCase {
        case_id: format!("case-{}", rng.gen::<u32>()),
        title: random_text(rng, false),
        root: nodes[0].id.clone(),
        elements: nodes.into_iter().map(|e| (e.id.clone(), e)).collect(),
        links,
    }
}

fn decorate(rng: &mut impl Rng, mut element: Element) -> Element {
    if rng.gen_bool(0.4) {
        element.taxonomy = Some(TaxonomyTag {
            stage: rng.gen_bool(0.6).then(|| random_text(rng, true)),
            comp: rng.gen_bool(0.6).then(|| *Component::ALL.choose(rng).unwrap()),
            level: rng.gen_bool(0.6).then(|| *Level::ALL.choose(rng).unwrap()),
        });
    }
    if element.kind == ElementKind::Evidence {
        let mut q = || *Quality::ALL.choose(rng).unwrap();
        element.evidence_meta = Some(EvidenceQuality {
            relevance: q(),
            completeness: q(),
            admissibility: q(),
            accuracy: q(),
        });
    }
    element
}

/// Support children, ignoring links that touch context elements.
pub fn support_edges(case: &AssuranceCase) -> BTreeMap<ElementId, Vec<ElementId>> {
    let mut out: BTreeMap<ElementId, Vec<ElementId>> = BTreeMap::new();
    for link in &case.links {
        let ctx = |id: &ElementId| case.kind_of(id) == Some(ElementKind::Context);
        if !ctx(&link.from) && !ctx(&link.to) {
            out.entry(link.from.clone()).or_default().push(link.to.clone());
        }
    }
    out
}

/// Nodes reachable from `start` over at least one support edge.
pub fn reachable(edges: &BTreeMap<ElementId, Vec<ElementId>>, start: &ElementId) -> BTreeSet<ElementId> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<ElementId> = edges.get(start).cloned().unwrap_or_default();
    while let Some(id) = stack.pop() {
        if seen.insert(id.clone()) {
            stack.extend(edges.get(&id).cloned().unwrap_or_default());
        }
    }
    seen
}

/// Elements that lie on a directed cycle.
pub fn cycle_oracle(case: &AssuranceCase) -> BTreeSet<ElementId> {
    let edges = support_edges(case);
    case.elements
        .keys()
        .filter(|id| reachable(&edges, id).contains(*id))
        .cloned()
        .collect()
}

/// Property claims with no path to any evidence element.
pub fn unsupported_oracle(case: &AssuranceCase) -> Vec<ElementId> {
    let edges = support_edges(case);
    case.elements
        .values()
        .filter(|e| e.kind == ElementKind::PropertyClaim)
        .filter(|e| !reachable(&edges, &e.id).iter().any(|r| case.kind_of(r) == Some(ElementKind::Evidence)))
        .map(|e| e.id.clone())
        .collect()
}

pub fn random_states(rng: &mut impl Rng, case: &AssuranceCase) -> BTreeMap<ElementId, EvidenceState> {
    const STATES: [EvidenceState; 4] =
        [EvidenceState::Passing, EvidenceState::Failing, EvidenceState::Missing, EvidenceState::Stale];
    case.elements_of_kind(ElementKind::Evidence)
        .map(|e| (e.id.clone(), *STATES.choose(rng).unwrap()))
        .collect()
}

pub fn state_rank(s: EvidenceState) -> u8 {
    match s {
        EvidenceState::Failing => 0,
        EvidenceState::Missing | EvidenceState::Stale => 1,
        EvidenceState::Passing => 2,
    }
}

/// Roll-up by direct recursion over the definition.
pub fn rollup_oracle(
    case: &AssuranceCase,
    states: &BTreeMap<ElementId, EvidenceState>,
) -> BTreeMap<ElementId, ElementStatus> {
    fn status(
        id: &ElementId,
        case: &AssuranceCase,
        edges: &BTreeMap<ElementId, Vec<ElementId>>,
        states: &BTreeMap<ElementId, EvidenceState>,
        memo: &mut BTreeMap<ElementId, ElementStatus>,
    ) -> ElementStatus {
        if let Some(s) = memo.get(id) {
            return *s;
        }
        let kids: Vec<ElementStatus> = edges
            .get(id)
            .map(|c| c.iter().map(|k| status(k, case, edges, states, memo)).collect())
            .unwrap_or_default();
        let failing = kids.contains(&ElementStatus::Failing);
        let s = match case.kind_of(id).unwrap() {
            ElementKind::Evidence => match states[id] {
                EvidenceState::Passing => ElementStatus::Supported,
                EvidenceState::Failing => ElementStatus::Failing,
                _ => ElementStatus::Stale,
            },
            ElementKind::PropertyClaim => {
                if failing {
                    ElementStatus::Failing
                } else if kids.contains(&ElementStatus::Supported) {
                    ElementStatus::Supported
                } else {
                    ElementStatus::Unsupported
                }
            }
            _ => {
                if failing {
                    ElementStatus::Failing
                } else if !kids.is_empty() && kids.iter().all(|k| *k == ElementStatus::Supported) {
                    ElementStatus::Supported
                } else {
                    ElementStatus::Unsupported
                }
            }
        };
        memo.insert(id.clone(), s);
        s
    }
    let edges = support_edges(case);
    let mut memo = BTreeMap::new();
    for e in case.elements.values().filter(|e| e.kind != ElementKind::Context) {
        status(&e.id, case, &edges, states, &mut memo);
    }
    memo
}

// -------------------------------------------------------------- documents

const WORDS: &[&str] = &[
    "fair", "model", "data", "group", "accuracy", "gate", "evidence", "über", "naïve", "日本", "a:b", "#tag", "-dash",
    "'quote'", "\"dq\"", "yes", "no", "null", "~", "true", "1.5", "0x1F", "42", "[x]", "{y}", "*star", "&amp", "!bang",
    "%pct", "@at", "`tick`", "…", "é",
];

/// Text that exercises YAML quoting. Non-empty when `non_empty` holds.
pub fn random_text(rng: &mut impl Rng, non_empty: bool) -> String {
    let len = rng.gen_range(if non_empty { 1 } else { 0 }..=5);
    let mut words: Vec<String> = (0..len).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    if rng.gen_bool(0.05) && !words.is_empty() {
        words.push("\nsecond line".into());
    }
    if rng.gen_bool(0.05) {
        words.insert(0, " ".into());
    }
    let text = words.join(" ");
    if non_empty && text.trim().is_empty() {
        "text".into()
    } else {
        text
    }
}

fn random_word(rng: &mut impl Rng) -> String {
    const SAFE: &[&str] = &["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"];
    format!("{}{}", SAFE.choose(rng).unwrap(), rng.gen_range(0..100))
}

pub fn random_f64(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..6) {
        0 => 0.0,
        1 => 1.0,
        2 => rng.gen_range(-1e6..1e6),
        3 => rng.gen::<f64>() * 1e-9,
        _ => rng.gen::<f64>(),
    }
}

/// A scalar or nested value with no nulls, used for extra fields.
pub fn random_extra_value(rng: &mut impl Rng, depth: u32) -> Value {
    match rng.gen_range(0..if depth == 0 { 4 } else { 6 }) {
        0 => Value::String(random_text(rng, false)),
        1 => Value::from(rng.gen_range(-1000i64..1000)),
        2 => Value::from(random_f64(rng)),
        3 => Value::Bool(rng.gen()),
        4 => Value::Sequence((0..rng.gen_range(0..4)).map(|_| random_extra_value(rng, depth - 1)).collect()),
        _ => {
            let mut m = Mapping::new();
            for _ in 0..rng.gen_range(0..4) {
                m.insert(Value::String(random_word(rng)), random_extra_value(rng, depth - 1));
            }
            Value::Mapping(m)
        }
    }
}

fn random_extras(rng: &mut impl Rng) -> BTreeMap<String, Value> {
    (0..rng.gen_range(0..3))
        .map(|_| (format!("x_{}", random_word(rng)), random_extra_value(rng, 2)))
        .collect()
}

pub fn random_instant(rng: &mut impl Rng) -> DateTime<Utc> {
    let secs = rng.gen_range(1_500_000_000i64..1_900_000_000);
    let millis = if rng.gen_bool(0.3) { rng.gen_range(0..1000) } else { 0 };
    Utc.timestamp_opt(secs, millis * 1_000_000).unwrap()
}

fn random_metric(rng: &mut impl Rng) -> BiasMetric {
    let thresholds = match rng.gen_range(0..3) {
        0 => None,
        1 => Some(Threshold::Scalar(random_f64(rng))),
        _ => {
            let a = random_f64(rng);
            let b = random_f64(rng);
            Some(Threshold::Interval(a.min(b), a.max(b)))
        }
    };
    BiasMetric {
        name: random_word(rng),
        description: random_text(rng, false),
        value: random_f64(rng),
        thresholds,
        bigger_is_better: rng.gen(),
        notes: rng.gen_bool(0.3).then(|| random_text(rng, false)),
        sg: rng.gen_bool(0.3).then(|| random_word(rng)),
    }
}

fn random_raid(rng: &mut impl Rng) -> RaidRecord {
    RaidRecord {
        kind: *RaidKind::ALL.choose(rng).unwrap(),
        title: random_text(rng, true),
        description: random_text(rng, false),
        severity: *Severity::ALL.choose(rng).unwrap(),
        linked_elements: (0..rng.gen_range(0..3))
            .map(|i| ElementId::new(format!("E{i}")).unwrap())
            .collect(),
        labels: (0..rng.gen_range(0..3)).map(|_| random_word(rng)).collect(),
        origin: Origin {
            experiment_id: rng.gen_bool(0.5).then(|| random_word(rng)),
            evidence_id: rng.gen_bool(0.5).then(|| ElementId::new(random_word(rng)).unwrap()),
        },
    }
}

pub fn random_log(rng: &mut impl Rng) -> FairnessLog {
    let mut log = FairnessLog::new(random_word(rng), random_text(rng, true));
    log.general.title = random_text(rng, false);
    log.general.timestamp = rng.gen_bool(0.8).then(|| random_instant(rng));
    log.general.authors = (0..rng.gen_range(0..3)).map(|_| random_text(rng, true)).collect();
    log.general.description = random_text(rng, false);
    log.general.extra = random_extras(rng);

    let variables: Vec<Variable> = (0..rng.gen_range(0..4))
        .map(|i| Variable {
            name: format!("var{i}"),
            kind: if rng.gen() { VariableKind::Nominal } else { VariableKind::Continuous },
            summary: rng.gen_bool(0.5).then(|| random_text(rng, false)),
            extra: random_extras(rng),
        })
        .collect();
    let sensitive = if variables.is_empty() {
        (0..rng.gen_range(0..3)).map(|_| random_word(rng)).collect()
    } else {
        variables
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(|v| v.name.clone())
            .collect()
    };
    log.data = DataSection {
        sample: Sample {
            name: random_text(rng, false),
            size: rng.gen_range(0..100_000),
            source: random_text(rng, false),
            notes: rng.gen_bool(0.5).then(|| random_text(rng, false)),
            extra: random_extras(rng),
        },
        variables,
        sensitive_characteristics: sensitive,
        extra: random_extras(rng),
    };
    log.model.version = rng.gen_bool(0.5).then(|| random_text(rng, false));
    log.model.sample_data = ConfusionCounts::new(
        rng.gen_range(0..1000),
        rng.gen_range(0..1000),
        rng.gen_range(0..1000),
        rng.gen_range(0..1000),
    );
    log.model.extra = random_extras(rng);
    log.groups = (0..rng.gen_range(0..4))
        .map(|i| {
            let mut g = MetricGroup::new(format!("group{i}"), (0..rng.gen_range(0..4)).map(|_| random_metric(rng)).collect());
            g.extra = random_extras(rng);
            g
        })
        .collect();
    log.risks = rng
        .gen_bool(0.5)
        .then(|| (0..rng.gen_range(0..3)).map(|_| random_raid(rng)).collect());
    log.extra = random_extras(rng);
    log
}

fn random_fields(rng: &mut impl Rng) -> Vec<CardField> {
    (0..rng.gen_range(0..4))
        .map(|_| CardField::new(random_text(rng, true), random_text(rng, false)))
        .collect()
}

pub fn random_quant(rng: &mut impl Rng) -> QuantEntry {
    QuantEntry {
        metric_name: format!("{}/{}", random_word(rng), random_word(rng)),
        group: rng.gen_bool(0.7).then(|| random_word(rng)),
        value: random_f64(rng),
        provenance: rng
            .gen_bool(0.7)
            .then(|| fairassure::artifacts::provenance(&random_word(rng), &random_instant(rng))),
    }
}

pub fn random_model_card(rng: &mut impl Rng) -> ModelCard {
    let mut card = ModelCard::default();
    for section in ModelCardSection::ALL {
        card.sections.insert(section, random_fields(rng));
    }
    card.quantitative = (0..rng.gen_range(0..4)).map(|_| random_quant(rng)).collect();
    card.extra_sections = random_extras(rng);
    card.extra = random_extras(rng);
    card
}

pub fn random_data_card(rng: &mut impl Rng) -> DataCard {
    let mut card = DataCard::default();
    for field in DataCardField::ALL {
        let value = if rng.gen() {
            CardValue::Text(random_text(rng, false))
        } else {
            CardValue::List((0..rng.gen_range(0..3)).map(|_| random_text(rng, false)).collect())
        };
        card.fields.insert(field, value);
    }
    card.extensions = random_extras(rng);
    card
}

pub fn random_use_case_card(rng: &mut impl Rng) -> UseCaseCard {
    let actors: Vec<String> = (0..rng.gen_range(0..4)).map(|i| format!("actor {i}")).collect();
    let use_cases: Vec<String> = (0..rng.gen_range(0..4)).map(|i| format!("use case {i}")).collect();
    let mut relationships = Vec::new();
    if !actors.is_empty() && !use_cases.is_empty() {
        for _ in 0..rng.gen_range(0..4) {
            relationships.push(Relationship {
                actor: actors.choose(rng).unwrap().clone(),
                use_case: use_cases.choose(rng).unwrap().clone(),
            });
        }
    }
    UseCaseCard {
        canvas: Canvas {
            actors,
            use_cases,
            relationships,
        },
        table: UseCaseTable {
            intended_purpose: random_text(rng, false),
            product_type: random_text(rng, false),
            safety_component: rng.gen(),
            application_areas: (0..rng.gen_range(0..3)).map(|_| random_text(rng, false)).collect(),
            other: random_fields(rng),
        },
        extra: random_extras(rng),
    }
}

// ------------------------------------------------------------------ diffs

/// Any tree, nulls included.
pub fn random_tree(rng: &mut impl Rng, depth: u32) -> Value {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..5) {
            0 => Value::Null,
            1 => Value::Bool(rng.gen()),
            2 => Value::from(rng.gen_range(-50i64..50)),
            3 => Value::from(random_f64(rng)),
            _ => Value::String(random_word(rng)),
        };
    }
    if rng.gen() {
        Value::Sequence((0..rng.gen_range(0..5)).map(|_| random_tree(rng, depth - 1)).collect())
    } else {
        let mut m = Mapping::new();
        for _ in 0..rng.gen_range(0..5) {
            m.insert(Value::String(random_word(rng)), random_tree(rng, depth - 1));
        }
        Value::Mapping(m)
    }
}

/// A copy of `value` with a handful of random edits.
pub fn mutate(rng: &mut impl Rng, value: &Value, depth: u32) -> Value {
    match value {
        Value::Mapping(m) => {
            let mut out = Mapping::new();
            for (k, v) in m {
                match rng.gen_range(0..8) {
                    0 => {}
                    1 => {
                        out.insert(k.clone(), random_tree(rng, depth.saturating_sub(1)));
                    }
                    _ => {
                        out.insert(k.clone(), mutate(rng, v, depth.saturating_sub(1)));
                    }
                }
            }
            if rng.gen_bool(0.3) {
                out.insert(Value::String(random_word(rng)), random_tree(rng, 2));
            }
            Value::Mapping(out)
        }
        Value::Sequence(items) => {
            let mut out = Vec::new();
            for v in items {
                if rng.gen_bool(0.85) {
                    out.push(mutate(rng, v, depth.saturating_sub(1)));
                }
            }
            for _ in 0..rng.gen_range(0..3) {
                out.push(random_tree(rng, 2));
            }
            Value::Sequence(out)
        }
        scalar => {
            if rng.gen_bool(0.3) {
                random_tree(rng, 2)
            } else {
                scalar.clone()
            }
        }
    }
}
