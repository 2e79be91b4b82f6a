//! The `fairassure` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};

use crate::artifacts::log::Variable;
use crate::artifacts::{
    parse_fairness_log, parse_model_card, serialize_fairness_log, serialize_model_card, sync_log_to_card,
    FairnessLog, MetricGroup, ModelCard, SyncError, VariableKind,
};
use crate::assurance::{parse_case, ElementStatus};
use crate::doc::{self, ParseDiagnostic};
use crate::evidence::{
    evaluate_case, generate_report, parse_bindings, parse_machine_report, status_label, ArtifactSet, ReportFormat,
};
use crate::metrics::{
    confusion_from_records, group_rates, outcomes, read_prediction_records, BiasMetric, ConfusionCounts,
    FairnessNotions, Threshold,
};
use crate::risk::{extract_raids, plan_submission, submit_all, to_issue_payload, HttpTracker, IssueTracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitCode {
    Ok = 0,
    GatesFailing = 1,
    InvalidInput = 2,
    ExternalIo = 3,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Machine,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Markdown => ReportFormat::Markdown,
            Format::Machine => ReportFormat::Machine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TemplateKind {
    Case,
    Log,
    Bindings,
    Card,
}

#[derive(Debug, Parser)]
#[command(name = "fairassure", version, about = "Fairness assurance cases with continuous evidence gates")]
pub struct Cli {
    /// Format of written reports.
    #[arg(long, value_enum, global = true, default_value = "markdown")]
    pub format: Format,
    /// Freeze the clock at this RFC 3339 instant.
    #[arg(long, global = true, value_parser = parse_now)]
    pub now: Option<DateTime<Utc>>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an assurance case against the structural rules.
    Validate { case: PathBuf },
    /// Compute group rates and fairness notions from prediction records.
    Metrics {
        /// CSV with columns group,y_true,y_pred.
        records: PathBuf,
        /// Fairness log to create or update.
        #[arg(long)]
        log: PathBuf,
        /// Name of the sensitive attribute the `group` column holds.
        #[arg(long, default_value = "group")]
        group: String,
        /// Experiment id for a new log; defaults to the log file stem.
        #[arg(long)]
        experiment_id: Option<String>,
        /// Model name for a new log.
        #[arg(long, default_value = "unspecified")]
        model: String,
    },
    /// Evaluate a case against artifacts and write a report.
    Evaluate {
        case: PathBuf,
        #[arg(long)]
        bindings: PathBuf,
        /// Directory holding the bound artifacts.
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Copy the log's bias metrics into a model card.
    Sync {
        log: PathBuf,
        card: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Turn declared risks and failing evidence into issue payloads.
    ExportRisks {
        log: PathBuf,
        /// Machine evaluation report from `evaluate --format machine`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Issue tracker API base, e.g. https://api.github.com/repos/OWNER/REPO.
        #[arg(long)]
        endpoint: Option<String>,
        /// Environment variable holding the tracker token.
        #[arg(long, default_value = "RAID_TRACKER_TOKEN")]
        token_env: String,
        /// Write payload files instead of contacting a tracker.
        #[arg(long)]
        offline: bool,
        #[arg(long, default_value = "raid-payloads")]
        out_dir: PathBuf,
    },
    /// Write a commented template.
    Init {
        #[arg(value_enum)]
        kind: TemplateKind,
        path: PathBuf,
    },
}

fn parse_now(text: &str) -> Result<DateTime<Utc>, String> {
    doc::parse_instant(text).ok_or_else(|| format!("`{text}` is not an RFC 3339 instant"))
}

struct Failure {
    code: ExitCode,
    message: String,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: ExitCode::InvalidInput,
        message: message.into(),
    }
}

type Outcome = Result<ExitCode, Failure>;

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    verbose: bool,
}

impl Io<'_> {
    fn diagnostics(&mut self, file: &Path, diags: &[ParseDiagnostic]) {
        if self.verbose {
            for d in diags {
                let _ = writeln!(self.err, "note: {}: {d}", file.display());
            }
        }
    }
}

/// Run with the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::InvalidInput } else { ExitCode::Ok };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code.code();
        }
    };
    let now = cli.now.unwrap_or_else(Utc::now);
    let mut io = Io {
        out,
        err,
        verbose: cli.verbose,
    };
    let result = match cli.command {
        Command::Validate { case } => cmd_validate(&mut io, &case),
        Command::Metrics {
            records,
            log,
            group,
            experiment_id,
            model,
        } => cmd_metrics(&mut io, &records, &log, &group, experiment_id, &model, now),
        Command::Evaluate {
            case,
            bindings,
            artifacts,
            report,
        } => cmd_evaluate(&mut io, &case, &bindings, &artifacts, report.as_deref(), cli.format.into(), now),
        Command::Sync { log, card, dry_run } => cmd_sync(&mut io, &log, &card, dry_run),
        Command::ExportRisks {
            log,
            report,
            endpoint,
            token_env,
            offline,
            out_dir,
        } => cmd_export_risks(
            &mut io,
            &log,
            report.as_deref(),
            endpoint.as_deref(),
            &token_env,
            offline,
            &out_dir,
        ),
        Command::Init { kind, path } => cmd_init(&mut io, kind, &path),
    };
    match result {
        Ok(code) => code.code(),
        Err(failure) => {
            let _ = writeln!(io.err, "error: {}", failure.message);
            failure.code.code()
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn load_log(path: &Path, io: &mut Io<'_>) -> Result<FairnessLog, Failure> {
    let (log, diags) = parse_fairness_log(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    io.diagnostics(path, &diags);
    Ok(log)
}

fn cmd_validate(io: &mut Io<'_>, path: &Path) -> Outcome {
    let parsed = parse_case(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if parsed.diagnostics.is_empty() {
        if io.verbose {
            let _ = writeln!(
                io.err,
                "{}: {} elements, {} links, valid",
                path.display(),
                parsed.case.elements.len(),
                parsed.case.links.len()
            );
        }
        return Ok(ExitCode::Ok);
    }
    for d in &parsed.diagnostics {
        let _ = writeln!(io.err, "{d}");
    }
    Ok(ExitCode::InvalidInput)
}

/// Default gate and description for a freshly computed notion.
fn notion_defaults(notion: &str) -> (Threshold, &'static str) {
    match notion {
        "demographic_parity_difference" => (Threshold::Scalar(0.1), "Largest gap in selection rate between groups"),
        "demographic_parity_ratio" => (
            Threshold::Interval(0.8, 1.25),
            "Smallest selection rate divided by the largest",
        ),
        "equal_opportunity_difference" => (Threshold::Scalar(0.1), "Largest gap in true positive rate between groups"),
        _ => (
            Threshold::Scalar(0.1),
            "Larger of the true positive rate gap and the false positive rate gap",
        ),
    }
}

fn cmd_metrics(
    io: &mut Io<'_>,
    records_path: &Path,
    log_path: &Path,
    attribute: &str,
    experiment_id: Option<String>,
    model: &str,
    now: DateTime<Utc>,
) -> Outcome {
    let file = std::fs::File::open(records_path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", records_path.display())))?;
    let records = read_prediction_records(file).map_err(|e| invalid(format!("{}: {e}", records_path.display())))?;
    let counts = confusion_from_records(&records);
    let groups = outcomes(&counts);

    let mut log = if log_path.exists() {
        load_log(log_path, io)?
    } else {
        let id = experiment_id.unwrap_or_else(|| {
            log_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "experiment".to_string())
        });
        if !crate::artifacts::log::is_filesystem_safe(&id) {
            return Err(invalid(format!("experiment id `{id}` is not filesystem-safe")));
        }
        FairnessLog::new(id, model)
    };

    let mut computed: Vec<BiasMetric> = Vec::new();
    for (name, group_counts) in &counts {
        for (rate, value) in group_rates(group_counts).named() {
            match value {
                Some(v) => {
                    let mut m = BiasMetric::new(rate, v).with_description(format!("{rate} for {attribute} = {name}"));
                    m.sg = Some(name.clone());
                    computed.push(m);
                }
                None => {
                    let _ = writeln!(io.err, "warning: {rate} undefined for {attribute} = {name}; omitted");
                }
            }
        }
    }
    let notions = FairnessNotions::compute(&groups);
    let mut notion_rows = Vec::new();
    for (notion, value) in notions.named() {
        match value {
            Ok(v) => {
                let (threshold, description) = notion_defaults(notion);
                computed.push(
                    BiasMetric::new(notion, *v)
                        .with_threshold(threshold, false)
                        .with_description(description),
                );
                notion_rows.push((notion, *v));
            }
            Err(e) => {
                let _ = writeln!(io.err, "warning: {notion} omitted: {e}");
            }
        }
    }

    merge_metrics(&mut log, attribute, computed);
    if !log.data.sensitive_characteristics.iter().any(|s| s == attribute) {
        log.data.sensitive_characteristics.push(attribute.to_string());
    }
    if !log.data.variables.is_empty() && !log.data.variables.iter().any(|v| v.name == attribute) {
        log.data.variables.push(Variable {
            name: attribute.to_string(),
            kind: VariableKind::Nominal,
            summary: None,
            extra: BTreeMap::new(),
        });
    }
    log.data.sample.size = records.len() as u64;
    log.model.sample_data = counts.values().fold(ConfusionCounts::default(), |acc, c| acc + *c);
    log.general.timestamp = Some(now);
    write(log_path, &serialize_fairness_log(&log))?;

    let _ = writeln!(io.out, "| {attribute} | n | selection_rate | tpr | fpr | precision | accuracy | f1 |");
    let _ = writeln!(io.out, "|---|---|---|---|---|---|---|---|");
    for (name, group_counts) in &counts {
        let rates = group_rates(group_counts).named();
        let cells: Vec<String> = rates
            .iter()
            .map(|(_, v)| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".to_string()))
            .collect();
        let _ = writeln!(io.out, "| {name} | {} | {} |", group_counts.total(), cells.join(" | "));
    }
    if !notion_rows.is_empty() {
        let _ = writeln!(io.out);
        for (notion, v) in notion_rows {
            let _ = writeln!(io.out, "{notion}: {v:.4}");
        }
    }
    let _ = writeln!(io.out, "wrote {}", log_path.display());
    Ok(ExitCode::Ok)
}

/// Replace same-named metrics in the attribute's group, keeping thresholds a
/// user already set, and append the rest.
fn merge_metrics(log: &mut FairnessLog, attribute: &str, computed: Vec<BiasMetric>) {
    let index = match log.groups.iter().position(|g| g.group_name == attribute) {
        Some(i) => i,
        None => {
            log.groups.push(MetricGroup::new(attribute, Vec::new()));
            log.groups.len() - 1
        }
    };
    let group = &mut log.groups[index];
    for mut metric in computed {
        match group
            .metrics
            .iter_mut()
            .find(|m| m.name == metric.name && m.sg == metric.sg)
        {
            Some(existing) => {
                if existing.thresholds.is_some() {
                    metric.thresholds = existing.thresholds;
                    metric.bigger_is_better = existing.bigger_is_better;
                }
                if !existing.description.is_empty() {
                    metric.description = existing.description.clone();
                }
                metric.notes = existing.notes.take();
                *existing = metric;
            }
            None => group.metrics.push(metric),
        }
    }
}

fn cmd_evaluate(
    io: &mut Io<'_>,
    case_path: &Path,
    bindings_path: &Path,
    artifact_dir: &Path,
    report: Option<&Path>,
    format: ReportFormat,
    now: DateTime<Utc>,
) -> Outcome {
    let parsed = parse_case(&read(case_path)?).map_err(|e| invalid(format!("{}: {e}", case_path.display())))?;
    if !parsed.diagnostics.is_empty() {
        for d in &parsed.diagnostics {
            let _ = writeln!(io.err, "{d}");
        }
        return Err(invalid(format!("{} is not a valid case", case_path.display())));
    }
    let case = parsed.case;
    let bindings =
        parse_bindings(&read(bindings_path)?).map_err(|e| invalid(format!("{}: {e}", bindings_path.display())))?;
    if !artifact_dir.is_dir() {
        return Err(invalid(format!("artifact directory {} does not exist", artifact_dir.display())));
    }
    let artifacts = ArtifactSet::load_dir(artifact_dir).map_err(|e| invalid(e.to_string()))?;
    if io.verbose {
        for (name, artifact) in artifacts.iter() {
            let _ = writeln!(io.err, "artifact {name} sha256:{}", artifact.digest);
        }
    }
    let evaluation = evaluate_case(&case, &bindings, &artifacts, now).map_err(|e| invalid(e.to_string()))?;
    let root = evaluation.root_status(&case).unwrap_or(ElementStatus::NotEvaluated);

    let _ = writeln!(io.out, "{}: root {} is {}", case.case_id, case.root, status_label(root));
    for (id, result) in &evaluation.evidence_results {
        let status = evaluation.rollup.get(id).unwrap_or(ElementStatus::NotEvaluated);
        let _ = writeln!(io.out, "  {id} {}: {}", status_label(status), result.detail);
    }
    if let Some(path) = report {
        let text = generate_report(&case, &evaluation, format).map_err(|e| invalid(e.to_string()))?;
        write(path, &text)?;
        let _ = writeln!(io.out, "report written to {}", path.display());
    }
    Ok(if root == ElementStatus::Supported {
        ExitCode::Ok
    } else {
        ExitCode::GatesFailing
    })
}

fn cmd_sync(io: &mut Io<'_>, log_path: &Path, card_path: &Path, dry_run: bool) -> Outcome {
    let log = load_log(log_path, io)?;
    let card: ModelCard = if card_path.exists() {
        let (card, diags) =
            parse_model_card(&read(card_path)?).map_err(|e| invalid(format!("{}: {e}", card_path.display())))?;
        io.diagnostics(card_path, &diags);
        card
    } else {
        return Err(invalid(format!("model card {} does not exist", card_path.display())));
    };
    let outcome = match sync_log_to_card(&log, &card) {
        Ok(o) => o,
        Err(e @ SyncError::StaleWrite { .. }) => {
            let _ = writeln!(io.err, "warning: {e}; card left unchanged");
            return Ok(ExitCode::Ok);
        }
        Err(e) => return Err(invalid(e.to_string())),
    };
    if outcome.diff.is_empty() {
        let _ = writeln!(io.out, "no changes");
        return Ok(ExitCode::Ok);
    }
    let _ = write!(io.out, "{}", outcome.diff);
    if dry_run {
        let _ = writeln!(io.out, "dry run: {} not written", card_path.display());
    } else {
        write(card_path, &serialize_model_card(&outcome.card))?;
        let _ = writeln!(io.out, "{} changes written to {}", outcome.diff.len(), card_path.display());
    }
    Ok(ExitCode::Ok)
}

fn cmd_export_risks(
    io: &mut Io<'_>,
    log_path: &Path,
    report: Option<&Path>,
    endpoint: Option<&str>,
    token_env: &str,
    offline: bool,
    out_dir: &Path,
) -> Outcome {
    let log = load_log(log_path, io)?;
    let evaluation = report
        .map(|p| parse_machine_report(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display()))))
        .transpose()?;
    let payloads: Vec<_> = extract_raids(&log, evaluation.as_ref())
        .iter()
        .map(to_issue_payload)
        .collect();

    if offline {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| invalid(format!("cannot create {}: {e}", out_dir.display())))?;
        for (i, payload) in payloads.iter().enumerate() {
            let name = format!("{:02}-{}.json", i + 1, &payload.idempotency_key[..16]);
            write(&out_dir.join(name), &payload.to_json())?;
        }
        let _ = writeln!(io.out, "{} payloads written to {}", payloads.len(), out_dir.display());
        return Ok(ExitCode::Ok);
    }

    let endpoint = endpoint.ok_or_else(|| invalid("--endpoint is required unless --offline is given"))?;
    let token = std::env::var(token_env).ok().filter(|t| !t.is_empty());
    if token.is_none() {
        let _ = writeln!(io.err, "warning: {token_env} is not set; submitting without authentication");
    }
    let external = |e: crate::risk::TrackerError| Failure {
        code: ExitCode::ExternalIo,
        message: e.to_string(),
    };
    let mut tracker = HttpTracker::new(endpoint, token).map_err(external)?;
    let existing = tracker.existing_keys().map_err(external)?;
    let planned = plan_submission(&payloads, &existing);
    if io.verbose {
        let _ = writeln!(
            io.err,
            "{} payloads, {} already filed, {} planned",
            payloads.len(),
            payloads.len() - planned.len(),
            planned.len()
        );
    }
    match submit_all(&mut tracker, &planned) {
        Ok(keys) => {
            for key in &keys {
                let _ = writeln!(io.out, "submitted {key}");
            }
            let _ = writeln!(io.out, "{} submitted", keys.len());
            Ok(ExitCode::Ok)
        }
        Err((keys, e)) => {
            for key in &keys {
                let _ = writeln!(io.out, "submitted {key}");
            }
            let _ = writeln!(io.out, "{} submitted", keys.len());
            Err(external(e))
        }
    }
}

fn cmd_init(io: &mut Io<'_>, kind: TemplateKind, path: &Path) -> Outcome {
    if path.exists() {
        return Err(invalid(format!("{} already exists", path.display())));
    }
    let text = match kind {
        TemplateKind::Case => CASE_TEMPLATE.to_string(),
        TemplateKind::Log => LOG_TEMPLATE.to_string(),
        TemplateKind::Bindings => BINDINGS_TEMPLATE.to_string(),
        TemplateKind::Card => format!(
            "# Model card. Sections follow the model card layout; `fairassure sync`\n\
             # fills quantitative_analyses from fairness logs.\n{}",
            serialize_model_card(&ModelCard::default())
        ),
    };
    let mut file = std::fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| invalid(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    let _ = writeln!(io.out, "wrote {}", path.display());
    Ok(ExitCode::Ok)
}

pub const CASE_TEMPLATE: &str = "\
# Assurance case. Links run from a claim to whatever supports it;
# context elements point at the claims they scope.
case_id: my-system
title: Fairness assurance for my system
root: G1
elements:
  - id: G1
    kind: goal
    text: The AI system promotes fair and equitable outcomes within the intended context
  - id: C1
    kind: context
    text: Intended use and the population it serves
  - id: S1
    kind: strategy
    text: Argue over each lifecycle component
  - id: P1
    kind: property_claim
    text: Model performance is comparable across groups
    taxonomy: {stage: model evaluation, comp: model, level: assessment}
  - id: E1
    kind: evidence
    text: Demographic parity difference gate
    # quality: unassessed, low, medium or high
    evidence_meta: {relevance: unassessed, completeness: unassessed, admissibility: unassessed, accuracy: unassessed}
links:
  - {from: C1, to: G1}
  - {from: G1, to: S1}
  - {from: S1, to: P1}
  - {from: P1, to: E1}
";

pub const LOG_TEMPLATE: &str = "\
# Fairness log for one experiment.
schema_version: 1
general:
  experiment_id: experiment-001
  title: Baseline evaluation
  timestamp: 2024-01-01T00:00:00Z
  authors: []
  description: ''
data:
  sample:
    name: evaluation split
    size: 0
    source: ''
  variables:
    - {name: group, kind: nominal}
  sensitive_characteristics: [group]
model:
  name: my-model
  version: '1'
  # Confusion counts on the evaluation sample.
  sample_data: {tps: 0, fps: 0, tns: 0, fns: 0}
bias_metrics:
  groups:
    - group_name: group
      metrics:
        # thresholds is a number or a [low, high] band.
        - name: demographic_parity_difference
          description: Largest gap in selection rate between groups
          value: 0.0
          thresholds: 0.1
          bigger_is_better: false
risks: []
";

pub const BINDINGS_TEMPLATE: &str = "\
# Each binding points an evidence element at a field of an artifact.
# checks: exists, metric_gate, {equals: value}, {fresh_within: 30d}
- evidence_id: E1
  artifact: logs/experiment-001.yaml
  path: bias_metrics/groups/0/metrics/0
  checks:
    - metric_gate
    - fresh_within: 30d
";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifacts::parse_model_card;
    use crate::assurance::parse_case;

    #[test]
    fn templates_parse() {
        assert!(parse_case(CASE_TEMPLATE).unwrap().diagnostics.is_empty());
        parse_fairness_log(LOG_TEMPLATE).unwrap();
        assert_eq!(parse_bindings(BINDINGS_TEMPLATE).unwrap().len(), 1);
        let card = format!("# c\n{}", serialize_model_card(&ModelCard::default()));
        assert!(parse_model_card(&card).unwrap().1.is_empty());
    }

    #[test]
    fn clap_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
