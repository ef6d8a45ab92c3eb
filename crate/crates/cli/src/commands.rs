use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use intervene_core::calibration::{recalibrate, ReliabilityBin, DEFAULT_BINS};
use intervene_core::metrics::audbc::audbc;
use intervene_core::metrics::bootstrap::DEFAULT_ITERATIONS;
use intervene_core::metrics::{
    bootstrap_compare, flip_rate_by_id, AudbcInput, BootstrapMetric, BootstrapReport, Outcome, ResampleUnit,
    DEFAULT_F1_EPSILON,
};
use intervene_core::rdc::{emit_dataset, manifest_path, rank_and_filter, Budget, TeacherTrace};
use intervene_core::sim::{evaluate_policy, generate_stream, sweep, sweep_frontier, SimConfig, SweepConfig, SweepRow};
use intervene_core::trace::{read_jsonl, read_trace, write_jsonl};
use intervene_core::{validate_trace, CostModel, Error, EventRecord, GateConfig, Mode, Result};
use serde::{Deserialize, Serialize};

use crate::output::{metric_cells, pct, render_table, Run, METRIC_HEADERS};
use crate::resolve::{process_env, resolve_audbc, AudbcFlags};

#[derive(Debug, Parser)]
#[command(name = "intervene", version, about = "Cost-sensitive intervention gate: evaluation, calibration, curation and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay the gate over a labelled trace and score it.
    Eval(EvalArgs),
    /// Benefit-burden curve and its area over a c_fn sweep.
    Audbc(AudbcArgs),
    /// Fit a temperature and report calibration before and after.
    Calibrate(CalibrateArgs),
    /// Score teacher traces and keep the top of the ranking.
    Rdc(RdcArgs),
    /// Generate a simulated event stream.
    Sim(SimArgs),
    /// Evaluate a grid of cost ratios and margins on one simulated stream.
    Sweep(SweepArgs),
    /// Paired bootstrap between two decision files.
    Compare(CompareArgs),
    /// Check a trace and print the validation report.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub cost_fa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cost_fn: f64,
    /// Slow-pass margin.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub epsilon_bias: f64,
    #[arg(long, default_value_t = DEFAULT_F1_EPSILON)]
    pub f1_epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AudbcArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Comma-separated c_fn values; overrides AUDBC_CFN_GRID.
    #[arg(long)]
    pub grid: Option<String>,
    /// Overrides COST_FA.
    #[arg(long)]
    pub cost_fa: Option<String>,
    /// `odds` or `bayes`; overrides AUDBC_TAU_IMPL.
    #[arg(long)]
    pub tau_impl: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Need,
    Accept,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Labelled event trace; the fast estimates are calibrated.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, value_enum)]
    pub signal: Signal,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RdcArgs {
    #[arg(long)]
    pub traces: PathBuf,
    /// Number of traces to keep.
    #[arg(long, conflicts_with = "fraction", required_unless_present = "fraction")]
    pub budget: Option<usize>,
    /// Share of traces to keep, rounded up.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// JSON simulator config; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep config; the 4x4 default grid when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Unit {
    Event,
    Clip,
}

impl From<Unit> for ResampleUnit {
    fn from(u: Unit) -> Self {
        match u {
            Unit::Event => ResampleUnit::Event,
            Unit::Clip => ResampleUnit::Clip,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Labelled trace supplying gold labels and clip ids.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// precision, recall, f1, accuracy or false_alarm.
    #[arg(long, default_value = "f1")]
    pub metric: String,
    #[arg(long, value_enum, default_value = "event")]
    pub unit: Unit,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub trace: PathBuf,
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(a) => eval(&a),
        Command::Audbc(a) => audbc_cmd(&a, &process_env),
        Command::Calibrate(a) => calibrate(&a),
        Command::Rdc(a) => rdc(&a),
        Command::Sim(a) => sim(&a),
        Command::Sweep(a) => sweep_cmd(&a),
        Command::Compare(a) => compare(&a),
        Command::Validate(a) => validate(&a),
    }
}

/// Reads and validates a trace; on failure the report goes to stderr.
fn load_valid_trace(path: &Path) -> Result<Vec<EventRecord>> {
    let records = read_trace(path)?;
    let report = validate_trace(&records);
    if !report.ok {
        eprintln!("{}", serde_json::to_string_pretty(&report).map_err(std::io::Error::from)?);
        return Err(Error::Config(format!(
            "{}: {} validation violation(s)",
            path.display(),
            report.violations.len()
        )));
    }
    Ok(records)
}

/// One line of a decisions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub id: String,
    pub intervene: bool,
    pub mode: Mode,
    pub threshold: f64,
    pub margin: f64,
    pub p_need: f64,
    pub p_accept: f64,
}

#[derive(Serialize)]
struct EvalConfig {
    cost_fa: f64,
    cost_fn: f64,
    delta: f64,
    epsilon_bias: f64,
    f1_epsilon: f64,
}

fn eval(a: &EvalArgs) -> Result<()> {
    let gate = GateConfig::new(CostModel::new(a.cost_fa, a.cost_fn)?, a.delta, a.epsilon_bias)?;
    if !(a.f1_epsilon.is_finite() && a.f1_epsilon >= 0.0) {
        return Err(Error::Config(format!("--f1-epsilon must be >= 0, got {}", a.f1_epsilon)));
    }
    let records = load_valid_trace(&a.trace)?;
    let mut run = Run::start("eval", &a.out)?;
    run.input("trace", &a.trace)?;
    let eval = evaluate_policy(&records, &gate, a.f1_epsilon)?;
    let rows: Vec<DecisionRow> = eval
        .outcomes
        .iter()
        .map(|o| DecisionRow {
            id: o.id.clone(),
            intervene: o.decision.intervene,
            mode: o.decision.mode,
            threshold: o.decision.threshold,
            margin: o.decision.margin_distance,
            p_need: o.decision.probs_used.p_need,
            p_accept: o.decision.probs_used.p_accept,
        })
        .collect();
    run.json("metrics.json", &eval.report)?;
    let p = run.path("decisions.jsonl");
    write_jsonl(&p, &rows)?;
    let mut cells = vec!["gate".to_string()];
    cells.extend(metric_cells(&eval.report));
    cells.push(format!("{:.1}", eval.report.mean_tokens));
    cells.push(pct(eval.report.slow_rate));
    let mut headers = vec!["Policy"];
    headers.extend(METRIC_HEADERS);
    headers.extend(["Tokens", "Slow%"]);
    run.text("metrics.txt", &render_table(&headers, &[cells]))?;
    let config = EvalConfig {
        cost_fa: a.cost_fa,
        cost_fn: a.cost_fn,
        delta: a.delta,
        epsilon_bias: a.epsilon_bias,
        f1_epsilon: a.f1_epsilon,
    };
    run.finish(&config, 0)?;
    Ok(())
}

/// AUDBC with an injectable environment, for the precedence tests.
pub fn audbc_cmd(a: &AudbcArgs, env: &dyn Fn(&str) -> Option<String>) -> Result<()> {
    let flags = AudbcFlags { grid: a.grid.clone(), cost_fa: a.cost_fa.clone(), tau_impl: a.tau_impl.clone() };
    let resolved = resolve_audbc(&flags, env)?;
    let records = load_valid_trace(&a.trace)?;
    let inputs: Vec<AudbcInput> = records.iter().map(AudbcInput::from_fast).collect();
    let result = audbc(&inputs, &resolved.config)?;
    let mut run = Run::start("audbc", &a.out)?;
    run.input("trace", &a.trace)?;
    run.json("audbc.json", &result)?;
    let p = run.path("audbc_curve.csv");
    crate::output::write_csv(&p, &result.points)?;
    run.finish(&resolved, 0)?;
    Ok(())
}

#[derive(Serialize)]
struct CalibrateOutput<'a> {
    signal: Signal,
    #[serde(flatten)]
    summary: &'a intervene_core::calibration::RecalibrationSummary,
    ece_delta: f64,
    brier_delta: f64,
}

#[derive(Serialize)]
struct BinRow {
    stage: &'static str,
    lo: f64,
    hi: f64,
    count: usize,
    mean_confidence: f64,
    empirical_accuracy: f64,
}

impl BinRow {
    fn new(stage: &'static str, b: &ReliabilityBin) -> Self {
        Self {
            stage,
            lo: b.lo,
            hi: b.hi,
            count: b.count,
            mean_confidence: b.mean_confidence,
            empirical_accuracy: b.empirical_accuracy,
        }
    }
}

fn calibrate(a: &CalibrateArgs) -> Result<()> {
    if a.bins == 0 {
        return Err(Error::Config("--bins must be >= 1".into()));
    }
    let records = load_valid_trace(&a.predictions)?;
    let mut preds = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for r in &records {
        let (p, y) = match a.signal {
            Signal::Need => (r.fast.p_need, r.need_label()?),
            Signal::Accept => (r.fast.p_accept, r.accept_label()?),
        };
        let y = y.ok_or_else(|| Error::MissingLabel(format!("{:?} label on {}", a.signal, r.id)))?;
        preds.push(p);
        labels.push(y);
    }
    let s = recalibrate(&preds, &labels, a.bins)?;
    let mut run = Run::start("calibrate", &a.out)?;
    run.input("predictions", &a.predictions)?;
    let out = CalibrateOutput {
        signal: a.signal,
        summary: &s,
        ece_delta: s.after.ece - s.before.ece,
        brier_delta: s.after.brier - s.before.brier,
    };
    run.json("calibration.json", &out)?;
    let bins: Vec<BinRow> = s
        .before
        .bins
        .iter()
        .map(|b| BinRow::new("before", b))
        .chain(s.after.bins.iter().map(|b| BinRow::new("after", b)))
        .collect();
    let p = run.path("reliability.csv");
    crate::output::write_csv(&p, &bins)?;
    let table = render_table(
        &["Stage", "T", "ECE", "Brier"],
        &[
            vec!["before".into(), "1.000".into(), format!("{:.4}", s.before.ece), format!("{:.4}", s.before.brier)],
            vec![
                "after".into(),
                format!("{:.3}", s.fitted_temperature),
                format!("{:.4}", s.after.ece),
                format!("{:.4}", s.after.brier),
            ],
        ],
    );
    run.text("calibration.txt", &table)?;
    run.finish(&serde_json::json!({ "signal": a.signal, "bins": a.bins }), 0)?;
    Ok(())
}

fn rdc(a: &RdcArgs) -> Result<()> {
    let budget = match (a.budget, a.fraction) {
        (Some(k), None) => Budget::Count(k),
        (None, Some(f)) => Budget::Fraction(f),
        _ => return Err(Error::Config("exactly one of --budget and --fraction is required".into())),
    };
    let traces: Vec<TeacherTrace> = read_jsonl(&a.traces)?;
    for t in &traces {
        t.validate()?;
    }
    let kept = rank_and_filter(&traces, budget)?;
    let mut run = Run::start("rdc", &a.out)?;
    run.input("traces", &a.traces)?;
    let data = run.path("curated.jsonl");
    let manifest = manifest_path(&data);
    if let Some(name) = manifest.file_name().and_then(|s| s.to_str()) {
        run.path(name);
    }
    emit_dataset(&kept, traces.len(), budget, &data)?;
    run.finish(&serde_json::json!({ "budget": budget }), 0)?;
    Ok(())
}

fn load_or_default<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn sim(a: &SimArgs) -> Result<()> {
    let mut config: SimConfig = load_or_default(a.config.as_deref())?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    config.validate()?;
    let stream = generate_stream(&config)?;
    let mut run = Run::start("sim", &a.out)?;
    if let Some(p) = &a.config {
        run.input("config", p)?;
    }
    let p = run.path("stream.jsonl");
    write_jsonl(&p, &stream.events)?;
    let p = run.path("truths.jsonl");
    write_jsonl(&p, &stream.truths)?;
    run.finish(&config, config.seed)?;
    Ok(())
}

/// Flat sweep row for CSV.
#[derive(Serialize)]
struct SweepCsvRow {
    tag: String,
    c_fa: f64,
    c_fn: f64,
    delta: f64,
    recall: f64,
    precision: f64,
    accuracy: f64,
    false_alarm: f64,
    f1: f64,
    mean_tokens: f64,
    slow_rate: f64,
    p95_latency_ms: f64,
    audbc: f64,
}

impl From<&SweepRow> for SweepCsvRow {
    fn from(r: &SweepRow) -> Self {
        Self {
            tag: r.tag(),
            c_fa: r.c_fa,
            c_fn: r.c_fn,
            delta: r.delta,
            recall: r.report.recall,
            precision: r.report.precision,
            accuracy: r.report.accuracy,
            false_alarm: r.report.false_alarm,
            f1: r.report.f1,
            mean_tokens: r.report.mean_tokens,
            slow_rate: r.report.slow_rate,
            p95_latency_ms: r.report.p95_latency_ms,
            audbc: r.audbc,
        }
    }
}

fn sweep_cmd(a: &SweepArgs) -> Result<()> {
    let config: SweepConfig = load_or_default(a.config.as_deref())?;
    config.validate()?;
    let rows = sweep(&config)?;
    let front = sweep_frontier(&rows);
    let mut run = Run::start("sweep", &a.out)?;
    if let Some(p) = &a.config {
        run.input("config", p)?;
    }
    run.json("sweep.json", &rows)?;
    let flat: Vec<SweepCsvRow> = rows.iter().map(SweepCsvRow::from).collect();
    let p = run.path("sweep.csv");
    crate::output::write_csv(&p, &flat)?;
    let p = run.path("pareto.csv");
    crate::output::write_csv(&p, &front)?;
    let mut headers = vec!["Cell"];
    headers.extend(METRIC_HEADERS);
    headers.extend(["Tokens", "Slow%", "P95 ms", "AUDBC"]);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![r.tag()];
            c.extend(metric_cells(&r.report));
            c.push(format!("{:.1}", r.report.mean_tokens));
            c.push(pct(r.report.slow_rate));
            c.push(format!("{:.1}", r.report.p95_latency_ms));
            c.push(format!("{:.4}", r.audbc));
            c
        })
        .collect();
    run.text("sweep.txt", &render_table(&headers, &table))?;
    run.finish(&config, config.base.seed)?;
    Ok(())
}

#[derive(Deserialize)]
struct DecisionLine {
    id: String,
    intervene: bool,
}

#[derive(Serialize)]
struct CompareOutput {
    #[serde(flatten)]
    bootstrap: BootstrapReport,
    flip_rate: f64,
}

fn outcomes(decisions: &[DecisionLine], gold: &std::collections::HashMap<&str, (bool, &str)>) -> Result<Vec<Outcome>> {
    decisions
        .iter()
        .map(|d| {
            let (g, clip) = gold
                .get(d.id.as_str())
                .ok_or_else(|| Error::Pairing(format!("id {} has no gold label", d.id)))?;
            Ok(Outcome { id: d.id.clone(), clip_id: Some(clip.to_string()), intervene: d.intervene, gold: *g })
        })
        .collect()
}

fn compare(a: &CompareArgs) -> Result<()> {
    let metric: BootstrapMetric = a.metric.parse()?;
    let da: Vec<DecisionLine> = read_jsonl(&a.a)?;
    let db: Vec<DecisionLine> = read_jsonl(&a.b)?;
    let gold_records = load_valid_trace(&a.gold)?;
    let mut gold = std::collections::HashMap::new();
    for r in &gold_records {
        gold.insert(r.id.as_str(), (r.gold()?, r.clip_id.as_str()));
    }
    let (oa, ob) = (outcomes(&da, &gold)?, outcomes(&db, &gold)?);
    let bootstrap = bootstrap_compare(&oa, &ob, metric, a.iterations, a.seed, a.unit.into())?;
    let pairs = |d: &[DecisionLine]| d.iter().map(|x| (x.id.clone(), x.intervene)).collect::<Vec<_>>();
    let flip_rate = flip_rate_by_id(&pairs(&da), &pairs(&db))?;
    let mut run = Run::start("compare", &a.out)?;
    run.input("a", &a.a)?;
    run.input("b", &a.b)?;
    run.input("gold", &a.gold)?;
    run.json("compare.json", &CompareOutput { bootstrap, flip_rate })?;
    let config = serde_json::json!({
        "iterations": a.iterations,
        "metric": metric.name(),
        "unit": ResampleUnit::from(a.unit),
    });
    run.finish(&config, a.seed)?;
    Ok(())
}

fn validate(a: &ValidateArgs) -> Result<()> {
    let records = read_trace(&a.trace)?;
    let report = validate_trace(&records);
    let text = serde_json::to_string_pretty(&report).map_err(std::io::Error::from)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        // a closed reader (`| head`) is not a failure of ours
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    if report.ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{} validation violation(s)", report.violations.len())))
    }
}
