//! The subcommands. Each returns the files it wrote plus a short console summary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use morreylab::audit::{audit_identities, AuditParams, CheckResult};
use morreylab::characterize::{
    characterize, fractional_spaces, validate, CharacterizationReport, CharacterizeOptions, TheoremId, TheoremParams,
};
use morreylab::commutator::FamilyMember;
use morreylab::norms::{morrey_norm, MorreyParams};
use morreylab::space::{doubling_constant, DEFAULT_LAMBDA_GRID};
use morreylab::weights::ap_constant;
use morreylab::{BallLabel, PointFunction};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Experiment, ExperimentConfig, Params, SweepGrids, WeightSpec};
use crate::error::CliError;
use crate::output::{num, opt_num, sha256_hex, to_sorted_json, write_json, write_text, RunManifest, Stage, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Space,
    Characterize,
    Audit,
    Sweep,
    Report,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Space => "space",
            Command::Characterize => "characterize",
            Command::Audit => "audit",
            Command::Sweep => "sweep",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub summary: String,
}

/// Builds the experiment, runs one command and writes its manifest.
/// `report` only reads `out` and never builds anything.
pub fn run(command: Command, config: ExperimentConfig, out: &Path, format: Format, threads: usize) -> Result<Outcome, CliError> {
    if command == Command::Report {
        return cmd_report(out);
    }
    let hash = sha256_hex(&config.canonical_json());
    let seed = config.seed;
    let mut stages = Vec::new();
    let start = Instant::now();
    let experiment = Experiment::build(config)?;
    stages.push(stage("build", start));
    let start = Instant::now();
    let mut outcome = match command {
        Command::Space => cmd_space(&experiment, out)?,
        Command::Characterize => cmd_characterize(&experiment, out, format)?,
        Command::Audit => cmd_audit(&experiment, out, format)?,
        Command::Sweep => cmd_sweep(&experiment, out, format)?,
        Command::Report => unreachable!("handled above"),
    };
    stages.push(stage(command.as_str(), start));
    let manifest = RunManifest {
        tool: "morreylab",
        version: env!("CARGO_PKG_VERSION"),
        command: command.as_str().to_string(),
        config_hash: hash,
        seed,
        threads,
        stages,
        outputs: outcome.written.clone(),
    };
    let path = out.join(format!("manifest.{}.json", command.as_str()));
    write_json(&path, &manifest)?;
    outcome.written.push(path);
    Ok(outcome)
}

fn stage(name: &str, start: Instant) -> Stage {
    Stage {
        name: name.to_string(),
        wall_seconds: start.elapsed().as_secs_f64(),
    }
}

#[derive(Serialize)]
struct SpaceSummary {
    n: usize,
    a0: f64,
    ball_count: usize,
    c_mu: f64,
    upper_dim: f64,
    worst_center: usize,
    worst_radius: f64,
    lambda_grid: Vec<f64>,
}

pub fn cmd_space(exp: &Experiment, out: &Path) -> Result<Outcome, CliError> {
    let space = exp.domain.space();
    let doubling = doubling_constant(space, &DEFAULT_LAMBDA_GRID);
    let summary = SpaceSummary {
        n: space.len(),
        a0: space.a0(),
        ball_count: exp.domain.balls().len(),
        c_mu: doubling.c_mu,
        upper_dim: doubling.upper_dim,
        worst_center: doubling.worst_pair.0,
        worst_radius: doubling.worst_pair.1,
        lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
    };
    let space_path = out.join("space.json");
    let doubling_path = out.join("doubling.json");
    write_json(&space_path, &space.to_document())?;
    write_json(&doubling_path, &summary)?;
    Ok(Outcome {
        written: vec![space_path, doubling_path],
        summary: format!(
            "c_mu = {}, a0 = {}, ball count = {}",
            summary.c_mu, summary.a0, summary.ball_count
        ),
    })
}

#[derive(Clone, Serialize)]
struct ReportParams {
    p: f64,
    q: f64,
    kappa: f64,
    gamma: f64,
    weight: WeightSpec,
}

#[derive(Serialize)]
struct OpnormEntry {
    lower_bound: f64,
    best_member: String,
    indicator_sup: f64,
    evaluated: usize,
    skipped: usize,
}

/// One theorem for one symbol, in the published report layout.
#[derive(Serialize)]
struct ReportEntry {
    instance: String,
    symbol: String,
    theorem: TheoremId,
    params: ReportParams,
    sup_ratio_literal: f64,
    sup_ratio_ball_local: f64,
    max_discrepancy: f64,
    witness_ball: BallLabel,
    ball_local_witness: BallLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    opnorm_lb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    opnorm: Option<OpnormEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    statement_variant_ratio: Option<f64>,
    bmo: f64,
    neg_part_sup: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    audit: Option<Vec<CheckResult<f64>>>,
}

#[derive(Serialize)]
struct CharacterizeFile {
    experiment: String,
    seed: u64,
    reports: Vec<ReportEntry>,
}

fn instance_name(exp: &Experiment, symbol: &str) -> String {
    format!("{}/{}", exp.config.name, symbol)
}

fn options(config: &ExperimentConfig) -> CharacterizeOptions {
    CharacterizeOptions {
        seed: config.seed,
        random_family_size: config.random_family_size,
        opnorm: config.opnorm,
        sharp_statement_variant: config.sharp_statement_variant,
    }
}

fn audit_params(params: &Params) -> AuditParams<f64> {
    AuditParams {
        p: params.p,
        q: params.q,
        gamma: params.gamma,
    }
}

/// Audit test functions: the configured family, or the symbols when none is given.
fn audit_family(exp: &Experiment) -> Vec<FamilyMember<f64>> {
    if !exp.functions.is_empty() {
        return exp.functions.clone();
    }
    exp.symbols
        .iter()
        .map(|(name, f)| FamilyMember {
            label: name.clone(),
            is_indicator: false,
            function: f.clone(),
        })
        .collect()
}

fn run_audits(exp: &Experiment) -> Result<Vec<Vec<CheckResult<f64>>>, CliError> {
    let family = audit_family(exp);
    let params = audit_params(&exp.config.params);
    exp.symbols
        .par_iter()
        .map(|(_, b)| audit_identities(&exp.domain, &exp.weight, b, &family, &params).map_err(CliError::from))
        .collect()
}

fn report_params(params: &TheoremParams<f64>, weight: &WeightSpec) -> ReportParams {
    ReportParams {
        p: params.p,
        q: params.q,
        kappa: params.kappa,
        gamma: params.gamma,
        weight: weight.clone(),
    }
}

fn entry(exp: &Experiment, symbol: &str, report: CharacterizationReport<f64>, audit: Option<Vec<CheckResult<f64>>>) -> ReportEntry {
    let ratio = report.ratio;
    let opnorm = report.opnorm.map(|o| OpnormEntry {
        lower_bound: o.value,
        best_member: o.best_member,
        indicator_sup: o.indicator_sup,
        evaluated: o.evaluated,
        skipped: o.skipped,
    });
    ReportEntry {
        instance: instance_name(exp, symbol),
        symbol: symbol.to_string(),
        theorem: report.theorem,
        params: report_params(&report.params, &exp.config.weight),
        sup_ratio_literal: ratio.literal,
        sup_ratio_ball_local: ratio.ball_local,
        max_discrepancy: ratio.max_discrepancy,
        witness_ball: ratio.witness_ball,
        ball_local_witness: ratio.ball_local_witness,
        opnorm_lb: opnorm.as_ref().map(|o| o.lower_bound),
        opnorm,
        statement_variant_ratio: report.statement_variant_ratio,
        bmo: report.bmo,
        neg_part_sup: report.neg_part_sup,
        audit,
    }
}

/// Checks every requested theorem against the parameters before any sweep starts.
fn validate_all(theorems: &[TheoremId], params: &Params) -> Result<(), CliError> {
    for &t in theorems {
        validate(t, &params.theorem()).map_err(|e| CliError::Config(format!("params (theorem {}): {e}", t.as_str())))?;
    }
    Ok(())
}

pub fn cmd_characterize(exp: &Experiment, out: &Path, format: Format) -> Result<Outcome, CliError> {
    let theorems = exp.config.theorem_ids()?;
    validate_all(&theorems, &exp.config.params)?;
    if exp.config.audit {
        audit_params(&exp.config.params)
            .validate()
            .map_err(|e| CliError::Config(format!("params (audit): {e}")))?;
    }
    let opts = options(&exp.config);
    let audits = if exp.config.audit { Some(run_audits(exp)?) } else { None };
    let jobs: Vec<(usize, TheoremId)> = (0..exp.symbols.len())
        .flat_map(|s| theorems.iter().map(move |&t| (s, t)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(s, t)| {
            let (_, b) = &exp.symbols[s];
            info!("characterize {} theorem {}", instance_name(exp, &exp.symbols[s].0), t.as_str());
            characterize(&exp.domain, b, &exp.weight, t, &exp.config.params.theorem(), &opts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let entries: Vec<ReportEntry> = jobs
        .iter()
        .zip(reports)
        .map(|(&(s, _), report)| {
            let audit = audits.as_ref().map(|a| a[s].clone());
            entry(exp, &exp.symbols[s].0, report, audit)
        })
        .collect();

    let mut table = Table::new(vec![
        "instance",
        "symbol",
        "theorem",
        "p",
        "q",
        "kappa",
        "gamma",
        "sup_ratio_literal",
        "sup_ratio_ball_local",
        "max_discrepancy",
        "witness_center",
        "witness_radius",
        "opnorm_lb",
        "opnorm_indicator_sup",
        "opnorm_best_member",
        "bmo",
        "neg_part_sup",
    ]);
    for e in &entries {
        table.push(vec![
            e.instance.clone(),
            e.symbol.clone(),
            e.theorem.as_str().to_string(),
            num(e.params.p)?,
            num(e.params.q)?,
            num(e.params.kappa)?,
            num(e.params.gamma)?,
            num(e.sup_ratio_literal)?,
            num(e.sup_ratio_ball_local)?,
            num(e.max_discrepancy)?,
            e.witness_ball.center.to_string(),
            num(e.witness_ball.radius)?,
            opt_num(e.opnorm_lb)?,
            opt_num(e.opnorm.as_ref().map(|o| o.indicator_sup))?,
            e.opnorm.as_ref().map(|o| o.best_member.clone()).unwrap_or_default(),
            num(e.bmo)?,
            num(e.neg_part_sup)?,
        ]);
    }
    let file = CharacterizeFile {
        experiment: exp.config.name.clone(),
        seed: exp.config.seed,
        reports: entries,
    };
    // Serialize before writing anything so a guard trip leaves no partial output.
    let json = to_sorted_json(&file)?;
    let csv = table.to_csv()?;
    let mut written = Vec::new();
    if format.json() {
        let path = out.join("characterize.json");
        write_text(&path, &json)?;
        written.push(path);
    }
    if format.csv() {
        let path = out.join("characterize.csv");
        write_text(&path, &csv)?;
        written.push(path);
    }
    Ok(Outcome {
        written,
        summary: format!("{} reports for {} symbol(s)", file.reports.len(), exp.symbols.len()),
    })
}

#[derive(Serialize)]
struct AuditEntry {
    instance: String,
    symbol: String,
    params: AuditParams<f64>,
    family: Vec<String>,
    checks: Vec<CheckResult<f64>>,
}

#[derive(Serialize)]
struct AuditFile {
    experiment: String,
    seed: u64,
    instances: Vec<AuditEntry>,
}

pub fn cmd_audit(exp: &Experiment, out: &Path, format: Format) -> Result<Outcome, CliError> {
    let params = audit_params(&exp.config.params);
    params.validate().map_err(|e| CliError::Config(format!("params (audit): {e}")))?;
    let family: Vec<String> = audit_family(exp).into_iter().map(|m| m.label).collect();
    let results = run_audits(exp)?;
    let instances: Vec<AuditEntry> = exp
        .symbols
        .iter()
        .zip(results)
        .map(|((name, _), checks)| AuditEntry {
            instance: instance_name(exp, name),
            symbol: name.clone(),
            params: params.clone(),
            family: family.clone(),
            checks,
        })
        .collect();

    let mut table = Table::new(vec![
        "instance",
        "symbol",
        "check",
        "max_violation",
        "constant",
        "flagged",
        "evaluations",
        "skipped",
        "witness_function",
        "witness_point",
        "witness_center",
        "witness_radius",
    ]);
    let mut flagged = 0;
    for inst in &instances {
        for c in &inst.checks {
            flagged += usize::from(c.flagged);
            table.push(vec![
                inst.instance.clone(),
                inst.symbol.clone(),
                c.name.to_string(),
                num(c.max_violation)?,
                opt_num(c.constant)?,
                c.flagged.to_string(),
                c.evaluations.to_string(),
                c.skipped.to_string(),
                c.witness.function.clone().unwrap_or_default(),
                c.witness.point.map(|p| p.to_string()).unwrap_or_default(),
                c.witness.ball.map(|b| b.center.to_string()).unwrap_or_default(),
                opt_num(c.witness.ball.map(|b| b.radius))?,
            ]);
        }
    }
    let file = AuditFile {
        experiment: exp.config.name.clone(),
        seed: exp.config.seed,
        instances,
    };
    let json = to_sorted_json(&file)?;
    let csv = table.to_csv()?;
    let mut written = Vec::new();
    if format.json() {
        let path = out.join("audit.json");
        write_text(&path, &json)?;
        written.push(path);
    }
    if format.csv() {
        let path = out.join("audit.csv");
        write_text(&path, &csv)?;
        written.push(path);
    }
    Ok(Outcome {
        written,
        summary: format!("{} check rows, {} flagged", table.rows.len(), flagged),
    })
}

fn check_grid(name: &str, values: &[f64], ok: impl Fn(f64) -> bool, rule: &str) -> Result<(), CliError> {
    match values.iter().position(|&v| !ok(v)) {
        Some(i) => Err(CliError::Config(format!("sweep.{name}[{i}] = {}: {rule}", values[i]))),
        None => Ok(()),
    }
}

fn validate_grids(grids: &SweepGrids) -> Result<(), CliError> {
    if grids.is_empty() {
        return Err(CliError::Config(
            "sweep: every grid is empty; give at least one of sweep.p, sweep.q, sweep.kappa, sweep.gamma".into(),
        ));
    }
    let above_one = |v: f64| v > 1.0 && v.is_finite();
    let unit = |v: f64| v > 0.0 && v < 1.0;
    check_grid("p", &grids.p, above_one, "must satisfy 1 < p < inf")?;
    check_grid("q", &grids.q, above_one, "must satisfy 1 < q < inf")?;
    check_grid("kappa", &grids.kappa, unit, "must satisfy 0 < kappa < 1")?;
    check_grid("gamma", &grids.gamma, unit, "must satisfy 0 < gamma < 1")
}

/// The space `||chi_B||` is measured in for a theorem, and its closed form at `B`.
fn chi_space(exp: &Experiment, theorem: TheoremId, params: &TheoremParams<f64>) -> Result<MorreyParams<f64>, CliError> {
    let w = exp.weight.clone();
    Ok(match theorem {
        TheoremId::HardyLittlewood | TheoremId::Sharp => MorreyParams::one_weight(params.q, params.kappa, w)?,
        TheoremId::MaximalCommutator => MorreyParams::one_weight(params.p, params.kappa, w)?,
        TheoremId::Fractional => fractional_spaces(params.p, params.q, params.kappa, &w)?.1,
    })
}

#[derive(Serialize)]
struct SkippedTuple {
    theorem: TheoremId,
    params: Params,
    reason: String,
}

#[derive(Serialize)]
struct SweepFile {
    experiment: String,
    rows: usize,
    skipped: Vec<SkippedTuple>,
}

pub fn cmd_sweep(exp: &Experiment, out: &Path, format: Format) -> Result<Outcome, CliError> {
    let grids = &exp.config.sweep;
    validate_grids(grids)?;
    let theorems = exp.config.theorem_ids()?;
    let tuples = grids.tuples(&exp.config.params);
    let mut skipped = Vec::new();
    let mut jobs = Vec::new();
    for tuple in &tuples {
        for &t in &theorems {
            match validate(t, &tuple.theorem()) {
                Ok(_) => jobs.push((*tuple, t)),
                Err(e) => {
                    warn!("sweep: skipping theorem {} at {:?}: {e}", t.as_str(), tuple);
                    skipped.push(SkippedTuple {
                        theorem: t,
                        params: *tuple,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    let opts = options(&exp.config);
    let work: Vec<(usize, usize)> = (0..exp.symbols.len())
        .flat_map(|s| (0..jobs.len()).map(move |j| (s, j)))
        .collect();
    let rows = work
        .par_iter()
        .map(|&(s, j)| sweep_row(exp, &exp.symbols[s], jobs[j].0, jobs[j].1, &opts))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(vec![
        "instance",
        "symbol",
        "theorem",
        "p",
        "q",
        "kappa",
        "gamma",
        "target_exponent",
        "target_kappa",
        "sup_ratio_literal",
        "sup_ratio_ball_local",
        "max_discrepancy",
        "witness_center",
        "witness_radius",
        "chi_norm",
        "chi_norm_closed_form",
        "opnorm_lb",
        "a_p",
        "a_q",
        "a_q_le_a_p",
    ]);
    for row in rows {
        table.push(row);
    }
    let file = SweepFile {
        experiment: exp.config.name.clone(),
        rows: table.rows.len(),
        skipped,
    };
    let json = to_sorted_json(&file)?;
    let csv = table.to_csv()?;
    let mut written = Vec::new();
    if format.csv() {
        let path = out.join("sweep.csv");
        write_text(&path, &csv)?;
        written.push(path);
    }
    if format.json() {
        let path = out.join("sweep.json");
        write_text(&path, &json)?;
        written.push(path);
    }
    Ok(Outcome {
        written,
        summary: format!("{} rows, {} infeasible tuple(s) skipped", file.rows, file.skipped.len()),
    })
}

fn sweep_row(
    exp: &Experiment,
    (name, b): &(String, PointFunction<f64>),
    tuple: Params,
    theorem: TheoremId,
    opts: &CharacterizeOptions,
) -> Result<Vec<String>, CliError> {
    let report = characterize(&exp.domain, b, &exp.weight, theorem, &tuple.theorem(), opts)?;
    let used = report.params.clone();
    let space = chi_space(exp, theorem, &used)?;
    let ball = report.ratio.witness;
    let chi = PointFunction::indicator(&exp.domain, ball)?;
    let chi_norm = morrey_norm(&exp.domain, &chi, &space);
    let b_ball = &exp.domain.balls()[ball];
    let closed = (space.integrand.measure(&exp.domain, b_ball) / space.denominator.measure(&exp.domain, b_ball).powf(space.kappa))
        .powf(space.p.recip());
    let a_p = ap_constant(&exp.domain, &exp.weight, used.p)?.constant;
    let a_q = ap_constant(&exp.domain, &exp.weight, used.q)?.constant;
    Ok(vec![
        instance_name(exp, name),
        name.clone(),
        theorem.as_str().to_string(),
        num(used.p)?,
        num(used.q)?,
        num(used.kappa)?,
        num(used.gamma)?,
        num(space.p)?,
        num(space.kappa)?,
        num(report.ratio.literal)?,
        num(report.ratio.ball_local)?,
        num(report.ratio.max_discrepancy)?,
        report.ratio.witness_ball.center.to_string(),
        num(report.ratio.witness_ball.radius)?,
        num(chi_norm)?,
        num(closed)?,
        opt_num(report.opnorm.map(|o| o.value))?,
        num(a_p)?,
        num(a_q)?,
        (used.q < used.p || a_q <= a_p * (1.0 + 1e-12)).to_string(),
    ])
}

fn read_json(path: &Path) -> Result<Option<Value>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.6e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Renders whatever reports exist in `out` as a markdown summary.
pub fn cmd_report(out: &Path) -> Result<Outcome, CliError> {
    let mut text = String::new();
    if let Some(doubling) = read_json(&out.join("doubling.json"))? {
        text.push_str("## Space\n\n");
        for key in ["n", "ball_count", "a0", "c_mu", "upper_dim"] {
            text.push_str(&format!("- {key}: {}\n", fmt_value(&doubling[key])));
        }
        text.push('\n');
    }
    if let Some(ch) = read_json(&out.join("characterize.json"))? {
        text.push_str("## Characterization\n\n");
        text.push_str("| instance | theorem | literal | ball-local | opnorm lb | bmo |\n|---|---|---|---|---|---|\n");
        for r in ch["reports"].as_array().into_iter().flatten() {
            text.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                fmt_value(&r["instance"]),
                fmt_value(&r["theorem"]),
                fmt_value(&r["sup_ratio_literal"]),
                fmt_value(&r["sup_ratio_ball_local"]),
                fmt_value(&r["opnorm_lb"]),
                fmt_value(&r["bmo"]),
            ));
        }
        text.push('\n');
    }
    if let Some(audit) = read_json(&out.join("audit.json"))? {
        text.push_str("## Audit\n\n| instance | check | max violation | constant | flagged |\n|---|---|---|---|---|\n");
        for inst in audit["instances"].as_array().into_iter().flatten() {
            for c in inst["checks"].as_array().into_iter().flatten() {
                text.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    fmt_value(&inst["instance"]),
                    fmt_value(&c["name"]),
                    fmt_value(&c["max_violation"]),
                    fmt_value(&c["constant"]),
                    fmt_value(&c["flagged"]),
                ));
            }
        }
        text.push('\n');
    }
    if let Some(sweep) = read_json(&out.join("sweep.json"))? {
        text.push_str(&format!(
            "## Sweep\n\n{} rows in sweep.csv, {} skipped tuple(s)\n",
            fmt_value(&sweep["rows"]),
            sweep["skipped"].as_array().map_or(0, Vec::len)
        ));
    }
    if text.is_empty() {
        return Err(CliError::Config(format!("report: no reports found in {}", out.display())));
    }
    let path = out.join("report.md");
    write_text(&path, &text)?;
    Ok(Outcome {
        written: vec![path],
        summary: text,
    })
}
