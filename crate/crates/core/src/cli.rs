//! Command-line front end: argument parsing, scenario loading with
//! overrides, and report rendering.
//!
//! [`run`] is pure apart from reading the scenario file and returns what
//! the binary prints, so every command can be tested in-process. Exit codes:
//! 0 success, 1 scenario diagnostics, 2 usage, I/O or internal errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::audit::{self, HanssonReport, RiskDistribution};
use crate::baselines::{self, DeontologicalOptions, Hierarchy};
use crate::catalog;
use crate::dsl::{self, Diagnostic};
use crate::fairness::FairnessPolicy;
use crate::format::num;
use crate::risk::{self, DecisionResult};
use crate::scenario::{Scenario, SelectionMode};
use crate::simulate::{self, PartyExposure, SimulationOptions};
use crate::valuation::{self, WeightingMode};

/// Environment variable supplying the default `--seed`.
pub const SEED_ENV: &str = "AVRISK_SEED";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Check,
    Evaluate,
    Simulate,
    Compare,
    Audit,
}

/// Runtime adjustments layered over the values in the scenario file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Overrides {
    /// Implies exponential weighting unless `weighting` is also given.
    pub gamma: Option<f64>,
    pub weighting: Option<WeightingMode>,
    /// Replaces the scenario's exclusion set.
    pub exclude: Option<Vec<String>>,
    pub selection: Option<SelectionMode>,
    pub params: BTreeMap<String, f64>,
    pub vsl: Option<f64>,
    pub time_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    /// File path, or a catalog name when no such file exists.
    pub scenario: String,
    pub trials: u64,
    pub seed: u64,
    pub format: OutputFormat,
    pub overrides: Overrides,
    pub workers: Option<usize>,
    pub exposure: bool,
    pub audit_action: Option<String>,
    pub deontological_fallback: bool,
}

impl RunConfig {
    pub fn new(command: CommandKind, scenario: impl Into<String>) -> Self {
        Self {
            command,
            scenario: scenario.into(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            format: OutputFormat::Table,
            overrides: Overrides::default(),
            workers: None,
            exposure: false,
            audit_action: None,
            deontological_fallback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunOutput {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutput {
    fn fail(exit_code: i32, stderr: String) -> Self {
        Self {
            exit_code,
            stdout: String::new(),
            stderr,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "avrisk",
    version,
    about = "Risk-management decisions for automated-vehicle maneuvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a scenario
    Check(Common),
    /// Score every action and pick the lowest-risk one
    Evaluate(Common),
    /// Monte Carlo check of the analytic penalties
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_TRIALS, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Worker threads (results do not depend on it)
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        workers: Option<u64>,
        /// Also report empirical per-party exposure
        #[arg(long)]
        exposure: bool,
    },
    /// Compare risk management with the baseline deciders
    Compare {
        #[command(flatten)]
        common: Common,
        /// Break deontological ties by expected penalty
        #[arg(long)]
        deontological_fallback: bool,
    },
    /// Risk distribution, transfers and the seven-question report
    Audit {
        #[command(flatten)]
        common: Common,
        /// Action to audit (default: the chosen one)
        #[arg(long)]
        action: Option<String>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file, or the name of a catalog scenario
    scenario: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Certainty-weighting exponent (implies --weighting exponential)
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_parser = parse_weighting)]
    weighting: Option<WeightingMode>,
    /// Comma-separated attributes to exclude, or `none`
    #[arg(long)]
    exclude: Option<String>,
    /// expected or robust
    #[arg(long, value_parser = parse_selection)]
    selection: Option<SelectionMode>,
    /// Scenario parameter override, `name=value` (repeatable)
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Value of a statistical life in USD
    #[arg(long)]
    vsl: Option<f64>,
    /// Travel-time value in USD per person-hour
    #[arg(long = "time-value")]
    time_value: Option<f64>,
}

fn parse_weighting(s: &str) -> Result<WeightingMode, String> {
    WeightingMode::parse(s).ok_or_else(|| format!("expected linear or exponential, got `{s}`"))
}

fn parse_selection(s: &str) -> Result<SelectionMode, String> {
    SelectionMode::parse(s).ok_or_else(|| format!("expected expected or robust, got `{s}`"))
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value = dsl::expr::number_literal(value).ok_or_else(|| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

impl Common {
    fn into_config(self, command: CommandKind) -> RunConfig {
        let exclude = self.exclude.map(|list| {
            if list.trim() == "none" {
                Vec::new()
            } else {
                list.split(',')
                    .map(|k| k.trim().to_string())
                    .filter(|k| !k.is_empty())
                    .collect()
            }
        });
        let mut config = RunConfig::new(command, self.scenario);
        config.format = self.format;
        config.overrides = Overrides {
            gamma: self.gamma,
            weighting: self.weighting,
            exclude,
            selection: self.selection,
            params: self.params.into_iter().collect(),
            vsl: self.vsl,
            time_value: self.time_value,
        };
        config
    }
}

/// Parses a full argument list, program name first.
pub fn parse_args<I, S>(args: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(match cli.command {
        Command::Check(c) => c.into_config(CommandKind::Check),
        Command::Evaluate(c) => c.into_config(CommandKind::Evaluate),
        Command::Simulate {
            common,
            trials,
            seed,
            workers,
            exposure,
        } => {
            let mut config = common.into_config(CommandKind::Simulate);
            config.trials = trials;
            config.seed = seed;
            config.workers = workers.map(|w| w as usize);
            config.exposure = exposure;
            config
        }
        Command::Compare {
            common,
            deontological_fallback,
        } => {
            let mut config = common.into_config(CommandKind::Compare);
            config.deontological_fallback = deontological_fallback;
            config
        }
        Command::Audit { common, action } => {
            let mut config = common.into_config(CommandKind::Audit);
            config.audit_action = action;
            config
        }
    })
}

enum Failure {
    Diagnostics(Vec<Diagnostic>),
    Fatal(String),
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Fatal(e.to_string())
    }
}

fn read_source(name: &str) -> Result<String, Failure> {
    let path = Path::new(name);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| Failure::Fatal(format!("cannot read {name}: {e}")));
    }
    catalog::source(name).map(str::to_string).ok_or_else(|| {
        let names: Vec<&str> = catalog::names().collect();
        Failure::Fatal(format!(
            "{name}: no such file and no catalog scenario of that name (catalog: {})",
            names.join(", ")
        ))
    })
}

/// Parses, applies overrides and re-validates. Returns the scenario and
/// any warnings.
fn load(config: &RunConfig) -> Result<(Scenario<f64>, Vec<Diagnostic>), Failure> {
    let text = read_source(&config.scenario)?;
    let parsed = dsl::parse_document::<f64>(&text, &config.overrides.params);
    if parsed.has_errors() {
        return Err(Failure::Diagnostics(parsed.diagnostics));
    }
    let warnings = parsed.diagnostics;
    let mut scenario = parsed.scenario;
    let o = &config.overrides;
    if let Some(g) = o.gamma {
        scenario.weighting.gamma = g;
        scenario.weighting.mode = WeightingMode::Exponential;
    }
    if let Some(m) = o.weighting {
        scenario.weighting.mode = m;
    }
    if let Some(keys) = &o.exclude {
        scenario.fairness_policy = FairnessPolicy::excluding(keys.iter().cloned());
    }
    if let Some(m) = o.selection {
        scenario.selection_mode = m;
    }
    if o.vsl.is_some() || o.time_value.is_some() {
        if let Some(v) = o.vsl {
            scenario.schedule.vsl_usd = v;
        }
        if let Some(v) = o.time_value {
            scenario.schedule.travel_time_usd_per_person_hour = v;
        }
        let schedule = scenario.schedule.clone();
        for action in &mut scenario.actions {
            for outcome in &mut action.outcomes {
                if let Some(c) = &outcome.consequence {
                    outcome.magnitude = valuation::monetize(c, &schedule)?;
                }
            }
        }
    }
    let diags = dsl::validate(&scenario);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(Failure::Diagnostics(diags));
    }
    Ok((scenario, warnings))
}

/// Executes one command.
pub fn run(config: &RunConfig) -> RunOutput {
    if config.command == CommandKind::Simulate && config.trials == 0 {
        return RunOutput::fail(2, "error: --trials must be at least 1\n".to_string());
    }
    let loaded = load(config);
    if config.command == CommandKind::Check {
        return check(config, loaded);
    }
    let result = loaded.and_then(|(scenario, warnings)| {
        let stdout = match config.command {
            CommandKind::Evaluate => evaluate(config, &scenario),
            CommandKind::Simulate => simulate_cmd(config, &scenario),
            CommandKind::Compare => compare_cmd(config, &scenario),
            CommandKind::Audit => audit_cmd(config, &scenario),
            CommandKind::Check => unreachable!("handled above"),
        }?;
        Ok((stdout, warnings))
    });
    match result {
        Ok((stdout, warnings)) => RunOutput {
            exit_code: 0,
            stdout,
            stderr: warnings.iter().map(|d| format!("{}: {d}\n", config.scenario)).collect(),
        },
        Err(Failure::Diagnostics(d)) => {
            RunOutput::fail(1, d.iter().map(|d| format!("{}: {d}\n", config.scenario)).collect())
        }
        Err(Failure::Fatal(msg)) => RunOutput::fail(2, format!("error: {msg}\n")),
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fatal = |e: csv::Error| Failure::Fatal(e.to_string());
    w.write_record(header).map_err(fatal)?;
    for row in rows {
        w.write_record(&row).map_err(fatal)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Fatal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Fatal(e.to_string()))
}

fn json_text(value: &impl Serialize) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Fatal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Left-aligned first column, right-aligned others.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        format!("{}\n", parts.join("  ").trim_end())
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn check(config: &RunConfig, loaded: Result<(Scenario<f64>, Vec<Diagnostic>), Failure>) -> RunOutput {
    let (scenario, diags) = match loaded {
        Ok((s, warnings)) => (Some(s), warnings),
        Err(Failure::Diagnostics(d)) => (None, d),
        Err(Failure::Fatal(msg)) => return RunOutput::fail(2, format!("error: {msg}\n")),
    };
    let valid = scenario.is_some();
    let rendered = match config.format {
        OutputFormat::Table => {
            let mut out: String = diags.iter().map(|d| format!("{}: {d}\n", config.scenario)).collect();
            if let Some(s) = &scenario {
                let _ = writeln!(
                    out,
                    "valid: {} ({} parties, {} actions)",
                    s.name,
                    s.parties.len(),
                    s.actions.len()
                );
            }
            Ok(out)
        }
        OutputFormat::Csv => csv_text(
            &["line", "column", "severity", "code", "message"],
            diags
                .iter()
                .map(|d| {
                    vec![
                        d.span.line.to_string(),
                        d.span.column.to_string(),
                        json_name(&d.severity),
                        json_name(&d.code),
                        d.message.clone(),
                    ]
                })
                .collect(),
        ),
        OutputFormat::Json => json_text(&json!({
            "scenario": config.scenario,
            "valid": valid,
            "diagnostics": diags,
        })),
    };
    match rendered {
        Ok(stdout) => RunOutput {
            exit_code: if valid { 0 } else { 1 },
            stdout,
            stderr: String::new(),
        },
        Err(Failure::Fatal(msg)) => RunOutput::fail(2, format!("error: {msg}\n")),
        Err(Failure::Diagnostics(_)) => unreachable!("rendering yields no diagnostics"),
    }
}

/// Serialized name of a unit-like enum variant.
fn json_name(value: &impl Serialize) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn header_line(scenario: &Scenario<f64>) -> String {
    let weighting = match scenario.weighting.mode {
        WeightingMode::Linear => "linear weighting".to_string(),
        WeightingMode::Exponential => format!("exponential weighting, gamma {}", num(scenario.weighting.gamma)),
    };
    format!(
        "scenario {} ({}, {} selection, {weighting})\n\n",
        scenario.name, scenario.unit, scenario.selection_mode
    )
}

fn evaluate(config: &RunConfig, scenario: &Scenario<f64>) -> Result<String, Failure> {
    let decision = risk::decide(scenario)?;
    match config.format {
        OutputFormat::Table => Ok(header_line(scenario) + &risk::render_trace(&decision)),
        OutputFormat::Csv => {
            let mut rows = Vec::new();
            for action in &decision.actions {
                let chosen = (action.id == decision.chosen_action).to_string();
                for e in decision.trace.for_action(&action.id) {
                    rows.push(vec![
                        action.id.clone(),
                        e.outcome.clone(),
                        e.description.clone(),
                        num(e.magnitude),
                        num(e.probability),
                        num(e.contribution),
                        chosen.clone(),
                    ]);
                }
                rows.push(vec![
                    action.id.clone(),
                    "total".to_string(),
                    "cumulative risk".to_string(),
                    String::new(),
                    String::new(),
                    num(action.risk.penalty),
                    chosen,
                ]);
            }
            csv_text(
                &[
                    "action",
                    "outcome",
                    "description",
                    "magnitude",
                    "probability",
                    "penalty",
                    "chosen",
                ],
                rows,
            )
        }
        OutputFormat::Json => json_text(&json!({
            "scenario": scenario.name,
            "unit": scenario.unit,
            "decision": decision,
        })),
    }
}

fn simulate_cmd(config: &RunConfig, scenario: &Scenario<f64>) -> Result<String, Failure> {
    let options = SimulationOptions {
        workers: config.workers,
        ..SimulationOptions::default()
    };
    let report = simulate::consistency_check_with(scenario, config.trials, config.seed, &options)?;
    let mut exposure: Vec<PartyExposure<f64>> = Vec::new();
    if config.exposure {
        for action in &scenario.actions {
            exposure.push(simulate::party_exposure_with(
                scenario,
                &action.id,
                config.trials,
                config.seed,
                &options,
            )?);
        }
    }
    match config.format {
        OutputFormat::Json => {
            let mut doc = json!({
                "scenario": scenario.name,
                "trials": config.trials,
                "seed": config.seed,
                "pass": report.pass,
                "actions": report.rows,
            });
            if config.exposure {
                doc["exposure"] = json!(exposure);
            }
            json_text(&doc)
        }
        OutputFormat::Csv => {
            let mut rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.action.clone(),
                        "all".to_string(),
                        num(r.analytic),
                        num(r.empirical.mean),
                        num(r.empirical.stderr),
                        num(r.empirical.ci95[0]),
                        num(r.empirical.ci95[1]),
                        num(r.z_score),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            for e in &exposure {
                for (party, mean) in &e.per_party {
                    rows.push(vec![
                        e.action.clone(),
                        party.clone(),
                        String::new(),
                        num(*mean),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
            }
            csv_text(
                &[
                    "action", "party", "analytic", "mean", "stderr", "ci95_lo", "ci95_hi", "z_score", "pass",
                ],
                rows,
            )
        }
        OutputFormat::Table => {
            let mut out = header_line(scenario);
            let _ = writeln!(out, "{} trials per action, seed {}\n", config.trials, config.seed);
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.action.clone(),
                        num(r.analytic),
                        num(r.empirical.mean),
                        num(r.empirical.stderr),
                        format!("[{}, {}]", num(r.empirical.ci95[0]), num(r.empirical.ci95[1])),
                        format!("{:.3}", r.z_score),
                        if r.pass { "pass" } else { "FAIL" }.to_string(),
                    ]
                })
                .collect();
            out.push_str(&table(
                &["action", "analytic", "mean", "stderr", "ci95", "z", "check"],
                &rows,
            ));
            for e in &exposure {
                let _ = writeln!(out, "\nexposure under {}", e.action);
                let rows: Vec<Vec<String>> = e.per_party.iter().map(|(p, m)| vec![p.clone(), num(*m)]).collect();
                out.push_str(&table(&["party", "mean harm"], &rows));
                if !e.unassigned.is_empty() {
                    let _ = writeln!(out, "warning: outcomes without a party: {}", e.unassigned.join(", "));
                }
            }
            Ok(out)
        }
    }
}

fn compare_cmd(config: &RunConfig, scenario: &Scenario<f64>) -> Result<String, Failure> {
    let options = DeontologicalOptions {
        expected_cost_fallback: config.deontological_fallback,
    };
    let report = baselines::compare_with(scenario, &Hierarchy::default(), options)?;
    let best = report.rows[0].expected_penalty;
    match config.format {
        OutputFormat::Json => json_text(&report),
        OutputFormat::Csv => csv_text(
            &["decider", "chosen_action", "expected_penalty", "gap"],
            report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.decider.clone(),
                        r.chosen_action.clone(),
                        num(r.expected_penalty),
                        num(r.expected_penalty - best),
                    ]
                })
                .collect(),
        ),
        OutputFormat::Table => {
            let mut out = header_line(scenario);
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| vec![r.decider.clone(), r.chosen_action.clone(), num(r.expected_penalty)])
                .collect();
            out.push_str(&table(&["decider", "chosen", "expected penalty"], &rows));
            let _ = writeln!(
                out,
                "\ndivergence: {}; expected-penalty gap {}",
                if report.divergence { "yes" } else { "no" },
                num(report.gap)
            );
            for r in &report.rows {
                let _ = writeln!(out, "  {}: {}", r.decider, r.rationale);
            }
            Ok(out)
        }
    }
}

fn audit_cmd(config: &RunConfig, scenario: &Scenario<f64>) -> Result<String, Failure> {
    let mut decision: DecisionResult<f64> = risk::decide(scenario)?;
    if let Some(action) = &config.audit_action {
        scenario.require_action(action)?;
        decision.chosen_action = action.clone();
    }
    let audited = decision.chosen_action.clone();
    let distributions: Vec<RiskDistribution<f64>> = scenario
        .actions
        .iter()
        .map(|a| audit::risk_distribution(scenario, &a.id))
        .collect::<crate::Result<_>>()?;
    let fairness: BTreeMap<String, Option<f64>> = distributions
        .iter()
        .map(|d| (d.action.clone(), audit::fairness_index(d).ok()))
        .collect();
    let mut transfers: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for a in scenario.actions.iter().filter(|a| a.id != audited) {
        transfers.insert(a.id.clone(), audit::risk_transfer(scenario, &audited, &a.id)?);
    }
    let report: HanssonReport = audit::hansson_report(scenario, &decision)?;

    match config.format {
        OutputFormat::Json => json_text(&json!({
            "scenario": scenario.name,
            "action": audited,
            "distributions": distributions,
            "fairness_index": fairness,
            "transfers_from_action": transfers,
            "hansson": report,
        })),
        OutputFormat::Csv => {
            let mut rows = Vec::new();
            for d in &distributions {
                for (party, share) in &d.shares {
                    rows.push(vec!["share".into(), d.action.clone(), party.clone(), num(*share)]);
                }
                rows.push(vec!["total".into(), d.action.clone(), String::new(), num(d.total)]);
                let index = fairness[&d.action].map(num).unwrap_or_default();
                rows.push(vec!["fairness_index".into(), d.action.clone(), String::new(), index]);
            }
            for (to, deltas) in &transfers {
                for (party, delta) in deltas {
                    rows.push(vec!["transfer".into(), to.clone(), party.clone(), num(*delta)]);
                }
            }
            for e in &report.entries {
                rows.push(vec![
                    "hansson".into(),
                    audited.clone(),
                    e.number.to_string(),
                    e.answer.clone(),
                ]);
            }
            csv_text(&["kind", "action", "key", "value"], rows)
        }
        OutputFormat::Table => {
            let mut out = header_line(scenario);
            let _ = writeln!(out, "audited action: {audited}\n");
            let mut parties: Vec<&String> = distributions.iter().flat_map(|d| d.shares.keys()).collect();
            parties.sort();
            parties.dedup();
            let mut header = vec!["party"];
            header.extend(distributions.iter().map(|d| d.action.as_str()));
            let mut rows: Vec<Vec<String>> = parties
                .iter()
                .map(|p| {
                    let mut row = vec![p.to_string()];
                    row.extend(
                        distributions
                            .iter()
                            .map(|d| num(d.shares.get(*p).copied().unwrap_or(0.0))),
                    );
                    row
                })
                .collect();
            let mut total = vec!["total".to_string()];
            total.extend(distributions.iter().map(|d| num(d.total)));
            rows.push(total);
            let mut index = vec!["fairness index".to_string()];
            index.extend(
                distributions
                    .iter()
                    .map(|d| fairness[&d.action].map(num).unwrap_or_else(|| "-".into())),
            );
            rows.push(index);
            out.push_str(&table(&header, &rows));
            for (to, deltas) in &transfers {
                let parts: Vec<String> = deltas.iter().map(|(p, d)| format!("{p} {}", signed(*d))).collect();
                let _ = writeln!(out, "transfer {audited} -> {to}: {}", parts.join(", "));
            }
            for d in &distributions {
                if !d.unassigned.is_empty() {
                    let _ = writeln!(
                        out,
                        "warning: {} outcomes without a party pooled under {}: {}",
                        d.action,
                        audit::ENVIRONMENT_PARTY,
                        d.unassigned.join(", ")
                    );
                }
            }
            out.push('\n');
            for e in &report.entries {
                let _ = writeln!(out, "{}. {}", e.number, e.question);
                for (k, v) in &e.inputs {
                    let _ = writeln!(out, "     {k}: {v}");
                }
                let _ = writeln!(out, "   -> {}", e.answer);
                if let Some(n) = &e.note {
                    let _ = writeln!(out, "   note: {n}");
                }
            }
            Ok(out)
        }
    }
}

fn signed(x: f64) -> String {
    if x > 0.0 {
        format!("+{}", num(x))
    } else {
        num(x)
    }
}
