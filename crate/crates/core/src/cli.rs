//! Batch front end: argument parsing, command dispatch, result records and
//! their table, CSV and JSON renderings.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bound::{alpha_upper, alpha_upper_many, BoundaryPoint, GridSpec};
use crate::error::{Error, Result};
use crate::oracle::{alpha_oracle, PartitionValue, SeesawConfig, MAX_ORACLE_PARTIES};
use crate::search::{
    evaluate_budget, search_optimal, CMode, SearchConfig, ThresholdKind, WitnessCandidate,
};
use crate::settings::{angle_of, SettingSet};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Parser)]
#[command(
    name = "ghz-witness",
    version,
    about = "GHZ entanglement witnesses with few measurement settings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    /// Bound and thresholds for one (S, C)
    Alpha,
    /// Best setting set for one budget
    Search,
    /// Thresholds of one S over its admissible weights
    Tolerance,
    /// See-saw lower estimate against the grid bound
    Verify,
    /// Best setting set for every budget 1..=N
    Table,
    /// Noise tolerance versus budget, scanned and fixed weight
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CModeArg {
    Fixed,
    Int,
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdArg {
    Asym,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Number of parties
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,
    /// Explicit setting indices, comma separated
    #[arg(long, value_delimiter = ',', global = true)]
    pub s_indices: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Explicit weight C
    #[arg(long = "c", global = true)]
    pub c: Option<f64>,
    #[arg(long, value_enum, default_value = "int", global = true)]
    pub c_mode: CModeArg,
    /// C increment for --c-mode fine
    #[arg(long, default_value_t = 0.1, global = true)]
    pub fine_step: f64,
    /// Grid step in radians
    #[arg(long, default_value_t = 0.01, global = true)]
    pub eps: f64,
    /// Refinement rounds around the grid maximum
    #[arg(long, default_value_t = 2, global = true)]
    pub refine: u32,
    #[arg(long, value_enum, default_value = "asym", global = true)]
    pub threshold: ThresholdArg,
    #[arg(long, value_enum, default_value = "table", global = true)]
    pub format: OutputFormat,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// See-saw restarts per bipartition
    #[arg(long, default_value_t = 32, global = true)]
    pub restarts: usize,
    /// Also print angles in radians
    #[arg(long, global = true)]
    pub radians: bool,
    /// Bound every setting set instead of one per rotation class
    #[arg(long, global = true)]
    pub no_dedup: bool,
}

/// Validated run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n_parties: usize,
    pub settings: Option<Vec<usize>>,
    pub budget: Option<usize>,
    pub c: Option<f64>,
    pub c_mode: CMode,
    pub grid: GridSpec,
    pub threshold: ThresholdKind,
    pub dedup: bool,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: u64,
    pub restarts: usize,
    pub radians: bool,
}

fn missing(flag: &str, command: CommandKind) -> Error {
    Error::InvalidArgument(format!("--{flag} is required for {command:?}").to_lowercase())
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let o = cli.options;
        let command = cli.command;
        let n_parties = o.n.ok_or_else(|| missing("n", command))?;
        if n_parties < 2 {
            return Err(Error::TooFewParties {
                n: n_parties,
                min: 2,
            });
        }
        let c_mode = match o.c_mode {
            CModeArg::Fixed => CMode::FixedAtSize,
            CModeArg::Int => CMode::IntegerScan,
            CModeArg::Fine => CMode::FineScan { step: o.fine_step },
        };
        let grid = GridSpec {
            step: o.eps,
            refine_rounds: o.refine,
            ..GridSpec::default()
        };
        grid.validate()?;
        let threshold = match o.threshold {
            ThresholdArg::Asym => ThresholdKind::Asymptotic,
            ThresholdArg::Exact => ThresholdKind::Exact,
        };
        if o.workers == Some(0) {
            return Err(Error::InvalidArgument(
                "--workers must be at least 1".into(),
            ));
        }
        if o.restarts == 0 {
            return Err(Error::InvalidArgument(
                "--restarts must be at least 1".into(),
            ));
        }
        let config = Self {
            command,
            n_parties,
            settings: o.s_indices,
            budget: o.budget,
            c: o.c,
            c_mode,
            grid,
            threshold,
            dedup: !o.no_dedup,
            format: o.format,
            out: o.out,
            workers: o.workers,
            seed: o.seed,
            restarts: o.restarts,
            radians: o.radians,
        };
        config.validate()?;
        Ok(config)
    }

    /// Per-command checks, run before any computation.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        match self.command {
            CommandKind::Alpha | CommandKind::Verify => {
                let s = self.setting_set()?;
                let c = self.c.ok_or_else(|| missing("c", self.command))?;
                s.check_weight(c)?;
                if self.command == CommandKind::Verify && self.n_parties > MAX_ORACLE_PARTIES {
                    return Err(Error::SizeGuard {
                        what: "oracle party count",
                        got: self.n_parties,
                        max: MAX_ORACLE_PARTIES,
                    });
                }
            }
            CommandKind::Tolerance => {
                let s = self.setting_set()?;
                match self.c {
                    Some(c) => s.check_weight(c)?,
                    None => {
                        self.c_mode.weights(s.len())?;
                    }
                }
            }
            CommandKind::Search => {
                let budget = self.budget.ok_or_else(|| missing("budget", self.command))?;
                if budget == 0 || budget > self.n_parties {
                    return Err(Error::InvalidArgument(format!(
                        "budget must lie in 1..={}, got {budget}",
                        self.n_parties
                    )));
                }
                self.c_mode.weights(budget)?;
            }
            CommandKind::Table | CommandKind::Curve => {
                self.c_mode.weights(1)?;
            }
        }
        Ok(())
    }

    pub fn setting_set(&self) -> Result<SettingSet> {
        let idx = self
            .settings
            .clone()
            .ok_or_else(|| missing("s-indices", self.command))?;
        SettingSet::new(self.n_parties, idx)
    }

    fn search_config(&self) -> SearchConfig {
        SearchConfig {
            c_mode: self.c_mode,
            grid: self.grid,
            dedup: self.dedup,
            threshold: self.threshold,
            ..SearchConfig::default()
        }
    }
}

/// One candidate, flattened for output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub settings: Vec<usize>,
    pub c: f64,
    pub alpha_upper: f64,
    pub p_asymptotic: f64,
    pub p_exact: f64,
}

impl From<&WitnessCandidate> for CandidateRow {
    fn from(c: &WitnessCandidate) -> Self {
        Self {
            settings: c.settings.indices().to_vec(),
            c: c.c,
            alpha_upper: c.alpha_upper,
            p_asymptotic: c.p_asymptotic,
            p_exact: c.p_exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub k: usize,
    pub p: f64,
    pub angles: Vec<usize>,
    pub c_opt: f64,
    pub n_ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: usize,
    pub p_variable_c: f64,
    pub p_fixed_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outputs {
    Alpha {
        candidate: CandidateRow,
        arg_best: BoundaryPoint,
    },
    Search {
        budget: usize,
        best: CandidateRow,
        ties: Vec<CandidateRow>,
        scanned: usize,
        pruned: usize,
    },
    Tolerance {
        per_c: Vec<CandidateRow>,
        best: CandidateRow,
    },
    Verify {
        alpha_oracle: f64,
        alpha_upper: f64,
        per_k: Vec<PartitionValue>,
        /// `alpha_oracle ≤ alpha_upper + slack`
        sandwich_holds: bool,
    },
    Table {
        rows: Vec<TableRow>,
    },
    Curve {
        rows: Vec<CurveRow>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid: GridSpec,
    pub evaluations: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: String,
    pub command: CommandKind,
    pub inputs: RunConfig,
    pub outputs: Outputs,
    pub provenance: Provenance,
}

impl ResultRecord {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Runs one command, in a dedicated thread pool when a worker count is set.
pub fn execute(config: &RunConfig) -> Result<ResultRecord> {
    config.validate()?;
    match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| dispatch(config)),
        None => dispatch(config),
    }
}

fn dispatch(config: &RunConfig) -> Result<ResultRecord> {
    let start = Instant::now();
    let (outputs, evaluations) = match config.command {
        CommandKind::Alpha => cmd_alpha(config)?,
        CommandKind::Search => cmd_search(config)?,
        CommandKind::Tolerance => cmd_tolerance(config)?,
        CommandKind::Verify => cmd_verify(config)?,
        CommandKind::Table => cmd_table(config)?,
        CommandKind::Curve => cmd_curve(config)?,
    };
    Ok(ResultRecord {
        schema_version: SCHEMA_VERSION.to_string(),
        command: config.command,
        inputs: config.clone(),
        outputs,
        provenance: Provenance {
            grid: config.grid,
            evaluations,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

fn cmd_alpha(config: &RunConfig) -> Result<(Outputs, u64)> {
    let s = config.setting_set()?;
    let c = config.c.ok_or_else(|| missing("c", config.command))?;
    let bound = alpha_upper(&s, c, &config.grid)?;
    let candidate = WitnessCandidate::new(s, c, bound.alpha_upper);
    Ok((
        Outputs::Alpha {
            candidate: (&candidate).into(),
            arg_best: bound.arg_best,
        },
        bound.evaluations,
    ))
}

fn cmd_search(config: &RunConfig) -> Result<(Outputs, u64)> {
    let budget = config
        .budget
        .ok_or_else(|| missing("budget", config.command))?;
    let report = search_optimal(config.n_parties, budget, &config.search_config())?;
    Ok((
        Outputs::Search {
            budget,
            best: (&report.best).into(),
            ties: report.ties.iter().map(Into::into).collect(),
            scanned: report.scanned,
            pruned: report.pruned,
        },
        report.evaluations,
    ))
}

fn cmd_tolerance(config: &RunConfig) -> Result<(Outputs, u64)> {
    let s = config.setting_set()?;
    let weights = match config.c {
        Some(c) => vec![c],
        None => config.c_mode.weights(s.len())?,
    };
    let bounds = alpha_upper_many(&s, &weights, &config.grid)?;
    let evaluations = bounds.iter().map(|b| b.evaluations).sum();
    let per_c: Vec<WitnessCandidate> = weights
        .iter()
        .zip(&bounds)
        .map(|(c, b)| WitnessCandidate::new(s.clone(), *c, b.alpha_upper))
        .collect();
    let kind = config.threshold;
    let best = per_c.iter().fold(&per_c[0], |b, c| {
        if c.threshold(kind) > b.threshold(kind) {
            c
        } else {
            b
        }
    });
    Ok((
        Outputs::Tolerance {
            best: best.into(),
            per_c: per_c.iter().map(Into::into).collect(),
        },
        evaluations,
    ))
}

fn cmd_verify(config: &RunConfig) -> Result<(Outputs, u64)> {
    let s = config.setting_set()?;
    let c = config.c.ok_or_else(|| missing("c", config.command))?;
    let seesaw = SeesawConfig {
        restarts: config.restarts,
        rng_seed: config.seed,
        ..SeesawConfig::default()
    };
    let report = alpha_oracle(&s, c, &seesaw)?;
    let bound = alpha_upper(&s, c, &config.grid)?;
    Ok((
        Outputs::Verify {
            alpha_oracle: report.alpha_best,
            alpha_upper: bound.alpha_upper,
            sandwich_holds: report.alpha_best <= bound.alpha_upper + crate::bound::GRID_SLACK,
            per_k: report.per_k,
        },
        bound.evaluations,
    ))
}

fn cmd_table(config: &RunConfig) -> Result<(Outputs, u64)> {
    let search = config.search_config();
    let mut rows = Vec::with_capacity(config.n_parties);
    let mut evaluations = 0;
    for budget in 1..=config.n_parties {
        let report = search_optimal(config.n_parties, budget, &search)?;
        evaluations += report.evaluations;
        rows.push(TableRow {
            k: budget,
            p: report.best.threshold(config.threshold),
            angles: report.best.settings.indices().to_vec(),
            c_opt: report.best.c,
            n_ties: report.ties.len(),
        });
    }
    Ok((Outputs::Table { rows }, evaluations))
}

fn cmd_curve(config: &RunConfig) -> Result<(Outputs, u64)> {
    // the scanned curve needs a scan that contains C = |S|
    let mut search = config.search_config();
    if search.c_mode == CMode::FixedAtSize {
        search.c_mode = CMode::IntegerScan;
    }
    let kind = config.threshold;
    let mut rows = Vec::with_capacity(config.n_parties);
    let mut evaluations = 0;
    for budget in 1..=config.n_parties {
        let eval = evaluate_budget(config.n_parties, budget, &search)?;
        evaluations += eval.evaluations;
        let best_of = |fixed: bool| {
            eval.candidates
                .iter()
                .filter(|c| !fixed || c.c == budget as f64)
                .map(|c| c.threshold(kind))
                .fold(0.0, f64::max)
        };
        rows.push(CurveRow {
            k: budget,
            p_variable_c: best_of(false),
            p_fixed_c: best_of(true),
        });
    }
    Ok((Outputs::Curve { rows }, evaluations))
}

pub const TABLE_CSV_HEADER: [&str; 5] = ["k", "p", "angles", "C_opt", "n_ties"];
pub const CURVE_CSV_HEADER: [&str; 3] = ["k", "p_variable_C", "p_fixed_C"];

fn angles_text(idx: &[usize]) -> String {
    let parts: Vec<String> = idx.iter().map(|j| j.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn radians_text(idx: &[usize], n: usize) -> String {
    let parts: Vec<String> = idx
        .iter()
        .map(|&j| format!("{:.4}", angle_of(j, n)))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv output failed: {e}"))
}

fn candidate_csv<W: Write>(w: &mut csv::Writer<W>, rows: &[CandidateRow]) -> Result<()> {
    w.write_record(["S", "C", "alpha_upper", "p_asym", "p_exact"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            angles_text(&r.settings),
            r.c.to_string(),
            r.alpha_upper.to_string(),
            r.p_asymptotic.to_string(),
            r.p_exact.to_string(),
        ])
        .map_err(csv_error)?;
    }
    Ok(())
}

/// CSV rendering of the outputs.
pub fn render_csv(record: &ResultRecord) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match &record.outputs {
        Outputs::Table { rows } => {
            w.write_record(TABLE_CSV_HEADER).map_err(csv_error)?;
            for r in rows {
                w.write_record([
                    r.k.to_string(),
                    r.p.to_string(),
                    angles_text(&r.angles),
                    r.c_opt.to_string(),
                    r.n_ties.to_string(),
                ])
                .map_err(csv_error)?;
            }
        }
        Outputs::Curve { rows } => {
            w.write_record(CURVE_CSV_HEADER).map_err(csv_error)?;
            for r in rows {
                w.write_record([
                    r.k.to_string(),
                    r.p_variable_c.to_string(),
                    r.p_fixed_c.to_string(),
                ])
                .map_err(csv_error)?;
            }
        }
        Outputs::Alpha { candidate, .. } => candidate_csv(&mut w, std::slice::from_ref(candidate))?,
        Outputs::Search { ties, .. } => candidate_csv(&mut w, ties)?,
        Outputs::Tolerance { per_c, .. } => candidate_csv(&mut w, per_c)?,
        Outputs::Verify {
            alpha_oracle,
            alpha_upper,
            sandwich_holds,
            ..
        } => {
            w.write_record(["alpha_oracle", "alpha_upper", "sandwich_holds"])
                .map_err(csv_error)?;
            w.write_record([
                alpha_oracle.to_string(),
                alpha_upper.to_string(),
                sandwich_holds.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Aligned plain-text rendering.
pub fn render_human(record: &ResultRecord) -> String {
    let n = record.inputs.n_parties;
    let radians = record.inputs.radians;
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    let candidate_lines = |c: &CandidateRow, line: &mut dyn FnMut(String)| {
        line(format!("S            {}", angles_text(&c.settings)));
        if radians {
            line(format!("S (rad)      {}", radians_text(&c.settings, n)));
        }
        line(format!("C            {}", c.c));
        line(format!("alpha_upper  {:.6}", c.alpha_upper));
        line(format!("p_asym       {:.4}", c.p_asymptotic));
        line(format!("p_exact      {:.4}", c.p_exact));
    };
    match &record.outputs {
        Outputs::Alpha { candidate, .. } => {
            line(format!("N            {n}"));
            candidate_lines(candidate, &mut line);
        }
        Outputs::Search {
            budget,
            best,
            ties,
            scanned,
            pruned,
        } => {
            line(format!("N            {n}"));
            line(format!("|S|          {budget}"));
            candidate_lines(best, &mut line);
            line(format!("ties         {}", ties.len()));
            line(format!("scanned      {scanned} (pruned {pruned})"));
            for t in ties {
                line(format!(
                    "  {}  C={}  p={:.4}",
                    angles_text(&t.settings),
                    t.c,
                    t.p_asymptotic
                ));
            }
        }
        Outputs::Tolerance { per_c, best } => {
            line(format!(
                "{:<8}{:<12}{:<10}{:<10}",
                "C", "alpha_u", "p_asym", "p_exact"
            ));
            for r in per_c {
                line(format!(
                    "{:<8}{:<12.6}{:<10.4}{:<10.4}",
                    r.c, r.alpha_upper, r.p_asymptotic, r.p_exact
                ));
            }
            line(format!("best C = {}", best.c));
        }
        Outputs::Verify {
            alpha_oracle,
            alpha_upper,
            per_k,
            sandwich_holds,
        } => {
            for p in per_k {
                line(format!(
                    "k={:<3} f={:.8}  converged={}",
                    p.k, p.f_value, p.converged
                ));
            }
            line(format!("alpha_oracle {alpha_oracle:.8}"));
            line(format!("alpha_upper  {alpha_upper:.8}"));
            line(format!(
                "sandwich     {}",
                if *sandwich_holds { "ok" } else { "VIOLATED" }
            ));
        }
        Outputs::Table { rows } => {
            let width = rows
                .iter()
                .map(|r| angles_text(&r.angles).len())
                .max()
                .unwrap_or(0)
                .max(18);
            line(format!(
                "{:<6}{:<8}{:<width$}  {:<7}{}",
                "|S|", "p", "Measurement angles", "C_opt", "ties"
            ));
            for r in rows {
                line(format!(
                    "{:<6}{:<8.3}{:<width$}  {:<7}{}",
                    r.k,
                    r.p,
                    angles_text(&r.angles),
                    r.c_opt,
                    r.n_ties
                ));
                if radians {
                    line(format!("{:14}{}", "", radians_text(&r.angles, n)));
                }
            }
        }
        Outputs::Curve { rows } => {
            line(format!("{:<6}{:<14}{}", "k", "variable C", "C = |S|"));
            for r in rows {
                line(format!(
                    "{:<6}{:<14.4}{:.4}",
                    r.k, r.p_variable_c, r.p_fixed_c
                ));
            }
        }
    }
    out
}

pub fn render(record: &ResultRecord, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Table => Ok(render_human(record)),
        OutputFormat::Csv => render_csv(record),
        OutputFormat::Json => record.to_json().map(|mut s| {
            s.push('\n');
            s
        }),
    }
}

/// Process exit code for an error: 2 for size guards, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_guard() {
        2
    } else {
        1
    }
}

/// Parses, runs and writes; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::from_cli(cli).and_then(|config| {
        let record = execute(&config)?;
        let text = render(&record, config.format)?;
        write_output(&text, config.out.as_ref())
    }) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_output(text: &str, out: Option<&PathBuf>) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    match out {
        Some(path) => std::fs::write(path, text).map_err(io),
        None => {
            let stdout = std::io::stdout();
            let mut lock = std::io::BufWriter::new(stdout.lock());
            lock.write_all(text.as_bytes()).map_err(io)?;
            lock.flush().map_err(io)
        }
    }
}
