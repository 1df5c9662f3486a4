//! Command-line front door: argument surface, run orchestration, error
//! classification.
//!
//! Exit-code contract: 0 success, 2 input validation failure, 3 oracle
//! failure, 4 solver failure. Every failure prints a single JSON object
//! `{"error":{"kind":...,"message":...}}` on stderr. Failures detected while
//! setting a source up (unreadable files, bad specs, mismatched caches) count
//! as validation; failures while producing values count as oracle failures.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::allocator::{
    agreement, leave_one_out, proportional, shapley_exact, solve_least_core, AllocError,
    Allocation, LeastCoreResult, Method,
};
use crate::game::{default_player_names, Coalition, Game, PlayerId};
use crate::oracle::{
    CommandOracle, OracleError, SyntheticOracle, SyntheticSpec, TableOracle, ValueOracle,
};
use crate::pruner::{prune_enumerate_with_threads, PruneConfig, PruneError};
use crate::report::{parse_report, round6, ParsedReport, SolveReport};

/// Work that touches every coalition (--full, exact Shapley against a live
/// oracle) is capped here: 2^16 rows is what the dense LP is sized for.
pub const FULL_TABLE_MAX_PLAYERS: usize = 16;

/// Worker threads for oracle evaluation during enumeration. Default 1.
pub const THREADS_ENV: &str = "COALITION_LEDGER_THREADS";

#[derive(Parser)]
#[command(
    name = "coalition-ledger",
    version,
    about = "Payoff allocation for coalition games: pruned evaluation, least core, and baselines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate a game and compute the requested allocations
    Solve(SolveArgs),
    /// Run the pruned enumeration only and emit the evaluation log
    Prune(PruneArgs),
    /// Compare two or more saved reports (or games solved on the spot)
    Compare(CompareArgs),
    /// Inspect a value source without solving anything
    Validate(ValidateArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true)))]
pub struct SourceArgs {
    /// Game file with roster and measured values (complete or pruned)
    #[arg(long, value_name = "PATH", group = "source")]
    pub game: Option<PathBuf>,

    /// Shell command spawned once per coalition to produce a value
    #[arg(
        long,
        value_name = "CMD",
        group = "source",
        requires = "players",
        requires = "cache"
    )]
    pub oracle_cmd: Option<String>,

    /// Cache file the command oracle reads and fills; doubles as a game file
    #[arg(long, value_name = "PATH", requires = "oracle_cmd")]
    pub cache: Option<PathBuf>,

    /// Roster for --oracle-cmd, comma separated
    #[arg(
        long,
        value_name = "NAMES",
        value_delimiter = ',',
        requires = "oracle_cmd"
    )]
    pub players: Option<Vec<String>>,

    /// Synthetic family: additive:W,... | unanimity:N:NAMES | coverage:N:SEED[:ALPHA]
    #[arg(long, value_name = "SPEC", group = "source")]
    pub synthetic: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// t1 = t2 = 0: full enumeration on monotone games
    Exact,
    /// t1 = t2 = 0.1
    Balanced,
    /// t1 = t2 = 0.15
    Coarse,
}

impl Preset {
    pub fn thresholds(self) -> (f64, f64) {
        match self {
            Preset::Exact => (0.0, 0.0),
            Preset::Balanced => (0.1, 0.1),
            Preset::Coarse => (0.15, 0.15),
        }
    }
}

#[derive(Args)]
pub struct ThresholdArgs {
    /// Prune when a coalition's marginal gain over its parent is below this
    #[arg(long, value_name = "F")]
    pub t1: Option<f64>,

    /// Prune when a coalition is within this of the grand value
    #[arg(long, value_name = "F")]
    pub t2: Option<f64>,

    /// Named threshold pair; explicit --t1/--t2 override its components
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

impl ThresholdArgs {
    pub fn resolve(&self) -> (f64, f64) {
        let (mut t1, mut t2) = self.preset.unwrap_or(Preset::Exact).thresholds();
        if let Some(v) = self.t1 {
            t1 = v;
        }
        if let Some(v) = self.t2 {
            t2 = v;
        }
        (t1, t2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[command(flatten)]
    pub thresholds: ThresholdArgs,

    /// Comma-separated subset of: least_core, shapley, leave_one_out (loo), proportional
    #[arg(long, value_delimiter = ',', default_value = "least_core")]
    pub methods: Vec<String>,

    /// Constrain on every coalition: skips pruning, requires (or materializes)
    /// a complete table
    #[arg(long)]
    pub full: bool,

    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,

    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PruneArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[command(flatten)]
    pub thresholds: ThresholdArgs,

    /// Write the JSON-lines log here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Report files from `solve --format json`, or game files solved in place
    #[arg(value_name = "PATH", num_args = 2.., required = true)]
    pub inputs: Vec<PathBuf>,

    #[command(flatten)]
    pub thresholds: ThresholdArgs,

    /// Methods used when an input is a game file and must be solved first
    #[arg(long, value_delimiter = ',', default_value = "least_core")]
    pub methods: Vec<String>,

    /// Solve game-file inputs against their full table instead of pruning
    #[arg(long)]
    pub full: bool,

    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Oracle(String),
    Solver(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Oracle(_) => "oracle",
            CliError::Solver(_) => "solver",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Oracle(_) => 3,
            CliError::Solver(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Oracle(m) | CliError::Solver(m) => m,
        }
    }

    pub fn render_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "message": self.message() }
        })
        .to_string()
    }
}

fn oracle_failure(e: OracleError) -> CliError {
    CliError::Oracle(e.to_string())
}

fn prune_failure(e: PruneError) -> CliError {
    let evaluated = e.partial.evaluated_count();
    CliError::Oracle(format!(
        "{e} ({evaluated} coalitions evaluated before the failure)"
    ))
}

/// LP-level trouble is a solver failure; everything else the allocator can
/// object to is a problem with the inputs.
fn alloc_failure(e: AllocError) -> CliError {
    match e {
        AllocError::Lp(_)
        | AllocError::UnexpectedLpOutcome(_)
        | AllocError::NoBindingConstraint
        | AllocError::NonFinite(_) => CliError::Solver(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Prune(args) => cmd_prune(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

enum SourceKind {
    Table(TableOracle),
    Command(CommandOracle),
    Synthetic(SyntheticOracle),
}

struct Source {
    names: Vec<String>,
    kind: SourceKind,
}

impl Source {
    fn n(&self) -> usize {
        self.names.len()
    }

    fn oracle(&self) -> &dyn ValueOracle {
        match &self.kind {
            SourceKind::Table(o) => o,
            SourceKind::Command(o) => o,
            SourceKind::Synthetic(o) => o,
        }
    }

    fn table(&self) -> Option<&Game> {
        match &self.kind {
            SourceKind::Table(o) => Some(o.game()),
            _ => None,
        }
    }

    fn weights(&self) -> Option<Vec<f64>> {
        match &self.kind {
            SourceKind::Table(o) => o.game().weights().map(<[f64]>::to_vec),
            SourceKind::Synthetic(o) => match o.spec() {
                SyntheticSpec::Additive { weights } => Some(weights.clone()),
                _ => None,
            },
            SourceKind::Command(_) => None,
        }
    }

    fn describe(&self) -> &'static str {
        match &self.kind {
            SourceKind::Table(_) => "game",
            SourceKind::Command(_) => "command",
            SourceKind::Synthetic(_) => "synthetic",
        }
    }
}

fn from_game(game: Game) -> Source {
    Source {
        names: game.names().to_vec(),
        kind: SourceKind::Table(TableOracle::new(game)),
    }
}

fn resolve_source(args: &SourceArgs) -> Result<Source, CliError> {
    if let Some(path) = &args.game {
        let game = Game::load(path).map_err(|e| {
            CliError::Validation(format!("cannot load game file '{}': {e}", path.display()))
        })?;
        return Ok(from_game(game));
    }
    if let Some(command) = &args.oracle_cmd {
        let names: Vec<String> = args
            .players
            .as_ref()
            .expect("clap enforces --players with --oracle-cmd")
            .iter()
            .map(|p| p.trim().to_string())
            .collect();
        // roster sanity (distinct, non-empty, comma-free) before the oracle
        // bakes the names into cache keys
        Game::new(names.clone(), BTreeMap::new(), None)
            .map_err(|e| CliError::Validation(format!("bad --players roster: {e}")))?;
        let cache = args.cache.as_ref().expect("clap enforces --cache");
        let oracle = CommandOracle::new(command, names.clone(), cache)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        return Ok(Source {
            names,
            kind: SourceKind::Command(oracle),
        });
    }
    let spec_text = args.synthetic.as_ref().expect("clap enforces one source");
    let spec = SyntheticSpec::parse(spec_text).map_err(|e| CliError::Validation(e.to_string()))?;
    let names = default_player_names(spec.n());
    let oracle = SyntheticOracle::new(spec).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(Source {
        names,
        kind: SourceKind::Synthetic(oracle),
    })
}

fn parse_thread_count(text: Option<&str>) -> Result<usize, CliError> {
    match text {
        None => Ok(1),
        Some(raw) => match raw.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(CliError::Validation(format!(
                "{THREADS_ENV} must be a positive integer, got '{raw}'"
            ))),
        },
    }
}

fn worker_threads() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(text) => parse_thread_count(Some(&text)),
        Err(std::env::VarError::NotPresent) => Ok(1),
        Err(e) => Err(CliError::Validation(format!("{THREADS_ENV}: {e}"))),
    }
}

pub fn parse_method_list(items: &[String]) -> Result<Vec<Method>, CliError> {
    let mut methods = Vec::new();
    for item in items {
        let tag = item.trim();
        if tag.is_empty() {
            continue;
        }
        match Method::parse(tag) {
            Some(m) => {
                if !methods.contains(&m) {
                    methods.push(m);
                }
            }
            None => {
                return Err(CliError::Validation(format!(
                    "unknown method '{tag}'; pick from least_core, shapley, leave_one_out (loo), proportional"
                )))
            }
        }
    }
    if methods.is_empty() {
        return Err(CliError::Validation("no methods requested".into()));
    }
    methods.sort();
    Ok(methods)
}

/// Table sources must name a grand value and every singleton before any
/// solving starts; anything else missing surfaces later as an oracle miss.
fn check_table_essentials(game: &Game) -> Result<(), CliError> {
    if game.grand_value().is_none() {
        return Err(CliError::Validation(
            "game table has no value for the grand coalition".into(),
        ));
    }
    for (i, name) in game.names().iter().enumerate() {
        if game.value_of(Coalition::singleton(PlayerId(i))).is_none() {
            return Err(CliError::Validation(format!(
                "game table has no value for singleton '{name}'"
            )));
        }
    }
    Ok(())
}

fn grand_value(source: &Source) -> Result<f64, CliError> {
    match source.table() {
        Some(game) => game.grand_value().ok_or_else(|| {
            CliError::Validation("game table has no value for the grand coalition".into())
        }),
        None => source
            .oracle()
            .query(Coalition::grand(source.n()))
            .map_err(oracle_failure),
    }
}

/// All proper non-empty coalition values, either straight from a complete
/// table or by querying a live oracle for each of the 2^n - 2 coalitions.
fn full_table(source: &Source, _v_grand: f64) -> Result<BTreeMap<Coalition, f64>, CliError> {
    let n = source.n();
    if n > FULL_TABLE_MAX_PLAYERS {
        return Err(CliError::Validation(format!(
            "--full touches 2^{n} coalitions; the cap is {FULL_TABLE_MAX_PLAYERS} players"
        )));
    }
    match source.table() {
        Some(game) => {
            if !game.validate_complete() {
                let (first, total) = game.missing_coalitions(8);
                let keys: Vec<String> = first.iter().map(|&s| game.coalition_key(s)).collect();
                return Err(CliError::Validation(format!(
                    "--full needs a complete table, but {total} coalitions have no value (first: {})",
                    keys.join("; ")
                )));
            }
            Ok(game.proper_values())
        }
        None => {
            let grand = Coalition::grand(n);
            let mut values = BTreeMap::new();
            for mask in 1..grand.mask() {
                let s = Coalition::from_mask(mask);
                values.insert(s, source.oracle().query(s).map_err(oracle_failure)?);
            }
            Ok(values)
        }
    }
}

fn pruned_table(
    source: &Source,
    t1: f64,
    t2: f64,
    v_grand: f64,
    threads: usize,
) -> Result<(BTreeMap<Coalition, f64>, usize), CliError> {
    let config =
        PruneConfig::new(t1, t2, v_grand).map_err(|e| CliError::Validation(e.to_string()))?;
    let outcome = prune_enumerate_with_threads(source.oracle(), source.n(), &config, threads)
        .map_err(prune_failure)?;
    let mut constrained = outcome.values;
    constrained.remove(&Coalition::grand(source.n()));
    Ok((constrained, outcome.log.evaluated_count()))
}

/// A complete game for exact Shapley. Table sources are passed through
/// (shapley_exact reports what is missing); live sources are materialized,
/// reusing already-evaluated values.
fn game_for_shapley(
    source: &Source,
    constrained: &BTreeMap<Coalition, f64>,
    v_grand: f64,
) -> Result<Game, CliError> {
    if let Some(game) = source.table() {
        return Ok(game.clone());
    }
    let n = source.n();
    if n > FULL_TABLE_MAX_PLAYERS {
        return Err(CliError::Validation(format!(
            "exact shapley against a live oracle touches 2^{n} coalitions; the cap is {FULL_TABLE_MAX_PLAYERS} players"
        )));
    }
    let grand = Coalition::grand(n);
    let mut values = constrained.clone();
    for mask in 1..grand.mask() {
        let s = Coalition::from_mask(mask);
        if let std::collections::btree_map::Entry::Vacant(slot) = values.entry(s) {
            slot.insert(source.oracle().query(s).map_err(oracle_failure)?);
        }
    }
    values.insert(grand, v_grand);
    Game::new(source.names.clone(), values, None).map_err(|e| CliError::Validation(e.to_string()))
}

/// The grand coalition plus its n leave-one-out facets.
fn game_for_loo(
    source: &Source,
    constrained: &BTreeMap<Coalition, f64>,
    v_grand: f64,
) -> Result<Game, CliError> {
    if let Some(game) = source.table() {
        return Ok(game.clone());
    }
    let n = source.n();
    let grand = Coalition::grand(n);
    let mut values = BTreeMap::new();
    for i in 0..n {
        let facet = grand.without(PlayerId(i));
        if facet.is_empty() {
            continue;
        }
        let v = match constrained.get(&facet) {
            Some(&v) => v,
            None => source.oracle().query(facet).map_err(oracle_failure)?,
        };
        values.insert(facet, v);
    }
    values.insert(grand, v_grand);
    Game::new(source.names.clone(), values, None).map_err(|e| CliError::Validation(e.to_string()))
}

fn run_solve(
    source: &Source,
    methods: &[Method],
    t1: f64,
    t2: f64,
    full: bool,
    threads: usize,
) -> Result<SolveReport, CliError> {
    let n = source.n();
    if let Some(game) = source.table() {
        check_table_essentials(game)?;
    }
    let v_grand = grand_value(source)?;
    let (constrained, evaluated_count) = if full {
        let table = full_table(source, v_grand)?;
        let count = (1usize << n) - 2;
        (table, count)
    } else {
        pruned_table(source, t1, t2, v_grand, threads)?
    };

    let mut least_core: Option<LeastCoreResult> = None;
    let mut others: Vec<Allocation> = Vec::new();
    for &method in methods {
        match method {
            Method::LeastCore => {
                least_core =
                    Some(solve_least_core(&constrained, n, v_grand).map_err(alloc_failure)?);
            }
            Method::Shapley => {
                let game = game_for_shapley(source, &constrained, v_grand)?;
                others.push(shapley_exact(&game).map_err(alloc_failure)?);
            }
            Method::LeaveOneOut => {
                let game = game_for_loo(source, &constrained, v_grand)?;
                others.push(leave_one_out(&game).map_err(alloc_failure)?);
            }
            Method::Proportional => {
                let weights = source.weights().ok_or_else(|| {
                    CliError::Validation(
                        "proportional allocation needs player weights, which this source does not carry"
                            .into(),
                    )
                })?;
                let grand = Coalition::grand(n);
                let game = Game::new(
                    source.names.clone(),
                    BTreeMap::from([(grand, v_grand)]),
                    Some(weights),
                )
                .map_err(|e| CliError::Validation(e.to_string()))?;
                others.push(proportional(&game).map_err(alloc_failure)?);
            }
        }
    }
    SolveReport::assemble(
        source.names.clone(),
        least_core.as_ref(),
        &others,
        Some(evaluated_count),
    )
    .map_err(alloc_failure)
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let threads = worker_threads()?;
    let methods = parse_method_list(&args.methods)?;
    let (t1, t2) = args.thresholds.resolve();
    let source = resolve_source(&args.source)?;
    let report = run_solve(&source, &methods, t1, t2, args.full, threads)?;
    let text = match args.format {
        OutputFormat::Json => report.render_json(),
        OutputFormat::Table => report.render_table(),
    };
    write_output(args.out.as_deref(), &text)
}

fn cmd_prune(args: &PruneArgs) -> Result<(), CliError> {
    let threads = worker_threads()?;
    let (t1, t2) = args.thresholds.resolve();
    let source = resolve_source(&args.source)?;
    if let Some(game) = source.table() {
        check_table_essentials(game)?;
    }
    let v_grand = grand_value(&source)?;
    let config =
        PruneConfig::new(t1, t2, v_grand).map_err(|e| CliError::Validation(e.to_string()))?;
    let outcome = prune_enumerate_with_threads(source.oracle(), source.n(), &config, threads)
        .map_err(prune_failure)?;
    let text = outcome.log.render_json_lines(&source.names, &config);
    write_output(args.out.as_deref(), &text)
}

struct CompareInput {
    label: String,
    report: ParsedReport,
}

fn load_compare_input(
    path: &Path,
    methods: &[Method],
    t1: f64,
    t2: f64,
    full: bool,
    threads: usize,
) -> Result<CompareInput, CliError> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read '{label}': {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("'{label}' is not JSON: {e}")))?;
    if value.get("methods").is_some() {
        let report =
            parse_report(&value).map_err(|e| CliError::Validation(format!("'{label}': {e}")))?;
        return Ok(CompareInput { label, report });
    }
    let game = Game::from_json_str(&text).map_err(|e| {
        CliError::Validation(format!(
            "'{label}' is neither a report nor a game file: {e}"
        ))
    })?;
    let solved = run_solve(&from_game(game), methods, t1, t2, full, threads)?;
    // round-trip through the rendered form so in-place solves compare at the
    // same 6-decimal precision as loaded reports
    let report = parse_report(&solved.to_json())
        .map_err(|e| CliError::Validation(format!("'{label}': {e}")))?;
    Ok(CompareInput { label, report })
}

fn render_parsed_report(players: &[String], report: &ParsedReport) -> Value {
    let mut methods = Map::new();
    for (method, phi) in &report.methods {
        let mut entry = Map::new();
        let mut phi_map = Map::new();
        for (name, &v) in players.iter().zip(phi) {
            phi_map.insert(name.clone(), Value::from(round6(v)));
        }
        entry.insert("phi".into(), Value::Object(phi_map));
        if *method == Method::LeastCore {
            if let Some(e_star) = report.e_star {
                entry.insert("e_star".into(), Value::from(round6(e_star)));
            }
        }
        methods.insert(method.tag().into(), Value::Object(entry));
    }
    let mut out = Map::new();
    out.insert("methods".into(), Value::Object(methods));
    if let Some(count) = report.evaluated_count {
        out.insert("evaluated_count".into(), Value::from(count));
    }
    Value::Object(out)
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let threads = worker_threads()?;
    let methods = parse_method_list(&args.methods)?;
    let (t1, t2) = args.thresholds.resolve();
    let mut inputs = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        inputs.push(load_compare_input(
            path, &methods, t1, t2, args.full, threads,
        )?);
    }
    let players = inputs[0].report.players.clone();
    for input in &inputs[1..] {
        if input.report.players != players {
            return Err(CliError::Validation(format!(
                "'{}' and '{}' cover different rosters",
                inputs[0].label, input.label
            )));
        }
    }
    let n = players.len();
    // reports carry 6-decimal payoffs, so totals agree only up to n rounding steps
    let total_tol = 2e-6 * n as f64;

    let mut pairs = Vec::new();
    for i in 0..inputs.len() {
        for j in i + 1..inputs.len() {
            let (a, b) = (&inputs[i], &inputs[j]);
            let mut stats = Map::new();
            for (method, phi_a) in &a.report.methods {
                let Some(phi_b) = b.report.methods.get(method) else {
                    continue;
                };
                let sum_a: f64 = phi_a.iter().sum();
                let sum_b: f64 = phi_b.iter().sum();
                if (sum_a - sum_b).abs() > total_tol * sum_a.abs().max(1.0) {
                    return Err(CliError::Validation(format!(
                        "'{}' and '{}' do not allocate the same total under {} ({sum_a} vs {sum_b})",
                        a.label,
                        b.label,
                        method.tag()
                    )));
                }
                let (cos, max_abs_diff) = agreement(phi_a, phi_b);
                let mut entry = Map::new();
                entry.insert("cosine".into(), Value::from(round6(cos)));
                entry.insert("max_abs_diff".into(), Value::from(round6(max_abs_diff)));
                stats.insert(method.tag().into(), Value::Object(entry));
            }
            if stats.is_empty() {
                return Err(CliError::Validation(format!(
                    "'{}' and '{}' share no method to compare",
                    a.label, b.label
                )));
            }
            let mut pair = Map::new();
            pair.insert("a".into(), Value::from(a.label.clone()));
            pair.insert("b".into(), Value::from(b.label.clone()));
            pair.insert("methods".into(), Value::Object(stats));
            if let (Some(ea), Some(eb)) = (a.report.e_star, b.report.e_star) {
                pair.insert("delta_e_star".into(), Value::from(round6(ea - eb)));
            }
            pairs.push(Value::Object(pair));
        }
    }

    let mut root = Map::new();
    root.insert(
        "players".into(),
        Value::Array(players.iter().map(|p| Value::from(p.clone())).collect()),
    );
    let mut inputs_obj = Map::new();
    for input in &inputs {
        inputs_obj.insert(
            input.label.clone(),
            render_parsed_report(&players, &input.report),
        );
    }
    root.insert("inputs".into(), Value::Object(inputs_obj));
    root.insert("pairs".into(), Value::Array(pairs));
    let value = Value::Object(root);

    let text = match args.format {
        OutputFormat::Json => {
            let mut t = serde_json::to_string_pretty(&value).expect("comparison serializes");
            t.push('\n');
            t
        }
        OutputFormat::Table => render_compare_table(&players, &inputs, &value),
    };
    write_output(args.out.as_deref(), &text)
}

fn render_compare_table(players: &[String], inputs: &[CompareInput], value: &Value) -> String {
    let label_width = inputs
        .iter()
        .map(|i| i.label.len())
        .max()
        .unwrap_or(5)
        .max(5)
        + 2;
    let name_width = players.iter().map(|p| p.len()).max().unwrap_or(3).max(9) + 2;
    let mut out = String::new();
    out.push_str(&format!("{:label_width$}{:14}", "input", "method"));
    for p in players {
        out.push_str(&format!("{p:>name_width$}"));
    }
    out.push_str(&format!("{:>10}", "e_star"));
    out.push('\n');
    for input in inputs {
        for (method, phi) in &input.report.methods {
            out.push_str(&format!("{:label_width$}{:14}", input.label, method.tag()));
            for &v in phi {
                out.push_str(&format!("{:>name_width$}", format!("{v:.6}")));
            }
            if *method == Method::LeastCore {
                if let Some(e) = input.report.e_star {
                    out.push_str(&format!("{:>10}", format!("{e:.4}")));
                }
            }
            out.push('\n');
        }
    }
    out.push_str("\npairs:\n");
    for pair in value["pairs"].as_array().into_iter().flatten() {
        let a = pair["a"].as_str().unwrap_or("?");
        let b = pair["b"].as_str().unwrap_or("?");
        for (tag, stats) in pair["methods"].as_object().into_iter().flatten() {
            out.push_str(&format!(
                "  {a} vs {b} [{tag}]: cosine {}, max_abs_diff {}",
                stats["cosine"], stats["max_abs_diff"]
            ));
            if let Some(delta) = pair.get("delta_e_star") {
                out.push_str(&format!(", delta_e_star {delta}"));
            }
            out.push('\n');
        }
    }
    out
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let source = resolve_source(&args.source)?;
    let mut root = Map::new();
    root.insert("source".into(), Value::from(source.describe()));
    root.insert(
        "players".into(),
        Value::Array(
            source
                .names
                .iter()
                .map(|p| Value::from(p.clone()))
                .collect(),
        ),
    );
    root.insert("n".into(), Value::from(source.n()));
    match &source.kind {
        SourceKind::Table(o) => {
            let game = o.game();
            root.insert("entries".into(), Value::from(game.values().len()));
            root.insert("complete".into(), Value::from(game.validate_complete()));
            let (_, missing) = game.missing_coalitions(1);
            root.insert("missing".into(), Value::from(missing as u64));
            root.insert(
                "grand_value".into(),
                game.grand_value().map_or(Value::Null, Value::from),
            );
            let absent: Vec<Value> = game
                .names()
                .iter()
                .enumerate()
                .filter(|(i, _)| game.value_of(Coalition::singleton(PlayerId(*i))).is_none())
                .map(|(_, name)| Value::from(name.clone()))
                .collect();
            root.insert("missing_singletons".into(), Value::Array(absent));
            root.insert("weights".into(), Value::from(game.weights().is_some()));
        }
        SourceKind::Command(o) => {
            root.insert(
                "cache_entries".into(),
                Value::from(o.cached_game().values().len()),
            );
        }
        SourceKind::Synthetic(o) => {
            let kind = match o.spec() {
                SyntheticSpec::Additive { .. } => "additive",
                SyntheticSpec::Unanimity { .. } => "unanimity",
                SyntheticSpec::Coverage(_) => "coverage",
            };
            root.insert("kind".into(), Value::from(kind));
        }
    }
    root.insert("ok".into(), Value::from(true));
    let value = Value::Object(root);
    let text = match args.format {
        OutputFormat::Json => {
            let mut t = serde_json::to_string_pretty(&value).expect("summary serializes");
            t.push('\n');
            t
        }
        OutputFormat::Table => {
            let mut t = String::new();
            for (key, val) in value.as_object().unwrap() {
                t.push_str(&format!("{key}: {val}\n"));
            }
            t
        }
    };
    write_output(args.out.as_deref(), &text)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Validation(format!("cannot write '{}': {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Validation(format!("cannot write to stdout: {e}")))
        }
    }
}
