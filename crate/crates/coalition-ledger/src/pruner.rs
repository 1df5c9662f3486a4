//! Threshold-pruned coalition enumeration.
//!
//! Coalitions are arranged in a tree where the children of S extend it with
//! one player whose index is larger than every current member: `{a}` owns
//! `{a,b}` and `{a,c}`, `{b}` owns `{b,c}`, and so on. Every non-empty
//! coalition appears exactly once, so a depth-first walk from the root
//! enumerates all of them, and cutting a branch removes exactly the supersets
//! that extend it with larger-indexed players.
//!
//! Two rules cut branches, both strict so that zero thresholds mean full
//! enumeration on monotone games:
//!
//! * rule 1: the child's marginal gain over its parent is below `t1`
//!   (negative marginals count as below);
//! * rule 2: the child is already within `t2` of the grand value, so its
//!   supersets have nothing left to gain.
//!
//! Rule 1 is checked first; precedence only affects the logged reason, never
//! which coalitions get evaluated. The grand coalition itself is neither
//! queried nor logged: its value arrives in the config. Singletons are
//! children of the root and are always evaluated.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::game::{render_coalition, Coalition, PlayerId, MAX_PLAYERS};
use crate::oracle::{OracleError, ValueOracle};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneConfig {
    /// Minimum marginal gain a child must show to stay interesting.
    pub t1: f64,
    /// Minimum remaining gap to the grand value required to keep expanding.
    pub t2: f64,
    /// Value of the grand coalition, measured by the caller beforehand.
    pub v_grand: f64,
}

#[derive(Debug, Error)]
pub enum PruneConfigError {
    #[error("threshold {name} = {value} must be finite and non-negative")]
    BadThreshold { name: &'static str, value: f64 },
    #[error("v_grand = {0} must be finite")]
    BadGrand(f64),
}

impl PruneConfig {
    pub fn new(t1: f64, t2: f64, v_grand: f64) -> Result<Self, PruneConfigError> {
        for (name, value) in [("t1", t1), ("t2", t2)] {
            if !value.is_finite() || value < 0.0 {
                return Err(PruneConfigError::BadThreshold { name, value });
            }
        }
        if !v_grand.is_finite() {
            return Err(PruneConfigError::BadGrand(v_grand));
        }
        Ok(PruneConfig { t1, t2, v_grand })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    Expanded,
    PrunedRule1,
    PrunedRule2,
    Leaf,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEntry {
    pub coalition: Coalition,
    pub value: f64,
    pub parent: Coalition,
    pub decision: Decision,
}

/// Every evaluation of the run, in the order a sequential depth-first walk
/// would perform them. One entry per coalition, so the length equals the
/// number of oracle trials the walk consumed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvaluationLog {
    pub entries: Vec<LogEntry>,
}

#[derive(Serialize)]
struct LogLine<'a> {
    coalition: String,
    value: f64,
    parent: String,
    decision: &'a Decision,
}

#[derive(Serialize)]
struct SummaryLine {
    evaluated_count: usize,
    t1: f64,
    t2: f64,
    v_grand: f64,
    expanded: usize,
    pruned_rule1: usize,
    pruned_rule2: usize,
    leaves: usize,
}

impl EvaluationLog {
    pub fn evaluated_count(&self) -> usize {
        self.entries.len()
    }

    pub fn count(&self, decision: Decision) -> usize {
        self.entries
            .iter()
            .filter(|e| e.decision == decision)
            .count()
    }

    /// Coalitions evaluated, with their values. No grand coalition here.
    pub fn values(&self) -> BTreeMap<Coalition, f64> {
        self.entries
            .iter()
            .map(|e| (e.coalition, e.value))
            .collect()
    }

    /// One JSON object per evaluation, then a trailing summary object.
    pub fn render_json_lines(&self, names: &[String], config: &PruneConfig) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = LogLine {
                coalition: render_coalition(names, e.coalition),
                value: e.value,
                parent: render_coalition(names, e.parent),
                decision: &e.decision,
            };
            out.push_str(&serde_json::to_string(&line).expect("log line is serializable"));
            out.push('\n');
        }
        let summary = SummaryLine {
            evaluated_count: self.evaluated_count(),
            t1: config.t1,
            t2: config.t2,
            v_grand: config.v_grand,
            expanded: self.count(Decision::Expanded),
            pruned_rule1: self.count(Decision::PrunedRule1),
            pruned_rule2: self.count(Decision::PrunedRule2),
            leaves: self.count(Decision::Leaf),
        };
        out.push_str(
            &serde_json::to_string(&serde_json::json!({ "summary": summary }))
                .expect("summary is serializable"),
        );
        out.push('\n');
        out
    }
}

/// Evaluated values plus the grand coalition, ready to feed the allocator.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneOutcome {
    /// Values of every logged coalition, plus the grand coalition at
    /// `config.v_grand`.
    pub values: BTreeMap<Coalition, f64>,
    pub log: EvaluationLog,
}

/// Enumeration died mid-walk; whatever was evaluated before the failure is
/// kept for diagnostics.
#[derive(Debug, Error)]
#[error("{source}")]
pub struct PruneError {
    pub source: OracleError,
    pub partial: EvaluationLog,
}

fn decide(
    config: &PruneConfig,
    parent_value: f64,
    child: Coalition,
    child_value: f64,
    n: usize,
) -> Decision {
    if child_value - parent_value < config.t1 {
        Decision::PrunedRule1
    } else if config.v_grand - child_value < config.t2 {
        Decision::PrunedRule2
    } else if child.max_member() == Some(PlayerId(n - 1)) {
        Decision::Leaf
    } else {
        Decision::Expanded
    }
}

fn run_sequential<O: ValueOracle + ?Sized>(
    oracle: &O,
    n: usize,
    config: &PruneConfig,
) -> Result<Vec<LogEntry>, PruneError> {
    let grand = Coalition::grand(n);
    let mut entries: Vec<LogEntry> = Vec::new();
    // (coalition, its value, next player index to try as a child)
    let mut stack: Vec<(Coalition, f64, usize)> = vec![(Coalition::EMPTY, 0.0, 0)];
    while let Some(top) = stack.last_mut() {
        if top.2 >= n {
            stack.pop();
            continue;
        }
        let (s, v_s) = (top.0, top.1);
        let j = top.2;
        top.2 += 1;
        let child = s.with(PlayerId(j));
        if child == grand {
            continue;
        }
        let v_c = match oracle.query(child) {
            Ok(v) => v,
            Err(source) => {
                return Err(PruneError {
                    source,
                    partial: EvaluationLog { entries },
                })
            }
        };
        let decision = decide(config, v_s, child, v_c, n);
        entries.push(LogEntry {
            coalition: child,
            value: v_c,
            parent: s,
            decision,
        });
        if decision == Decision::Expanded {
            stack.push((child, v_c, j + 1));
        }
    }
    Ok(entries)
}

struct ParallelState<'a, O: ?Sized> {
    oracle: &'a O,
    config: &'a PruneConfig,
    n: usize,
    grand: Coalition,
    entries: Mutex<Vec<LogEntry>>,
    failure: Mutex<Option<OracleError>>,
}

fn visit_parallel<'s, O: ValueOracle + ?Sized>(
    scope: &rayon::Scope<'s>,
    state: &'s ParallelState<'s, O>,
    s: Coalition,
    v_s: f64,
    first_child: usize,
) {
    for j in first_child..state.n {
        if state.failure.lock().unwrap().is_some() {
            return;
        }
        let child = s.with(PlayerId(j));
        if child == state.grand {
            continue;
        }
        let v_c = match state.oracle.query(child) {
            Ok(v) => v,
            Err(e) => {
                let mut failure = state.failure.lock().unwrap();
                if failure.is_none() {
                    *failure = Some(e);
                }
                return;
            }
        };
        let decision = decide(state.config, v_s, child, v_c, state.n);
        state.entries.lock().unwrap().push(LogEntry {
            coalition: child,
            value: v_c,
            parent: s,
            decision,
        });
        if decision == Decision::Expanded {
            scope.spawn(move |scope| visit_parallel(scope, state, child, v_c, j + 1));
        }
    }
}

fn run_parallel<O: ValueOracle + ?Sized>(
    oracle: &O,
    n: usize,
    config: &PruneConfig,
    threads: usize,
) -> Result<Vec<LogEntry>, PruneError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool construction");
    let state = ParallelState {
        oracle,
        config,
        n,
        grand: Coalition::grand(n),
        entries: Mutex::new(Vec::new()),
        failure: Mutex::new(None),
    };
    pool.scope(|scope| visit_parallel(scope, &state, Coalition::EMPTY, 0.0, 0));
    // Branches finish in arbitrary order; depth-first preorder is exactly
    // lexicographic order on member lists, so sorting restores the log a
    // sequential walk would have produced.
    let mut entries = state.entries.into_inner().unwrap();
    entries.sort_by(|a, b| a.coalition.preorder_cmp(b.coalition));
    match state.failure.into_inner().unwrap() {
        Some(source) => Err(PruneError {
            source,
            partial: EvaluationLog { entries },
        }),
        None => Ok(entries),
    }
}

/// Sequential enumeration. The outcome's `values` carry every logged
/// coalition plus the grand coalition at `config.v_grand`.
pub fn prune_enumerate<O: ValueOracle + ?Sized>(
    oracle: &O,
    n: usize,
    config: &PruneConfig,
) -> Result<PruneOutcome, PruneError> {
    prune_enumerate_with_threads(oracle, n, config, 1)
}

/// Like [`prune_enumerate`], but with `threads > 1` sibling branches are
/// evaluated concurrently. The outcome is identical to the sequential walk;
/// only wall-clock time changes.
pub fn prune_enumerate_with_threads<O: ValueOracle + ?Sized>(
    oracle: &O,
    n: usize,
    config: &PruneConfig,
    threads: usize,
) -> Result<PruneOutcome, PruneError> {
    assert!(
        (1..=MAX_PLAYERS).contains(&n),
        "player count {n} out of range"
    );
    assert!(
        PruneConfig::new(config.t1, config.t2, config.v_grand).is_ok(),
        "invalid prune config {config:?}"
    );
    let entries = if threads <= 1 {
        run_sequential(oracle, n, config)?
    } else {
        run_parallel(oracle, n, config, threads)?
    };
    let mut values: BTreeMap<Coalition, f64> =
        entries.iter().map(|e| (e.coalition, e.value)).collect();
    values.insert(Coalition::grand(n), config.v_grand);
    Ok(PruneOutcome {
        values,
        log: EvaluationLog { entries },
    })
}
