//! Payoff allocation methods.
//!
//! All methods split the grand value among the players, so every vector
//! returned here sums to v(grand) up to solver tolerance. The least core is
//! the headline method: it minimizes the worst coalition deficit
//! v(S) - sum of member payoffs over the coalitions that were actually
//! evaluated. The others are baselines for comparison: exact Shapley needs a
//! complete table, leave-one-out only needs the grand coalition and its
//! n facets, proportional only needs player weights.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::game::{Coalition, Game, PlayerId, MAX_PLAYERS};
use crate::lp::{solve_lp, LinearProgram, LpError, LpSolution, LpStatus};

/// Exact Shapley walks all 2^n coalitions; past this it is not a computation
/// we are willing to run.
pub const SHAPLEY_MAX_PLAYERS: usize = 24;

/// A constraint binds when its deficit is within this distance of the worst.
pub const BINDING_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    LeastCore,
    Shapley,
    LeaveOneOut,
    Proportional,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::LeastCore,
        Method::Shapley,
        Method::LeaveOneOut,
        Method::Proportional,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::LeastCore => "least_core",
            Method::Shapley => "shapley",
            Method::LeaveOneOut => "leave_one_out",
            Method::Proportional => "proportional",
        }
    }

    pub fn parse(text: &str) -> Option<Method> {
        match text {
            "least_core" => Some(Method::LeastCore),
            "shapley" => Some(Method::Shapley),
            "leave_one_out" | "loo" => Some(Method::LeaveOneOut),
            "proportional" => Some(Method::Proportional),
            _ => None,
        }
    }
}

/// A payoff vector, indexed like the roster.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    pub method: Method,
    pub phi: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("no value for singleton of player index {}", (.0).0)]
    MissingSingleton(PlayerId),
    #[error("constraint fragment may not contain '{0}'")]
    InvalidFragment(String),
    #[error("value table is missing {total} coalitions, first: {first:?}")]
    IncompleteTable { total: u128, first: Vec<String> },
    #[error("{n} players is beyond the exact Shapley cap of {max}")]
    TooManyPlayers { n: usize, max: usize },
    #[error("the game carries no player weights")]
    MissingWeights,
    #[error("player weights sum to zero")]
    DegenerateWeights,
    #[error("allocations do not describe the same game: {0}")]
    MismatchedGames(String),
    #[error("least-core program unexpectedly came back {0:?}; the constraint fragment should make it feasible and bounded")]
    UnexpectedLpOutcome(LpStatus),
    #[error("no constraint within {BINDING_TOL} of the worst deficit")]
    NoBindingConstraint,
    #[error("allocation arithmetic overflowed computing {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Values near f64::MAX are legal table entries, so sums and differences can
/// leave the finite range even when every input is finite.
fn ensure_finite(what: &'static str, xs: &[f64]) -> Result<(), AllocError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(AllocError::NonFinite(what))
    }
}

/// Variables are (phi_0 .. phi_{n-1}, e) with e minimized. One equality
/// pins sum(phi) to v(grand); every entry of `constrained` becomes
/// -sum(phi_i, i in S) - e <= -v(S), in ascending bitmask order.
///
/// `constrained` must hold every singleton (without them the program is
/// unbounded below) and must not contain the empty or grand coalition.
pub fn build_least_core_lp(
    constrained: &BTreeMap<Coalition, f64>,
    n: usize,
    v_grand: f64,
) -> Result<LinearProgram, AllocError> {
    assert!(
        (1..=MAX_PLAYERS).contains(&n),
        "player count {n} out of range"
    );
    let grand = Coalition::grand(n);
    if constrained.contains_key(&Coalition::EMPTY) {
        return Err(AllocError::InvalidFragment("the empty coalition".into()));
    }
    if constrained.contains_key(&grand) {
        return Err(AllocError::InvalidFragment("the grand coalition".into()));
    }
    for i in 0..n {
        if !constrained.contains_key(&Coalition::singleton(PlayerId(i))) {
            return Err(AllocError::MissingSingleton(PlayerId(i)));
        }
    }
    let vars = n + 1;
    let mut objective = vec![0.0; vars];
    objective[n] = 1.0;
    let mut ineq = Vec::with_capacity(constrained.len());
    for (&s, &v) in constrained {
        let mut row = vec![0.0; vars];
        for p in s.members() {
            row[p.0] = -1.0;
        }
        row[n] = -1.0;
        ineq.push((row, -v));
    }
    let mut efficiency = vec![1.0; vars];
    efficiency[n] = 0.0;
    Ok(LinearProgram {
        num_vars: vars,
        objective,
        ineq,
        eq: vec![(efficiency, v_grand)],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeastCoreResult {
    pub allocation: Allocation,
    /// Worst deficit at the optimum. Negative means every evaluated
    /// coalition is paid strictly more than it earns alone.
    pub e_star: f64,
    /// Deficit v(S) - sum of member payoffs, per constrained coalition.
    pub deficits: BTreeMap<Coalition, f64>,
    /// Constraints within [`BINDING_TOL`] of `e_star`, ascending bitmask.
    pub binding: Vec<Coalition>,
}

pub fn solve_least_core(
    constrained: &BTreeMap<Coalition, f64>,
    n: usize,
    v_grand: f64,
) -> Result<LeastCoreResult, AllocError> {
    let program = build_least_core_lp(constrained, n, v_grand)?;
    let point = match solve_lp(&program)? {
        LpSolution::Optimal(p) => p,
        other => return Err(AllocError::UnexpectedLpOutcome(other.status())),
    };
    let phi = point.x[..n].to_vec();
    let e_star = point.x[n];
    let mut deficits = BTreeMap::new();
    let mut binding = Vec::new();
    for (&s, &v) in constrained {
        let paid: f64 = s.members().map(|p| phi[p.0]).sum();
        let deficit = v - paid;
        if !deficit.is_finite() {
            return Err(AllocError::NonFinite("a coalition deficit"));
        }
        if (deficit - e_star).abs() <= BINDING_TOL {
            binding.push(s);
        }
        deficits.insert(s, deficit);
    }
    if binding.is_empty() {
        return Err(AllocError::NoBindingConstraint);
    }
    Ok(LeastCoreResult {
        allocation: Allocation {
            method: Method::LeastCore,
            phi,
        },
        e_star,
        deficits,
        binding,
    })
}

fn incomplete(game: &Game) -> AllocError {
    let (first, total) = game.missing_coalitions(8);
    AllocError::IncompleteTable {
        total,
        first: first.iter().map(|&s| game.coalition_key(s)).collect(),
    }
}

/// Exact Shapley value over a complete table: the average marginal
/// contribution of each player across all join orders, computed as one pass
/// over all coalitions with the combinatorial weight 1 / (n * C(n-1, |S|)).
pub fn shapley_exact(game: &Game) -> Result<Allocation, AllocError> {
    let n = game.n();
    if n > SHAPLEY_MAX_PLAYERS {
        return Err(AllocError::TooManyPlayers {
            n,
            max: SHAPLEY_MAX_PLAYERS,
        });
    }
    if !game.validate_complete() {
        return Err(incomplete(game));
    }
    let size = 1usize << n;
    let mut table = vec![0.0f64; size];
    for (&s, &v) in game.values() {
        table[s.mask() as usize] = v;
    }
    // weight[s] = 1 / (n * C(n-1, s)); C(23, 11) is still exact in f64
    let mut weight = vec![0.0f64; n];
    let mut binom = 1.0f64;
    for s in 0..n {
        weight[s] = 1.0 / (n as f64 * binom);
        binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
    }
    let mut phi = vec![0.0f64; n];
    for mask in 0..size {
        let s = (mask as u64).count_ones() as usize;
        if s >= n {
            continue;
        }
        let w = weight[s];
        let base = table[mask];
        for (i, phi_i) in phi.iter_mut().enumerate() {
            let bit = 1usize << i;
            if mask & bit == 0 {
                *phi_i += w * (table[mask | bit] - base);
            }
        }
    }
    ensure_finite("shapley payoffs", &phi)?;
    Ok(Allocation {
        method: Method::Shapley,
        phi,
    })
}

/// Leave-one-out: each player is scored by how much the grand value drops
/// without them, floored at zero, then the scores are normalized to split
/// v(grand). All-zero scores fall back to an equal split.
pub fn leave_one_out(game: &Game) -> Result<Allocation, AllocError> {
    let n = game.n();
    let grand = game.grand();
    let v_grand = match game.grand_value() {
        Some(v) => v,
        None => return Err(incomplete(game)),
    };
    let mut marginals = Vec::with_capacity(n);
    for i in 0..n {
        let facet = grand.without(PlayerId(i));
        match game.value_of(facet) {
            Some(v) => marginals.push((v_grand - v).max(0.0)),
            None => return Err(incomplete(game)),
        }
    }
    let total: f64 = marginals.iter().sum();
    let phi = if total == 0.0 {
        vec![v_grand / n as f64; n]
    } else {
        marginals.iter().map(|m| v_grand * m / total).collect()
    };
    ensure_finite("leave-one-out payoffs", &phi)?;
    Ok(Allocation {
        method: Method::LeaveOneOut,
        phi,
    })
}

/// Split v(grand) in proportion to the stored player weights.
pub fn proportional(game: &Game) -> Result<Allocation, AllocError> {
    let weights = game.weights().ok_or(AllocError::MissingWeights)?;
    let v_grand = match game.grand_value() {
        Some(v) => v,
        None => return Err(incomplete(game)),
    };
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(AllocError::DegenerateWeights);
    }
    let phi: Vec<f64> = weights.iter().map(|w| v_grand * w / total).collect();
    ensure_finite("proportional payoffs", &phi)?;
    Ok(Allocation {
        method: Method::Proportional,
        phi,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseStats {
    pub a: Method,
    pub b: Method,
    pub cosine: f64,
    pub max_abs_diff: f64,
}

/// Allocations side by side with pairwise agreement statistics. `e_star` and
/// `evaluated_count` travel along when the producing run knows them.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationReport {
    pub allocations: Vec<Allocation>,
    pub pairwise: Vec<PairwiseStats>,
    pub e_star: Option<f64>,
    pub evaluated_count: Option<usize>,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 && nb == 0.0 {
        1.0
    } else if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Agreement between two payoff vectors of equal length:
/// (cosine similarity, max absolute componentwise difference).
pub fn agreement(a: &[f64], b: &[f64]) -> (f64, f64) {
    debug_assert_eq!(a.len(), b.len());
    let max_abs = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    (cosine(a, b), max_abs)
}

/// Rows come back ordered by method (least core first), each pair once.
/// All inputs must have the same player count and the same total payout.
pub fn compare(allocations: &[Allocation]) -> Result<AllocationReport, AllocError> {
    if allocations.is_empty() {
        return Err(AllocError::MismatchedGames("no allocations given".into()));
    }
    let n = allocations[0].phi.len();
    let reference: f64 = allocations[0].phi.iter().sum();
    for a in allocations {
        if a.phi.len() != n {
            return Err(AllocError::MismatchedGames(format!(
                "{} covers {} players, {} covers {}",
                allocations[0].method.tag(),
                n,
                a.method.tag(),
                a.phi.len()
            )));
        }
        let total: f64 = a.phi.iter().sum();
        if (total - reference).abs() > 1e-6 * reference.abs().max(1.0) {
            return Err(AllocError::MismatchedGames(format!(
                "{} pays out {total}, {} pays out {reference}",
                a.method.tag(),
                allocations[0].method.tag()
            )));
        }
    }
    let mut sorted = allocations.to_vec();
    sorted.sort_by_key(|a| a.method);
    let mut pairwise = Vec::new();
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            let (cos, max_abs_diff) = agreement(&sorted[i].phi, &sorted[j].phi);
            pairwise.push(PairwiseStats {
                a: sorted[i].method,
                b: sorted[j].method,
                cosine: cos,
                max_abs_diff,
            });
        }
    }
    Ok(AllocationReport {
        allocations: sorted,
        pairwise,
        e_star: None,
        evaluated_count: None,
    })
}
