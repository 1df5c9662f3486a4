//! Shared scaffolding for the integration suites: an independent LP oracle
//! built on exhaustive vertex enumeration, random instance generators, and
//! helpers for driving the compiled binary.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use coalition_ledger::game::{Coalition, Game, PlayerId};
use coalition_ledger::lp::LinearProgram;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn heart_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/heart_disease.json")
}

pub fn load_heart() -> Game {
    Game::load(&heart_path()).expect("bundled fixture loads")
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coalition-ledger"))
}

/// Writes a python stub that answers the subprocess protocol with the sum of
/// per-player weights, and returns the command line that runs it.
pub fn write_additive_stub(dir: &Path, weights: &[(&str, f64)]) -> String {
    let pairs: Vec<String> = weights
        .iter()
        .map(|(name, w)| format!("{name:?}: {w}"))
        .collect();
    let script = format!(
        "import json, sys\nreq = json.load(sys.stdin)\nw = {{{}}}\nprint(json.dumps({{\"value\": sum(w[p] for p in req[\"players\"])}}))\n",
        pairs.join(", ")
    );
    let path = dir.join("stub.py");
    std::fs::write(&path, script).expect("stub script writes");
    format!("python3 {}", path.display())
}

// ---------------------------------------------------------------------------
// independent LP oracle

/// Solves a square system by Gaussian elimination with partial pivoting.
/// `None` means the system is (numerically) singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> bool {
    lp.ineq
        .iter()
        .all(|(row, b)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() <= b + tol)
        && lp
            .eq
            .iter()
            .all(|(row, b)| (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).abs() <= tol)
}

fn combinations(pool: usize, take: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(
        start: usize,
        pool: usize,
        take: usize,
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if chosen.len() == take {
            visit(chosen);
            return;
        }
        for i in start..pool {
            chosen.push(i);
            rec(i + 1, pool, take, chosen, visit);
            chosen.pop();
        }
    }
    rec(0, pool, take, &mut Vec::new(), visit);
}

/// Exhaustive basic-solution oracle. Every vertex of the feasible region is
/// the unique solution of `num_vars` linearly independent tight rows: all
/// equalities, topped up with a choice of inequalities. Returns the best
/// objective over feasible vertices, or `None` when no vertex is feasible
/// (for instances whose feasible set is a polytope, that means infeasible).
pub fn enumerate_optimum(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars;
    if lp.eq.len() > n {
        return None;
    }
    let take = n - lp.eq.len();
    let mut best: Option<f64> = None;
    combinations(lp.ineq.len(), take, &mut |chosen| {
        let mut a: Vec<Vec<f64>> = lp.eq.iter().map(|(row, _)| row.clone()).collect();
        let mut b: Vec<f64> = lp.eq.iter().map(|&(_, rhs)| rhs).collect();
        for &i in chosen {
            a.push(lp.ineq[i].0.clone());
            b.push(lp.ineq[i].1);
        }
        if let Some(x) = solve_square(a, b) {
            if feasible(lp, &x, 1e-7) {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(match best {
                    Some(cur) => cur.min(obj),
                    None => obj,
                });
            }
        }
    });
    best
}

// ---------------------------------------------------------------------------
// random LP instances

/// Feasible and bounded by construction: a box around an interior point plus
/// random extra rows satisfied there, sometimes one equality through it.
pub fn random_bounded_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=6usize);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut ineq = Vec::new();
    for i in 0..n {
        let mut hi = vec![0.0; n];
        hi[i] = 1.0;
        ineq.push((hi, x0[i] + rng.gen_range(0.5..2.0)));
        let mut lo = vec![0.0; n];
        lo[i] = -1.0;
        ineq.push((lo, -(x0[i] - rng.gen_range(0.5..2.0))));
    }
    let spare = 12usize.saturating_sub(ineq.len());
    for _ in 0..rng.gen_range(0..=spare.min(3)) {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let at_x0: f64 = row.iter().zip(&x0).map(|(a, v)| a * v).sum();
        ineq.push((row, at_x0 + rng.gen_range(0.1..1.5)));
    }
    let mut eq = Vec::new();
    if n >= 2 && rng.gen_bool(0.3) {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let at_x0: f64 = row.iter().zip(&x0).map(|(a, v)| a * v).sum();
        eq.push((row, at_x0));
    }
    let objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    LinearProgram {
        num_vars: n,
        objective,
        ineq,
        eq,
    }
}

/// Infeasible by construction: a bounded instance plus a contradictory pair
/// of halfspaces (a.x <= beta and a.x >= beta + gap).
pub fn random_infeasible_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let mut lp = loop {
        let candidate = random_bounded_lp(rng);
        if candidate.ineq.len() <= 10 {
            break candidate;
        }
    };
    let n = lp.num_vars;
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let beta = rng.gen_range(-1.0..1.0);
    let gap = rng.gen_range(0.5..2.0);
    lp.ineq.push((a.clone(), beta));
    lp.ineq
        .push((a.iter().map(|v| -v).collect(), -(beta + gap)));
    lp
}

/// Unbounded by construction: every row is orthogonal to a ray `d` with
/// `c.d < 0`, and the origin is feasible, so the objective falls forever
/// along `d`. The certificate (d) is returned for self-validation.
pub fn random_unbounded_lp(rng: &mut ChaCha8Rng) -> (LinearProgram, Vec<f64>) {
    let n = rng.gen_range(2..=6usize);
    let d: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let dd: f64 = d.iter().map(|v| v * v).sum();
    let mut ineq = Vec::new();
    for _ in 0..rng.gen_range(2..=10usize) {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ad: f64 = raw.iter().zip(&d).map(|(a, v)| a * v).sum();
        let row: Vec<f64> = raw.iter().zip(&d).map(|(a, v)| a - ad / dd * v).collect();
        ineq.push((row, rng.gen_range(0.1..1.0)));
    }
    // objective strictly decreasing along d
    let mut objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let cd: f64 = objective.iter().zip(&d).map(|(c, v)| c * v).sum();
    let shift = (cd + 0.5) / dd;
    for (c, v) in objective.iter_mut().zip(&d) {
        *c -= shift * v;
    }
    (
        LinearProgram {
            num_vars: n,
            objective,
            ineq,
            eq: Vec::new(),
        },
        d,
    )
}

// ---------------------------------------------------------------------------
// random games

pub fn roster(n: usize) -> Vec<String> {
    coalition_ledger::game::default_player_names(n)
}

/// A complete game over `n` players from an arbitrary value function.
pub fn game_from_fn(n: usize, value: impl Fn(Coalition) -> f64) -> Game {
    let grand = Coalition::grand(n);
    let mut values = BTreeMap::new();
    for mask in 1..=grand.mask() {
        let s = Coalition::from_mask(mask);
        values.insert(s, value(s));
        if mask == u64::MAX {
            break;
        }
    }
    Game::new(roster(n), values, None).expect("generated game is valid")
}

pub fn random_complete_game(n: usize, rng: &mut ChaCha8Rng) -> Game {
    let values: BTreeMap<Coalition, f64> = {
        let grand = Coalition::grand(n);
        (1..=grand.mask())
            .map(|mask| (Coalition::from_mask(mask), rng.gen_range(0.0..1.0)))
            .collect()
    };
    Game::new(roster(n), values, None).expect("random game is valid")
}

/// Rebuilds `game` so that player `i` never changes any coalition's value.
pub fn plant_null_player(game: &Game, i: PlayerId) -> Game {
    let base = game.clone();
    game_from_fn(game.n(), move |s| {
        base.value_of(s.without(i)).unwrap_or(0.0)
    })
}

/// Rebuilds `game` so players `i` and `j` are interchangeable.
pub fn plant_symmetric_pair(game: &Game, i: PlayerId, j: PlayerId) -> Game {
    let base = game.clone();
    game_from_fn(game.n(), move |s| {
        // canonical representative: the value stored for the variant with i
        let canonical = if s.contains(j) && !s.contains(i) {
            s.without(j).with(i)
        } else {
            s
        };
        base.value_of(canonical).unwrap_or(0.0)
    })
}

pub fn additive_game(weights: &[f64]) -> Game {
    let w = weights.to_vec();
    game_from_fn(w.len(), move |s| s.members().map(|p| w[p.0]).sum())
}

pub fn unanimity_game(n: usize, carrier: Coalition) -> Game {
    game_from_fn(n, move |s| if carrier.is_subset_of(s) { 1.0 } else { 0.0 })
}

/// Value-wise sum of two complete games over the same roster.
pub fn sum_game(a: &Game, b: &Game) -> Game {
    let (a, b) = (a.clone(), b.clone());
    game_from_fn(a.n(), move |s| {
        a.value_of(s).unwrap() + b.value_of(s).unwrap()
    })
}
