//! Dense two-phase simplex for the allocation programs.
//!
//! Programs here are minimization over free variables with inequality rows
//! `a.x <= b` and equality rows `e.x = f`. The least-core program has few
//! variables (players plus one) but can carry one row per evaluated
//! coalition, so a tableau over the rows themselves would be enormous. We
//! instead pivot on the dual: in standard form it has one equation per
//! primal *variable* and one column per primal row, which keeps the tableau
//! at (vars + 1) x rows no matter how many coalitions were evaluated. The
//! primal point is read back from the simplex multipliers and then verified
//! against the original program (feasibility, dual feasibility, zero gap);
//! if verification fails the solver reports a numerical breakdown instead of
//! returning a wrong answer.
//!
//! Pivoting uses Bland's smallest-index rule throughout, which rules out
//! cycling. Everything is deterministic: identical input, including row
//! order, produces identical output bytes.

use thiserror::Error;

/// min `objective . x` subject to `ineq` rows `a.x <= b` and `eq` rows
/// `e.x = f`; variables are free (signs are expressed through rows).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub ineq: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalPoint {
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// One multiplier per inequality row, non-negative.
    pub ineq_duals: Vec<f64>,
    /// One multiplier per equality row, free sign.
    pub eq_duals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpSolution {
    Optimal(OptimalPoint),
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn status(&self) -> LpStatus {
        match self {
            LpSolution::Optimal(_) => LpStatus::Optimal,
            LpSolution::Infeasible => LpStatus::Infeasible,
            LpSolution::Unbounded => LpStatus::Unbounded,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

const EPS_REDUCED_COST: f64 = 1e-9;
const EPS_PIVOT: f64 = 1e-9;
const EPS_DRIVE_OUT: f64 = 1e-7;
const PHASE1_FEAS_TOL: f64 = 1e-7;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_SIGN_TOL: f64 = 1e-9;
const STATIONARITY_TOL: f64 = 1e-7;
const GAP_TOL: f64 = 1e-7;
const MAX_PIVOTS: usize = 20_000;

/// min q.z subject to M z = r, z >= 0; M is k rows by `cols` columns.
struct StandardForm {
    k: usize,
    cols: usize,
    m: Vec<f64>,
    r: Vec<f64>,
    q: Vec<f64>,
}

enum CoreOutcome {
    Optimal {
        z: Vec<f64>,
        /// Multipliers of the k equations, i.e. the dual of the standard
        /// form, already corrected for internal row sign flips.
        row_multipliers: Vec<f64>,
    },
    Infeasible,
    Unbounded,
}

struct Tableau {
    k: usize,
    cols: usize,
    width: usize, // cols + k artificials + 1 rhs
    rows: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    signs: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Tableau {
        let width = sf.cols + sf.k + 1;
        let mut rows = vec![0.0; sf.k * width];
        let mut signs = vec![1.0; sf.k];
        for i in 0..sf.k {
            let s = if sf.r[i] < 0.0 { -1.0 } else { 1.0 };
            signs[i] = s;
            let row = &mut rows[i * width..(i + 1) * width];
            for j in 0..sf.cols {
                row[j] = s * sf.m[i * sf.cols + j];
            }
            row[sf.cols + i] = 1.0;
            row[width - 1] = s * sf.r[i];
        }
        Tableau {
            k: sf.k,
            cols: sf.cols,
            width,
            rows,
            obj: vec![0.0; width],
            basis: (sf.cols..sf.cols + sf.k).collect(),
            signs,
            pivots: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    /// Rebuilds the objective row as reduced costs of `costs` against the
    /// current basis; the last slot holds minus the current objective value.
    fn load_costs(&mut self, costs: &[f64]) {
        for j in 0..self.width {
            let base = if j < costs.len() { costs[j] } else { 0.0 };
            let mut acc = base;
            for i in 0..self.k {
                let cb = if self.basis[i] < costs.len() {
                    costs[self.basis[i]]
                } else {
                    0.0
                };
                if cb != 0.0 {
                    acc -= cb * self.at(i, j);
                }
            }
            self.obj[j] = acc;
        }
    }

    fn pivot(&mut self, p_row: usize, p_col: usize) {
        let d = self.at(p_row, p_col);
        let start = p_row * self.width;
        for j in 0..self.width {
            self.rows[start + j] /= d;
        }
        for i in 0..self.k {
            if i == p_row {
                continue;
            }
            let factor = self.at(i, p_col);
            if factor != 0.0 {
                let other = i * self.width;
                for j in 0..self.width {
                    self.rows[other + j] -= factor * self.rows[start + j];
                }
            }
        }
        let factor = self.obj[p_col];
        if factor != 0.0 {
            for j in 0..self.width {
                self.obj[j] -= factor * self.rows[start + j];
            }
        }
        self.basis[p_row] = p_col;
        self.pivots += 1;
    }

    /// Bland's rule until optimality or an unbounded column.
    /// `allow_artificial` opens the artificial columns to re-entry, which is
    /// only meaningful during phase 1.
    fn run(&mut self, allow_artificial: bool) -> Result<SimplexEnd, LpError> {
        let enterable = if allow_artificial {
            self.width - 1
        } else {
            self.cols
        };
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::NumericalBreakdown(format!(
                    "pivot budget {MAX_PIVOTS} exhausted"
                )));
            }
            let mut entering = None;
            for j in 0..enterable {
                if self.obj[j] < -EPS_REDUCED_COST {
                    entering = Some(j);
                    break;
                }
            }
            let j = match entering {
                Some(j) => j,
                None => return Ok(SimplexEnd::Optimal),
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.k {
                let t = self.at(i, j);
                if t > EPS_PIVOT {
                    let ratio = self.rhs(i) / t;
                    let better = match leave {
                        None => true,
                        Some((best_i, best_ratio)) => {
                            ratio < best_ratio
                                || (ratio == best_ratio && self.basis[i] < self.basis[best_i])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((i, _)) => self.pivot(i, j),
                None => return Ok(SimplexEnd::Unbounded),
            }
        }
    }
}

enum SimplexEnd {
    Optimal,
    Unbounded,
}

fn solve_standard(sf: &StandardForm) -> Result<CoreOutcome, LpError> {
    debug_assert!(sf.m.len() == sf.k * sf.cols);
    let mut tab = Tableau::new(sf);

    // Phase 1: drive the artificial total to zero.
    let mut phase1_costs = vec![0.0; sf.cols + sf.k];
    for j in sf.cols..sf.cols + sf.k {
        phase1_costs[j] = 1.0;
    }
    tab.load_costs(&phase1_costs);
    match tab.run(true)? {
        SimplexEnd::Optimal => {}
        SimplexEnd::Unbounded => {
            // The phase-1 objective is bounded below by zero.
            return Err(LpError::NumericalBreakdown(
                "phase 1 reported an unbounded direction".into(),
            ));
        }
    }
    let r_scale = sf.r.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let phase1_value = -tab.obj[tab.width - 1];
    if phase1_value > PHASE1_FEAS_TOL * r_scale {
        return Ok(CoreOutcome::Infeasible);
    }

    // Swap basic artificials for real columns where the row allows it.
    // Rows that offer no pivot are dependent; their artificial stays basic
    // at zero, never re-enters elsewhere, and never gets picked as a pivot
    // row, so it is inert from here on.
    for i in 0..tab.k {
        if tab.basis[i] < tab.cols {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..tab.cols {
            let a = tab.at(i, j).abs();
            if a > EPS_DRIVE_OUT && best.is_none_or(|(_, b)| a > b) {
                best = Some((j, a));
            }
        }
        if let Some((j, _)) = best {
            tab.pivot(i, j);
        }
    }

    // Phase 2 on the real costs; artificials are barred from entering.
    let mut phase2_costs = vec![0.0; sf.cols + sf.k];
    phase2_costs[..sf.cols].copy_from_slice(&sf.q);
    tab.load_costs(&phase2_costs);
    match tab.run(false)? {
        SimplexEnd::Optimal => {}
        SimplexEnd::Unbounded => return Ok(CoreOutcome::Unbounded),
    }

    let mut z = vec![0.0; sf.cols];
    for i in 0..tab.k {
        if tab.basis[i] < sf.cols {
            z[tab.basis[i]] = tab.rhs(i);
        }
    }
    // With zero-cost artificials, the reduced cost sitting under artificial
    // column i is minus the multiplier of (sign-flipped) row i.
    let row_multipliers = (0..tab.k)
        .map(|i| tab.signs[i] * -tab.obj[sf.cols + i])
        .collect();
    Ok(CoreOutcome::Optimal { z, row_multipliers })
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    if lp.num_vars == 0 {
        return Err(LpError::Malformed("program has no variables".into()));
    }
    if lp.objective.len() != lp.num_vars {
        return Err(LpError::Malformed(format!(
            "objective length {} does not match {} variables",
            lp.objective.len(),
            lp.num_vars
        )));
    }
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(LpError::Malformed(
            "objective has a non-finite entry".into(),
        ));
    }
    for (what, rows) in [("inequality", &lp.ineq), ("equality", &lp.eq)] {
        for (idx, (a, b)) in rows.iter().enumerate() {
            if a.len() != lp.num_vars {
                return Err(LpError::Malformed(format!(
                    "{what} row {idx} has {} coefficients, expected {}",
                    a.len(),
                    lp.num_vars
                )));
            }
            if a.iter().any(|v| !v.is_finite()) || !b.is_finite() {
                return Err(LpError::Malformed(format!(
                    "{what} row {idx} has a non-finite entry"
                )));
            }
        }
    }
    Ok(())
}

/// Column layout of the dualized program: one column per inequality row,
/// then a (+, -) pair per equality row.
fn dual_form(lp: &LinearProgram) -> StandardForm {
    let k = lp.num_vars;
    let m1 = lp.ineq.len();
    let cols = m1 + 2 * lp.eq.len();
    let mut m = vec![0.0; k * cols];
    let mut q = vec![0.0; cols];
    for (j, (a, b)) in lp.ineq.iter().enumerate() {
        q[j] = *b;
        for i in 0..k {
            m[i * cols + j] = a[i];
        }
    }
    for (t, (e, f)) in lp.eq.iter().enumerate() {
        let plus = m1 + 2 * t;
        q[plus] = *f;
        q[plus + 1] = -*f;
        for i in 0..k {
            m[i * cols + plus] = e[i];
            m[i * cols + plus + 1] = -e[i];
        }
    }
    let r = lp.objective.iter().map(|c| -c).collect();
    StandardForm { k, cols, m, r, q }
}

fn certify(lp: &LinearProgram, point: &OptimalPoint) -> Result<(), LpError> {
    let breakdown = |msg: String| Err(LpError::NumericalBreakdown(msg));
    // NaN slips through every threshold comparison below (both polarities
    // compare false), so non-finite components must be rejected up front.
    let finite = point.x.iter().all(|v| v.is_finite())
        && point.objective_value.is_finite()
        && point.ineq_duals.iter().all(|v| v.is_finite())
        && point.eq_duals.iter().all(|v| v.is_finite());
    if !finite {
        return breakdown("solution contains a non-finite component".into());
    }
    let dot = |a: &[f64], x: &[f64]| -> f64 { a.iter().zip(x).map(|(ai, xi)| ai * xi).sum() };
    for (idx, (a, b)) in lp.ineq.iter().enumerate() {
        let scale = a.iter().fold(b.abs().max(1.0), |m, v| m.max(v.abs()));
        let viol = dot(a, &point.x) - b;
        if viol > PRIMAL_TOL * scale {
            return breakdown(format!(
                "inequality row {idx} violated by {viol:.3e} after scaling"
            ));
        }
    }
    for (idx, (e, f)) in lp.eq.iter().enumerate() {
        let scale = e.iter().fold(f.abs().max(1.0), |m, v| m.max(v.abs()));
        let viol = (dot(e, &point.x) - f).abs();
        if viol > PRIMAL_TOL * scale {
            return breakdown(format!(
                "equality row {idx} violated by {viol:.3e} after scaling"
            ));
        }
    }
    for (idx, &mu) in point.ineq_duals.iter().enumerate() {
        if mu < -DUAL_SIGN_TOL {
            return breakdown(format!(
                "negative multiplier {mu:.3e} on inequality row {idx}"
            ));
        }
    }
    for i in 0..lp.num_vars {
        let mut acc = lp.objective[i];
        let mut scale = 1.0f64.max(lp.objective[i].abs());
        for (j, (a, _)) in lp.ineq.iter().enumerate() {
            let term = a[i] * point.ineq_duals[j];
            acc += term;
            scale = scale.max(term.abs());
        }
        for (t, (e, _)) in lp.eq.iter().enumerate() {
            let term = e[i] * point.eq_duals[t];
            acc += term;
            scale = scale.max(term.abs());
        }
        if acc.abs() > STATIONARITY_TOL * scale {
            return breakdown(format!("stationarity residual {acc:.3e} on variable {i}"));
        }
    }
    let dual_value = -(lp
        .ineq
        .iter()
        .zip(&point.ineq_duals)
        .map(|((_, b), mu)| b * mu)
        .sum::<f64>()
        + lp.eq
            .iter()
            .zip(&point.eq_duals)
            .map(|((_, f), nu)| f * nu)
            .sum::<f64>());
    let gap = (point.objective_value - dual_value).abs();
    if gap > GAP_TOL * point.objective_value.abs().max(1.0) {
        return breakdown(format!("duality gap {gap:.3e}"));
    }
    Ok(())
}

/// Deterministic exact solve. `Infeasible` and `Unbounded` are answers, not
/// errors; an error means the arithmetic itself could not be trusted.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    validate(lp)?;
    let sf = dual_form(lp);
    match solve_standard(&sf)? {
        CoreOutcome::Optimal { z, row_multipliers } => {
            let x = row_multipliers;
            let objective_value = lp.objective.iter().zip(&x).map(|(c, xi)| c * xi).sum();
            let m1 = lp.ineq.len();
            let ineq_duals = z[..m1].to_vec();
            let eq_duals = (0..lp.eq.len())
                .map(|t| z[m1 + 2 * t] - z[m1 + 2 * t + 1])
                .collect();
            let point = OptimalPoint {
                x,
                objective_value,
                ineq_duals,
                eq_duals,
            };
            certify(lp, &point)?;
            Ok(LpSolution::Optimal(point))
        }
        // An unbounded dual certifies there is no primal point at all.
        CoreOutcome::Unbounded => Ok(LpSolution::Infeasible),
        CoreOutcome::Infeasible => {
            // The dual has no point, so the primal is unbounded or empty.
            // Decide with a homogeneous probe: minimize h over the dual cone
            // restricted to a unit simplex; a negative optimum is a
            // certificate that some non-negative combination of primal rows
            // is contradictory.
            let mut probe = StandardForm {
                k: sf.k + 1,
                cols: sf.cols,
                m: Vec::with_capacity((sf.k + 1) * sf.cols),
                r: vec![0.0; sf.k + 1],
                q: sf.q.clone(),
            };
            probe.m.extend_from_slice(&sf.m);
            probe.m.extend(std::iter::repeat_n(1.0, sf.cols));
            probe.r[sf.k] = 1.0;
            match solve_standard(&probe)? {
                CoreOutcome::Optimal { z, .. } => {
                    let value: f64 = probe.q.iter().zip(&z).map(|(qi, zi)| qi * zi).sum();
                    let scale = probe.q.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                    if value < -1e-9 * scale {
                        Ok(LpSolution::Infeasible)
                    } else {
                        Ok(LpSolution::Unbounded)
                    }
                }
                CoreOutcome::Infeasible => Ok(LpSolution::Unbounded),
                CoreOutcome::Unbounded => Err(LpError::NumericalBreakdown(
                    "feasibility probe reported an unbounded direction".into(),
                )),
            }
        }
    }
}
