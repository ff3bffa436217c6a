//! Dense two-phase tableau simplex.
//!
//! Pricing is Dantzig's rule; after a run of degenerate pivots it falls back
//! to Bland's rule until progress resumes, which rules out cycling. Pivot
//! choices depend only on the input, so solves are reproducible bit for bit.

use serde::{Deserialize, Serialize};

use crate::certify::RowSense;
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
/// Above this many rows, and with every variable bounded, rows are added
/// lazily (most violated first) instead of all at once.
const LAZY_ROWS: usize = 400;
const LAZY_BATCH: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl LpRow {
    fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.sense {
            RowSense::Le => lhs - self.rhs,
            RowSense::Ge => self.rhs - lhs,
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `min c'x` subject to rows and `lower <= x <= upper` (bounds may be infinite).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// `n` variables, zero objective, `x >= 0`.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) {
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::invalid("bound vectors do not match the variable count"));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("objective has non-finite coefficients"));
        }
        for r in &self.rows {
            if r.coeffs.len() != n || r.coeffs.iter().any(|c| !c.is_finite()) || !r.rhs.is_finite() {
                return Err(Error::invalid("LP row has wrong length or non-finite entries"));
            }
        }
        if self.lower.iter().any(|l| l.is_nan() || *l == f64::INFINITY)
            || self.upper.iter().any(|u| u.is_nan() || *u == f64::NEG_INFINITY)
        {
            return Err(Error::invalid("invalid variable bounds"));
        }
        Ok(())
    }

    fn bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|b| b.is_finite())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point: optimal point, or the phase-1 point when infeasible.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// For infeasible problems, the most violated rows at the phase-1 point
    /// as `(row, violation)`, worst first.
    pub violated_rows: Vec<(usize, f64)>,
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with_cap(lp, 100_000)
}

pub fn solve_lp_with_cap(lp: &LinearProgram, max_iterations: usize) -> Result<LpSolution> {
    lp.validate()?;
    if lp.lower.iter().zip(&lp.upper).any(|(l, u)| l > u) {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: lp.lower.clone(),
            objective: f64::NAN,
            iterations: 0,
            violated_rows: Vec::new(),
        });
    }
    if lp.rows.len() > LAZY_ROWS && lp.bounded() {
        return solve_lazy(lp, max_iterations);
    }
    let all: Vec<usize> = (0..lp.rows.len()).collect();
    let mut sol = solve_subset(lp, &all, max_iterations)?;
    if sol.status == LpStatus::Infeasible {
        sol.violated_rows = worst_rows(lp, &sol.x);
    }
    Ok(sol)
}

fn worst_rows(lp: &LinearProgram, x: &[f64]) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = lp
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.violation(x)))
        .filter(|(_, a)| *a > FEAS_TOL)
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(10);
    v
}

fn solve_lazy(lp: &LinearProgram, max_iterations: usize) -> Result<LpSolution> {
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; lp.rows.len()];
    let mut iterations = 0;
    loop {
        let mut sol = solve_subset(lp, &active, max_iterations.saturating_sub(iterations))?;
        iterations += sol.iterations;
        sol.iterations = iterations;
        if sol.status != LpStatus::Optimal {
            if sol.status == LpStatus::Infeasible {
                sol.violated_rows = worst_rows(lp, &sol.x);
            }
            return Ok(sol);
        }
        let mut violated: Vec<(usize, f64)> = lp
            .rows
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_active[*i])
            .map(|(i, r)| (i, r.violation(&sol.x)))
            .filter(|(_, a)| *a > FEAS_TOL * 0.1)
            .collect();
        if violated.is_empty() {
            return Ok(sol);
        }
        violated.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, _) in violated.into_iter().take(LAZY_BATCH) {
            in_active[i] = true;
            active.push(i);
        }
        active.sort_unstable();
    }
}

/// How an original variable is expressed in standard-form columns.
enum VarMap {
    /// `x = offset + sign * y_col`.
    Single { col: usize, offset: f64, sign: f64 },
    /// `x = y_pos - y_neg`.
    Free { pos: usize, neg: usize },
}

struct Standard {
    /// Rows of `A y (sense) b` before slack columns, with `b >= 0` not yet enforced.
    rows: Vec<(Vec<f64>, RowSense, f64)>,
    cost: Vec<f64>,
    maps: Vec<VarMap>,
    n_struct: usize,
}

fn standardize(lp: &LinearProgram, subset: &[usize]) -> Standard {
    let mut maps = Vec::with_capacity(lp.n_vars());
    let mut n_struct = 0;
    let mut bound_rows = Vec::new();
    for j in 0..lp.n_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo.is_finite() {
            maps.push(VarMap::Single { col: n_struct, offset: lo, sign: 1.0 });
            if hi.is_finite() {
                bound_rows.push((n_struct, hi - lo));
            }
            n_struct += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Single { col: n_struct, offset: hi, sign: -1.0 });
            n_struct += 1;
        } else {
            maps.push(VarMap::Free { pos: n_struct, neg: n_struct + 1 });
            n_struct += 2;
        }
    }
    let expand = |coeffs: &[f64]| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; n_struct];
        let mut shift = 0.0;
        for (a, m) in coeffs.iter().zip(&maps) {
            match *m {
                VarMap::Single { col, offset, sign } => {
                    out[col] += a * sign;
                    shift += a * offset;
                }
                VarMap::Free { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        (out, shift)
    };
    let mut rows = Vec::with_capacity(subset.len() + bound_rows.len());
    for &i in subset {
        let r = &lp.rows[i];
        let (coeffs, shift) = expand(&r.coeffs);
        rows.push((coeffs, r.sense, r.rhs - shift));
    }
    for (col, width) in bound_rows {
        let mut coeffs = vec![0.0; n_struct];
        coeffs[col] = 1.0;
        rows.push((coeffs, RowSense::Le, width));
    }
    let (cost, _) = expand(&lp.objective);
    Standard {
        rows,
        cost,
        maps,
        n_struct,
    }
}

fn recover(std: &Standard, y: &[f64]) -> Vec<f64> {
    std.maps
        .iter()
        .map(|m| match *m {
            VarMap::Single { col, offset, sign } => offset + sign * y[col],
            VarMap::Free { pos, neg } => y[pos] - y[neg],
        })
        .collect()
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m x (ncols + 1)`; the last entry of each row is the rhs.
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.ncols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.ncols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.ncols + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + c] = 1.0;
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * prow[j];
                }
                self.t[i * w + c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * prow[j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Runs the simplex on the current objective row; `allowed` filters
    /// entering columns. Returns false when unbounded.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::SolverStall {
                    iterations: self.iterations,
                    detail: format!(
                        "{} rows, {} columns, objective {:e}",
                        self.m, self.ncols, -self.obj[self.ncols]
                    ),
                });
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..self.ncols {
                if !allowed(j) {
                    continue;
                }
                let d = self.obj[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        let tol = 1e-12 * lr.abs().max(1.0);
                        // Ties go to the smallest basic index (Bland).
                        if ratio < lr - tol || (ratio <= lr + tol && self.basis[i] < self.basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Solves `B y_B = b` with partial pivoting; `None` if numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn solve_subset(lp: &LinearProgram, subset: &[usize], max_iterations: usize) -> Result<LpSolution> {
    let std = standardize(lp, subset);
    let m = std.rows.len();
    let ns = std.n_struct;
    // Column layout: structural | one slack/surplus per inequality | artificials.
    let mut slack_of = vec![None; m];
    let mut art_of = vec![None; m];
    let mut ncols = ns;
    let mut signs = Vec::with_capacity(m);
    for (i, (_, sense, rhs)) in std.rows.iter().enumerate() {
        let flip = *rhs < 0.0;
        let sense = match (sense, flip) {
            (RowSense::Le, false) | (RowSense::Ge, true) => RowSense::Le,
            (RowSense::Ge, false) | (RowSense::Le, true) => RowSense::Ge,
            (RowSense::Eq, _) => RowSense::Eq,
        };
        signs.push((if flip { -1.0 } else { 1.0 }, sense));
        if sense != RowSense::Eq {
            slack_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let first_art = ncols;
    for (i, (_, sense)) in signs.iter().enumerate() {
        if *sense != RowSense::Le {
            art_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let w = ncols + 1;
    let mut t = vec![0.0; m * w];
    let mut basis = vec![0; m];
    let mut full_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut full_rhs = Vec::with_capacity(m);
    for (i, (coeffs, _, rhs)) in std.rows.iter().enumerate() {
        let (s, sense) = signs[i];
        let mut row = vec![0.0; ncols];
        for j in 0..ns {
            row[j] = s * coeffs[j];
        }
        if let Some(c) = slack_of[i] {
            row[c] = if sense == RowSense::Le { 1.0 } else { -1.0 };
        }
        if let Some(c) = art_of[i] {
            row[c] = 1.0;
            basis[i] = c;
        } else {
            basis[i] = slack_of[i].expect("inequality row has a slack");
        }
        t[i * w..i * w + ncols].copy_from_slice(&row);
        t[i * w + ncols] = s * rhs;
        full_rows.push(row);
        full_rhs.push(s * rhs);
    }
    let mut tab = Tableau {
        m,
        ncols,
        t,
        obj: vec![0.0; w],
        basis,
        iterations: 0,
        max_iterations,
    };

    // Phase 1: minimize the sum of artificials.
    for i in 0..m {
        if art_of[i].is_some() {
            for j in 0..w {
                if j < first_art || j == ncols {
                    tab.obj[j] -= tab.t[i * w + j];
                }
            }
        }
    }
    tab.optimize(&|_| true)?;
    let phase1 = -tab.obj[ncols];
    // Bound rows carry the large variable caps; only constraint rows set the
    // scale against which residual infeasibility is judged.
    let scale = full_rhs[..subset.len()].iter().fold(1.0f64, |a, b| a.max(b.abs()));
    if phase1 > 0.1 * FEAS_TOL * scale {
        let y = basic_point(&tab, ns);
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: recover(&std, &y),
            objective: f64::NAN,
            iterations: tab.iterations,
            violated_rows: Vec::new(),
        });
    }
    // Drive zero-valued artificials out of the basis; rows where that is
    // impossible are redundant.
    let mut dropped = vec![false; m];
    for i in 0..m {
        if tab.basis[i] >= first_art {
            match (0..first_art).find(|&j| tab.at(i, j).abs() > PIVOT_TOL) {
                Some(j) => tab.pivot(i, j),
                None => dropped[i] = true,
            }
        }
    }

    // Phase 2.
    tab.obj = vec![0.0; w];
    for j in 0..ns {
        tab.obj[j] = std.cost[j];
    }
    for i in 0..m {
        let cb = if tab.basis[i] < ns { std.cost[tab.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..w {
                tab.obj[j] -= cb * tab.t[i * w + j];
            }
        }
    }
    let bounded = tab.optimize(&|j| j < first_art)?;
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: recover(&std, &basic_point(&tab, ns)),
            objective: f64::NEG_INFINITY,
            iterations: tab.iterations,
            violated_rows: Vec::new(),
        });
    }

    // Recompute the basic solution from the original data for accuracy.
    let keep: Vec<usize> = (0..m).filter(|i| !dropped[*i]).collect();
    let cols: Vec<usize> = keep.iter().map(|i| tab.basis[*i]).collect();
    let mut y = basic_point(&tab, ns);
    let bmat: Vec<Vec<f64>> = keep.iter().map(|&i| cols.iter().map(|&c| full_rows[i][c]).collect()).collect();
    let brhs: Vec<f64> = keep.iter().map(|&i| full_rhs[i]).collect();
    if let Some(sol) = solve_refined(&bmat, &brhs) {
        if sol.iter().all(|v| *v >= -1e-7) {
            let mut refined = vec![0.0; ns];
            for (c, v) in cols.iter().zip(sol) {
                if *c < ns {
                    refined[*c] = v.max(0.0);
                }
            }
            y = refined;
        }
    }
    let x = recover(&std, &y);
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: tab.iterations,
        violated_rows: Vec::new(),
    })
}

/// One round of iterative refinement on top of [`solve_dense`].
fn solve_refined(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let mut x = solve_dense(a.to_vec(), b.to_vec())?;
    let resid: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| bi - row.iter().zip(&x).map(|(r, v)| r * v).sum::<f64>())
        .collect();
    if let Some(dx) = solve_dense(a.to_vec(), resid) {
        for (v, d) in x.iter_mut().zip(dx) {
            *v += d;
        }
    }
    Some(x)
}

fn basic_point(tab: &Tableau, ns: usize) -> Vec<f64> {
    let mut y = vec![0.0; ns];
    for i in 0..tab.m {
        if tab.basis[i] < ns {
            y[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(rows: &[(RowSense, f64)], cost: f64) -> LinearProgram {
        let mut lp = LinearProgram::new(1);
        lp.lower[0] = f64::NEG_INFINITY;
        lp.objective[0] = cost;
        for (s, r) in rows {
            lp.add_row(vec![1.0], *s, *r);
        }
        lp
    }

    #[test]
    fn trivial_examples() {
        let s = solve_lp(&one_var(&[(RowSense::Ge, 1.0), (RowSense::Le, 2.0)], 0.0)).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((1.0..=2.0).contains(&s.x[0]));
        let s = solve_lp(&one_var(&[(RowSense::Ge, 1.0)], 1.0)).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x[0], 1.0);
        let s = solve_lp(&one_var(&[(RowSense::Ge, 2.0), (RowSense::Le, 1.0)], 0.0)).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(!s.violated_rows.is_empty());
        let s = solve_lp(&one_var(&[(RowSense::Le, 1.0)], 1.0)).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_lp() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add_row(vec![1.0, 0.0], RowSense::Le, 4.0);
        lp.add_row(vec![0.0, 2.0], RowSense::Le, 12.0);
        lp.add_row(vec![3.0, 2.0], RowSense::Le, 18.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!((s.objective + 36.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_bounds() {
        // min x - y, x + y = 1, x in [0.25, 2], y in [-inf, 0.5].
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, -1.0];
        lp.lower = vec![0.25, f64::NEG_INFINITY];
        lp.upper = vec![2.0, 0.5];
        lp.add_row(vec![1.0, 1.0], RowSense::Eq, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 0.5).abs() < 1e-12 && (s.x[1] - 0.5).abs() < 1e-12);
        let mut bad = lp.clone();
        bad.lower[0] = 3.0;
        assert_eq!(solve_lp(&bad).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, which cycles under naive Dantzig pricing.
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], RowSense::Le, 0.0);
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], RowSense::Le, 0.0);
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], RowSense::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn lazy_rows_match_full_solve() {
        // Many redundant cuts of the unit disc around a bounded box.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -2.0];
        lp.lower = vec![-5.0, -5.0];
        lp.upper = vec![5.0, 5.0];
        for k in 0..1000 {
            let th = k as f64 * std::f64::consts::TAU / 1000.0;
            lp.add_row(vec![th.cos(), th.sin()], RowSense::Le, 1.0);
        }
        let lazy = solve_lp(&lp).unwrap();
        assert_eq!(lazy.status, LpStatus::Optimal);
        assert!(lp.max_violation(&lazy.x) <= 1e-9);
        // Optimum of the polygon is within its circumradius of -sqrt(5).
        assert!(lazy.objective <= -5f64.sqrt() + 1e-3 && lazy.objective >= -5f64.sqrt() / (std::f64::consts::PI / 1000.0).cos() - 1e-9);
    }

    #[test]
    fn deterministic() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![1.0, 1.0, 1.0];
        lp.add_row(vec![1.0, 2.0, 0.5], RowSense::Ge, 1.0);
        lp.add_row(vec![0.3, 1.0, 2.0], RowSense::Ge, 1.0);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stall_reports_error() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.add_row(vec![1.0, 1.0], RowSense::Le, 1.0);
        lp.add_row(vec![1.0, 0.0], RowSense::Ge, 0.1);
        assert!(matches!(solve_lp_with_cap(&lp, 1), Err(Error::SolverStall { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_lp() -> impl Strategy<Value = LinearProgram> {
            (1usize..=5, 1usize..=8).prop_flat_map(|(n, m)| {
                let row = (prop::collection::vec(-4i8..=4, n), 0u8..3, -8i8..=8);
                (prop::collection::vec(-4i8..=4, n), prop::collection::vec(row, m)).prop_map(move |(c, rows)| {
                    let mut lp = LinearProgram::new(n);
                    lp.objective = c.iter().map(|v| *v as f64).collect();
                    lp.lower = vec![-3.0; n];
                    lp.upper = vec![3.0; n];
                    for (a, s, r) in rows {
                        let sense = [RowSense::Le, RowSense::Ge, RowSense::Eq][s as usize];
                        lp.add_row(a.iter().map(|v| *v as f64).collect(), sense, r as f64);
                    }
                    lp
                })
            })
        }

        proptest! {
            #[test]
            fn optimum_beats_feasible_samples(lp in small_lp(), pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 5), 64)) {
                let s = solve_lp(&lp).unwrap();
                prop_assert_ne!(s.status, LpStatus::Unbounded);
                let n = lp.n_vars();
                for p in &pts {
                    let x = &p[..n];
                    if lp.max_violation(x) <= 0.0 {
                        prop_assert_eq!(s.status, LpStatus::Optimal);
                        let obj: f64 = lp.objective.iter().zip(x).map(|(c, v)| c * v).sum();
                        prop_assert!(s.objective <= obj + 1e-9);
                    }
                }
                if s.status == LpStatus::Optimal {
                    prop_assert!(lp.max_violation(&s.x) <= 1e-9);
                } else {
                    prop_assert!(!s.violated_rows.is_empty() || lp.rows.is_empty());
                }
            }

            #[test]
            fn row_order_and_scaling_do_not_matter(lp in small_lp(), k in 1.0f64..100.0) {
                let a = solve_lp(&lp).unwrap();
                let mut rev = lp.clone();
                rev.rows.reverse();
                rev.objective.iter_mut().for_each(|c| *c *= k);
                let b = solve_lp(&rev).unwrap();
                prop_assert_eq!(a.status, b.status);
                if a.status == LpStatus::Optimal {
                    prop_assert!((a.objective * k - b.objective).abs() <= 1e-7 * (1.0 + b.objective.abs()));
                }
            }
        }
    }
}
