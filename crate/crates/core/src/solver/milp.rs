//! Branch and bound over support indicators, an alternative to exhaustive
//! pattern enumeration when there are many trajectories.

use super::{
    encode, evaluate_pattern, outcome_from, CspopOutcome, LossSpec, LpStatus, PatternAttempt, SolveResult,
    SolverOptions,
};
use crate::certify::{ControllerSet, CspopProblem, RowSense, SupportPattern, SUPPORT_FLOOR};
use crate::error::{Error, Result};
use crate::solver::simplex::solve_lp_with_cap;

const INTEGRAL_TOL: f64 = 1e-7;

/// Mixed-integer form of the controlled program. Each weight `p_j` gets an
/// indicator `z_j` with `SUPPORT_FLOOR z_j <= p_j <= cap z_j`; incompatible
/// upper/lower pairs exclude each other. Integral nodes are re-solved exactly
/// for their pattern, so the returned certificate is the same object the
/// enumeration would produce for that pattern.
pub fn solve_cspop_milp(problem: &CspopProblem, loss: LossSpec, opts: &SolverOptions) -> Result<CspopOutcome> {
    let n = problem.n_bases();
    let cs = problem.assemble_full();
    let mut enc = encode(&cs, loss, opts.cap, 2 * n);
    let n_p = enc.n_p;
    let z0 = enc.lp.n_vars() - 2 * n;
    let zcol = |j: usize| z0 + j - 1;

    for j in 1..n_p {
        let (p, z) = (enc.col(j), zcol(j));
        enc.lp.lower[z] = 0.0;
        enc.lp.upper[z] = 1.0;
        let available = if j <= n { problem.has_upper(j - 1) } else { problem.has_lower(j - 1 - n) };
        if !available {
            enc.lp.upper[z] = 0.0;
            enc.lp.upper[p] = 0.0;
        }
        let width = enc.lp.n_vars();
        let mut link = vec![0.0; width];
        link[p] = 1.0;
        link[z] = -opts.cap;
        enc.lp.add_row(link, RowSense::Le, 0.0);
        let mut floor = vec![0.0; width];
        floor[p] = 1.0;
        floor[z] = -SUPPORT_FLOOR;
        enc.lp.add_row(floor, RowSense::Ge, 0.0);
    }
    for kp in (0..n).filter(|k| problem.has_upper(*k)) {
        for kq in (0..n).filter(|k| problem.has_lower(*k)) {
            if !problem.pair_compatible(kp, kq)? {
                let mut row = vec![0.0; enc.lp.n_vars()];
                row[zcol(1 + kp)] = 1.0;
                row[zcol(1 + n + kq)] = 1.0;
                enc.lp.add_row(row, RowSense::Le, 1.0);
            }
        }
    }
    if loss == LossSpec::SparsitySupportSize {
        for v in enc.lp.objective.iter_mut() {
            *v = 0.0;
        }
        for j in 1..n_p {
            enc.lp.objective[zcol(j)] = 1.0;
        }
    }

    let base_lower = enc.lp.lower.clone();
    let base_upper = enc.lp.upper.clone();
    let mut stack: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
    let mut nodes = 0usize;
    let mut attempts: Vec<PatternAttempt> = Vec::new();
    let mut best: Option<(SupportPattern, SolveResult, ControllerSet)> = None;
    let mut best_obj = f64::INFINITY;

    while let Some(fixes) = stack.pop() {
        nodes += 1;
        if nodes > opts.max_nodes {
            if best.is_none() {
                return Err(Error::SolverStall {
                    iterations: nodes,
                    detail: "branch-and-bound node limit reached without a feasible pattern".into(),
                });
            }
            break;
        }
        enc.lp.lower.clone_from(&base_lower);
        enc.lp.upper.clone_from(&base_upper);
        for &(c, v) in &fixes {
            enc.lp.lower[c] = v;
            enc.lp.upper[c] = v;
        }
        let sol = solve_lp_with_cap(&enc.lp, opts.max_iterations)?;
        if sol.status != LpStatus::Optimal || sol.objective >= best_obj - 1e-9 {
            continue;
        }
        let z: Vec<f64> = (1..n_p).map(|j| sol.x[zcol(j)]).collect();
        let fractional = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, (v - v.round()).abs()))
            .filter(|(_, d)| *d > INTEGRAL_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let branch_on = match fractional {
            Some((i, _)) => Some(i),
            None => {
                let on = |range: std::ops::Range<usize>, off: usize| -> Vec<usize> {
                    range.filter(|i| z[*i] > 0.5).map(|i| i - off).collect()
                };
                let pattern = SupportPattern::new(on(0..n, 0), on(n..2 * n, n), n)?;
                let ev = evaluate_pattern(problem, &pattern, loss, opts)?;
                attempts.push(ev.attempt);
                if let Some((res, cset)) = ev.solved {
                    let obj = match loss {
                        LossSpec::SparsitySupportSize => pattern.size() as f64,
                        _ => res.objective,
                    };
                    if obj < best_obj - 1e-9 {
                        best_obj = obj;
                        best = Some((pattern, res, cset));
                    }
                    None
                } else {
                    // The relaxation landed on a rejected pattern; keep
                    // splitting the free indicators.
                    (0..2 * n).find(|i| !fixes.iter().any(|(c, _)| *c == zcol(i + 1)) && base_upper[zcol(i + 1)] > 0.0)
                }
            }
        };
        if let Some(i) = branch_on {
            let c = zcol(i + 1);
            let mut one = fixes.clone();
            one.push((c, 1.0));
            let mut zero = fixes;
            zero.push((c, 0.0));
            stack.push(one);
            stack.push(zero);
        }
    }
    outcome_from(problem, best, attempts, Some(nodes))
}
