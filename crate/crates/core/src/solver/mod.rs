//! Solving the certificate programs: a plain LP for the robust case and a
//! support-pattern search (or branch and bound) for the controlled case.

mod milp;
mod simplex;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{
    CertificateTemplate, ConstraintSystem, ControllerSet, CspopProblem, RowFamily, RowSense,
    RowViolation, SupportPattern,
};
use crate::error::{Error, Result};

pub use milp::solve_cspop_milp;
pub use simplex::{solve_lp, solve_lp_with_cap, LinearProgram, LpRow, LpSolution, LpStatus};

/// Objective minimized over feasible certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossSpec {
    Zero,
    /// `|a| + sum b + sum c`.
    L1,
    /// Fewest nonzero weights. For the controlled program this orders the
    /// pattern search; within a pattern, and for the robust program, the L1
    /// relaxation is used.
    SparsitySupportSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on `|p_j|`.
    pub cap: f64,
    /// Re-verification tolerance.
    pub tol: f64,
    pub max_iterations: usize,
    /// Largest trajectory count for exhaustive pattern enumeration.
    pub pattern_cap: usize,
    pub max_nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cap: 1e3,
            tol: 1e-9,
            max_iterations: 100_000,
            pattern_cap: 10,
            max_nodes: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: LpStatus,
    /// `[a, b.., c..]` when optimal, else empty.
    pub p: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Some coefficient sits at the cap.
    pub cap_active: bool,
    /// Rows that stay violated at the phase-1 point of an infeasible program.
    pub violated_rows: Vec<RowViolation>,
    /// Largest row violation of `p` (nonpositive when strictly feasible).
    pub max_violation: f64,
    /// Rows after removing duplicates.
    pub distinct_rows: usize,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// LP encoding of a constraint system: variable layout, bounds and the map
/// from LP rows back to system rows.
pub(crate) struct Encoded {
    pub lp: LinearProgram,
    pub row_origin: Vec<usize>,
    pub split_a: bool,
    pub n_p: usize,
}

impl Encoded {
    /// Column of weight `j` (`j >= 1`) in the LP.
    pub fn col(&self, j: usize) -> usize {
        if self.split_a {
            j + 1
        } else {
            j
        }
    }

    pub fn packed(&self, x: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_p);
        if self.split_a {
            p.push(x[0] - x[1]);
            p.extend_from_slice(&x[2..self.n_p + 1]);
        } else {
            p.extend_from_slice(&x[..self.n_p]);
        }
        p
    }
}

/// Builds the LP: bounds `|a| <= cap`, `0 <= b, c <= cap`; single-variable
/// rows on weights become bounds; duplicate rows are merged keeping the
/// tightest right-hand side. `extra` columns are appended after the weights.
pub(crate) fn encode(cs: &ConstraintSystem, loss: LossSpec, cap: f64, extra: usize) -> Encoded {
    let n_p = cs.n_vars();
    let split_a = loss != LossSpec::Zero;
    let n_cols = n_p + usize::from(split_a) + extra;
    let mut lp = LinearProgram::new(n_cols);
    let col = |j: usize| if split_a { j + 1 } else { j };
    if split_a {
        lp.lower[0] = 0.0;
        lp.upper[0] = cap;
        lp.lower[1] = 0.0;
        lp.upper[1] = cap;
        for j in 0..n_p + 1 {
            lp.objective[j] = 1.0;
        }
    } else {
        lp.lower[0] = -cap;
        lp.upper[0] = cap;
    }
    for j in 1..n_p {
        lp.lower[col(j)] = 0.0;
        lp.upper[col(j)] = cap;
    }

    let mut row_origin = Vec::new();
    let mut seen: HashMap<(u8, Vec<u64>), usize> = HashMap::new();
    for (i, r) in cs.rows.iter().enumerate() {
        if let Some(j) = r.single_variable().filter(|j| *j >= 1) {
            let a = r.coeffs[j];
            let v = r.rhs / a;
            let c = col(j);
            let sense = if a > 0.0 {
                r.sense
            } else {
                match r.sense {
                    RowSense::Le => RowSense::Ge,
                    RowSense::Ge => RowSense::Le,
                    RowSense::Eq => RowSense::Eq,
                }
            };
            match sense {
                RowSense::Le => lp.upper[c] = lp.upper[c].min(v),
                RowSense::Ge => lp.lower[c] = lp.lower[c].max(v),
                RowSense::Eq => {
                    lp.lower[c] = lp.lower[c].max(v);
                    lp.upper[c] = lp.upper[c].min(v);
                }
            }
            continue;
        }
        let mut coeffs = vec![0.0; n_cols];
        if split_a {
            coeffs[0] = r.coeffs[0];
            coeffs[1] = -r.coeffs[0];
        } else {
            coeffs[0] = r.coeffs[0];
        }
        for j in 1..n_p {
            coeffs[col(j)] = r.coeffs[j];
        }
        let sense_key = match r.sense {
            RowSense::Le => 0u8,
            RowSense::Ge => 1,
            RowSense::Eq => 2,
        };
        let key = (sense_key, r.coeffs.iter().map(|v| v.to_bits()).collect());
        match seen.get(&key) {
            Some(&k) if r.sense != RowSense::Eq => {
                let existing = &mut lp.rows[k].rhs;
                *existing = match r.sense {
                    RowSense::Le => existing.min(r.rhs),
                    _ => existing.max(r.rhs),
                };
            }
            _ => {
                seen.insert(key, lp.rows.len());
                lp.add_row(coeffs, r.sense, r.rhs);
                row_origin.push(i);
            }
        }
    }
    Encoded {
        lp,
        row_origin,
        split_a,
        n_p,
    }
}

pub(crate) fn finish(
    cs: &ConstraintSystem,
    enc: &Encoded,
    sol: &LpSolution,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    match sol.status {
        LpStatus::Optimal => {
            let p = enc.packed(&sol.x);
            let bad = cs.verify(&p, opts.tol);
            if let Some(worst) = bad.iter().max_by(|a, b| a.amount.total_cmp(&b.amount)) {
                return Err(Error::SolverStall {
                    iterations: sol.iterations,
                    detail: format!(
                        "solution failed re-verification on {} rows (worst {:e} on row {})",
                        bad.len(),
                        worst.amount,
                        worst.row
                    ),
                });
            }
            let max_violation = cs.rows.iter().map(|r| r.violation(&p)).fold(f64::NEG_INFINITY, f64::max);
            let cap_active = p.iter().any(|v| v.abs() >= opts.cap * (1.0 - 1e-9));
            let objective = sol.objective;
            Ok(SolveResult {
                status: LpStatus::Optimal,
                p,
                objective,
                iterations: sol.iterations,
                cap_active,
                violated_rows: Vec::new(),
                max_violation,
                distinct_rows: enc.lp.rows.len(),
            })
        }
        status => {
            let violated_rows = sol
                .violated_rows
                .iter()
                .map(|(i, amount)| {
                    let orig = enc.row_origin[*i];
                    RowViolation {
                        row: orig,
                        family: cs.rows[orig].family,
                        cell: cs.rows[orig].cell,
                        amount: *amount,
                    }
                })
                .collect();
            Ok(SolveResult {
                status,
                p: Vec::new(),
                objective: f64::NAN,
                iterations: sol.iterations,
                cap_active: false,
                violated_rows,
                max_violation: f64::NAN,
                distinct_rows: enc.lp.rows.len(),
            })
        }
    }
}

/// Solves an assembled system (robust, or controlled for a fixed pattern).
/// Returned coefficients satisfy every row within `opts.tol`.
pub fn solve_rspop(cs: &ConstraintSystem, loss: LossSpec, opts: &SolverOptions) -> Result<SolveResult> {
    let enc = encode(cs, loss, opts.cap, 0);
    let sol = solve_lp_with_cap(&enc.lp, opts.max_iterations)?;
    finish(cs, &enc, &sol, opts)
}

/// Alias of [`solve_rspop`] for a single-pattern controlled system.
pub fn solve_system(cs: &ConstraintSystem, loss: LossSpec, opts: &SolverOptions) -> Result<SolveResult> {
    solve_rspop(cs, loss, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum AttemptOutcome {
    Refused { reason: String },
    Incompatible { failing_cells: usize },
    Infeasible,
    EmptyController { reason: String },
    Optimal { objective: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternAttempt {
    pub pattern: SupportPattern,
    pub outcome: AttemptOutcome,
}

#[derive(Clone, Debug)]
pub struct CspopOutcome {
    pub result: SolveResult,
    pub pattern: Option<SupportPattern>,
    pub controller: Option<ControllerSet>,
    pub template: Option<CertificateTemplate>,
    pub attempts: Vec<PatternAttempt>,
    /// Branch-and-bound nodes, when that search was used.
    pub nodes: Option<usize>,
}

struct Evaluated {
    attempt: PatternAttempt,
    solved: Option<(SolveResult, ControllerSet)>,
}

fn evaluate_pattern(
    problem: &CspopProblem,
    pattern: &SupportPattern,
    loss: LossSpec,
    opts: &SolverOptions,
) -> Result<Evaluated> {
    let done = |outcome| Evaluated {
        attempt: PatternAttempt {
            pattern: pattern.clone(),
            outcome,
        },
        solved: None,
    };
    if let Err(e) = problem.check_tails(pattern) {
        return Ok(done(AttemptOutcome::Refused { reason: e.to_string() }));
    }
    let report = problem.compatibility(pattern)?;
    if !report.compatible {
        return Ok(done(AttemptOutcome::Incompatible {
            failing_cells: report.failing_count,
        }));
    }
    let cs = problem.assemble(pattern)?;
    let res = solve_system(&cs, loss, opts)?;
    if !res.is_optimal() {
        return Ok(done(AttemptOutcome::Infeasible));
    }
    match problem.controller_set(pattern) {
        Ok(cset) => Ok(Evaluated {
            attempt: PatternAttempt {
                pattern: pattern.clone(),
                outcome: AttemptOutcome::Optimal { objective: res.objective },
            },
            solved: Some((res, cset)),
        }),
        Err(e @ Error::EmptyControllerSet { .. }) => {
            Ok(done(AttemptOutcome::EmptyController { reason: e.to_string() }))
        }
        Err(e) => Err(e),
    }
}

/// Enumerates support patterns by increasing size. Patterns of one size are
/// solved in parallel; the winner is chosen by pattern order, so the result
/// does not depend on scheduling. Under `SparsitySupportSize` the first
/// feasible pattern wins; otherwise the best objective over all patterns.
pub fn solve_cspop(problem: &CspopProblem, loss: LossSpec, opts: &SolverOptions) -> Result<CspopOutcome> {
    let n = problem.n_bases();
    if n > opts.pattern_cap {
        return Err(Error::invalid(format!(
            "{n} trajectories exceed the pattern-enumeration cap {}; use the branch-and-bound search",
            opts.pattern_cap
        )));
    }
    let patterns = SupportPattern::enumerate(n);
    let mut attempts = Vec::new();
    let mut best: Option<(SupportPattern, SolveResult, ControllerSet)> = None;
    for size in 0..=2 * n {
        let group: Vec<&SupportPattern> = patterns.iter().filter(|p| p.size() == size).collect();
        let evaluated: Vec<Evaluated> = group
            .par_iter()
            .map(|p| evaluate_pattern(problem, p, loss, opts))
            .collect::<Result<_>>()?;
        for ev in evaluated {
            if let Some((res, cset)) = ev.solved {
                let better = match &best {
                    None => true,
                    Some((_, b, _)) => loss != LossSpec::SparsitySupportSize && res.objective < b.objective - 1e-12,
                };
                if better {
                    best = Some((ev.attempt.pattern.clone(), res, cset));
                }
            }
            attempts.push(ev.attempt);
        }
        if loss == LossSpec::SparsitySupportSize && best.is_some() {
            break;
        }
    }
    outcome_from(problem, best, attempts, None)
}

pub(crate) fn outcome_from(
    problem: &CspopProblem,
    best: Option<(SupportPattern, SolveResult, ControllerSet)>,
    attempts: Vec<PatternAttempt>,
    nodes: Option<usize>,
) -> Result<CspopOutcome> {
    match best {
        Some((pattern, result, cset)) => {
            let template = problem.template(&pattern)?.with_coefficients(&result.p)?;
            Ok(CspopOutcome {
                result,
                pattern: Some(pattern),
                controller: Some(cset),
                template: Some(template),
                attempts,
                nodes,
            })
        }
        None => Ok(CspopOutcome {
            result: SolveResult {
                status: LpStatus::Infeasible,
                p: Vec::new(),
                objective: f64::NAN,
                iterations: 0,
                cap_active: false,
                violated_rows: Vec::new(),
                max_violation: f64::NAN,
                distinct_rows: 0,
            },
            pattern: None,
            controller: None,
            template: None,
            attempts,
            nodes,
        }),
    }
}

/// Count of rows per family, for reports.
pub fn family_counts(cs: &ConstraintSystem) -> Vec<(RowFamily, usize)> {
    [RowFamily::Initial, RowFamily::Unsafe, RowFamily::Sign, RowFamily::Pattern]
        .into_iter()
        .map(|f| (f, cs.count(f)))
        .filter(|(_, c)| *c > 0)
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::certify::{assemble_rspop, RowFamily};
    use crate::order::{BoxRegion, RegionSpec};
    use crate::partition::{build_partition, CoverSets};
    use crate::systems::{FeedbackPolicy, Trajectory};

    fn scalar(vals: &[f64]) -> Arc<Trajectory> {
        Arc::new(
            Trajectory::new(vals.iter().map(|v| vec![*v]).collect(), None, None)
                .unwrap()
                .with_epsilon(0.0)
                .unwrap(),
        )
    }

    fn toy_system() -> ConstraintSystem {
        let p = build_partition(&BoxRegion::cube(1, 0.0, 5.0).unwrap(), 0.5).unwrap();
        let covers = CoverSets::new(
            &p,
            &RegionSpec::single(BoxRegion::cube(1, 0.0, 1.0).unwrap()),
            &RegionSpec::single(BoxRegion::cube(1, 4.5, 5.0).unwrap()),
        )
        .unwrap();
        assemble_rspop(&[scalar(&[4.0, 3.0, 2.0, 1.0])], None, &p, &covers, 2.0, 1e-6).unwrap()
    }

    #[test]
    fn toy_matches_hand_lp() {
        // Rows: a + b/4 + 2c <= 0 and a + 7b/4 >= 1e-6. The L1 optimum puts
        // a = -b/4 and b = 1e-6 / 1.5.
        let cs = toy_system();
        let res = solve_rspop(&cs, LossSpec::L1, &SolverOptions::default()).unwrap();
        assert!(res.is_optimal());
        let b = 1e-6 / 1.5;
        assert!((res.p[1] - b).abs() < 1e-15);
        assert!((res.p[0] + b / 4.0).abs() < 1e-15);
        assert_eq!(res.p[2], 0.0);
        assert!((res.objective - 1.25 * b).abs() < 1e-15);
        assert_eq!(res.distinct_rows, 2);
        assert!(!res.cap_active);

        let zero = solve_rspop(&cs, LossSpec::Zero, &SolverOptions::default()).unwrap();
        assert!(zero.is_optimal());
        assert!(cs.verify(&zero.p, 1e-9).is_empty());
    }

    #[test]
    fn infeasible_reports_rows() {
        // An initial set that reaches the unsafe set cannot be certified.
        let p = build_partition(&BoxRegion::cube(1, 0.0, 5.0).unwrap(), 0.5).unwrap();
        let covers = CoverSets::new(
            &p,
            &RegionSpec::single(BoxRegion::cube(1, 0.0, 5.0).unwrap()),
            &RegionSpec::single(BoxRegion::cube(1, 4.5, 5.0).unwrap()),
        )
        .unwrap();
        let cs = assemble_rspop(&[scalar(&[4.0, 3.0, 2.0, 1.0])], None, &p, &covers, 2.0, 1e-6).unwrap();
        let res = solve_rspop(&cs, LossSpec::L1, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
        assert!(!res.violated_rows.is_empty());
        assert!(res.violated_rows.iter().all(|v| v.family != RowFamily::Sign));
    }

    #[test]
    fn pattern_without_tails_is_refused() {
        // A zig-zag trajectory has neither dominating tail, so only the empty
        // pattern is admissible and a constant certificate cannot work.
        let zig = Arc::new(
            Trajectory::new(vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0]], None, None).unwrap(),
        );
        assert_eq!(zig.tail().dominating, crate::systems::Dominating::Neither);
        let g = build_partition(&BoxRegion::cube(2, 0.0, 10.0).unwrap(), 1.0).unwrap();
        let covers = CoverSets::new(
            &g,
            &RegionSpec::single(BoxRegion::cube(2, 4.0, 6.0).unwrap()),
            &RegionSpec::single(BoxRegion::cube(2, 9.0, 10.0).unwrap()),
        )
        .unwrap();
        let u = BoxRegion::cube(1, 0.0, 1.0).unwrap();
        let pol = vec![Arc::new(FeedbackPolicy::constant("k", vec![0.5]).unwrap())];
        let problem = CspopProblem::new(&[zig], &pol, &g, &covers, &u, 2.0, 1e-6).unwrap();
        let out = solve_cspop(&problem, LossSpec::SparsitySupportSize, &SolverOptions::default()).unwrap();
        assert_eq!(out.result.status, LpStatus::Infeasible);
        assert_eq!(out.attempts.len(), 4);
        let refused = out
            .attempts
            .iter()
            .filter(|a| matches!(a.outcome, AttemptOutcome::Refused { .. }))
            .count();
        assert_eq!(refused, 3);
        assert_eq!(out.attempts[0].outcome, AttemptOutcome::Infeasible);
        let milp = solve_cspop_milp(&problem, LossSpec::SparsitySupportSize, &SolverOptions::default()).unwrap();
        assert_eq!(milp.result.status, LpStatus::Infeasible);
    }
}
