//! Simulation-based falsification of certificates and Monte-Carlo checks of
//! the properties the construction relies on.
//!
//! Every check is deterministic per seed: sample `i` draws from its own
//! random stream, samples run in parallel and results are merged in index
//! order. Findings are capped in number; counts are always complete.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{eval_certificate, select_control, CertificateMode, CertificateTemplate, ControllerSet};
use crate::dominance::{lambda_schedule, DominanceBasis, DominanceTime, InflationSchedule};
use crate::error::{Error, Result};
use crate::order::{leq, sup_dist, BoxRegion};
use crate::systems::{
    rng_for_stream, sample_disturbance, sample_region, InputRole, LipschitzBounds, SystemModel, Trajectory,
};

/// Margins below this are flagged as numerically fragile.
pub const FRAGILE_MARGIN: f64 = 1e-8;
const MAX_FINDINGS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub sample: usize,
    pub step: Option<usize>,
    pub x: Vec<f64>,
    pub detail: String,
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn findings_text(out: &mut String, findings: &[Finding]) {
    for f in findings {
        let step = f.step.map(|s| format!(" step {s}")).unwrap_or_default();
        let _ = writeln!(out, "  sample {}{step} at {}: {}", f.sample, fmt_vec(&f.x), f.detail);
    }
}

fn merge_findings(parts: impl IntoIterator<Item = Vec<Finding>>) -> Vec<Finding> {
    parts.into_iter().flatten().take(MAX_FINDINGS).collect()
}

// ---------------------------------------------------------------------------
// Monte-Carlo safety

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub runs: usize,
    pub horizon: usize,
    pub steps: usize,
    /// Steps where the certificate turned positive after being nonpositive,
    /// plus initial states where it is already positive.
    pub invariance_violations: usize,
    pub unsafe_hits: usize,
    /// Runs that left the state set.
    pub escapes: usize,
    /// Smallest `-B(x)` over visited states.
    pub min_margin: f64,
    /// Visited states with `0 <= -B(x) < FRAGILE_MARGIN`.
    pub fragile_states: usize,
    pub findings: Vec<Finding>,
}

impl SafetyReport {
    pub fn is_clean(&self) -> bool {
        self.invariance_violations == 0 && self.unsafe_hits == 0 && self.escapes == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "monte-carlo safety: {} runs x {} steps", self.runs, self.horizon);
        let _ = writeln!(s, "  invariance violations: {}", self.invariance_violations);
        let _ = writeln!(s, "  unsafe hits: {}", self.unsafe_hits);
        let _ = writeln!(s, "  escapes: {}", self.escapes);
        let _ = writeln!(s, "  min margin: {:e}", self.min_margin);
        let _ = writeln!(s, "  fragile states: {}", self.fragile_states);
        findings_text(&mut s, &self.findings);
        s
    }
}

#[derive(Default)]
struct RunOutcome {
    steps: usize,
    invariance: usize,
    unsafe_hits: usize,
    escaped: bool,
    min_margin: f64,
    fragile: usize,
    findings: Vec<Finding>,
}

/// Simulates `n_runs` trajectories from uniform samples of the initial set.
/// Robust certificates see uniformly sampled disturbances; controlled ones
/// apply an input drawn uniformly from the controller box of the current
/// cell. A run stops at its first unsafe state or escape.
pub fn monte_carlo_safety(
    sys: &SystemModel,
    tpl: &CertificateTemplate,
    controller: Option<&ControllerSet>,
    n_runs: usize,
    horizon: usize,
    seed: u64,
) -> Result<SafetyReport> {
    monte_carlo_shielded(sys, tpl, controller, None, n_runs, horizon, seed)
}

/// As [`monte_carlo_safety`], but a controlled run applies the projection of
/// `nominal` onto the controller box instead of a random admissible input.
pub fn monte_carlo_shielded(
    sys: &SystemModel,
    tpl: &CertificateTemplate,
    controller: Option<&ControllerSet>,
    nominal: Option<&[f64]>,
    n_runs: usize,
    horizon: usize,
    seed: u64,
) -> Result<SafetyReport> {
    if tpl.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: tpl.dim(),
        });
    }
    match (tpl.mode(), sys.input_role(), controller) {
        (CertificateMode::Controlled, InputRole::Control, Some(_)) => {}
        (CertificateMode::Robust, InputRole::Disturbance | InputRole::None, None) => {}
        (mode, role, c) => {
            return Err(Error::invalid(format!(
                "{mode:?} certificate cannot be validated on a system with {role:?} inputs {} a controller",
                if c.is_some() { "and" } else { "without" }
            )))
        }
    }
    let outcomes: Vec<RunOutcome> = (0..n_runs)
        .into_par_iter()
        .map(|run| safety_run(sys, tpl, controller, nominal, horizon, seed, run))
        .collect::<Result<_>>()?;
    let mut rep = SafetyReport {
        runs: n_runs,
        horizon,
        steps: 0,
        invariance_violations: 0,
        unsafe_hits: 0,
        escapes: 0,
        min_margin: f64::INFINITY,
        fragile_states: 0,
        findings: Vec::new(),
    };
    let mut findings = Vec::new();
    for o in outcomes {
        rep.steps += o.steps;
        rep.invariance_violations += o.invariance;
        rep.unsafe_hits += o.unsafe_hits;
        rep.escapes += usize::from(o.escaped);
        rep.min_margin = rep.min_margin.min(o.min_margin);
        rep.fragile_states += o.fragile;
        findings.push(o.findings);
    }
    rep.findings = merge_findings(findings);
    Ok(rep)
}

fn safety_run(
    sys: &SystemModel,
    tpl: &CertificateTemplate,
    controller: Option<&ControllerSet>,
    nominal: Option<&[f64]>,
    horizon: usize,
    seed: u64,
    run: usize,
) -> Result<RunOutcome> {
    let mut rng = rng_for_stream(seed, run as u64);
    let mut out = RunOutcome {
        min_margin: f64::INFINITY,
        ..Default::default()
    };
    let mut x = sample_region(sys.initial_set(), &mut rng);
    let mut b = eval_certificate(tpl, &x)?;
    let note = |out: &mut RunOutcome, step: usize, x: &[f64], b: f64| {
        out.min_margin = out.min_margin.min(-b);
        if (0.0..FRAGILE_MARGIN).contains(&-b) {
            out.fragile += 1;
        }
        if sys.unsafe_set().contains_slice(x) {
            out.unsafe_hits += 1;
            if out.findings.len() < MAX_FINDINGS {
                out.findings.push(Finding {
                    sample: run,
                    step: Some(step),
                    x: x.to_vec(),
                    detail: format!("unsafe state, B = {b:e}"),
                });
            }
            return true;
        }
        false
    };
    if b > 0.0 {
        out.invariance += 1;
        out.findings.push(Finding {
            sample: run,
            step: Some(0),
            x: x.clone(),
            detail: format!("initial state outside the zero sublevel set, B = {b:e}"),
        });
    }
    if note(&mut out, 0, &x, b) {
        return Ok(out);
    }
    for t in 1..=horizon {
        let v = match (controller, sys.input_role()) {
            (Some(cset), _) => match nominal {
                Some(u) => select_control(cset, &cset.partition().locate(&x)?, Some(u))?,
                None => sample_disturbance(&cset.box_at(&x)?, &mut rng),
            },
            (None, InputRole::Disturbance) => {
                sample_disturbance(sys.input_set().expect("disturbance systems have an input set"), &mut rng)
            }
            _ => Vec::new(),
        };
        let next = match sys.step(&x, &v) {
            Ok(n) => n,
            Err(Error::StateEscape { state, .. }) => {
                out.escaped = true;
                if out.findings.len() < MAX_FINDINGS {
                    out.findings.push(Finding {
                        sample: run,
                        step: Some(t),
                        x: state,
                        detail: "left the state set".into(),
                    });
                }
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        out.steps += 1;
        let nb = eval_certificate(tpl, &next)?;
        if b <= 0.0 && nb > 0.0 {
            out.invariance += 1;
            if out.findings.len() < MAX_FINDINGS {
                out.findings.push(Finding {
                    sample: run,
                    step: Some(t),
                    x: next.clone(),
                    detail: format!("certificate rose from {b:e} to {nb:e}"),
                });
            }
        }
        if note(&mut out, t, &next, nb) {
            return Ok(out);
        }
        x = next;
        b = nb;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Dissipation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub basis: String,
    pub samples: usize,
    /// Samples where the inequality was actually tested.
    pub checked: usize,
    /// Samples whose dominance time is the last stored index, where finite
    /// data cannot show the property.
    pub horizon_limited: usize,
    /// Samples with no admissible input.
    pub no_input: usize,
    pub violations: usize,
    pub findings: Vec<Finding>,
}

impl DissipationReport {
    pub fn is_clean(&self) -> bool {
        self.violations == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dissipation of {}: {} samples", self.basis, self.samples);
        let _ = writeln!(
            s,
            "  checked {}, horizon-limited {}, no input {}, violations {}",
            self.checked, self.horizon_limited, self.no_input, self.violations
        );
        findings_text(&mut s, &self.findings);
        s
    }
}

/// Half the samples are uniform over the state set; the rest sit on the
/// dominated side of a random stored state, where the dominance time is
/// informative.
fn near_trajectory<R: Rng>(traj: &Trajectory, set: &BoxRegion, below: bool, rng: &mut R) -> Vec<f64> {
    let t = rng.gen_range(0..=traj.horizon());
    let x: Vec<f64> = traj
        .state(t)
        .iter()
        .zip(set.lower().iter().zip(set.upper()))
        .map(|(v, (l, u))| {
            let r = rng.gen::<f64>() * 0.05 * (u - l);
            if below {
                v - r
            } else {
                v + r
            }
        })
        .collect();
    set.clamp(&x)
}

fn sample_point<R: Rng>(basis: &DominanceBasis, set: &BoxRegion, i: usize, rng: &mut R) -> Vec<f64> {
    if i % 2 == 0 {
        sample_disturbance(set, rng)
    } else {
        near_trajectory(basis.trajectory(), set, basis.is_upper(), rng)
    }
}

/// Checks `V(f(x, v)) <= V(x)` for admissible inputs: sampled disturbances
/// for robust bases; for controlled bases, inputs below the generating policy
/// (upper) or above it (lower), clipped to the input set. Truncated robust
/// bases have no such property and are refused.
pub fn check_dissipation(
    basis: &DominanceBasis,
    sys: &SystemModel,
    n_samples: usize,
    seed: u64,
) -> Result<DissipationReport> {
    if basis.kind().is_robust() && basis.truncated() {
        return Err(Error::invalid("truncated robust bases carry no dissipation property"));
    }
    if basis.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: basis.dim(),
        });
    }
    let controlled = !basis.kind().is_robust();
    if controlled && sys.input_role() != InputRole::Control {
        return Err(Error::invalid("controlled bases need a system with control inputs"));
    }
    let exempt_last = !(controlled && basis.truncated());
    let set = sys.state_set();

    let results: Vec<(u8, Option<Finding>)> = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<(u8, Option<Finding>)> {
            let mut rng = rng_for_stream(seed, i as u64);
            let x = sample_point(basis, set, i, &mut rng);
            let v = if controlled {
                let pol = basis.policy().expect("controlled bases carry their policy");
                let u = pol.eval(&x)?;
                let us = sys.input_set().expect("control systems have an input set");
                let (lo, hi): (Vec<f64>, Vec<f64>) = if basis.is_upper() {
                    (us.lower().to_vec(), us.upper().iter().zip(&u).map(|(a, b)| a.min(*b)).collect())
                } else {
                    (us.lower().iter().zip(&u).map(|(a, b)| a.max(*b)).collect(), us.upper().to_vec())
                };
                if !leq(&lo, &hi) {
                    return Ok((2, None));
                }
                sample_disturbance(&BoxRegion::new(lo, hi)?, &mut rng)
            } else {
                match sys.input_role() {
                    InputRole::Disturbance => sample_disturbance(sys.input_set().expect("checked"), &mut rng),
                    _ => Vec::new(),
                }
            };
            let time = basis.time(&x)?;
            if exempt_last && time == DominanceTime::Finite(basis.last_index()) {
                return Ok((1, None));
            }
            let fx = sys.eval(&x, &v);
            let (before, after) = (basis.value(&x)?, basis.value(&fx)?);
            if after <= before {
                Ok((0, None))
            } else {
                Ok((
                    3,
                    Some(Finding {
                        sample: i,
                        step: None,
                        x,
                        detail: format!("value rose from {before} to {after} under input {}", fmt_vec(&v)),
                    }),
                ))
            }
        })
        .collect::<Result<_>>()?;
    let count = |k: u8| results.iter().filter(|r| r.0 == k).count();
    Ok(DissipationReport {
        basis: format!("{} ({:?}{})", basis.label(), basis.kind(), if basis.truncated() { ", truncated" } else { "" }),
        samples: n_samples,
        checked: count(0) + count(3),
        horizon_limited: count(1),
        no_input: count(2),
        violations: count(3),
        findings: merge_findings(results.into_iter().map(|r| r.1.into_iter().collect())),
    })
}

// ---------------------------------------------------------------------------
// Order preservation and value range

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub label: String,
    pub pairs: usize,
    pub order_violations: usize,
    pub range_violations: usize,
    pub findings: Vec<Finding>,
}

impl OrderReport {
    pub fn is_clean(&self) -> bool {
        self.order_violations == 0 && self.range_violations == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "order check of {}: {} pairs, {} order violations, {} range violations",
            self.label, self.pairs, self.order_violations, self.range_violations
        );
        findings_text(&mut s, &self.findings);
        s
    }
}

/// Samples ordered pairs `x <= y` in `region` (both far apart and close) and
/// checks `f(x) <= f(y)` when `increasing`, `f(x) >= f(y)` otherwise; also
/// checks every value against `in_range`.
pub fn check_order_preserving(
    label: &str,
    f: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    increasing: bool,
    in_range: &(dyn Fn(f64) -> bool + Sync),
    region: &BoxRegion,
    anchors: Option<&Trajectory>,
    n_pairs: usize,
    seed: u64,
) -> Result<OrderReport> {
    const SCALES: [f64; 3] = [1.0, 0.1, 0.01];
    let results: Vec<(bool, bool, Option<Finding>)> = (0..n_pairs)
        .into_par_iter()
        .map(|i| -> Result<(bool, bool, Option<Finding>)> {
            let mut rng = rng_for_stream(seed, i as u64);
            let x = match anchors {
                Some(tr) if i % 2 == 1 => near_trajectory(tr, region, rng.gen(), &mut rng),
                _ => sample_disturbance(region, &mut rng),
            };
            let s = SCALES[i % SCALES.len()];
            let y: Vec<f64> = x
                .iter()
                .zip(region.upper())
                .map(|(v, u)| (v + s * rng.gen::<f64>() * (u - v)).min(*u))
                .collect();
            let (fx, fy) = (f(&x)?, f(&y)?);
            let order_ok = if increasing { fx <= fy } else { fx >= fy };
            let range_ok = in_range(fx) && in_range(fy);
            let finding = (!order_ok || !range_ok).then(|| Finding {
                sample: i,
                step: None,
                x: x.clone(),
                detail: format!("f(x) = {fx}, f(y) = {fy} at y = {}", fmt_vec(&y)),
            });
            Ok((order_ok, range_ok, finding))
        })
        .collect::<Result<_>>()?;
    Ok(OrderReport {
        label: label.to_string(),
        pairs: n_pairs,
        order_violations: results.iter().filter(|r| !r.0).count(),
        range_violations: results.iter().filter(|r| !r.1).count(),
        findings: merge_findings(results.into_iter().map(|r| r.2.into_iter().collect())),
    })
}

/// Upper bases are nondecreasing and lower bases nonincreasing in the
/// partial order; values lie in `{0} U (0, 1] U {alpha}`.
pub fn check_basis_order(basis: &DominanceBasis, region: &BoxRegion, n_pairs: usize, seed: u64) -> Result<OrderReport> {
    let alpha = basis.alpha();
    let in_range = move |v: f64| v == 0.0 || v == alpha || (v > 0.0 && v <= 1.0);
    check_order_preserving(
        basis.label(),
        &|x| basis.value(x),
        basis.is_upper(),
        &in_range,
        region,
        Some(basis.trajectory()),
        n_pairs,
        seed,
    )
}

// ---------------------------------------------------------------------------
// Trajectory comparison

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: usize,
    pub horizon: usize,
    pub exceedances: usize,
    /// Largest `|x(t) - x'(t)|_inf / lambda_{t-1}` seen (0 when no inflation).
    pub max_ratio: f64,
    /// Pairs whose first-step gap reaches half of `lambda_0`.
    pub tight_pairs: usize,
    /// Largest gap when the inflation is zero.
    pub max_gap_without_inflation: f64,
    pub findings: Vec<Finding>,
}

impl ComparisonReport {
    pub fn is_clean(&self) -> bool {
        self.exceedances == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "trajectory comparison: {} pairs x {} steps", self.pairs, self.horizon);
        let _ = writeln!(
            s,
            "  exceedances {}, max ratio {:.6}, pairs reaching half the bound at t=1: {}",
            self.exceedances, self.max_ratio, self.tight_pairs
        );
        findings_text(&mut s, &self.findings);
        s
    }
}

/// Runs pairs of trajectories from a shared initial state under independent
/// disturbances and checks `|x(t) - x'(t)|_inf <= lambda_{t-1}` at every step.
pub fn check_trajectory_comparison(
    sys: &SystemModel,
    lip: &LipschitzBounds,
    n_pairs: usize,
    horizon: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    lip.validate()?;
    if sys.input_role() != InputRole::Disturbance {
        return Err(Error::invalid("trajectory comparison needs a system with disturbances"));
    }
    let w_set = sys.input_set().expect("disturbance systems have an input set");
    let infl = if horizon > 0 {
        lambda_schedule(*lip, horizon)?
    } else {
        InflationSchedule::zero()
    };
    struct PairOut {
        exceed: usize,
        ratio: f64,
        tight: bool,
        gap0: f64,
        finding: Option<Finding>,
    }
    let outs: Vec<PairOut> = (0..n_pairs)
        .into_par_iter()
        .map(|i| -> Result<PairOut> {
            let mut rng = rng_for_stream(seed, i as u64);
            let x0 = sample_region(sys.initial_set(), &mut rng);
            let (mut a, mut b) = (x0.clone(), x0);
            let mut out = PairOut {
                exceed: 0,
                ratio: 0.0,
                tight: false,
                gap0: 0.0,
                finding: None,
            };
            for t in 1..=horizon {
                a = sys.eval(&a, &sample_disturbance(w_set, &mut rng));
                b = sys.eval(&b, &sample_disturbance(w_set, &mut rng));
                let gap = sup_dist(&a, &b);
                let bound = infl.before(t);
                if bound > 0.0 {
                    out.ratio = out.ratio.max(gap / bound);
                    if t == 1 && gap >= 0.5 * bound {
                        out.tight = true;
                    }
                } else {
                    out.gap0 = out.gap0.max(gap);
                }
                if gap > bound {
                    out.exceed += 1;
                    if out.finding.is_none() {
                        out.finding = Some(Finding {
                            sample: i,
                            step: Some(t),
                            x: a.clone(),
                            detail: format!("gap {gap:e} exceeds bound {bound:e}"),
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonReport {
        pairs: n_pairs,
        horizon,
        exceedances: outs.iter().map(|o| o.exceed).sum(),
        max_ratio: outs.iter().map(|o| o.ratio).fold(0.0, f64::max),
        tight_pairs: outs.iter().filter(|o| o.tight).count(),
        max_gap_without_inflation: outs.iter().map(|o| o.gap0).fold(0.0, f64::max),
        findings: merge_findings(outs.into_iter().map(|o| o.finding.into_iter().collect())),
    })
}

// ---------------------------------------------------------------------------
// Truncation sandwich

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub horizon: usize,
    pub epsilon: f64,
    pub points: usize,
    pub lower_side_violations: usize,
    pub upper_side_violations: usize,
    pub findings: Vec<Finding>,
}

impl SandwichReport {
    pub fn is_clean(&self) -> bool {
        self.lower_side_violations == 0 && self.upper_side_violations == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "truncation sandwich at T = {} with epsilon {:e}: {} points",
            self.horizon, self.epsilon, self.points
        );
        let _ = writeln!(
            s,
            "  lower-side violations {}, upper-side violations {}",
            self.lower_side_violations, self.upper_side_violations
        );
        findings_text(&mut s, &self.findings);
        s
    }
}

/// Smallest tail epsilon that makes the truncation at `horizon` sound for a
/// longer trajectory: the largest sup-norm deviation of the inflated tail
/// envelopes (`x(s) + lambda_{s-1}` and `x(s) - lambda_{s-1}`, `s > T`) from
/// their value at `T`.
pub fn tail_spread(long: &Trajectory, lip: Option<&LipschitzBounds>, horizon: usize) -> Result<f64> {
    if horizon == 0 || horizon > long.horizon() {
        return Err(Error::invalid(format!(
            "truncation horizon {horizon} must lie in 1..={}",
            long.horizon()
        )));
    }
    let infl = match lip {
        Some(l) => lambda_schedule(*l, long.horizon())?,
        None => InflationSchedule::zero(),
    };
    let at = |s: usize, sign: f64| -> Vec<f64> {
        long.state(s).iter().map(|v| v + sign * infl.before(s)).collect()
    };
    let (up_t, lo_t) = (at(horizon, 1.0), at(horizon, -1.0));
    Ok((horizon + 1..=long.horizon())
        .map(|s| sup_dist(&at(s, 1.0), &up_t).max(sup_dist(&at(s, -1.0), &lo_t)))
        .fold(0.0, f64::max))
}

/// Compares truncated bases on the first `horizon` steps of `long` against
/// the full bases on all of `long`:
/// `P^T(x) - 1/(T+1) <= P(x) <= P^T(x + eps)` and
/// `Q^T(x) - 1/(T+1) <= Q(x) <= Q^T(x - eps)`, where the truncated bases
/// already include their own `eps` shift.
pub fn check_truncation_sandwich(
    long: &Arc<Trajectory>,
    lip: Option<&LipschitzBounds>,
    horizon: usize,
    epsilon: f64,
    alpha: f64,
    region: &BoxRegion,
    n_points: usize,
    seed: u64,
) -> Result<SandwichReport> {
    if horizon == 0 || horizon > long.horizon() {
        return Err(Error::invalid(format!(
            "truncation horizon {horizon} must lie in 1..={}",
            long.horizon()
        )));
    }
    let short = Arc::new(long.truncate(horizon)?);
    let (infl_long, infl_short) = match lip {
        Some(l) => (lambda_schedule(*l, long.horizon())?, lambda_schedule(*l, horizon)?),
        None => (InflationSchedule::zero(), InflationSchedule::zero()),
    };
    let full: Vec<DominanceBasis> = [true, false]
        .iter()
        .map(|up| DominanceBasis::robust("full", long.clone(), *up, false, alpha, &infl_long, None))
        .collect::<Result<_>>()?;
    let trunc: Vec<DominanceBasis> = [true, false]
        .iter()
        .map(|up| DominanceBasis::robust("truncated", short.clone(), *up, true, alpha, &infl_short, Some(epsilon)))
        .collect::<Result<_>>()?;
    let slack = 1.0 / (horizon as f64 + 1.0);
    let outs: Vec<(usize, usize, Option<Finding>)> = (0..n_points)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize, Option<Finding>)> {
            let mut rng = rng_for_stream(seed, i as u64);
            let x = if i % 2 == 0 {
                sample_disturbance(region, &mut rng)
            } else {
                near_trajectory(long, region, rng.gen(), &mut rng)
            };
            let (mut low, mut high) = (0, 0);
            let mut detail = Vec::new();
            for (k, sign) in [(0usize, 1.0), (1, -1.0)] {
                let shifted: Vec<f64> = x.iter().map(|v| v + sign * epsilon).collect();
                let f = full[k].value(&x)?;
                let t = trunc[k].value(&x)?;
                let t_shift = trunc[k].value(&shifted)?;
                let name = if k == 0 { "P" } else { "Q" };
                if t - slack > f {
                    low += 1;
                    detail.push(format!("{name}: truncated {t} - {slack} > full {f}"));
                }
                if f > t_shift {
                    high += 1;
                    detail.push(format!("{name}: full {f} > shifted truncated {t_shift}"));
                }
            }
            let finding = (!detail.is_empty()).then(|| Finding {
                sample: i,
                step: None,
                x,
                detail: detail.join("; "),
            });
            Ok((low, high, finding))
        })
        .collect::<Result<_>>()?;
    Ok(SandwichReport {
        horizon,
        epsilon,
        points: n_points,
        lower_side_violations: outs.iter().map(|o| o.0).sum(),
        upper_side_violations: outs.iter().map(|o| o.1).sum(),
        findings: merge_findings(outs.into_iter().map(|o| o.2.into_iter().collect())),
    })
}
