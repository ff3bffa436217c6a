//! Dominance functions of a stored trajectory.
//!
//! For an upper basis the dominance time of `x` is the last index `t` at
//! which `x <= x(t) + lambda_{t-1}`; the value is `1/(t+1)`, or `alpha` when
//! no index qualifies. Lower bases mirror this with `>=` and `-lambda`.
//! On finite data the infinite-time case (value 0) cannot occur.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::{check_dims, leq};
use crate::systems::{FeedbackPolicy, LipschitzBounds, Trajectory};

pub const DEFAULT_ALPHA: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominanceTime {
    Finite(usize),
    Infinite,
    Empty,
}

pub fn dominance_value(time: DominanceTime, alpha: f64) -> f64 {
    match time {
        DominanceTime::Finite(t) => 1.0 / (t as f64 + 1.0),
        DominanceTime::Infinite => 0.0,
        DominanceTime::Empty => alpha,
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must be a finite number > 1, got {alpha}")))
    }
}

/// Lipschitz inflation `lambda_t = L_w D_w sum_{s=0}^{t} L_x^s`.
#[derive(Clone, Debug, PartialEq)]
pub struct InflationSchedule {
    lip: Option<LipschitzBounds>,
    lambdas: Vec<f64>,
}

impl InflationSchedule {
    /// No inflation, for disturbance-free data.
    pub fn zero() -> Self {
        Self {
            lip: None,
            lambdas: Vec::new(),
        }
    }

    pub fn lipschitz(&self) -> Option<LipschitzBounds> {
        self.lip
    }

    /// Precomputed `lambda_0 .. lambda_{T-1}`.
    pub fn values(&self) -> &[f64] {
        &self.lambdas
    }

    /// `lambda_t`, computed on demand past the precomputed range.
    pub fn at(&self, t: usize) -> f64 {
        match self.lambdas.get(t) {
            Some(v) => *v,
            None => self.lip.map_or(0.0, |l| lambda_closed(&l, t)),
        }
    }

    /// `lambda_{t-1}` with `lambda_{-1} = 0`: the inflation applied at index `t`.
    pub fn before(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.at(t - 1)
        }
    }

    /// `sup_t lambda_t`; infinite unless `L_x < 1` or `D_w = 0`.
    pub fn supremum(&self) -> f64 {
        match self.lip {
            None => 0.0,
            Some(l) if l.d_w == 0.0 => 0.0,
            Some(l) if l.l_x < 1.0 => l.l_w * l.d_w / (1.0 - l.l_x),
            Some(_) => f64::INFINITY,
        }
    }
}

fn lambda_closed(l: &LipschitzBounds, t: usize) -> f64 {
    let terms = t as f64 + 1.0;
    let sum = if l.l_x == 1.0 {
        terms
    } else {
        (1.0 - l.l_x.powf(terms)) / (1.0 - l.l_x)
    };
    l.l_w * l.d_w * sum
}

pub fn lambda_schedule(lip: LipschitzBounds, horizon: usize) -> Result<InflationSchedule> {
    lip.validate()?;
    if horizon == 0 {
        return Err(Error::invalid("inflation schedule needs a horizon of at least 1"));
    }
    let mut lambdas = Vec::with_capacity(horizon);
    let mut prev = 0.0f64;
    for t in 0..horizon {
        // Guard against rounding making the closed form dip.
        prev = prev.max(lambda_closed(&lip, t));
        lambdas.push(prev);
    }
    Ok(InflationSchedule {
        lip: Some(lip),
        lambdas,
    })
}

fn scan_upper(traj: &Trajectory, infl: &InflationSchedule, q: &[f64], last: usize) -> DominanceTime {
    for t in (0..=last).rev() {
        let lam = infl.before(t);
        if q.iter().zip(traj.state(t)).all(|(qj, sj)| *qj <= sj + lam) {
            return DominanceTime::Finite(t);
        }
    }
    DominanceTime::Empty
}

fn scan_lower(traj: &Trajectory, infl: &InflationSchedule, q: &[f64], last: usize) -> DominanceTime {
    for t in (0..=last).rev() {
        let lam = infl.before(t);
        if q.iter().zip(traj.state(t)).all(|(qj, sj)| *qj >= sj - lam) {
            return DominanceTime::Finite(t);
        }
    }
    DominanceTime::Empty
}

pub fn robust_upper_time(traj: &Trajectory, infl: &InflationSchedule, x: &[f64]) -> Result<DominanceTime> {
    check_dims(traj.dim(), x.len())?;
    Ok(scan_upper(traj, infl, x, traj.horizon()))
}

pub fn robust_lower_time(traj: &Trajectory, infl: &InflationSchedule, x: &[f64]) -> Result<DominanceTime> {
    check_dims(traj.dim(), x.len())?;
    Ok(scan_lower(traj, infl, x, traj.horizon()))
}

pub fn controlled_upper_time(traj: &Trajectory, x: &[f64]) -> Result<DominanceTime> {
    robust_upper_time(traj, &InflationSchedule::zero(), x)
}

pub fn controlled_lower_time(traj: &Trajectory, x: &[f64]) -> Result<DominanceTime> {
    robust_lower_time(traj, &InflationSchedule::zero(), x)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("tail epsilon must be finite and nonnegative, got {eps}")))
    }
}

/// Truncated robust upper value: last `t in [0, T]` with `x - eps <= x(t) + lambda_{t-1}`.
pub fn trunc_robust_upper(
    traj: &Trajectory,
    infl: &InflationSchedule,
    eps: f64,
    alpha: f64,
    x: &[f64],
) -> Result<f64> {
    check_dims(traj.dim(), x.len())?;
    check_eps(eps)?;
    check_alpha(alpha)?;
    let q: Vec<f64> = x.iter().map(|v| v - eps).collect();
    Ok(dominance_value(scan_upper(traj, infl, &q, traj.horizon()), alpha))
}

/// Truncated robust lower value: last `t in [0, T]` with `x + eps >= x(t) - lambda_{t-1}`.
pub fn trunc_robust_lower(
    traj: &Trajectory,
    infl: &InflationSchedule,
    eps: f64,
    alpha: f64,
    x: &[f64],
) -> Result<f64> {
    check_dims(traj.dim(), x.len())?;
    check_eps(eps)?;
    check_alpha(alpha)?;
    let q: Vec<f64> = x.iter().map(|v| v + eps).collect();
    Ok(dominance_value(scan_lower(traj, infl, &q, traj.horizon()), alpha))
}

/// Truncated controlled upper value over `t in [0, T-1]`. Needs `x(T) <= x(T-1)`.
pub fn trunc_controlled_upper(traj: &Trajectory, alpha: f64, x: &[f64]) -> Result<f64> {
    check_dims(traj.dim(), x.len())?;
    check_alpha(alpha)?;
    if !traj.tail().dominating.is_upper() {
        return Err(Error::TailAssumption {
            trajectory: traj.policy_id().unwrap_or("<unnamed>").to_string(),
            variant: "truncated controlled upper".into(),
        });
    }
    let t = scan_upper(traj, &InflationSchedule::zero(), x, traj.horizon() - 1);
    Ok(dominance_value(t, alpha))
}

/// Truncated controlled lower value over `t in [0, T-1]`. Needs `x(T) >= x(T-1)`.
pub fn trunc_controlled_lower(traj: &Trajectory, alpha: f64, x: &[f64]) -> Result<f64> {
    check_dims(traj.dim(), x.len())?;
    check_alpha(alpha)?;
    if !traj.tail().dominating.is_lower() {
        return Err(Error::TailAssumption {
            trajectory: traj.policy_id().unwrap_or("<unnamed>").to_string(),
            variant: "truncated controlled lower".into(),
        });
    }
    let t = scan_lower(traj, &InflationSchedule::zero(), x, traj.horizon() - 1);
    Ok(dominance_value(t, alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    RobustUpper,
    RobustLower,
    ControlledUpper,
    ControlledLower,
}

impl BasisKind {
    pub fn is_upper(self) -> bool {
        matches!(self, Self::RobustUpper | Self::ControlledUpper)
    }

    pub fn is_robust(self) -> bool {
        matches!(self, Self::RobustUpper | Self::RobustLower)
    }
}

/// One dominance function attached to a trajectory, with a precomputed
/// staircase index for fast queries.
///
/// The envelope `e(t)` is `x(t) + lambda_{t-1}` (upper) or
/// `x(t) - lambda_{t-1}` (lower) over the admissible index range. Its suffix
/// max (upper) or min (lower) is monotone in `t`, so a binary search gives the
/// last index at which the query can possibly qualify; a backward scan from
/// there finds the exact answer. For monotone trajectories the scan stops
/// immediately.
#[derive(Clone, Debug)]
pub struct DominanceBasis {
    label: String,
    kind: BasisKind,
    truncated: bool,
    alpha: f64,
    epsilon: f64,
    trajectory: Arc<Trajectory>,
    policy: Option<Arc<FeedbackPolicy>>,
    dim: usize,
    envelope: Vec<f64>,
    staircase: Vec<f64>,
}

impl DominanceBasis {
    /// Robust basis. Truncated bases need the tail epsilon.
    pub fn robust(
        label: impl Into<String>,
        trajectory: Arc<Trajectory>,
        upper: bool,
        truncated: bool,
        alpha: f64,
        inflation: &InflationSchedule,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        let label = label.into();
        check_alpha(alpha)?;
        let epsilon = match (truncated, epsilon) {
            (true, None) => return Err(Error::MissingEpsilon { trajectory: label }),
            (true, Some(e)) => {
                check_eps(e)?;
                e
            }
            (false, _) => 0.0,
        };
        let kind = if upper {
            BasisKind::RobustUpper
        } else {
            BasisKind::RobustLower
        };
        let last = trajectory.horizon();
        Ok(Self::build(label, kind, truncated, alpha, epsilon, trajectory, None, inflation, last))
    }

    /// Controlled basis for the trajectory generated by `policy`. Truncated
    /// bases require the matching dominating tail.
    pub fn controlled(
        label: impl Into<String>,
        trajectory: Arc<Trajectory>,
        upper: bool,
        truncated: bool,
        alpha: f64,
        policy: Arc<FeedbackPolicy>,
    ) -> Result<Self> {
        let label = label.into();
        check_alpha(alpha)?;
        let kind = if upper {
            BasisKind::ControlledUpper
        } else {
            BasisKind::ControlledLower
        };
        let last = if truncated {
            let tail = trajectory.tail().dominating;
            let ok = if upper { tail.is_upper() } else { tail.is_lower() };
            if !ok {
                return Err(Error::TailAssumption {
                    trajectory: label,
                    variant: format!(
                        "truncated controlled {}",
                        if upper { "upper" } else { "lower" }
                    ),
                });
            }
            trajectory.horizon() - 1
        } else {
            trajectory.horizon()
        };
        Ok(Self::build(
            label,
            kind,
            truncated,
            alpha,
            0.0,
            trajectory,
            Some(policy),
            &InflationSchedule::zero(),
            last,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        label: String,
        kind: BasisKind,
        truncated: bool,
        alpha: f64,
        epsilon: f64,
        trajectory: Arc<Trajectory>,
        policy: Option<Arc<FeedbackPolicy>>,
        inflation: &InflationSchedule,
        last: usize,
    ) -> Self {
        let dim = trajectory.dim();
        let upper = kind.is_upper();
        let mut envelope = Vec::with_capacity((last + 1) * dim);
        for t in 0..=last {
            let lam = inflation.before(t);
            envelope.extend(
                trajectory
                    .state(t)
                    .iter()
                    .map(|s| if upper { s + lam } else { s - lam }),
            );
        }
        let mut staircase = envelope.clone();
        for t in (0..last).rev() {
            for j in 0..dim {
                let next = staircase[(t + 1) * dim + j];
                let cur = &mut staircase[t * dim + j];
                *cur = if upper { cur.max(next) } else { cur.min(next) };
            }
        }
        Self {
            label,
            kind,
            truncated,
            alpha,
            epsilon,
            trajectory,
            policy,
            dim,
            envelope,
            staircase,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn is_upper(&self) -> bool {
        self.kind.is_upper()
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn trajectory(&self) -> &Arc<Trajectory> {
        &self.trajectory
    }

    pub fn policy(&self) -> Option<&Arc<FeedbackPolicy>> {
        self.policy.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Last admissible index (`T`, or `T-1` for truncated controlled bases).
    pub fn last_index(&self) -> usize {
        self.envelope.len() / self.dim - 1
    }

    /// Smallest positive value the basis can take, `1/(last+1)`.
    pub fn min_positive(&self) -> f64 {
        1.0 / (self.last_index() as f64 + 1.0)
    }

    fn query_point(&self, x: &[f64]) -> Vec<f64> {
        match (self.truncated && self.kind.is_robust(), self.is_upper()) {
            (false, _) => x.to_vec(),
            (true, true) => x.iter().map(|v| v - self.epsilon).collect(),
            (true, false) => x.iter().map(|v| v + self.epsilon).collect(),
        }
    }

    fn qualifies(&self, rows: &[f64], t: usize, q: &[f64]) -> bool {
        let e = &rows[t * self.dim..(t + 1) * self.dim];
        if self.is_upper() {
            leq(q, e)
        } else {
            leq(e, q)
        }
    }

    /// Dominance time through the staircase index.
    pub fn time(&self, x: &[f64]) -> Result<DominanceTime> {
        check_dims(self.dim, x.len())?;
        let q = self.query_point(x);
        let n_idx = self.last_index() + 1;
        // Qualification against the staircase holds on a prefix of indices.
        let (mut lo, mut hi) = (0usize, n_idx);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.qualifies(&self.staircase, mid, &q) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        for t in (0..lo).rev() {
            if self.qualifies(&self.envelope, t, &q) {
                return Ok(DominanceTime::Finite(t));
            }
        }
        Ok(DominanceTime::Empty)
    }

    /// Reference linear scan; must agree with [`Self::time`].
    pub fn time_scan(&self, x: &[f64]) -> Result<DominanceTime> {
        check_dims(self.dim, x.len())?;
        let q = self.query_point(x);
        for t in (0..=self.last_index()).rev() {
            if self.qualifies(&self.envelope, t, &q) {
                return Ok(DominanceTime::Finite(t));
            }
        }
        Ok(DominanceTime::Empty)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(dominance_value(self.time(x)?, self.alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(vals: &[f64]) -> Arc<Trajectory> {
        Arc::new(Trajectory::new(vals.iter().map(|v| vec![*v]).collect(), None, None).unwrap())
    }

    fn policy() -> Arc<FeedbackPolicy> {
        Arc::new(FeedbackPolicy::constant("k", vec![0.0]).unwrap())
    }

    #[test]
    fn lambda_examples() {
        let s = lambda_schedule(LipschitzBounds::new(0.5, 1.0, 0.1).unwrap(), 5).unwrap();
        assert!((s.at(2) - 0.175).abs() < 1e-15);
        assert_eq!(s.before(0), 0.0);
        assert_eq!(s.before(3), s.at(2));
        let zero = lambda_schedule(LipschitzBounds::new(0.5, 1.0, 0.0).unwrap(), 5).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        assert!(lambda_schedule(LipschitzBounds::new(0.5, 1.0, 0.1).unwrap(), 0).is_err());
        let unit = lambda_schedule(LipschitzBounds::new(1.0, 2.0, 0.5).unwrap(), 4).unwrap();
        assert_eq!(unit.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn lambda_bounded_and_nondecreasing_when_contractive() {
        let lip = LipschitzBounds::new(0.9, 0.3, 1.5).unwrap();
        let s = lambda_schedule(lip, 500).unwrap();
        let bound = s.supremum();
        assert!((bound - 0.3 * 1.5 / 0.1).abs() < 1e-12);
        for w in s.values().windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert!(s.values().iter().all(|v| *v <= bound));
    }

    #[test]
    fn scalar_time_examples() {
        let tr = scalar(&[4.0, 3.0, 2.0, 1.0]);
        let z = InflationSchedule::zero();
        assert_eq!(robust_upper_time(&tr, &z, &[2.5]).unwrap(), DominanceTime::Finite(1));
        assert_eq!(robust_upper_time(&tr, &z, &[5.0]).unwrap(), DominanceTime::Empty);
        assert_eq!(robust_upper_time(&tr, &z, &[1.0]).unwrap(), DominanceTime::Finite(3));
        assert_eq!(robust_lower_time(&tr, &z, &[2.5]).unwrap(), DominanceTime::Finite(3));
        assert_eq!(robust_lower_time(&tr, &z, &[0.5]).unwrap(), DominanceTime::Empty);
        assert_eq!(robust_lower_time(&tr, &z, &[4.0]).unwrap(), DominanceTime::Finite(3));
        assert!(robust_upper_time(&tr, &z, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn value_cases() {
        assert_eq!(dominance_value(DominanceTime::Finite(4), 2.0), 0.2);
        assert_eq!(dominance_value(DominanceTime::Empty, 2.0), 2.0);
        assert_eq!(dominance_value(DominanceTime::Finite(0), 2.0), 1.0);
        assert_eq!(dominance_value(DominanceTime::Infinite, 2.0), 0.0);
    }

    #[test]
    fn controlled_two_dimensional_examples() {
        let tr = Trajectory::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], None, None)
            .unwrap();
        assert_eq!(controlled_upper_time(&tr, &[0.5, 0.5]).unwrap(), DominanceTime::Empty);
        assert_eq!(controlled_upper_time(&tr, &[0.0, 0.0]).unwrap(), DominanceTime::Finite(2));
        let scalar_tr = scalar(&[4.0, 3.0, 2.0, 1.0]);
        let z = InflationSchedule::zero();
        for x in [0.5, 1.5, 2.5, 3.5, 4.5] {
            assert_eq!(
                controlled_upper_time(&scalar_tr, &[x]).unwrap(),
                robust_upper_time(&scalar_tr, &z, &[x]).unwrap()
            );
        }
    }

    #[test]
    fn truncated_robust_examples() {
        let z = InflationSchedule::zero();
        let down = scalar(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(trunc_robust_upper(&down, &z, 1.0, 2.0, &[2.5]).unwrap(), 1.0 / 3.0);
        let up = scalar(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(trunc_robust_lower(&up, &z, 1.0, 2.0, &[2.5]).unwrap(), 1.0 / 3.0);
        for x in [0.5, 2.5, 5.0] {
            assert_eq!(
                trunc_robust_upper(&down, &z, 0.0, 2.0, &[x]).unwrap(),
                dominance_value(robust_upper_time(&down, &z, &[x]).unwrap(), 2.0)
            );
            assert_eq!(
                trunc_robust_lower(&down, &z, 0.0, 2.0, &[x]).unwrap(),
                dominance_value(robust_lower_time(&down, &z, &[x]).unwrap(), 2.0)
            );
        }
        assert!(trunc_robust_upper(&down, &z, -1.0, 2.0, &[1.0]).is_err());
        assert!(trunc_robust_upper(&down, &z, 0.0, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn truncated_controlled_examples() {
        let down = scalar(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(trunc_controlled_upper(&down, 2.0, &[1.0]).unwrap(), 1.0 / 3.0);
        assert!(trunc_controlled_lower(&down, 2.0, &[1.0]).is_err());
        let up = scalar(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            trunc_controlled_upper(&up, 2.0, &[1.0]),
            Err(Error::TailAssumption { .. })
        ));
        assert_eq!(trunc_controlled_lower(&up, 2.0, &[4.0]).unwrap(), 1.0 / 3.0);
        let flat = scalar(&[2.0, 2.0, 2.0]);
        assert!(trunc_controlled_upper(&flat, 2.0, &[1.0]).is_ok());
        assert!(trunc_controlled_lower(&flat, 2.0, &[3.0]).is_ok());
        assert!(DominanceBasis::controlled("up", up, true, true, 2.0, policy()).is_err());
    }

    #[test]
    fn basis_matches_free_functions() {
        let tr = scalar(&[4.0, 3.0, 2.0, 1.0]);
        let z = InflationSchedule::zero();
        let b = DominanceBasis::robust("t", tr.clone(), true, true, 2.0, &z, Some(1.0)).unwrap();
        assert_eq!(b.value(&[2.5]).unwrap(), 1.0 / 3.0);
        let c = DominanceBasis::controlled("t", tr.clone(), true, true, 2.0, policy()).unwrap();
        assert_eq!(c.last_index(), 2);
        assert_eq!(c.value(&[1.0]).unwrap(), 1.0 / 3.0);
        assert!(matches!(
            DominanceBasis::robust("t", tr, true, true, 2.0, &z, None),
            Err(Error::MissingEpsilon { .. })
        ));
    }

    fn arb_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, bool, f64)> {
        (1usize..4, 0usize..40).prop_flat_map(|(n, t)| {
            let coord = prop_oneof![(-4i32..=4).prop_map(|v| v as f64 * 0.5), -2.0f64..2.0];
            let states = prop::collection::vec(prop::collection::vec(coord.clone(), n), t + 1);
            let x = prop::collection::vec(coord, n);
            (states, x, any::<bool>(), prop_oneof![Just(0.0), 0.0f64..0.2])
        })
    }

    proptest! {
        #[test]
        fn staircase_agrees_with_scan((states, x, upper, dw) in arb_case()) {
            let horizon = states.len() - 1;
            let tr = Arc::new(Trajectory::new(states, None, None).unwrap());
            let infl = if horizon == 0 {
                InflationSchedule::zero()
            } else {
                lambda_schedule(LipschitzBounds::new(0.7, 1.0, dw).unwrap(), horizon).unwrap()
            };
            for truncated in [false, true] {
                let b = DominanceBasis::robust("p", tr.clone(), upper, truncated, 2.0, &infl, Some(0.1)).unwrap();
                prop_assert_eq!(b.time(&x).unwrap(), b.time_scan(&x).unwrap());
            }
            let free = if upper { robust_upper_time(&tr, &infl, &x) } else { robust_lower_time(&tr, &infl, &x) };
            let b = DominanceBasis::robust("p", tr.clone(), upper, false, 2.0, &infl, None).unwrap();
            prop_assert_eq!(b.time(&x).unwrap(), free.unwrap());
        }

        #[test]
        fn monotone_in_query((states, x, upper, _dw) in arb_case(), bump in prop::collection::vec(0.0f64..1.0, 3)) {
            let tr = Arc::new(Trajectory::new(states, None, None).unwrap());
            let y: Vec<f64> = x.iter().zip(&bump).map(|(a, b)| a + b).collect();
            let b = DominanceBasis::robust("p", tr, upper, true, 2.0, &InflationSchedule::zero(), Some(0.05)).unwrap();
            let (vx, vy) = (b.value(&x).unwrap(), b.value(&y).unwrap());
            if upper { prop_assert!(vx <= vy); } else { prop_assert!(vx >= vy); }
            for v in [vx, vy] {
                prop_assert!(v == 0.0 || (v > 0.0 && v <= 1.0) || v == 2.0);
            }
        }
    }
}
