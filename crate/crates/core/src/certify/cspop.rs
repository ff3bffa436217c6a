use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constraints::{ConstraintRow, ConstraintSystem, RowFamily, RowSense, SystemMeta};
use super::rspop::sign_rows;
use super::{CertificateMode, CertificateTemplate};
use crate::dominance::{check_alpha, DominanceBasis};
use crate::error::{Error, Result};
use crate::order::{check_dims, leq, BoxRegion};
use crate::partition::{CellIndex, CoverSets, GridPartition};
use crate::systems::{FeedbackPolicy, Trajectory};

/// Lower bound imposed on in-pattern weights so that the solved support is
/// exactly the pattern.
pub const SUPPORT_FLOOR: f64 = 1e-6;

const CHUNK: usize = 4096;

/// Which upper (`kp`) and lower (`kq`) weights may be nonzero. Indices are
/// zero-based; they print one-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportPattern {
    pub kp: Vec<usize>,
    pub kq: Vec<usize>,
}

impl SupportPattern {
    pub fn new(mut kp: Vec<usize>, mut kq: Vec<usize>, n: usize) -> Result<Self> {
        kp.sort_unstable();
        kp.dedup();
        kq.sort_unstable();
        kq.dedup();
        if kp.iter().chain(&kq).any(|k| *k >= n) {
            return Err(Error::invalid(format!("pattern index out of range for {n} trajectories")));
        }
        Ok(Self { kp, kq })
    }

    pub fn size(&self) -> usize {
        self.kp.len() + self.kq.len()
    }

    /// All `4^n` patterns ordered by size, then by bit mask.
    pub fn enumerate(n: usize) -> Vec<Self> {
        let full = 1usize << (2 * n);
        let mut masks: Vec<usize> = (0..full).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        masks
            .into_iter()
            .map(|m| Self {
                kp: (0..n).filter(|k| m >> k & 1 == 1).collect(),
                kq: (0..n).filter(|k| m >> (n + k) & 1 == 1).collect(),
            })
            .collect()
    }
}

impl fmt::Display for SupportPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |ks: &[usize]| ks.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(",");
        write!(f, "Kp={{{}}} Kq={{{}}}", list(&self.kp), list(&self.kq))
    }
}

/// Per-cell compatibility of the policies selected by a pattern:
/// `pi_q(lo) <= pi_p(hi)` for every `q in Kq`, `p in Kp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub pattern: SupportPattern,
    pub cells_checked: usize,
    pub compatible: bool,
    pub failing_count: usize,
    /// First few failing cells (linear indices).
    pub failing_cells: Vec<usize>,
    /// Cells where the compatibility test and the controller-box
    /// nonemptiness test disagree; only possible for state-dependent policies.
    pub convention_disagreements: usize,
}

fn eval_all(policies: &[Arc<FeedbackPolicy>], ks: &[usize], x: &[f64]) -> Result<Vec<Vec<f64>>> {
    ks.iter().map(|k| policies[*k].eval(x)).collect()
}

/// Box `[max_q pi_q(hi), min_p pi_p(lo)]` clipped to the input set, or `None`
/// when empty.
fn cell_box(
    policies: &[Arc<FeedbackPolicy>],
    pattern: &SupportPattern,
    input_set: &BoxRegion,
    lo: &[f64],
    hi: &[f64],
) -> Result<Option<BoxRegion>> {
    let mut lower = input_set.lower().to_vec();
    let mut upper = input_set.upper().to_vec();
    for u in eval_all(policies, &pattern.kq, hi)? {
        for (l, v) in lower.iter_mut().zip(&u) {
            *l = l.max(*v);
        }
    }
    for u in eval_all(policies, &pattern.kp, lo)? {
        for (h, v) in upper.iter_mut().zip(&u) {
            *h = h.min(*v);
        }
    }
    if leq(&lower, &upper) {
        Ok(Some(BoxRegion::new(lower, upper)?))
    } else {
        Ok(None)
    }
}

fn compatible_at(
    policies: &[Arc<FeedbackPolicy>],
    pattern: &SupportPattern,
    lo: &[f64],
    hi: &[f64],
) -> Result<bool> {
    let qs = eval_all(policies, &pattern.kq, lo)?;
    let ps = eval_all(policies, &pattern.kp, hi)?;
    Ok(qs.iter().all(|q| ps.iter().all(|p| leq(q, p))))
}

/// Streams every grid cell in parallel chunks and returns per-chunk results
/// in cell order.
fn for_all_cells<T: Send>(
    partition: &GridPartition,
    f: impl Fn(usize, &[f64], &[f64]) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let total = partition.cell_count();
    let chunks: Vec<usize> = (0..total.div_ceil(CHUNK)).collect();
    let parts: Vec<Vec<T>> = chunks
        .par_iter()
        .map(|c| {
            let start = c * CHUNK;
            partition
                .iter_range(start..start + CHUNK)
                .enumerate()
                .map(|(i, cell)| {
                    let (lo, hi) = partition.corners_unchecked(&cell.0);
                    f(start + i, &lo, &hi)
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Admissible inputs per cell for a solved pattern.
#[derive(Clone, Debug)]
pub struct ControllerSet {
    partition: GridPartition,
    input_set: BoxRegion,
    pattern: SupportPattern,
    policies: Vec<Arc<FeedbackPolicy>>,
    uniform: Option<BoxRegion>,
}

impl ControllerSet {
    pub fn pattern(&self) -> &SupportPattern {
        &self.pattern
    }

    pub fn partition(&self) -> &GridPartition {
        &self.partition
    }

    pub fn input_set(&self) -> &BoxRegion {
        &self.input_set
    }

    /// The common box when every cell has the same one.
    pub fn uniform_box(&self) -> Option<&BoxRegion> {
        self.uniform.as_ref()
    }

    pub fn cell_box(&self, cell: &CellIndex) -> Result<BoxRegion> {
        if let Some(b) = &self.uniform {
            self.partition.linear_index(cell)?;
            return Ok(b.clone());
        }
        let (lo, hi) = self.partition.cell_corners(cell)?;
        cell_box(&self.policies, &self.pattern, &self.input_set, &lo, &hi)?
            .ok_or_else(|| Error::EmptyControllerSet { cell: cell.0.clone() })
    }

    /// Box of the cell containing `x`.
    pub fn box_at(&self, x: &[f64]) -> Result<BoxRegion> {
        self.cell_box(&self.partition.locate(x)?)
    }
}

/// Builds the controller set and checks it is nonempty on every grid cell.
pub fn controller_set(
    pattern: &SupportPattern,
    policies: &[Arc<FeedbackPolicy>],
    partition: &GridPartition,
    input_set: &BoxRegion,
) -> Result<ControllerSet> {
    if pattern.kp.iter().chain(&pattern.kq).any(|k| *k >= policies.len()) {
        return Err(Error::invalid("pattern refers to a missing policy"));
    }
    let boxes = for_all_cells(partition, |i, lo, hi| {
        cell_box(policies, pattern, input_set, lo, hi)?.ok_or_else(|| Error::EmptyControllerSet {
            cell: partition.multi_index(i).map(|c| c.0).unwrap_or_default(),
        })
    })?;
    let uniform = match boxes.first() {
        Some(first) if boxes.iter().all(|b| b == first) => Some(first.clone()),
        _ => None,
    };
    Ok(ControllerSet {
        partition: partition.clone(),
        input_set: input_set.clone(),
        pattern: pattern.clone(),
        policies: policies.to_vec(),
        uniform,
    })
}

/// The input in the cell's box closest (sup norm) to `nominal`, or the box
/// center without a nominal input.
pub fn select_control(cset: &ControllerSet, cell: &CellIndex, nominal: Option<&[f64]>) -> Result<Vec<f64>> {
    let b = cset.cell_box(cell)?;
    match nominal {
        Some(u) => {
            check_dims(b.dim(), u.len())?;
            Ok(b.clamp(u))
        }
        None => Ok(b.center()),
    }
}

struct CellCache {
    cell: usize,
    /// Upper bases at the corner that matters for this row family.
    upper: Vec<Option<f64>>,
    lower: Vec<Option<f64>>,
}

/// The controlled synthesis program for a fixed trajectory set. Basis values
/// at the relevant cell corners are computed once and shared by all patterns.
pub struct CspopProblem {
    policies: Vec<Arc<FeedbackPolicy>>,
    upper: Vec<Option<DominanceBasis>>,
    lower: Vec<Option<DominanceBasis>>,
    placeholder_upper: Vec<DominanceBasis>,
    placeholder_lower: Vec<DominanceBasis>,
    partition: GridPartition,
    input_set: BoxRegion,
    alpha: f64,
    delta_u: f64,
    horizons: Vec<usize>,
    initial: Vec<CellCache>,
    unsafe_cells: Vec<CellCache>,
}

impl CspopProblem {
    pub fn new(
        trajs: &[Arc<Trajectory>],
        policies: &[Arc<FeedbackPolicy>],
        partition: &GridPartition,
        covers: &CoverSets,
        input_set: &BoxRegion,
        alpha: f64,
        delta_u: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if !(delta_u > 0.0 && delta_u.is_finite()) {
            return Err(Error::invalid("unsafe margin delta_u must be positive"));
        }
        if trajs.is_empty() || trajs.len() != policies.len() {
            return Err(Error::invalid("need one policy per trajectory and at least one trajectory"));
        }
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        let mut placeholder_upper = Vec::new();
        let mut placeholder_lower = Vec::new();
        for (k, (tr, pol)) in trajs.iter().zip(policies).enumerate() {
            let label = format!("trajectory {}", k + 1);
            check_dims(partition.dim(), tr.dim())?;
            check_dims(input_set.dim(), pol.input_dim())?;
            if !pol.is_monotone() {
                return Err(Error::invalid(format!("policy `{}` is not declared monotone", pol.id())));
            }
            if let Some(id) = tr.policy_id() {
                if id != pol.id() {
                    return Err(Error::invalid(format!(
                        "{label} was generated by policy `{id}`, not `{}`",
                        pol.id()
                    )));
                }
            }
            if tr.horizon() == 0 {
                return Err(Error::invalid(format!("{label} has zero horizon")));
            }
            upper.push(DominanceBasis::controlled(&label, tr.clone(), true, true, alpha, pol.clone()).ok());
            lower.push(DominanceBasis::controlled(&label, tr.clone(), false, true, alpha, pol.clone()).ok());
            placeholder_upper.push(DominanceBasis::controlled(&label, tr.clone(), true, false, alpha, pol.clone())?);
            placeholder_lower.push(DominanceBasis::controlled(&label, tr.clone(), false, false, alpha, pol.clone())?);
        }
        let eval_cells = |cells: &[CellIndex], initial: bool| -> Result<Vec<CellCache>> {
            cells
                .par_iter()
                .map(|cell| {
                    let (lo, hi) = partition.cell_corners(cell)?;
                    // Initial rows bound B from above: upper bases at hi, lower at lo.
                    let (xu, yl) = if initial { (&hi, &lo) } else { (&lo, &hi) };
                    Ok(CellCache {
                        cell: partition.linear_index(cell)?,
                        upper: upper.iter().map(|b| b.as_ref().map(|b| b.value(xu)).transpose()).collect::<Result<_>>()?,
                        lower: lower.iter().map(|b| b.as_ref().map(|b| b.value(yl)).transpose()).collect::<Result<_>>()?,
                    })
                })
                .collect()
        };
        let initial = eval_cells(&covers.initial, true)?;
        let unsafe_cells = eval_cells(&covers.unsafe_cells, false)?;
        Ok(Self {
            policies: policies.to_vec(),
            horizons: trajs.iter().map(|t| t.horizon()).collect(),
            upper,
            lower,
            placeholder_upper,
            placeholder_lower,
            partition: partition.clone(),
            input_set: input_set.clone(),
            alpha,
            delta_u,
            initial,
            unsafe_cells,
        })
    }

    pub fn n_bases(&self) -> usize {
        self.policies.len()
    }

    pub fn policies(&self) -> &[Arc<FeedbackPolicy>] {
        &self.policies
    }

    pub fn partition(&self) -> &GridPartition {
        &self.partition
    }

    pub fn input_set(&self) -> &BoxRegion {
        &self.input_set
    }

    /// Refusal if a pattern member lacks the dominating tail its basis needs.
    pub fn check_tails(&self, pattern: &SupportPattern) -> Result<()> {
        for &k in &pattern.kp {
            if self.upper[k].is_none() {
                return Err(Error::TailAssumption {
                    trajectory: format!("trajectory {}", k + 1),
                    variant: "truncated controlled upper".into(),
                });
            }
        }
        for &k in &pattern.kq {
            if self.lower[k].is_none() {
                return Err(Error::TailAssumption {
                    trajectory: format!("trajectory {}", k + 1),
                    variant: "truncated controlled lower".into(),
                });
            }
        }
        Ok(())
    }

    /// Checks policy compatibility on every grid cell.
    pub fn compatibility(&self, pattern: &SupportPattern) -> Result<CompatibilityReport> {
        let results = for_all_cells(&self.partition, |i, lo, hi| {
            let ok = compatible_at(&self.policies, pattern, lo, hi)?;
            let nonempty = cell_box(&self.policies, pattern, &self.input_set, lo, hi)?.is_some();
            Ok((i, ok, ok != nonempty))
        })?;
        let failing: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
        Ok(CompatibilityReport {
            pattern: pattern.clone(),
            cells_checked: results.len(),
            compatible: failing.is_empty(),
            failing_count: failing.len(),
            failing_cells: failing.into_iter().take(16).collect(),
            convention_disagreements: results.iter().filter(|r| r.2).count(),
        })
    }

    /// Rows for one pattern: initial cells `B(hi, lo) <= 0`, unsafe cells
    /// `B(lo, hi) >= delta_u`, sign rows, then pattern rows pinning
    /// out-of-pattern weights to 0 and flooring in-pattern weights.
    pub fn assemble(&self, pattern: &SupportPattern) -> Result<ConstraintSystem> {
        self.check_tails(pattern)?;
        let n = self.n_bases();
        let row = |c: &CellCache, family, sense, rhs| {
            let mut coeffs = vec![0.0; 2 * n + 1];
            coeffs[0] = 1.0;
            for &k in &pattern.kp {
                coeffs[1 + k] = c.upper[k].expect("tail checked");
            }
            for &k in &pattern.kq {
                coeffs[1 + n + k] = c.lower[k].expect("tail checked");
            }
            ConstraintRow {
                family,
                cell: Some(c.cell),
                coeffs,
                sense,
                rhs,
            }
        };
        let mut rows: Vec<ConstraintRow> = self
            .initial
            .iter()
            .map(|c| row(c, RowFamily::Initial, RowSense::Le, 0.0))
            .collect();
        rows.extend(
            self.unsafe_cells
                .iter()
                .map(|c| row(c, RowFamily::Unsafe, RowSense::Ge, self.delta_u)),
        );
        rows.extend(sign_rows(n));
        for j in 1..=2 * n {
            let (k, set) = if j <= n { (j - 1, &pattern.kp) } else { (j - 1 - n, &pattern.kq) };
            let mut coeffs = vec![0.0; 2 * n + 1];
            coeffs[j] = 1.0;
            let (sense, rhs) = if set.contains(&k) {
                (RowSense::Ge, SUPPORT_FLOOR)
            } else {
                (RowSense::Eq, 0.0)
            };
            rows.push(ConstraintRow {
                family: RowFamily::Pattern,
                cell: None,
                coeffs,
                sense,
                rhs,
            });
        }
        Ok(ConstraintSystem {
            n_bases: n,
            rows,
            meta: SystemMeta {
                mode: CertificateMode::Controlled,
                alpha: self.alpha,
                delta_u: self.delta_u,
                horizons: self.horizons.clone(),
                epsilons: vec![0.0; n],
                pattern: Some(pattern.clone()),
            },
        })
    }

    /// Whether trajectory `k` may carry an upper (resp. lower) weight.
    pub fn has_upper(&self, k: usize) -> bool {
        self.upper[k].is_some()
    }

    pub fn has_lower(&self, k: usize) -> bool {
        self.lower[k].is_some()
    }

    /// Whether upper weight `kp` and lower weight `kq` can be active
    /// together: policy compatibility and a nonempty controller box on every
    /// cell. Both conditions decompose over such pairs.
    pub fn pair_compatible(&self, kp: usize, kq: usize) -> Result<bool> {
        let pair = SupportPattern {
            kp: vec![kp],
            kq: vec![kq],
        };
        let report = self.compatibility(&pair)?;
        Ok(report.compatible && report.convention_disagreements == 0)
    }

    /// Initial, unsafe and sign rows with every admissible basis present;
    /// weights whose tail assumption fails get zero coefficients.
    pub fn assemble_full(&self) -> ConstraintSystem {
        let n = self.n_bases();
        let row = |c: &CellCache, family, sense, rhs| {
            let mut coeffs = vec![0.0; 2 * n + 1];
            coeffs[0] = 1.0;
            for k in 0..n {
                coeffs[1 + k] = c.upper[k].unwrap_or(0.0);
                coeffs[1 + n + k] = c.lower[k].unwrap_or(0.0);
            }
            ConstraintRow {
                family,
                cell: Some(c.cell),
                coeffs,
                sense,
                rhs,
            }
        };
        let mut rows: Vec<ConstraintRow> = self
            .initial
            .iter()
            .map(|c| row(c, RowFamily::Initial, RowSense::Le, 0.0))
            .collect();
        rows.extend(
            self.unsafe_cells
                .iter()
                .map(|c| row(c, RowFamily::Unsafe, RowSense::Ge, self.delta_u)),
        );
        rows.extend(sign_rows(n));
        ConstraintSystem {
            n_bases: n,
            rows,
            meta: SystemMeta {
                mode: CertificateMode::Controlled,
                alpha: self.alpha,
                delta_u: self.delta_u,
                horizons: self.horizons.clone(),
                epsilons: vec![0.0; n],
                pattern: None,
            },
        }
    }

    /// Template for a pattern; out-of-pattern slots hold untruncated bases
    /// that are never evaluated because their weights are zero.
    pub fn template(&self, pattern: &SupportPattern) -> Result<CertificateTemplate> {
        self.check_tails(pattern)?;
        let pick = |k: usize, upper: bool| -> DominanceBasis {
            let (real, placeholder, set) = if upper {
                (&self.upper, &self.placeholder_upper, &pattern.kp)
            } else {
                (&self.lower, &self.placeholder_lower, &pattern.kq)
            };
            if set.contains(&k) {
                real[k].clone().expect("tail checked")
            } else {
                placeholder[k].clone()
            }
        };
        let n = self.n_bases();
        CertificateTemplate::new(
            CertificateMode::Controlled,
            (0..n).map(|k| pick(k, true)).collect(),
            (0..n).map(|k| pick(k, false)).collect(),
        )
    }

    pub fn controller_set(&self, pattern: &SupportPattern) -> Result<ControllerSet> {
        controller_set(pattern, &self.policies, &self.partition, &self.input_set)
    }
}

/// Assembles C-SpOP for one pattern and reports policy compatibility. An
/// incompatible pattern is returned with its report so callers can skip the LP.
#[allow(clippy::too_many_arguments)]
pub fn assemble_cspop(
    trajs: &[Arc<Trajectory>],
    policies: &[Arc<FeedbackPolicy>],
    partition: &GridPartition,
    covers: &CoverSets,
    input_set: &BoxRegion,
    alpha: f64,
    delta_u: f64,
    pattern: &SupportPattern,
) -> Result<(ConstraintSystem, CompatibilityReport)> {
    let problem = CspopProblem::new(trajs, policies, partition, covers, input_set, alpha, delta_u)?;
    let report = problem.compatibility(pattern)?;
    Ok((problem.assemble(pattern)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::RegionSpec;
    use crate::partition::build_partition;

    fn input_set() -> BoxRegion {
        BoxRegion::new(vec![0.0, 0.1], vec![10.0, 0.9]).unwrap()
    }

    fn grid() -> GridPartition {
        build_partition(&BoxRegion::cube(2, 0.0, 10.0).unwrap(), 1.0).unwrap()
    }

    fn traffic_policies() -> Vec<Arc<FeedbackPolicy>> {
        vec![
            Arc::new(FeedbackPolicy::constant("p1", vec![9.0, 0.6]).unwrap()),
            Arc::new(FeedbackPolicy::constant("p2", vec![9.0, 0.5]).unwrap()),
        ]
    }

    #[test]
    fn pattern_enumeration_order() {
        let all = SupportPattern::enumerate(2);
        assert_eq!(all.len(), 16);
        assert_eq!(all[0].size(), 0);
        assert!(all.windows(2).all(|w| w[0].size() <= w[1].size()));
        assert_eq!(all[1], SupportPattern::new(vec![0], vec![], 2).unwrap());
        assert_eq!(SupportPattern::new(vec![0], vec![1], 2).unwrap().to_string(), "Kp={1} Kq={2}");
        assert!(SupportPattern::new(vec![2], vec![], 2).is_err());
    }

    #[test]
    fn traffic_controller_boxes() {
        let pol = traffic_policies();
        let p = SupportPattern::new(vec![0], vec![1], 2).unwrap();
        let cs = controller_set(&p, &pol, &grid(), &input_set()).unwrap();
        let expected = BoxRegion::new(vec![9.0, 0.5], vec![9.0, 0.6]).unwrap();
        assert_eq!(cs.uniform_box(), Some(&expected));
        let cell = CellIndex(vec![3, 7]);
        assert_eq!(select_control(&cs, &cell, Some(&[9.0, 0.9])).unwrap(), vec![9.0, 0.6]);
        assert_eq!(select_control(&cs, &cell, Some(&[9.0, 0.55])).unwrap(), vec![9.0, 0.55]);
        assert_eq!(select_control(&cs, &cell, None).unwrap(), vec![9.0, 0.55]);

        let swapped = SupportPattern::new(vec![1], vec![0], 2).unwrap();
        assert!(matches!(
            controller_set(&swapped, &pol, &grid(), &input_set()),
            Err(Error::EmptyControllerSet { .. })
        ));
        let none = SupportPattern::new(vec![], vec![], 2).unwrap();
        assert_eq!(controller_set(&none, &pol, &grid(), &input_set()).unwrap().uniform_box(), Some(&input_set()));
        let same = SupportPattern::new(vec![0], vec![0], 2).unwrap();
        let single = controller_set(&same, &pol, &grid(), &input_set()).unwrap();
        assert_eq!(single.uniform_box().unwrap().lower(), single.uniform_box().unwrap().upper());
    }

    #[test]
    fn boxes_shrink_as_pattern_grows() {
        let u = input_set();
        let pol: Vec<Arc<FeedbackPolicy>> = vec![
            Arc::new(FeedbackPolicy::affine("a", vec![5.0, 0.5], vec![vec![0.1, 0.0], vec![0.0, 0.01]], u.clone()).unwrap()),
            Arc::new(FeedbackPolicy::affine("b", vec![4.0, 0.2], vec![vec![0.0, 0.1], vec![0.01, 0.0]], u.clone()).unwrap()),
        ];
        let g = grid();
        let small = SupportPattern::new(vec![0], vec![], 2).unwrap();
        let big = SupportPattern::new(vec![0], vec![1], 2).unwrap();
        for cell in g.iter_cells() {
            let (lo, hi) = g.cell_corners(&cell).unwrap();
            let a = cell_box(&pol, &small, &u, &lo, &hi).unwrap().unwrap();
            if let Some(b) = cell_box(&pol, &big, &u, &lo, &hi).unwrap() {
                assert!(a.contains_box(&b));
            }
        }
    }

    fn traffic_trajs() -> Vec<Arc<Trajectory>> {
        // Short synthetic stand-ins with the right tails: the first decreases,
        // the second increases.
        let down = Trajectory::new(vec![vec![9.5, 9.9], vec![8.0, 8.0], vec![3.0, 1.0], vec![2.5, 0.9]], None, Some("p1".into())).unwrap();
        let up = Trajectory::new(vec![vec![0.1, 0.3], vec![1.0, 0.25], vec![2.0, 0.5], vec![2.2, 0.6]], None, Some("p2".into())).unwrap();
        vec![Arc::new(down), Arc::new(up)]
    }

    fn traffic_covers(g: &GridPartition) -> CoverSets {
        CoverSets::new(
            g,
            &RegionSpec::single(BoxRegion::cube(2, 4.0, 6.0).unwrap()),
            &RegionSpec::new(vec![
                BoxRegion::cube(2, 0.0, 1.0).unwrap(),
                BoxRegion::new(vec![0.0, 9.0], vec![10.0, 10.0]).unwrap(),
                BoxRegion::new(vec![9.0, 0.0], vec![10.0, 10.0]).unwrap(),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn compatibility_reports() {
        let g = grid();
        let covers = traffic_covers(&g);
        let problem = CspopProblem::new(&traffic_trajs(), &traffic_policies(), &g, &covers, &input_set(), 2.0, 1e-6).unwrap();
        let good = problem.compatibility(&SupportPattern::new(vec![0], vec![1], 2).unwrap()).unwrap();
        assert!(good.compatible);
        assert_eq!(good.cells_checked, 100);
        assert_eq!(good.convention_disagreements, 0);
        let bad = problem.compatibility(&SupportPattern::new(vec![1], vec![0], 2).unwrap()).unwrap();
        assert!(!bad.compatible);
        assert_eq!(bad.failing_count, 100);
    }

    #[test]
    fn pattern_rows_and_tail_refusal() {
        let g = grid();
        let covers = traffic_covers(&g);
        let problem = CspopProblem::new(&traffic_trajs(), &traffic_policies(), &g, &covers, &input_set(), 2.0, 1e-6).unwrap();
        let p = SupportPattern::new(vec![0], vec![1], 2).unwrap();
        let sys = problem.assemble(&p).unwrap();
        assert_eq!(sys.count(RowFamily::Initial), 4);
        assert_eq!(sys.count(RowFamily::Unsafe), 20);
        assert_eq!(sys.count(RowFamily::Pattern), 4);
        // b2 and c1 are pinned, b1 and c2 floored.
        let pins: Vec<_> = sys.rows.iter().filter(|r| r.family == RowFamily::Pattern).map(|r| (r.sense, r.rhs)).collect();
        assert_eq!(pins, vec![(RowSense::Ge, SUPPORT_FLOOR), (RowSense::Eq, 0.0), (RowSense::Eq, 0.0), (RowSense::Ge, SUPPORT_FLOOR)]);
        // Trajectory 2 rises at the end, so it cannot carry an upper basis.
        let wrong = SupportPattern::new(vec![1], vec![], 2).unwrap();
        assert!(matches!(problem.assemble(&wrong), Err(Error::TailAssumption { .. })));
        assert!(problem.template(&p).is_ok());
    }

    #[test]
    fn mismatched_policy_id_rejected() {
        let g = grid();
        let covers = traffic_covers(&g);
        let mut pol = traffic_policies();
        pol.swap(0, 1);
        assert!(CspopProblem::new(&traffic_trajs(), &pol, &g, &covers, &input_set(), 2.0, 1e-6).is_err());
    }
}
