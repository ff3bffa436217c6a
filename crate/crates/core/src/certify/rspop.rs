use std::sync::Arc;

use rayon::prelude::*;

use super::constraints::{ConstraintRow, ConstraintSystem, RowFamily, RowSense, SystemMeta};
use super::{CertificateMode, CertificateTemplate};
use crate::dominance::{check_alpha, lambda_schedule, DominanceBasis, InflationSchedule};
use crate::error::{Error, Result};
use crate::order::shifted;
use crate::partition::{CoverSets, GridPartition};
use crate::systems::{LipschitzBounds, Trajectory};

/// Extra tail slack `L_w D_w L_x^T / (1 - L_x)`: how much the inflation can
/// still grow after the last stored index. Zero without disturbances;
/// unbounded (an error) when `L_x >= 1`.
pub fn tail_allowance(lip: &LipschitzBounds, horizon: usize) -> Result<f64> {
    if lip.d_w == 0.0 {
        return Ok(0.0);
    }
    if lip.l_x >= 1.0 {
        return Err(Error::invalid(format!(
            "with disturbances (D_w = {}) the inflation is unbounded unless L_x < 1 (got {})",
            lip.d_w, lip.l_x
        )));
    }
    Ok(lip.l_w * lip.d_w * lip.l_x.powf(horizon as f64) / (1.0 - lip.l_x))
}

/// Truncated robust bases for each trajectory, plus the effective tail
/// epsilon (stored epsilon plus [`tail_allowance`]) each one uses.
/// `lip = None` means disturbance-free data.
pub fn robust_bases(
    trajs: &[Arc<Trajectory>],
    lip: Option<&LipschitzBounds>,
    alpha: f64,
) -> Result<(Vec<DominanceBasis>, Vec<DominanceBasis>, Vec<f64>)> {
    check_alpha(alpha)?;
    if trajs.is_empty() {
        return Err(Error::invalid("at least one trajectory is required"));
    }
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut eps = Vec::new();
    for (k, tr) in trajs.iter().enumerate() {
        let label = format!("trajectory {}", k + 1);
        let stored = tr
            .tail()
            .epsilon
            .ok_or_else(|| Error::MissingEpsilon { trajectory: label.clone() })?;
        let (infl, extra) = match lip {
            Some(l) if tr.horizon() > 0 => (lambda_schedule(*l, tr.horizon())?, tail_allowance(l, tr.horizon())?),
            Some(l) => (InflationSchedule::zero(), tail_allowance(l, 0)?),
            None => (InflationSchedule::zero(), 0.0),
        };
        let e = stored + extra;
        upper.push(DominanceBasis::robust(&label, tr.clone(), true, true, alpha, &infl, Some(e))?);
        lower.push(DominanceBasis::robust(&label, tr.clone(), false, true, alpha, &infl, Some(e))?);
        eps.push(e);
    }
    Ok((upper, lower, eps))
}

/// The robust synthesis program: the assembled rows and the template their
/// solutions plug into.
#[derive(Clone, Debug)]
pub struct RspopProblem {
    pub template: CertificateTemplate,
    pub partition: GridPartition,
    pub covers: CoverSets,
    pub alpha: f64,
    pub delta_u: f64,
    pub epsilons: Vec<f64>,
}

impl RspopProblem {
    pub fn new(
        trajs: &[Arc<Trajectory>],
        lip: Option<&LipschitzBounds>,
        partition: &GridPartition,
        covers: &CoverSets,
        alpha: f64,
        delta_u: f64,
    ) -> Result<Self> {
        if !(delta_u > 0.0 && delta_u.is_finite()) {
            return Err(Error::invalid("unsafe margin delta_u must be positive"));
        }
        let (upper, lower, epsilons) = robust_bases(trajs, lip, alpha)?;
        let template = CertificateTemplate::new(CertificateMode::Robust, upper, lower)?;
        if template.dim() != partition.dim() {
            return Err(Error::DimensionMismatch {
                expected: partition.dim(),
                found: template.dim(),
            });
        }
        Ok(Self {
            template,
            partition: partition.clone(),
            covers: covers.clone(),
            alpha,
            delta_u,
            epsilons,
        })
    }

    /// Rows, in order: one per initial cell, one per unsafe cell, then the
    /// sign rows `b_k >= 0`, `c_k >= 0`.
    ///
    /// Initial cell `[lo, hi]`: `a + sum b_k P_k(hi + e_k) + c_k Q_k(lo - e_k) <= 0`.
    /// Unsafe cell: `a + sum (b_k P_k(lo) + c_k Q_k(hi)) - sum (b_k + c_k)/(T_k + 1) >= delta_u`.
    pub fn assemble(&self) -> Result<ConstraintSystem> {
        let tpl = &self.template;
        let n = tpl.n_bases();
        let horizons: Vec<usize> = tpl.upper().iter().map(|b| b.trajectory().horizon()).collect();
        let p = &self.partition;

        let initial: Vec<ConstraintRow> = self
            .covers
            .initial
            .par_iter()
            .map(|cell| -> Result<ConstraintRow> {
                let (lo, hi) = p.cell_corners(cell)?;
                let mut coeffs = vec![0.0; 2 * n + 1];
                coeffs[0] = 1.0;
                for k in 0..n {
                    let e = self.epsilons[k];
                    coeffs[1 + k] = tpl.upper()[k].value(&shifted(&hi, e))?;
                    coeffs[1 + n + k] = tpl.lower()[k].value(&shifted(&lo, -e))?;
                }
                Ok(ConstraintRow {
                    family: RowFamily::Initial,
                    cell: Some(p.linear_index(cell)?),
                    coeffs,
                    sense: RowSense::Le,
                    rhs: 0.0,
                })
            })
            .collect::<Result<_>>()?;

        let unsafe_rows: Vec<ConstraintRow> = self
            .covers
            .unsafe_cells
            .par_iter()
            .map(|cell| -> Result<ConstraintRow> {
                let (lo, hi) = p.cell_corners(cell)?;
                let mut coeffs = vec![0.0; 2 * n + 1];
                coeffs[0] = 1.0;
                for k in 0..n {
                    let corr = 1.0 / (horizons[k] as f64 + 1.0);
                    coeffs[1 + k] = tpl.upper()[k].value(&lo)? - corr;
                    coeffs[1 + n + k] = tpl.lower()[k].value(&hi)? - corr;
                }
                Ok(ConstraintRow {
                    family: RowFamily::Unsafe,
                    cell: Some(p.linear_index(cell)?),
                    coeffs,
                    sense: RowSense::Ge,
                    rhs: self.delta_u,
                })
            })
            .collect::<Result<_>>()?;

        let mut rows = initial;
        rows.extend(unsafe_rows);
        rows.extend(sign_rows(n));
        Ok(ConstraintSystem {
            n_bases: n,
            rows,
            meta: SystemMeta {
                mode: CertificateMode::Robust,
                alpha: self.alpha,
                delta_u: self.delta_u,
                horizons,
                epsilons: self.epsilons.clone(),
                pattern: None,
            },
        })
    }
}

pub(crate) fn sign_rows(n: usize) -> Vec<ConstraintRow> {
    (1..=2 * n)
        .map(|j| {
            let mut coeffs = vec![0.0; 2 * n + 1];
            coeffs[j] = 1.0;
            ConstraintRow {
                family: RowFamily::Sign,
                cell: None,
                coeffs,
                sense: RowSense::Ge,
                rhs: 0.0,
            }
        })
        .collect()
}

/// Convenience wrapper around [`RspopProblem`].
pub fn assemble_rspop(
    trajs: &[Arc<Trajectory>],
    lip: Option<&LipschitzBounds>,
    partition: &GridPartition,
    covers: &CoverSets,
    alpha: f64,
    delta_u: f64,
) -> Result<ConstraintSystem> {
    RspopProblem::new(trajs, lip, partition, covers, alpha, delta_u)?.assemble()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{BoxRegion, RegionSpec};
    use crate::partition::build_partition;

    fn scalar(vals: &[f64]) -> Arc<Trajectory> {
        Arc::new(
            Trajectory::new(vals.iter().map(|v| vec![*v]).collect(), None, None)
                .unwrap()
                .with_epsilon(0.0)
                .unwrap(),
        )
    }

    fn toy() -> (GridPartition, CoverSets) {
        let p = build_partition(&BoxRegion::cube(1, 0.0, 5.0).unwrap(), 0.5).unwrap();
        let covers = CoverSets::new(
            &p,
            &RegionSpec::single(BoxRegion::cube(1, 0.0, 1.0).unwrap()),
            &RegionSpec::single(BoxRegion::cube(1, 4.5, 5.0).unwrap()),
        )
        .unwrap();
        (p, covers)
    }

    #[test]
    fn toy_rows_by_hand() {
        let (p, covers) = toy();
        let sys = assemble_rspop(&[scalar(&[4.0, 3.0, 2.0, 1.0])], None, &p, &covers, 2.0, 1e-6).unwrap();
        assert_eq!(sys.count(RowFamily::Initial), 2);
        assert_eq!(sys.count(RowFamily::Unsafe), 1);
        assert_eq!(sys.count(RowFamily::Sign), 2);
        // Cell [0, 0.5]: P(0.5) = 1/4 (0.5 <= 1 at t = 3); Q(0) is empty.
        assert_eq!(sys.rows[0].coeffs, vec![1.0, 0.25, 2.0]);
        // Cell [0.5, 1]: P(1) = 1/4, Q(0.5) empty.
        assert_eq!(sys.rows[1].coeffs, vec![1.0, 0.25, 2.0]);
        // Unsafe cell [4.5, 5]: P(4.5) empty, Q(5) = 1/4; both minus 1/4.
        assert_eq!(sys.rows[2].coeffs, vec![1.0, 1.75, 0.0]);
        // a = -0.5, b = 1 satisfies everything by hand.
        assert!(sys.verify(&[-0.5, 1.0, 0.0], 0.0).is_empty());
        assert!(!sys.verify(&[0.5, 1.0, 0.0], 0.0).is_empty());
    }

    #[test]
    fn missing_epsilon_refused() {
        let (p, covers) = toy();
        let bare = Arc::new(Trajectory::new(vec![vec![1.0], vec![2.0]], None, None).unwrap());
        assert!(matches!(
            assemble_rspop(&[bare], None, &p, &covers, 2.0, 1e-6),
            Err(Error::MissingEpsilon { .. })
        ));
    }

    #[test]
    fn allowance_cases() {
        let l = LipschitzBounds::new(0.5, 0.1, 2.0).unwrap();
        assert!((tail_allowance(&l, 3).unwrap() - 0.1 * 2.0 * 0.125 / 0.5).abs() < 1e-15);
        assert_eq!(tail_allowance(&LipschitzBounds::new(1.5, 1.0, 0.0).unwrap(), 3).unwrap(), 0.0);
        assert!(tail_allowance(&LipschitzBounds::new(1.0, 1.0, 0.1).unwrap(), 3).is_err());
    }

    #[test]
    fn zero_disturbance_uses_raw_corners() {
        let (p, covers) = toy();
        let tr = scalar(&[4.0, 3.0, 2.0, 1.0]);
        let none = assemble_rspop(&[tr.clone()], None, &p, &covers, 2.0, 1e-6).unwrap();
        let calm = LipschitzBounds::new(0.5, 1.0, 0.0).unwrap();
        let zero_dw = assemble_rspop(&[tr], Some(&calm), &p, &covers, 2.0, 1e-6).unwrap();
        assert_eq!(none.rows, zero_dw.rows);
    }
}
