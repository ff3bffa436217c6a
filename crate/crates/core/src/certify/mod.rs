//! Barrier-certificate templates built from dominance bases and the linear
//! constraint systems whose solutions are certificates.
//!
//! A certificate is `B(x) = a + sum_k (b_k P_k(x) + c_k Q_k(x))` with
//! `b, c >= 0`, where `P_k` is an upper and `Q_k` a lower dominance basis of
//! trajectory `k`. Coefficients are packed as `p = [a, b_1..b_N, c_1..c_N]`.

mod constraints;
mod cspop;
mod export;
mod rspop;

use serde::{Deserialize, Serialize};

use crate::dominance::DominanceBasis;
use crate::error::{Error, Result};
use crate::order::check_dims;
use crate::systems::Trajectory;

pub use constraints::{ConstraintRow, ConstraintSystem, RowFamily, RowSense, RowViolation, SystemMeta};
pub use cspop::{
    assemble_cspop, controller_set, select_control, CompatibilityReport, ControllerSet,
    CspopProblem, SupportPattern, SUPPORT_FLOOR,
};
pub use export::{
    CertificateFile, Coefficients, ControllerExport, TrajectoryRef, VerifiedCertificate, REVERIFY_TOL,
};
pub use rspop::{assemble_rspop, robust_bases, tail_allowance, RspopProblem};

pub const DEFAULT_DELTA_U: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMode {
    Robust,
    Controlled,
}

#[derive(Clone, Debug)]
pub struct CertificateTemplate {
    mode: CertificateMode,
    upper: Vec<DominanceBasis>,
    lower: Vec<DominanceBasis>,
    a: f64,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl CertificateTemplate {
    /// Template with all coefficients zero.
    pub fn new(mode: CertificateMode, upper: Vec<DominanceBasis>, lower: Vec<DominanceBasis>) -> Result<Self> {
        if upper.len() != lower.len() || upper.is_empty() {
            return Err(Error::invalid("a template needs N >= 1 upper and N lower bases"));
        }
        let robust = mode == CertificateMode::Robust;
        for b in &upper {
            if !b.is_upper() || b.kind().is_robust() != robust {
                return Err(Error::invalid(format!("basis `{}` does not fit an upper {mode:?} slot", b.label())));
            }
        }
        for b in &lower {
            if b.is_upper() || b.kind().is_robust() != robust {
                return Err(Error::invalid(format!("basis `{}` does not fit a lower {mode:?} slot", b.label())));
            }
        }
        let dim = upper[0].dim();
        for b in upper.iter().chain(&lower) {
            check_dims(dim, b.dim())?;
        }
        let n = upper.len();
        Ok(Self {
            mode,
            upper,
            lower,
            a: 0.0,
            b: vec![0.0; n],
            c: vec![0.0; n],
        })
    }

    /// Sets `p = [a, b.., c..]`; `b` and `c` must be nonnegative.
    pub fn with_coefficients(mut self, p: &[f64]) -> Result<Self> {
        let n = self.n_bases();
        check_dims(2 * n + 1, p.len())?;
        if p.iter().any(|v| !v.is_finite()) || p[1..].iter().any(|v| *v < 0.0) {
            return Err(Error::invalid("certificate weights must be finite and b, c >= 0"));
        }
        self.a = p[0];
        self.b = p[1..=n].to_vec();
        self.c = p[n + 1..].to_vec();
        Ok(self)
    }

    pub fn mode(&self) -> CertificateMode {
        self.mode
    }

    pub fn n_bases(&self) -> usize {
        self.upper.len()
    }

    pub fn dim(&self) -> usize {
        self.upper[0].dim()
    }

    pub fn upper(&self) -> &[DominanceBasis] {
        &self.upper
    }

    pub fn lower(&self) -> &[DominanceBasis] {
        &self.lower
    }

    pub fn coefficients(&self) -> Vec<f64> {
        let mut p = vec![self.a];
        p.extend(&self.b);
        p.extend(&self.c);
        p
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

/// `B(x)`. Bases whose weight is zero are not evaluated.
pub fn eval_certificate(tpl: &CertificateTemplate, x: &[f64]) -> Result<f64> {
    eval_inclusion(tpl, x, x)
}

/// `a + sum_k (b_k P_k(x) + c_k Q_k(y))`. For `z` in `[lo, hi]` this gives
/// `B(lo, hi) <= B(z) <= B(hi, lo)`.
pub fn eval_inclusion(tpl: &CertificateTemplate, x_upper: &[f64], y_lower: &[f64]) -> Result<f64> {
    check_dims(tpl.dim(), x_upper.len())?;
    check_dims(tpl.dim(), y_lower.len())?;
    let mut total = tpl.a;
    for k in 0..tpl.n_bases() {
        if tpl.b[k] != 0.0 {
            total += tpl.b[k] * tpl.upper[k].value(x_upper)?;
        }
        if tpl.c[k] != 0.0 {
            total += tpl.c[k] * tpl.lower[k].value(y_lower)?;
        }
    }
    Ok(total)
}

/// Finite-sample approximation `min_k max(P_k(x), Q_k(x)) - 1` of the
/// value-function barrier over the supplied disturbance-free trajectories.
///
/// DIAGNOSTIC ONLY: the exact construction quantifies over every trajectory
/// of the system, so this is not a certificate.
pub fn value_function_diagnostic(trajs: &[&Trajectory], x: &[f64], alpha: f64) -> Result<f64> {
    use crate::dominance::{controlled_lower_time, controlled_upper_time, dominance_value};
    crate::dominance::check_alpha(alpha)?;
    if trajs.is_empty() {
        return Err(Error::invalid("diagnostic needs at least one trajectory"));
    }
    let mut best = f64::INFINITY;
    for tr in trajs {
        let p = dominance_value(controlled_upper_time(tr, x)?, alpha);
        let q = dominance_value(controlled_lower_time(tr, x)?, alpha);
        best = best.min(p.max(q));
    }
    Ok(best - 1.0)
}
