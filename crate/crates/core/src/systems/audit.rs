use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng_for, InputRole, SystemModel};
use crate::order::{leq, BoxRegion};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MonotonicityMode {
    /// `x <= x'` implies `f(x, v) <= f(x', v)`.
    Sm,
    /// Additionally `v <= v'` implies `f(x, v) <= f(x', v')`.
    Sim,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub x: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub v: Vec<f64>,
    pub v_hi: Vec<f64>,
    pub fx: Vec<f64>,
    pub fx_hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub mode: MonotonicityMode,
    pub pairs: usize,
    pub violations: Vec<MonotonicityViolation>,
}

impl MonotonicityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Draws `lo <= hi` inside `set`: `hi = lo + s * r * (upper - lo)` with `r`
/// uniform and a scale `s` cycling through 1, 0.1, 0.01 so both distant and
/// nearby pairs are probed.
fn ordered_pair<R: Rng>(set: &BoxRegion, scale: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let lo: Vec<f64> = set
        .lower()
        .iter()
        .zip(set.upper())
        .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
        .collect();
    let hi = lo
        .iter()
        .zip(set.upper())
        .map(|(x, u)| (x + scale * rng.gen::<f64>() * (u - x)).min(*u))
        .collect();
    (lo, hi)
}

/// Samples ordered pairs and reports every pair where the image order fails.
/// The raw transition is evaluated, so images outside the state set do not
/// abort the audit.
pub fn audit_monotonicity(
    sys: &SystemModel,
    n_pairs: usize,
    mode: MonotonicityMode,
    seed: u64,
) -> MonotonicityReport {
    const SCALES: [f64; 3] = [1.0, 0.1, 0.01];
    let mut rng = rng_for(seed);
    let mut violations = Vec::new();
    for i in 0..n_pairs {
        let scale = SCALES[i % SCALES.len()];
        let (x, x_hi) = ordered_pair(sys.state_set(), scale, &mut rng);
        let (v, v_hi) = match (sys.input_set(), sys.input_role(), mode) {
            (Some(vs), InputRole::Control | InputRole::Disturbance, MonotonicityMode::Sim) => {
                ordered_pair(vs, scale, &mut rng)
            }
            (Some(vs), _, MonotonicityMode::Sm) => {
                let (v, _) = ordered_pair(vs, 0.0, &mut rng);
                (v.clone(), v)
            }
            _ => (Vec::new(), Vec::new()),
        };
        let fx = sys.eval(&x, &v);
        let fx_hi = sys.eval(&x_hi, &v_hi);
        if !leq(&fx, &fx_hi) {
            violations.push(MonotonicityViolation {
                x,
                x_hi,
                v,
                v_hi,
                fx,
                fx_hi,
            });
        }
    }
    MonotonicityReport {
        mode,
        pairs: n_pairs,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{make_anti_monotone, make_lotka_volterra, make_synthetic_contractive, make_traffic};
    use super::*;

    #[test]
    fn builtins_are_monotone() {
        let lv = make_lotka_volterra(0.2).unwrap();
        assert!(audit_monotonicity(&lv, 1000, MonotonicityMode::Sm, 1).is_clean());
        let tr = make_traffic(0.01, &[10.0, 10.0]).unwrap();
        assert!(audit_monotonicity(&tr, 1000, MonotonicityMode::Sim, 2).is_clean());
        let syn = make_synthetic_contractive(3).unwrap();
        assert!(audit_monotonicity(&syn, 1000, MonotonicityMode::Sim, 3).is_clean());
    }

    #[test]
    fn anti_monotone_map_is_caught() {
        let report = audit_monotonicity(&make_anti_monotone(), 100, MonotonicityMode::Sm, 4);
        assert!(!report.violations.is_empty());
        let v = &report.violations[0];
        assert!(leq(&v.x, &v.x_hi) && !leq(&v.fx, &v.fx_hi));
    }
}
