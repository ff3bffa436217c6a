use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{InputRole, LipschitzBounds, SystemModel};
use crate::error::{Error, Result};
use crate::order::{BoxRegion, RegionSpec};

pub const LV_INTERACTION: [[f64; 5]; 5] = [
    [0.0, 0.02, 0.0, 0.0, 0.0],
    [0.01, 0.0, 0.0, 0.02, 0.02],
    [0.0, 0.0, 0.0, 0.01, 0.02],
    [0.0, 0.02, 0.02, 0.0, 0.0],
    [0.0, 0.01, 0.01, 0.0, 0.0],
];
pub const LV_GROWTH: [f64; 5] = [0.22, 0.29, 0.26, 0.25, 0.23];
pub const LV_CAPACITY: [f64; 5] = [3.81, 2.47, 4.23, 2.93, 4.89];

/// Largest step size for which the Lotka-Volterra map stays monotone on its
/// state set.
pub const LV_MAX_TAU: f64 = 2.2;
pub const TRAFFIC_MAX_TAU: f64 = 0.01;

fn lv_rate(x: &[f64], i: usize) -> f64 {
    let coupling: f64 = LV_INTERACTION[i].iter().zip(x).map(|(a, xj)| a * xj).sum();
    coupling + LV_GROWTH[i] - LV_GROWTH[i] / LV_CAPACITY[i] * x[i]
}

/// Five-species cooperative population model
/// `f(x) = x + tau diag(x) (A x + r - diag(r/K) x)`.
pub fn make_lotka_volterra(tau: f64) -> Result<SystemModel> {
    if !(tau > 0.0 && tau <= LV_MAX_TAU) {
        return Err(Error::invalid(format!(
            "Lotka-Volterra step size must lie in (0, {LV_MAX_TAU}], got {tau}"
        )));
    }
    let f = move |x: &[f64], _: &[f64]| -> Vec<f64> {
        (0..5).map(|i| x[i] + tau * x[i] * lv_rate(x, i)).collect()
    };
    SystemModel::new(
        "lotka-volterra",
        BoxRegion::cube(5, 0.1, 10.0)?,
        RegionSpec::single(BoxRegion::cube(5, 4.0, 6.0)?),
        RegionSpec::new(vec![BoxRegion::cube(5, 0.1, 2.0)?, BoxRegion::cube(5, 8.0, 10.0)?])?,
        None,
        InputRole::None,
        Arc::new(f),
    )
}

/// Interior equilibrium of the Lotka-Volterra model: the solution of
/// `(A - diag(r/K)) x = -r`, by Gaussian elimination with partial pivoting.
pub fn lotka_volterra_equilibrium() -> [f64; 5] {
    let mut m = [[0.0; 6]; 5];
    for i in 0..5 {
        for j in 0..5 {
            m[i][j] = LV_INTERACTION[i][j];
        }
        m[i][i] -= LV_GROWTH[i] / LV_CAPACITY[i];
        m[i][5] = -LV_GROWTH[i];
    }
    for col in 0..5 {
        let piv = (col..5)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("nonempty");
        m.swap(col, piv);
        for row in col + 1..5 {
            let factor = m[row][col] / m[col][col];
            for k in col..6 {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = [0.0; 5];
    for i in (0..5).rev() {
        let tail: f64 = (i + 1..5).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][5] - tail) / m[i][i];
    }
    x
}

fn outflow(cap: f64, x: f64) -> f64 {
    cap * (1.0 - (-x).exp())
}

/// Two-link traffic network with inflow `u1` into link 1 and a fraction `u2`
/// of link 1's outflow routed to link 2.
pub fn make_traffic(tau: f64, x_max: &[f64]) -> Result<SystemModel> {
    make_traffic_with(tau, x_max, true)
}

/// As [`make_traffic`]; `indicator_closed` decides whether the routing
/// indicator includes its right end point `x2 = x2_max`.
pub fn make_traffic_with(tau: f64, x_max: &[f64], indicator_closed: bool) -> Result<SystemModel> {
    if !(tau > 0.0 && tau <= TRAFFIC_MAX_TAU) {
        return Err(Error::invalid(format!(
            "traffic step size must lie in (0, {TRAFFIC_MAX_TAU}], got {tau}"
        )));
    }
    if x_max.len() != 2 || x_max.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::invalid("traffic x_max must be two positive numbers"));
    }
    let (c1, c2) = (x_max[0], x_max[1]);
    let f = move |x: &[f64], u: &[f64]| -> Vec<f64> {
        let open = if indicator_closed {
            (0.0..=c2).contains(&x[1])
        } else {
            (0.0..c2).contains(&x[1])
        };
        let routed = if open { u[1] * outflow(c1, x[0]) } else { 0.0 };
        vec![
            x[0] + tau * (u[0] - outflow(c1, x[0])),
            x[1] + tau * (routed - outflow(c2, x[1])),
        ]
    };
    SystemModel::new(
        "traffic",
        BoxRegion::cube(2, 0.0, 10.0)?,
        RegionSpec::single(BoxRegion::cube(2, 4.0, 6.0)?),
        RegionSpec::new(vec![
            BoxRegion::cube(2, 0.0, 1.0)?,
            BoxRegion::new(vec![0.0, 9.0], vec![10.0, 10.0])?,
            BoxRegion::new(vec![9.0, 0.0], vec![10.0, 10.0])?,
        ])?,
        Some(BoxRegion::new(vec![0.0, 0.1], vec![10.0, 0.9])?),
        InputRole::Control,
        Arc::new(f),
    )
}

/// Contractive test system `x+ = 0.5 x + 0.1 w` on `[-1,1]^n` with
/// `w in [-1,1]^n`; its Lipschitz data are `(0.5, 0.1, 2)` exactly.
pub fn make_synthetic_contractive(dim: usize) -> Result<SystemModel> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    SystemModel::new(
        "synthetic-contractive",
        BoxRegion::cube(dim, -1.0, 1.0)?,
        RegionSpec::single(BoxRegion::cube(dim, -0.25, 0.25)?),
        RegionSpec::new(vec![BoxRegion::cube(dim, 0.9, 1.0)?, BoxRegion::cube(dim, -1.0, -0.9)?])?,
        Some(BoxRegion::cube(dim, -1.0, 1.0)?),
        InputRole::Disturbance,
        Arc::new(|x: &[f64], w: &[f64]| x.iter().zip(w).map(|(x, w)| 0.5 * x + 0.1 * w).collect()),
    )
}

pub fn synthetic_contractive_lipschitz() -> LipschitzBounds {
    LipschitzBounds {
        l_x: 0.5,
        l_w: 0.1,
        d_w: 2.0,
    }
}

/// The anti-monotone map `f(x) = -x` on `[-1,1]`, used as a negative control.
pub fn make_anti_monotone() -> SystemModel {
    let cube = |lo, hi| BoxRegion::cube(1, lo, hi).expect("valid box");
    SystemModel::new(
        "anti-monotone",
        cube(-1.0, 1.0),
        RegionSpec::single(cube(-0.1, 0.1)),
        RegionSpec::single(cube(0.9, 1.0)),
        None,
        InputRole::None,
        Arc::new(|x: &[f64], _: &[f64]| x.iter().map(|v| -v).collect()),
    )
    .expect("valid system")
}

fn default_x_max() -> [f64; 2] {
    [10.0, 10.0]
}

fn default_true() -> bool {
    true
}

fn default_dim() -> usize {
    2
}

/// Serializable description of a built-in system, used by config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSpec {
    LotkaVolterra {
        tau: f64,
    },
    Traffic {
        tau: f64,
        #[serde(default = "default_x_max")]
        x_max: [f64; 2],
        #[serde(default = "default_true")]
        indicator_closed: bool,
    },
    SyntheticContractive {
        #[serde(default = "default_dim")]
        dim: usize,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemModel> {
        match self {
            Self::LotkaVolterra { tau } => make_lotka_volterra(*tau),
            Self::Traffic {
                tau,
                x_max,
                indicator_closed,
            } => make_traffic_with(*tau, x_max, *indicator_closed),
            Self::SyntheticContractive { dim } => make_synthetic_contractive(*dim),
        }
    }

    /// Lipschitz data when they are known exactly.
    pub fn known_lipschitz(&self) -> Option<LipschitzBounds> {
        match self {
            Self::SyntheticContractive { .. } => Some(synthetic_contractive_lipschitz()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lv_parameters_and_tau_range() {
        assert_eq!(LV_INTERACTION[0][1], 0.02);
        assert_eq!(LV_GROWTH[0], 0.22);
        assert_eq!(LV_CAPACITY[0], 3.81);
        assert!(make_lotka_volterra(0.2).is_ok());
        assert!(make_lotka_volterra(2.2).is_ok());
        assert!(make_lotka_volterra(3.0).is_err());
        assert!(make_lotka_volterra(0.0).is_err());
    }

    #[test]
    fn lv_equilibrium_is_fixed_point() {
        let xs = lotka_volterra_equilibrium();
        let expected = [5.63486723, 5.26864555, 7.68828839, 5.96710532, 7.64475683];
        for (a, b) in xs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        let sys = make_lotka_volterra(0.2).unwrap();
        let next = sys.step(&xs, &[]).unwrap();
        for (a, b) in next.iter().zip(xs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn traffic_reference_step() {
        let sys = make_traffic(0.01, &[10.0, 10.0]).unwrap();
        let next = sys.step(&[9.5, 9.9], &[9.0, 0.6]).unwrap();
        assert!((next[0] - 9.49000748518299).abs() < 1e-13);
        assert!((next[1] - 9.860000526358412).abs() < 1e-13);
    }

    #[test]
    fn traffic_sets_and_outflow() {
        let sys = make_traffic(0.01, &[10.0, 10.0]).unwrap();
        assert_eq!(sys.input_set().unwrap().upper(), &[10.0, 0.9]);
        assert_eq!(outflow(7.0, 0.0), 0.0);
        assert!(make_traffic(0.02, &[10.0, 10.0]).is_err());
        assert!(make_traffic(0.01, &[10.0, 0.0]).is_err());
    }

    #[test]
    fn traffic_zero_step_is_identity() {
        // tau = 0 is outside the accepted range, so evaluate the formula directly.
        let (c1, c2, tau) = (10.0, 10.0, 0.0);
        let x = [3.0, 7.0];
        let u = [9.0, 0.5];
        let f1 = x[0] + tau * (u[0] - outflow(c1, x[0]));
        let f2 = x[1] + tau * (u[1] * outflow(c1, x[0]) - outflow(c2, x[1]));
        assert_eq!([f1, f2], x);
    }

    #[test]
    fn traffic_first_coordinate_moves_slowly() {
        let sys = make_traffic(0.01, &[10.0, 10.0]).unwrap();
        let mut rng = super::super::rng_for(5);
        for _ in 0..1000 {
            let x = super::super::sample_disturbance(sys.state_set(), &mut rng);
            let u = super::super::sample_disturbance(sys.input_set().unwrap(), &mut rng);
            let fx = sys.eval(&x, &u);
            assert!((fx[0] - x[0]).abs() <= 0.01 * u[0].max(10.0) + 1e-12);
        }
    }

    #[test]
    fn indicator_end_point_convention() {
        let closed = make_traffic_with(0.01, &[10.0, 10.0], true).unwrap();
        let open = make_traffic_with(0.01, &[10.0, 10.0], false).unwrap();
        let x = [5.0, 10.0];
        let u = [9.0, 0.9];
        assert!(closed.eval(&x, &u)[1] > open.eval(&x, &u)[1]);
    }

    #[test]
    fn spec_round_trip() {
        let s: SystemSpec = serde_json::from_str(r#"{"kind":"traffic","tau":0.01}"#).unwrap();
        assert_eq!(
            s,
            SystemSpec::Traffic {
                tau: 0.01,
                x_max: [10.0, 10.0],
                indicator_closed: true
            }
        );
        assert!(s.build().is_ok());
    }
}
