//! Discrete-time systems `x(t+1) = f(x(t), v(t))`: simulation for data
//! generation and validation, plus the built-in reference systems.

mod audit;
mod builtin;
mod policy;
mod trajectory;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::{check_dims, BoxRegion, RegionSpec};

pub use audit::{audit_monotonicity, MonotonicityMode, MonotonicityReport, MonotonicityViolation};
pub use builtin::{
    lotka_volterra_equilibrium, make_anti_monotone, make_lotka_volterra,
    make_synthetic_contractive, make_traffic, make_traffic_with, synthetic_contractive_lipschitz,
    SystemSpec, LV_CAPACITY, LV_GROWTH, LV_INTERACTION, LV_MAX_TAU, TRAFFIC_MAX_TAU,
};
pub use policy::{FeedbackPolicy, PolicySpec};
pub use trajectory::{
    detect_dominating_tail, estimate_compact_tail, Dominating, TailInfo, Trajectory,
};

pub type TransitionFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// How the input channel of a system is interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputRole {
    Disturbance,
    Control,
    None,
}

/// Known Lipschitz constants of `f` in `x` and `w` (sup norm) together with a
/// bound on the disturbance-set diameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBounds {
    pub l_x: f64,
    pub l_w: f64,
    pub d_w: f64,
}

impl LipschitzBounds {
    pub fn new(l_x: f64, l_w: f64, d_w: f64) -> Result<Self> {
        let b = Self { l_x, l_w, d_w };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_x > 0.0 && self.l_x.is_finite()) || !(self.l_w > 0.0 && self.l_w.is_finite())
        {
            return Err(Error::invalid("Lipschitz constants L_x, L_w must be positive"));
        }
        if !(self.d_w >= 0.0 && self.d_w.is_finite()) {
            return Err(Error::invalid("disturbance diameter D_w must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct SystemModel {
    name: String,
    state_set: BoxRegion,
    initial_set: RegionSpec,
    unsafe_set: RegionSpec,
    input_set: Option<BoxRegion>,
    input_role: InputRole,
    transition: Arc<TransitionFn>,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("name", &self.name)
            .field("state_set", &self.state_set)
            .field("initial_set", &self.initial_set)
            .field("unsafe_set", &self.unsafe_set)
            .field("input_set", &self.input_set)
            .field("input_role", &self.input_role)
            .finish_non_exhaustive()
    }
}

impl SystemModel {
    pub fn new(
        name: impl Into<String>,
        state_set: BoxRegion,
        initial_set: RegionSpec,
        unsafe_set: RegionSpec,
        input_set: Option<BoxRegion>,
        input_role: InputRole,
        transition: Arc<TransitionFn>,
    ) -> Result<Self> {
        let n = state_set.dim();
        check_dims(n, initial_set.dim())?;
        check_dims(n, unsafe_set.dim())?;
        match (input_role, &input_set) {
            (InputRole::None, Some(_)) => {
                return Err(Error::invalid("input role `none` cannot carry an input set"))
            }
            (InputRole::Control | InputRole::Disturbance, None) => {
                return Err(Error::invalid("controlled/disturbed systems need an input set"))
            }
            _ => {}
        }
        for b in initial_set.boxes().iter().chain(unsafe_set.boxes()) {
            if !state_set.contains_box(b) {
                return Err(Error::invalid(format!(
                    "region box {:?}..{:?} is not inside the state set",
                    b.lower(),
                    b.upper()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            state_set,
            initial_set,
            unsafe_set,
            input_set,
            input_role,
            transition,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.state_set.dim()
    }

    pub fn input_dim(&self) -> usize {
        self.input_set.as_ref().map_or(0, BoxRegion::dim)
    }

    pub fn state_set(&self) -> &BoxRegion {
        &self.state_set
    }

    pub fn initial_set(&self) -> &RegionSpec {
        &self.initial_set
    }

    pub fn unsafe_set(&self) -> &RegionSpec {
        &self.unsafe_set
    }

    pub fn input_set(&self) -> Option<&BoxRegion> {
        self.input_set.as_ref()
    }

    pub fn input_role(&self) -> InputRole {
        self.input_role
    }

    /// Raw transition map, no membership checks.
    pub fn eval(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        (self.transition)(x, v)
    }

    /// One step `f(x, v)`; the successor must stay in the state set.
    pub fn step(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.dim(), x.len())?;
        check_dims(self.input_dim(), v.len())?;
        if !self.state_set.contains_slice(x) {
            return Err(Error::invalid(format!("state {x:?} is outside the state set")));
        }
        if let Some(vs) = &self.input_set {
            if !vs.contains_slice(v) {
                return Err(Error::invalid(format!("input {v:?} is outside the input set")));
            }
        }
        let next = self.eval(x, v);
        if next.len() != self.dim() || !self.state_set.contains_slice(&next) {
            return Err(Error::StateEscape {
                step: 0,
                state: next,
            });
        }
        Ok(next)
    }
}

/// Where the inputs of a simulated trajectory come from.
#[derive(Clone, Debug)]
pub enum InputSource {
    Constant(Vec<f64>),
    Policy(Arc<FeedbackPolicy>),
    SampledDisturbance,
}

/// Uniform sample from a box.
pub fn sample_disturbance<R: Rng + ?Sized>(bounds: &BoxRegion, rng: &mut R) -> Vec<f64> {
    bounds
        .lower()
        .iter()
        .zip(bounds.upper())
        .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
        .collect()
}

/// Uniform sample from a union of boxes (boxes weighted by volume; degenerate
/// unions fall back to equal weights).
pub fn sample_region<R: Rng + ?Sized>(region: &RegionSpec, rng: &mut R) -> Vec<f64> {
    let boxes = region.boxes();
    let vols: Vec<f64> = boxes.iter().map(BoxRegion::volume).collect();
    let total: f64 = vols.iter().sum();
    let idx = if boxes.len() == 1 {
        0
    } else if total > 0.0 {
        let mut pick = rng.gen::<f64>() * total;
        let mut idx = boxes.len() - 1;
        for (i, v) in vols.iter().enumerate() {
            if pick < *v {
                idx = i;
                break;
            }
            pick -= v;
        }
        idx
    } else {
        rng.gen_range(0..boxes.len())
    };
    sample_disturbance(&boxes[idx], rng)
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for sub-task `index` of a seeded job.
pub(crate) fn rng_for_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulate `T` steps from `x0`.
pub fn simulate(
    sys: &SystemModel,
    x0: &[f64],
    source: &InputSource,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    check_dims(sys.dim(), x0.len())?;
    if !sys.state_set.contains_slice(x0) {
        return Err(Error::invalid(format!("initial state {x0:?} is outside the state set")));
    }
    let mut rng = rng_for(seed);
    let record_inputs = sys.input_role == InputRole::Control;
    let mut states = Vec::with_capacity((horizon + 1) * sys.dim());
    states.extend_from_slice(x0);
    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut x = x0.to_vec();
    for t in 0..horizon {
        let v = match (sys.input_role, source) {
            (InputRole::None, _) => Vec::new(),
            (_, InputSource::Constant(u)) => u.clone(),
            (InputRole::Control, InputSource::Policy(p)) => p.eval(&x)?,
            (InputRole::Disturbance, InputSource::SampledDisturbance) => {
                sample_disturbance(sys.input_set.as_ref().expect("checked at construction"), &mut rng)
            }
            (role, src) => {
                return Err(Error::invalid(format!(
                    "input source {src:?} does not fit input role {role:?}"
                )))
            }
        };
        let next = sys.step(&x, &v).map_err(|e| match e {
            Error::StateEscape { state, .. } => Error::StateEscape { step: t + 1, state },
            other => other,
        })?;
        if record_inputs {
            inputs.push(v);
        }
        states.extend_from_slice(&next);
        x = next;
    }
    let policy_id = match source {
        InputSource::Policy(p) => Some(p.id().to_string()),
        _ => None,
    };
    Trajectory::from_flat(
        sys.dim(),
        states,
        record_inputs.then_some(inputs),
        policy_id,
    )
}
