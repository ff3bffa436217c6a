use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::order::{leq, sup_dist, BoxRegion};

/// Order relation between the last two states of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dominating {
    /// `x(T) <= x(T-1)`.
    Upper,
    /// `x(T) >= x(T-1)`.
    Lower,
    /// Both relations hold (the last step did not move).
    Both,
    Neither,
}

impl Dominating {
    pub fn is_upper(self) -> bool {
        matches!(self, Self::Upper | Self::Both)
    }

    pub fn is_lower(self) -> bool {
        matches!(self, Self::Lower | Self::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailInfo {
    pub epsilon: Option<f64>,
    pub dominating: Dominating,
}

impl Default for TailInfo {
    fn default() -> Self {
        Self {
            epsilon: None,
            dominating: Dominating::Neither,
        }
    }
}

/// Stored sample path `x(0), ..., x(T)` with optional recorded inputs
/// `u(0), ..., u(T-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dim: usize,
    states: Vec<f64>,
    inputs: Option<Vec<Vec<f64>>>,
    policy_id: Option<String>,
    tail: TailInfo,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryFile {
    dim: usize,
    horizon: usize,
    states: Vec<Vec<f64>>,
    inputs: Option<Vec<Vec<f64>>>,
    policy_id: Option<String>,
    tail: TailInfo,
}

impl Trajectory {
    pub fn new(
        states: Vec<Vec<f64>>,
        inputs: Option<Vec<Vec<f64>>>,
        policy_id: Option<String>,
    ) -> Result<Self> {
        let dim = states.first().map_or(0, Vec::len);
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::invalid("trajectory states have inconsistent dimensions"));
        }
        Self::from_flat(dim, states.concat(), inputs, policy_id)
    }

    pub(crate) fn from_flat(
        dim: usize,
        states: Vec<f64>,
        inputs: Option<Vec<Vec<f64>>>,
        policy_id: Option<String>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if dim == 0 || states.len() % dim != 0 {
            return Err(Error::invalid("trajectory states have inconsistent dimensions"));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("trajectory contains non-finite values"));
        }
        let horizon = states.len() / dim - 1;
        if let Some(us) = &inputs {
            if us.len() != horizon {
                return Err(Error::invalid(format!(
                    "trajectory has {} inputs for horizon {horizon}",
                    us.len()
                )));
            }
            let m = us.first().map_or(0, Vec::len);
            if us.iter().any(|u| u.len() != m || u.iter().any(|c| !c.is_finite())) {
                return Err(Error::invalid("trajectory inputs are ragged or non-finite"));
            }
        }
        let mut tr = Self {
            dim,
            states,
            inputs,
            policy_id,
            tail: TailInfo::default(),
        };
        tr.tail.dominating = detect_dominating_tail(&tr);
        Ok(tr)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.states.len() / self.dim - 1
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.dim..(t + 1) * self.dim]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.dim)
    }

    pub fn inputs(&self) -> Option<&[Vec<f64>]> {
        self.inputs.as_deref()
    }

    pub fn policy_id(&self) -> Option<&str> {
        self.policy_id.as_deref()
    }

    pub fn tail(&self) -> TailInfo {
        self.tail
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid("tail epsilon must be finite and nonnegative"));
        }
        self.tail.epsilon = Some(epsilon);
        Ok(self)
    }

    pub fn with_policy_id(mut self, id: impl Into<String>) -> Self {
        self.policy_id = Some(id.into());
        self
    }

    /// Prefix `x(0), ..., x(horizon)`; tail metadata is recomputed except for
    /// epsilon, which is dropped.
    pub fn truncate(&self, horizon: usize) -> Result<Self> {
        if horizon > self.horizon() {
            return Err(Error::invalid(format!(
                "cannot truncate horizon {} to {horizon}",
                self.horizon()
            )));
        }
        Self::from_flat(
            self.dim,
            self.states[..(horizon + 1) * self.dim].to_vec(),
            self.inputs.as_ref().map(|us| us[..horizon].to_vec()),
            self.policy_id.clone(),
        )
    }

    /// First index whose state leaves `set`, if any.
    pub fn first_exit(&self, set: &BoxRegion) -> Option<usize> {
        self.states().position(|s| !set.contains_slice(s))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = TrajectoryFile {
            dim: self.dim,
            horizon: self.horizon(),
            states: self.states().map(<[f64]>::to_vec).collect(),
            inputs: self.inputs.clone(),
            policy_id: self.policy_id.clone(),
            tail: self.tail,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(text)?;
        if file.states.len() != file.horizon + 1 {
            return Err(Error::Format(format!(
                "horizon {} does not match {} stored states",
                file.horizon,
                file.states.len()
            )));
        }
        if file.states.iter().any(|s| s.len() != file.dim) {
            return Err(Error::Format(format!("states do not all have dimension {}", file.dim)));
        }
        let mut tr = Self::new(file.states, file.inputs, file.policy_id)?;
        if let Some(e) = file.tail.epsilon {
            tr = tr.with_epsilon(e)?;
        }
        Ok(tr)
    }

    /// Flat CSV: header `x1..xn[,u1..um]`, one row per time step. The input
    /// columns of the final row are empty.
    pub fn to_csv(&self) -> String {
        let m = self.inputs.as_ref().and_then(|u| u.first()).map_or(0, Vec::len);
        let has_inputs = self.inputs.is_some();
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        if has_inputs {
            header.extend((1..=m).map(|i| format!("u{i}")));
        }
        let mut out = header.join(",");
        out.push('\n');
        for (t, s) in self.states().enumerate() {
            let mut cells: Vec<String> = s.iter().map(f64::to_string).collect();
            if has_inputs {
                match self.inputs.as_ref().and_then(|u| u.get(t)) {
                    Some(u) => cells.extend(u.iter().map(f64::to_string)),
                    None => cells.extend(std::iter::repeat(String::new()).take(m)),
                }
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::EmptyTrajectory)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let n = cols.iter().filter(|c| c.starts_with('x')).count();
        let m = cols.iter().filter(|c| c.starts_with('u')).count();
        if n == 0 || n + m != cols.len() {
            return Err(Error::Format(format!("unrecognized CSV header `{header}`")));
        }
        let parse = |cell: &str| -> Result<f64> {
            cell.trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("bad number `{cell}`: {e}")))
        };
        let mut states = Vec::new();
        let mut inputs = Vec::new();
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != n + m {
                return Err(Error::Format(format!("row `{line}` has the wrong column count")));
            }
            states.push(cells[..n].iter().map(|c| parse(c)).collect::<Result<Vec<_>>>()?);
            if m > 0 && cells[n..].iter().all(|c| !c.trim().is_empty()) {
                inputs.push(cells[n..].iter().map(|c| parse(c)).collect::<Result<Vec<_>>>()?);
            }
        }
        Self::new(states, (m > 0).then_some(inputs), None)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => self.to_csv(),
            _ => self.to_json()?,
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::from_csv(&text),
            _ => Self::from_json(&text),
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn content_hash(&self) -> String {
        let json = self.to_json().expect("trajectory values are finite");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

pub fn detect_dominating_tail(traj: &Trajectory) -> Dominating {
    let t = traj.horizon();
    if t == 0 {
        return Dominating::Neither;
    }
    let (prev, last) = (traj.state(t - 1), traj.state(t));
    match (leq(last, prev), leq(prev, last)) {
        (true, true) => Dominating::Both,
        (true, false) => Dominating::Upper,
        (false, true) => Dominating::Lower,
        (false, false) => Dominating::Neither,
    }
}

/// `epsilon = max_{T-window <= t <= T} |x(t) - x(T)|_inf`. Only conservative
/// over the observed window.
pub fn estimate_compact_tail(traj: &Trajectory, window: usize) -> Result<TailInfo> {
    let t_end = traj.horizon();
    if window > t_end {
        return Err(Error::invalid(format!(
            "tail window {window} exceeds horizon {t_end}"
        )));
    }
    let last = traj.state(t_end);
    let epsilon = (t_end - window..=t_end)
        .map(|t| sup_dist(traj.state(t), last))
        .fold(0.0, f64::max);
    Ok(TailInfo {
        epsilon: Some(epsilon),
        dominating: detect_dominating_tail(traj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(vals: &[f64]) -> Trajectory {
        Trajectory::new(vals.iter().map(|v| vec![*v]).collect(), None, None).unwrap()
    }

    #[test]
    fn compact_tail_examples() {
        let tr = scalar(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(estimate_compact_tail(&tr, 2).unwrap().epsilon, Some(2.0));
        assert!(estimate_compact_tail(&tr, 4).is_err());
        let flat = scalar(&[0.3; 6]);
        assert_eq!(estimate_compact_tail(&flat, 5).unwrap().epsilon, Some(0.0));
    }

    #[test]
    fn dominating_tail_examples() {
        assert_eq!(detect_dominating_tail(&scalar(&[4.0, 3.0, 2.0, 1.0])), Dominating::Upper);
        assert_eq!(detect_dominating_tail(&scalar(&[1.0, 2.0, 3.0, 4.0])), Dominating::Lower);
        assert_eq!(detect_dominating_tail(&scalar(&[1.0, 1.0])), Dominating::Both);
        assert_eq!(detect_dominating_tail(&scalar(&[1.0])), Dominating::Neither);
        let tr = Trajectory::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]], None, None).unwrap();
        assert_eq!(detect_dominating_tail(&tr), Dominating::Neither);
        assert!(Dominating::Both.is_upper() && Dominating::Both.is_lower());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Trajectory::new(vec![], None, None).is_err());
        assert!(Trajectory::new(vec![vec![1.0], vec![1.0, 2.0]], None, None).is_err());
        assert!(Trajectory::new(vec![vec![1.0], vec![2.0]], Some(vec![]), None).is_err());
        assert!(Trajectory::new(vec![vec![f64::NAN]], None, None).is_err());
        assert!(scalar(&[1.0]).with_epsilon(-1.0).is_err());
    }

    #[test]
    fn json_reports_mismatched_horizon() {
        let bad = r#"{"dim":1,"horizon":3,"states":[[1.0]],"inputs":null,"policy_id":null,
            "tail":{"epsilon":null,"dominating":"neither"}}"#;
        assert!(Trajectory::from_json(bad).is_err());
    }

    #[test]
    fn csv_final_row_has_empty_inputs() {
        let tr = Trajectory::new(
            vec![vec![1.0, 2.0], vec![1.5, 2.5]],
            Some(vec![vec![9.0, 0.6]]),
            None,
        )
        .unwrap();
        let csv = tr.to_csv();
        assert_eq!(csv, "x1,x2,u1,u2\n1,2,9,0.6\n1.5,2.5,,\n");
        assert_eq!(Trajectory::from_csv(&csv).unwrap(), tr);
    }

    fn arb_traj() -> impl Strategy<Value = Trajectory> {
        (1usize..4, 0usize..6, any::<bool>()).prop_flat_map(|(n, t, with_inputs)| {
            let states = prop::collection::vec(prop::collection::vec(-1e6f64..1e6, n), t + 1);
            let inputs = prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 2), t);
            (states, inputs, 0.0f64..1.0).prop_map(move |(s, u, eps)| {
                Trajectory::new(s, with_inputs.then_some(u), Some("pol".into()))
                    .unwrap()
                    .with_epsilon(eps)
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(tr in arb_traj()) {
            let back = Trajectory::from_json(&tr.to_json().unwrap()).unwrap();
            prop_assert_eq!(&back, &tr);
            prop_assert_eq!(back.content_hash(), tr.content_hash());
        }

        #[test]
        fn csv_round_trip_keeps_states(tr in arb_traj()) {
            let back = Trajectory::from_csv(&tr.to_csv()).unwrap();
            prop_assert_eq!(back.states().collect::<Vec<_>>(), tr.states().collect::<Vec<_>>());
            // A zero-horizon CSV cannot tell "no inputs" from "zero inputs".
            if tr.horizon() > 0 {
                prop_assert_eq!(back.inputs(), tr.inputs());
            }
        }
    }
}
