use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::BoxRegion;

type PolicyFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
enum PolicyKind {
    Constant(Vec<f64>),
    /// `clamp(offset + G x)` with entrywise nonnegative `G`.
    Affine {
        offset: Vec<f64>,
        gain: Vec<Vec<f64>>,
        clamp: BoxRegion,
    },
    Custom(Arc<PolicyFn>),
}

/// State feedback `pi: X -> U`. The monotone flag is an assertion made by
/// whoever built the policy; constant and nonnegative-gain affine policies
/// are monotone by construction.
#[derive(Clone)]
pub struct FeedbackPolicy {
    id: String,
    kind: PolicyKind,
    monotone: bool,
    input_dim: usize,
}

impl fmt::Debug for FeedbackPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            PolicyKind::Constant(u) => format!("Constant({u:?})"),
            PolicyKind::Affine { .. } => "Affine".to_string(),
            PolicyKind::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("FeedbackPolicy")
            .field("id", &self.id)
            .field("kind", &kind)
            .field("monotone", &self.monotone)
            .finish()
    }
}

impl FeedbackPolicy {
    pub fn constant(id: impl Into<String>, u: Vec<f64>) -> Result<Self> {
        if u.is_empty() || u.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("constant policy needs a finite, nonempty input"));
        }
        Ok(Self {
            id: id.into(),
            input_dim: u.len(),
            kind: PolicyKind::Constant(u),
            monotone: true,
        })
    }

    pub fn affine(
        id: impl Into<String>,
        offset: Vec<f64>,
        gain: Vec<Vec<f64>>,
        clamp: BoxRegion,
    ) -> Result<Self> {
        let m = offset.len();
        if m == 0 || gain.len() != m || clamp.dim() != m {
            return Err(Error::invalid("affine policy: offset, gain rows and clamp box must agree"));
        }
        let n = gain[0].len();
        if gain.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("affine policy: ragged gain matrix"));
        }
        if gain.iter().flatten().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::invalid("affine policy gains must be nonnegative"));
        }
        Ok(Self {
            id: id.into(),
            kind: PolicyKind::Affine {
                offset,
                gain,
                clamp,
            },
            monotone: true,
            input_dim: m,
        })
    }

    pub fn custom(
        id: impl Into<String>,
        input_dim: usize,
        monotone: bool,
        f: Arc<PolicyFn>,
    ) -> Self {
        Self {
            id: id.into(),
            kind: PolicyKind::Custom(f),
            monotone,
            input_dim,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn constant_value(&self) -> Option<&[f64]> {
        match &self.kind {
            PolicyKind::Constant(u) => Some(u),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let u = match &self.kind {
            PolicyKind::Constant(u) => u.clone(),
            PolicyKind::Affine {
                offset,
                gain,
                clamp,
            } => {
                if gain[0].len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: gain[0].len(),
                        found: x.len(),
                    });
                }
                let raw: Vec<f64> = offset
                    .iter()
                    .zip(gain)
                    .map(|(o, row)| o + row.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>())
                    .collect();
                clamp.clamp(&raw)
            }
            PolicyKind::Custom(f) => f(x),
        };
        if u.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: u.len(),
            });
        }
        Ok(u)
    }
}

/// Serializable policy description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    Constant {
        id: String,
        value: Vec<f64>,
    },
    Affine {
        id: String,
        offset: Vec<f64>,
        gain: Vec<Vec<f64>>,
    },
}

impl PolicySpec {
    pub fn id(&self) -> &str {
        match self {
            Self::Constant { id, .. } | Self::Affine { id, .. } => id,
        }
    }

    /// Builds the policy; values must lie in (constant) or are clamped to
    /// (affine) the input set.
    pub fn build(&self, input_set: &BoxRegion) -> Result<FeedbackPolicy> {
        match self {
            Self::Constant { id, value } => {
                if value.len() != input_set.dim() || !input_set.contains_slice(value) {
                    return Err(Error::invalid(format!(
                        "constant policy `{id}` value {value:?} is not in the input set"
                    )));
                }
                FeedbackPolicy::constant(id.clone(), value.clone())
            }
            Self::Affine { id, offset, gain } => {
                FeedbackPolicy::affine(id.clone(), offset.clone(), gain.clone(), input_set.clone())
            }
        }
    }
}
