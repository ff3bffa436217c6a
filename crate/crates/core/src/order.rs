//! Componentwise partial order on `R^n` and axis-aligned boxes.
//!
//! Comparisons are exact floating-point comparisons. Margins belong to the
//! certificate programs, never to the order itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite point of `R^n`, `n >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("state vector must have dimension >= 1"));
        }
        if let Some(j) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "state component {j} is not finite ({})",
                components[j]
            )));
        }
        Ok(Self(components))
    }

    /// Constant vector `c * 1_n`.
    pub fn splat(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for StateVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StateVector> for Vec<f64> {
    fn from(v: StateVector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `x <= y` componentwise, without dimension checks.
#[inline]
pub fn leq(x: &[f64], y: &[f64]) -> bool {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).all(|(a, b)| a <= b)
}

/// `x <= y` componentwise.
pub fn partial_leq(x: &StateVector, y: &StateVector) -> Result<bool> {
    check_dims(x.dim(), y.dim())?;
    Ok(leq(x.as_slice(), y.as_slice()))
}

/// `x + c * 1_n`.
pub fn shift(x: &StateVector, c: f64) -> StateVector {
    StateVector(shifted(x.as_slice(), c))
}

#[inline]
pub(crate) fn shifted(x: &[f64], c: f64) -> Vec<f64> {
    x.iter().map(|v| v + c).collect()
}

/// Infinity-norm distance.
pub fn sup_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Closed box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BoxRegion {
    lower: StateVector,
    upper: StateVector,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for BoxRegion {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        BoxRegion::new(raw.lower, raw.upper)
    }
}

impl From<BoxRegion> for RawBox {
    fn from(b: BoxRegion) -> Self {
        RawBox {
            lower: b.lower.into_inner(),
            upper: b.upper.into_inner(),
        }
    }
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let lower = StateVector::new(lower)?;
        let upper = StateVector::new(upper)?;
        check_dims(lower.dim(), upper.dim())?;
        if !leq(lower.as_slice(), upper.as_slice()) {
            return Err(Error::invalid(format!(
                "box lower corner {:?} is not below upper corner {:?}",
                lower.as_slice(),
                upper.as_slice()
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &[f64] {
        self.lower.as_slice()
    }

    pub fn upper(&self) -> &[f64] {
        self.upper.as_slice()
    }

    /// Infinity-norm diameter `max_j (upper_j - lower_j)`.
    pub fn diameter(&self) -> f64 {
        sup_dist(self.lower(), self.upper())
    }

    pub fn volume(&self) -> f64 {
        self.lower()
            .iter()
            .zip(self.upper())
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn contains_slice(&self, x: &[f64]) -> bool {
        leq(self.lower(), x) && leq(x, self.upper())
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        leq(self.lower(), other.lower()) && leq(other.upper(), self.upper())
    }

    /// Componentwise clamp into the box.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower().iter().zip(self.upper()))
            .map(|(v, (l, u))| v.max(*l).min(*u))
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower()
            .iter()
            .zip(self.upper())
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    /// Intersection, or `None` when some axis is empty.
    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let lo: Vec<f64> = self
            .lower()
            .iter()
            .zip(other.lower())
            .map(|(a, b)| a.max(*b))
            .collect();
        let hi: Vec<f64> = self
            .upper()
            .iter()
            .zip(other.upper())
            .map(|(a, b)| a.min(*b))
            .collect();
        if leq(&lo, &hi) {
            Some(BoxRegion {
                lower: StateVector(lo),
                upper: StateVector(hi),
            })
        } else {
            None
        }
    }
}

/// Closed-box membership.
pub fn box_contains(b: &BoxRegion, x: &StateVector) -> Result<bool> {
    check_dims(b.dim(), x.dim())?;
    Ok(b.contains_slice(x.as_slice()))
}

/// A finite, nonempty union of boxes of equal dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BoxRegion>", into = "Vec<BoxRegion>")]
pub struct RegionSpec {
    boxes: Vec<BoxRegion>,
}

impl RegionSpec {
    pub fn new(boxes: Vec<BoxRegion>) -> Result<Self> {
        let first = boxes
            .first()
            .ok_or_else(|| Error::invalid("region must contain at least one box"))?;
        let n = first.dim();
        for b in &boxes {
            check_dims(n, b.dim())?;
        }
        Ok(Self { boxes })
    }

    pub fn single(b: BoxRegion) -> Self {
        Self { boxes: vec![b] }
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    pub fn boxes(&self) -> &[BoxRegion] {
        &self.boxes
    }

    pub fn contains_slice(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains_slice(x))
    }
}

impl TryFrom<Vec<BoxRegion>> for RegionSpec {
    type Error = Error;

    fn try_from(v: Vec<BoxRegion>) -> Result<Self> {
        RegionSpec::new(v)
    }
}

impl From<RegionSpec> for Vec<BoxRegion> {
    fn from(r: RegionSpec) -> Self {
        r.boxes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn leq_examples() {
        assert!(partial_leq(&sv(&[1.0, 2.0]), &sv(&[1.0, 2.0])).unwrap());
        assert!(!partial_leq(&sv(&[1.0, 3.0]), &sv(&[2.0, 2.0])).unwrap());
        assert!(!partial_leq(&sv(&[2.0, 2.0]), &sv(&[1.0, 3.0])).unwrap());
        assert!(partial_leq(&sv(&[0.1, 0.3]), &sv(&[9.5, 9.9])).unwrap());
        assert!(matches!(
            partial_leq(&sv(&[1.0]), &sv(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn box_contains_examples() {
        let unit = BoxRegion::cube(2, 0.0, 1.0).unwrap();
        assert!(box_contains(&unit, &sv(&[0.5, 0.5])).unwrap());
        assert!(box_contains(&unit, &sv(&[1.0, 1.0])).unwrap());
        let x0 = BoxRegion::cube(5, 4.0, 6.0).unwrap();
        assert!(!box_contains(&x0, &sv(&[3.9, 5.0, 5.0, 5.0, 5.0])).unwrap());
        assert!(box_contains(&x0, &sv(&[1.0])).is_err());
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift(&sv(&[1.0, 2.0]), 0.0), sv(&[1.0, 2.0]));
        assert_eq!(shift(&sv(&[1.0, 2.0]), 0.5), sv(&[1.5, 2.5]));
        assert_eq!(shift(&sv(&[4.0, 6.0]), -0.1), sv(&[3.9, 5.9]));
    }

    #[test]
    fn rejects_non_finite_and_inverted_boxes() {
        assert!(StateVector::new(vec![]).is_err());
        assert!(StateVector::new(vec![f64::NAN]).is_err());
        assert!(StateVector::new(vec![f64::INFINITY]).is_err());
        assert!(BoxRegion::new(vec![1.0], vec![0.0]).is_err());
        assert!(RegionSpec::new(vec![]).is_err());
        assert!(RegionSpec::new(vec![
            BoxRegion::cube(1, 0.0, 1.0).unwrap(),
            BoxRegion::cube(2, 0.0, 1.0).unwrap()
        ])
        .is_err());
    }

    #[test]
    fn box_serde_validates() {
        let ok: BoxRegion = serde_json::from_str(r#"{"lower":[0,0],"upper":[1,2]}"#).unwrap();
        assert_eq!(ok.upper(), &[1.0, 2.0]);
        assert!(serde_json::from_str::<BoxRegion>(r#"{"lower":[3],"upper":[1]}"#).is_err());
    }

    fn small_vec() -> impl Strategy<Value = Vec<f64>> {
        // Coarse grid so that equal components occur often.
        prop::collection::vec((-4i32..=4).prop_map(|k| k as f64 * 0.5), 3)
    }

    proptest! {
        #[test]
        fn order_axioms(x in small_vec(), y in small_vec(), z in small_vec()) {
            prop_assert!(leq(&x, &x));
            if leq(&x, &y) && leq(&y, &x) {
                prop_assert_eq!(&x, &y);
            }
            if leq(&x, &y) && leq(&y, &z) {
                prop_assert!(leq(&x, &z));
            }
        }

        #[test]
        fn shift_composes(v in small_vec(), a in -8i32..8, b in -8i32..8) {
            // Dyadic offsets keep every sum exactly representable.
            let (a, b) = (a as f64 * 0.25, b as f64 * 0.25);
            let x = StateVector::new(v).unwrap();
            prop_assert_eq!(shift(&shift(&x, a), b), shift(&x, a + b));
        }
    }
}
