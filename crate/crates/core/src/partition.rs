//! Uniform hyper-rectangular grids over the state set.
//!
//! Cells are half-open `[lo, hi)` on every axis except the last cell of each
//! axis, which is closed, so every point of the domain lies in exactly one
//! cell. Corner evaluation always uses the closed box.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::{check_dims, BoxRegion, RegionSpec};

/// Multi-index of a grid cell.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellIndex(pub Vec<usize>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPartition {
    domain: BoxRegion,
    counts: Vec<usize>,
}

/// `ceil(extent / width)`, snapping ratios within rounding noise of an
/// integer so that e.g. `9.9 / 0.495` gives 20 rather than 21.
fn axis_count(extent: f64, width: f64) -> usize {
    if extent == 0.0 {
        return 1;
    }
    let ratio = extent / width;
    let nearest = ratio.round();
    let count = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    (count as usize).max(1)
}

pub fn build_partition(domain: &BoxRegion, target_width: f64) -> Result<GridPartition> {
    build_partition_with_widths(domain, &vec![target_width; domain.dim()])
}

pub fn build_partition_with_widths(domain: &BoxRegion, widths: &[f64]) -> Result<GridPartition> {
    check_dims(domain.dim(), widths.len())?;
    if widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::invalid("partition widths must be positive and finite"));
    }
    let counts: Vec<usize> = domain
        .lower()
        .iter()
        .zip(domain.upper())
        .zip(widths)
        .map(|((l, u), w)| axis_count(u - l, *w))
        .collect();
    let total = counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c));
    if total.is_none() {
        return Err(Error::invalid("partition has too many cells to index"));
    }
    Ok(GridPartition {
        domain: domain.clone(),
        counts,
    })
}

impl GridPartition {
    pub fn domain(&self) -> &BoxRegion {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Actual per-axis cell widths.
    pub fn widths(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| (self.domain.upper()[j] - self.domain.lower()[j]) / self.counts[j] as f64)
            .collect()
    }

    /// Grid line `k` on `axis`; the last line is the domain bound exactly.
    pub fn edge(&self, axis: usize, k: usize) -> f64 {
        let (lo, hi) = (self.domain.lower()[axis], self.domain.upper()[axis]);
        let count = self.counts[axis];
        if k >= count {
            hi
        } else {
            lo + (hi - lo) * k as f64 / count as f64
        }
    }

    fn check_index(&self, idx: &CellIndex) -> Result<()> {
        if idx.0.len() != self.dim() || idx.0.iter().zip(&self.counts).any(|(i, c)| i >= c) {
            return Err(Error::CellOutOfRange {
                index: idx.0.clone(),
                counts: self.counts.clone(),
            });
        }
        Ok(())
    }

    /// Closed corners of a cell.
    pub fn cell_corners(&self, idx: &CellIndex) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_index(idx)?;
        Ok(self.corners_unchecked(&idx.0))
    }

    pub(crate) fn corners_unchecked(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let lo = idx.iter().enumerate().map(|(j, k)| self.edge(j, *k)).collect();
        let hi = idx.iter().enumerate().map(|(j, k)| self.edge(j, k + 1)).collect();
        (lo, hi)
    }

    /// Row-major linear index (last axis varies fastest).
    pub fn linear_index(&self, idx: &CellIndex) -> Result<usize> {
        self.check_index(idx)?;
        Ok(idx.0.iter().zip(&self.counts).fold(0, |acc, (i, c)| acc * c + i))
    }

    pub fn multi_index(&self, mut linear: usize) -> Result<CellIndex> {
        if linear >= self.cell_count() {
            return Err(Error::invalid(format!(
                "linear cell index {linear} out of range for {} cells",
                self.cell_count()
            )));
        }
        let mut out = vec![0; self.dim()];
        for j in (0..self.dim()).rev() {
            out[j] = linear % self.counts[j];
            linear /= self.counts[j];
        }
        Ok(CellIndex(out))
    }

    fn locate_axis(&self, axis: usize, v: f64) -> usize {
        let (lo, hi) = (self.domain.lower()[axis], self.domain.upper()[axis]);
        let count = self.counts[axis];
        if hi == lo {
            return 0;
        }
        let guess = (((v - lo) / (hi - lo)) * count as f64).floor();
        let mut k = (guess.max(0.0) as usize).min(count - 1);
        // Repair the guess against the exact edge values.
        while k > 0 && v < self.edge(axis, k) {
            k -= 1;
        }
        while k + 1 < count && v >= self.edge(axis, k + 1) {
            k += 1;
        }
        k
    }

    /// The unique cell containing `x` under the half-open convention.
    pub fn locate(&self, x: &[f64]) -> Result<CellIndex> {
        check_dims(self.dim(), x.len())?;
        if !self.domain.contains_slice(x) {
            return Err(Error::invalid(format!("point {x:?} is outside the partition domain")));
        }
        Ok(CellIndex((0..self.dim()).map(|j| self.locate_axis(j, x[j])).collect()))
    }

    /// Cells on one axis whose closed interval meets `[lo, hi]` with positive
    /// length; a degenerate interval maps to the cell owning the point.
    fn axis_cover(&self, axis: usize, lo: f64, hi: f64) -> Range<usize> {
        if lo >= hi {
            let k = self.locate_axis(axis, lo);
            return k..k + 1;
        }
        let count = self.counts[axis];
        let start = (0..count).find(|&k| self.edge(axis, k + 1) > lo).unwrap_or(count);
        let end = (start..count).find(|&k| self.edge(axis, k) >= hi).unwrap_or(count);
        start..end
    }

    /// Minimal set of cells covering `region`, in row-major order.
    pub fn cover_indices(&self, region: &RegionSpec) -> Result<Vec<CellIndex>> {
        check_dims(self.dim(), region.dim())?;
        let mut cells = BTreeSet::new();
        for b in region.boxes() {
            if !self.domain.contains_box(b) {
                return Err(Error::invalid(format!(
                    "region box {:?}..{:?} escapes the partition domain",
                    b.lower(),
                    b.upper()
                )));
            }
            let ranges: Vec<Range<usize>> = (0..self.dim())
                .map(|j| self.axis_cover(j, b.lower()[j], b.upper()[j]))
                .collect();
            for_each_product(&ranges, |idx| {
                cells.insert(idx.to_vec());
            });
        }
        Ok(cells.into_iter().map(CellIndex).collect())
    }

    /// Streams all cells in row-major order without materializing them.
    pub fn iter_cells(&self) -> CellIter<'_> {
        self.iter_range(0..self.cell_count())
    }

    /// Streams the cells with linear index in `range`, for splitting work.
    pub fn iter_range(&self, range: Range<usize>) -> CellIter<'_> {
        let end = range.end.min(self.cell_count());
        let start = range.start.min(end);
        let current = if start < end {
            self.multi_index(start).map(|c| c.0).unwrap_or_default()
        } else {
            Vec::new()
        };
        CellIter {
            counts: &self.counts,
            current,
            remaining: end - start,
        }
    }
}

pub struct CellIter<'a> {
    counts: &'a [usize],
    current: Vec<usize>,
    remaining: usize,
}

impl Iterator for CellIter<'_> {
    type Item = CellIndex;

    fn next(&mut self) -> Option<CellIndex> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = CellIndex(self.current.clone());
        for j in (0..self.counts.len()).rev() {
            self.current[j] += 1;
            if self.current[j] < self.counts[j] {
                break;
            }
            self.current[j] = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for CellIter<'_> {}

fn for_each_product(ranges: &[Range<usize>], mut f: impl FnMut(&[usize])) {
    if ranges.iter().any(|r| r.is_empty()) {
        return;
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.start).collect();
    loop {
        f(&idx);
        let mut j = ranges.len();
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < ranges[j].end {
                break;
            }
            idx[j] = ranges[j].start;
        }
    }
}

/// Cover sets of the initial and unsafe regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSets {
    pub initial: Vec<CellIndex>,
    pub unsafe_cells: Vec<CellIndex>,
}

impl CoverSets {
    pub fn new(p: &GridPartition, initial: &RegionSpec, unsafe_set: &RegionSpec) -> Result<Self> {
        Ok(Self {
            initial: p.cover_indices(initial)?,
            unsafe_cells: p.cover_indices(unsafe_set)?,
        })
    }
}
