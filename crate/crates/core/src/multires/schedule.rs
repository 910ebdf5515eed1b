//! Resolution pyramids. The fractional pyramid steps down by a fixed number
//! of pixels per level, `N_j = (n_s + s - j) * N_d`; the dyadic one halves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multires::resample::{InterpFilter, ResampleOp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PyramidSchedule {
    /// Side lengths, full resolution first.
    sizes: Vec<usize>,
}

impl PyramidSchedule {
    /// Strictly decreasing side lengths, full resolution first.
    pub fn from_sizes(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) || sizes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::ScheduleMismatch(format!("sizes {sizes:?} must be positive and decreasing")));
        }
        Ok(Self { sizes })
    }

    pub fn levels(&self) -> usize {
        self.sizes.len()
    }

    /// Index of the coarsest level; level 0 is the full resolution.
    pub fn coarsest(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn size(&self, j: usize) -> usize {
        self.sizes[j]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Resampler taking level `from` to level `to`.
    pub fn op(&self, to: usize, from: usize, filter: InterpFilter) -> Result<ResampleOp> {
        let s = self.coarsest();
        if to > s || from > s {
            return Err(Error::ScheduleMismatch(format!("levels {to}/{from} outside 0..={s}")));
        }
        ResampleOp::new(self.size(from), self.size(to), filter)
    }
}

/// Pyramid over an `n0`-pixel axis with step `n_d` whose coarsest level is
/// `n0 / coarse_ratio` pixels.
pub fn build_schedule(n0: usize, n_d: usize, coarse_ratio: usize) -> Result<PyramidSchedule> {
    if n_d == 0 || n0 == 0 {
        return Err(Error::InvalidParameter("sizes must be positive".into()));
    }
    if coarse_ratio < 2 {
        return Err(Error::InvalidParameter(format!(
            "coarse ratio must be at least 2, got {coarse_ratio}"
        )));
    }
    if !n0.is_multiple_of(n_d) {
        return Err(Error::IncompatibleSizes(format!(
            "image size {n0} is not a multiple of the step {n_d}"
        )));
    }
    let total = n0 / n_d;
    if !total.is_multiple_of(coarse_ratio) {
        return Err(Error::IncompatibleSizes(format!(
            "{total} steps do not divide by the coarse ratio {coarse_ratio}"
        )));
    }
    let n_s = total / coarse_ratio;
    // with a single-step coarse level the first transition would be a pure
    // doubling and the pyramid degenerates to a dyadic one
    if n_s < 2 {
        return Err(Error::RatioOutOfRange { ratio: coarse_ratio as f64 });
    }
    PyramidSchedule::from_sizes((n_s..=total).rev().map(|k| k * n_d).collect())
}

/// Halving pyramid from `n0` down to `n0 / coarse_ratio`; the ratio must be a power of two.
pub fn build_dyadic_schedule(n0: usize, coarse_ratio: usize) -> Result<PyramidSchedule> {
    if coarse_ratio < 2 || !coarse_ratio.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "dyadic coarse ratio must be a power of two >= 2, got {coarse_ratio}"
        )));
    }
    if n0 == 0 || !n0.is_multiple_of(coarse_ratio) {
        return Err(Error::IncompatibleSizes(format!("{n0} does not divide by {coarse_ratio}")));
    }
    let coarse = n0 / coarse_ratio;
    PyramidSchedule::from_sizes(std::iter::successors(Some(n0), |&n| (n > coarse).then_some(n / 2)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_pyramid() {
        let p = build_schedule(256, 16, 4).unwrap();
        assert_eq!(p.coarsest(), 12);
        assert_eq!(p.size(0), 256);
        assert_eq!(p.size(12), 64);
        let sizes = p.sizes();
        for w in sizes.windows(2) {
            assert_eq!(w[0] - w[1], 16);
        }
    }

    #[test]
    fn small_pyramid() {
        let p = build_schedule(128, 16, 4).unwrap();
        assert_eq!(p.sizes(), &[128, 112, 96, 80, 64, 48, 32]);
        let p = build_schedule(160, 16, 2).unwrap();
        assert_eq!(p.sizes(), &[160, 144, 128, 112, 96, 80]);
    }

    #[test]
    fn rejected_schedules() {
        assert!(matches!(build_schedule(64, 16, 4), Err(Error::RatioOutOfRange { .. })));
        assert!(matches!(build_schedule(100, 16, 4), Err(Error::IncompatibleSizes(_))));
        assert!(matches!(build_schedule(96, 16, 4), Err(Error::IncompatibleSizes(_))));
        assert!(matches!(build_schedule(256, 16, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn transition_factors() {
        let p = build_schedule(256, 16, 4).unwrap();
        let op = p.op(0, 1, InterpFilter::LinearSpline).unwrap();
        assert_eq!((op.up, op.down), (16, 15));
        let op = p.op(0, p.coarsest(), InterpFilter::LinearSpline).unwrap();
        assert_eq!((op.up, op.down), (4, 1));
        assert!(p.op(0, 13, InterpFilter::LinearSpline).is_err());
    }

    #[test]
    fn dyadic_pyramid() {
        let p = build_dyadic_schedule(128, 4).unwrap();
        assert_eq!(p.sizes(), &[128, 64, 32]);
        let op = p.op(0, 1, InterpFilter::LinearSpline).unwrap();
        assert_eq!((op.up, op.down), (2, 1));
        assert!(build_dyadic_schedule(128, 3).is_err());
        assert!(build_dyadic_schedule(100, 8).is_err());
        assert!(PyramidSchedule::from_sizes(vec![64, 64]).is_err());
    }
}
