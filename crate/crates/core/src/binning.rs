//! Conversion of scattered samples into the regular-grid pair `(h, c)`.
//!
//! Every sample falls into the unit square centered on its nearest grid
//! point, `[y - 0.5, y + 0.5)` along each axis, and contributes there with the
//! weight `tanh(r) / r` of its distance `r` to the pixel center. `c` holds the
//! accumulated weights and `h` the weight-normalized sample average, `0` where
//! no sample landed.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Image, SampleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMeasurement {
    pub h: Image,
    pub c: Image,
    pub grid: GridSpec,
}

/// `tanh(r) / r`, continuous at the origin.
pub fn tanh_weight(r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    if r < 1e-4 {
        let r2 = r * r;
        1.0 - r2 / 3.0 + 2.0 * r2 * r2 / 15.0
    } else {
        r.tanh() / r
    }
}

/// Index of the bin owning coordinate `t` on an axis of length `n`.
#[inline]
pub(crate) fn bin_index(t: f64, n: usize) -> Option<usize> {
    let i = (t + 0.5).floor();
    if i >= 0.0 && (i as usize) < n {
        Some(i as usize)
    } else {
        None
    }
}

pub fn bin_samples(set: &SampleSet) -> Result<BinnedMeasurement> {
    if set.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let grid = set.grid();
    let mut c = vec![0.0; grid.len()];
    let mut hp = vec![0.0; grid.len()];
    for s in set.samples() {
        let (Some(px), Some(py)) = (bin_index(s.x, grid.width), bin_index(s.y, grid.height)) else {
            continue;
        };
        let r = (s.x - px as f64).hypot(s.y - py as f64);
        let w = tanh_weight(r);
        let k = grid.index(px, py);
        c[k] += w;
        hp[k] += w * s.value;
    }
    let h = hp
        .iter()
        .zip(&c)
        .map(|(&num, &den)| if den > 0.0 { num / den } else { 0.0 })
        .collect();
    Ok(BinnedMeasurement {
        h: Image::from_vec(grid, h).with_channel("h"),
        c: Image::from_vec(grid, c).with_channel("c"),
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Sample;

    #[test]
    fn weight_values() {
        assert_eq!(tanh_weight(0.0), 1.0);
        assert!((tanh_weight(1.0) - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert!((tanh_weight(0.5) - 0.924_234_314_520_019_5).abs() < 1e-15);
        // the series branch joins the direct formula smoothly
        let a = tanh_weight(0.999_999e-4);
        let b = 1.000_001e-4_f64.tanh() / 1.000_001e-4;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn weight_is_decreasing() {
        let mut prev = tanh_weight(0.0);
        for i in 1..200 {
            let w = tanh_weight(i as f64 * 0.01);
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn single_on_grid_sample() {
        let g = GridSpec::new(5, 5).unwrap();
        let set = SampleSet::new(vec![Sample { x: 2.0, y: 3.0, value: 0.7 }], g).unwrap();
        let b = bin_samples(&set).unwrap();
        assert_eq!(b.c.get(2, 3), 1.0);
        assert_eq!(b.h.get(2, 3), 0.7);
        let nonzero = b.c.data().iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn two_equidistant_samples_average() {
        let g = GridSpec::new(4, 4).unwrap();
        let set = SampleSet::new(
            vec![
                Sample { x: 1.25, y: 1.0, value: 0.2 },
                Sample { x: 0.75, y: 1.0, value: 0.6 },
            ],
            g,
        )
        .unwrap();
        let b = bin_samples(&set).unwrap();
        assert!((b.h.get(1, 1) - 0.4).abs() < 1e-15);
        assert!((b.c.get(1, 1) - 2.0 * 0.25f64.tanh() / 0.25).abs() < 1e-15);
    }

    #[test]
    fn half_integer_coordinates_go_to_the_upper_bin() {
        let g = GridSpec::new(4, 4).unwrap();
        let set = SampleSet::new(vec![Sample { x: 1.5, y: 2.0, value: 0.25 }], g).unwrap();
        let b = bin_samples(&set).unwrap();
        assert!(b.c.get(2, 2) > 0.0);
        assert_eq!(b.c.get(1, 2), 0.0);
    }

    #[test]
    fn duplicating_samples_doubles_c() {
        let g = GridSpec::new(6, 6).unwrap();
        let base = vec![
            Sample { x: 1.2, y: 3.4, value: 0.3 },
            Sample { x: 4.9, y: 0.1, value: 0.8 },
            Sample { x: 1.1, y: 3.1, value: 0.5 },
        ];
        let mut doubled = base.clone();
        doubled.extend(base.iter().copied());
        let a = bin_samples(&SampleSet::new(base, g).unwrap()).unwrap();
        let b = bin_samples(&SampleSet::new(doubled, g).unwrap()).unwrap();
        for i in 0..g.len() {
            assert!((b.c.data()[i] - 2.0 * a.c.data()[i]).abs() < 1e-14);
            assert!((b.h.data()[i] - a.h.data()[i]).abs() < 1e-14);
        }
    }
}
