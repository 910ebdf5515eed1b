//! Rational resampling `N -> N * L / D` by expansion, filtering and decimation.
//!
//! Along each axis: mirror-extend, insert `L - 1` zeros after every sample,
//! convolve with a centered interpolation filter, keep every `D`-th sample
//! starting at index 0. The three steps are folded into one sparse matrix per
//! axis whose rows keep the exact tap order of the literal procedure.

use serde::{Deserialize, Serialize};

use crate::diffops::mirror_index;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Image};

/// Interpolation filter applied after zero insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpFilter {
    /// Linear B-spline `(1/L) (1 + z^-1 + ... + z^-(L-1))^2`; equals
    /// `(1/2)(1 + z^-1)^2` for `L = 2` and reproduces constants for every `L`.
    #[default]
    LinearSpline,
    /// `(1/L) (1 + z^-1)^L` taken literally.
    Binomial,
    /// `(1 + z^-1)^L / 2^(L-1)`.
    BinomialNormalized,
}

fn binomial_row(l: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..l {
        let mut next = vec![0.0; row.len() + 1];
        for (k, &v) in row.iter().enumerate() {
            next[k] += v;
            next[k + 1] += v;
        }
        row = next;
    }
    row
}

impl InterpFilter {
    /// Filter taps and the index of the tap aligned with offset 0.
    pub fn taps(self, l: usize) -> (Vec<f64>, usize) {
        assert!(l >= 1);
        match self {
            InterpFilter::LinearSpline => {
                let taps = (0..2 * l - 1)
                    .map(|k| (l as f64 - (k as f64 - (l - 1) as f64).abs()) / l as f64)
                    .collect();
                (taps, l - 1)
            }
            InterpFilter::Binomial => {
                let taps = binomial_row(l).into_iter().map(|v| v / l as f64).collect();
                (taps, l / 2)
            }
            InterpFilter::BinomialNormalized => {
                let norm = 2f64.powi(l as i32 - 1);
                let taps = binomial_row(l).into_iter().map(|v| v / norm).collect();
                (taps, l / 2)
            }
        }
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One axis of a rational resampler in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AxisMatrix {
    pub rows: usize,
    pub cols: usize,
    pub starts: Vec<usize>,
    pub index: Vec<usize>,
    pub weight: Vec<f64>,
}

impl AxisMatrix {
    #[inline]
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.starts[r]..self.starts[r + 1];
        self.index[span.clone()].iter().copied().zip(self.weight[span].iter().copied())
    }
}

/// Resampler from `from_size` to `to_size` samples per axis, `to/from = up/down`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleOp {
    pub from_size: usize,
    pub to_size: usize,
    pub up: usize,
    pub down: usize,
    pub filter: InterpFilter,
    axis: AxisMatrix,
}

impl ResampleOp {
    pub fn new(from_size: usize, to_size: usize, filter: InterpFilter) -> Result<Self> {
        if from_size == 0 || to_size == 0 {
            return Err(Error::InvalidParameter("resampling sizes must be positive".into()));
        }
        let g = gcd(from_size, to_size);
        Self::with_factors(from_size, to_size, to_size / g, from_size / g, filter)
    }

    /// Explicit factors; the output is trimmed or mirror-padded to `to_size`.
    pub fn with_factors(
        from_size: usize,
        to_size: usize,
        up: usize,
        down: usize,
        filter: InterpFilter,
    ) -> Result<Self> {
        if up == 0 || down == 0 || gcd(up, down) != 1 {
            return Err(Error::InvalidParameter(format!(
                "resampling factors {up}/{down} must be positive and coprime"
            )));
        }
        let axis = build_axis(from_size, to_size, up, down, filter);
        Ok(Self {
            from_size,
            to_size,
            up,
            down,
            filter,
            axis,
        })
    }

    pub fn identity(size: usize) -> Self {
        Self::new(size, size, InterpFilter::LinearSpline).expect("positive size")
    }

    pub fn is_identity(&self) -> bool {
        self.up == 1 && self.down == 1 && self.from_size == self.to_size
    }

    pub fn from_grid(&self) -> GridSpec {
        GridSpec { width: self.from_size, height: self.from_size }
    }

    pub fn to_grid(&self) -> GridSpec {
        GridSpec { width: self.to_size, height: self.to_size }
    }

    pub(crate) fn axis(&self) -> &AxisMatrix {
        &self.axis
    }

    /// Resamples a single 1-D signal of length `from_size`.
    pub fn apply_1d(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.from_size);
        (0..self.to_size)
            .map(|r| self.axis.row(r).fold(0.0, |acc, (m, w)| acc + w * x[m]))
            .collect()
    }

    pub fn adjoint_1d(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.to_size);
        let mut out = vec![0.0; self.from_size];
        for (r, &v) in y.iter().enumerate() {
            for (m, w) in self.axis.row(r) {
                out[m] += w * v;
            }
        }
        out
    }

    pub fn apply_raw(&self, x: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            return x.to_vec();
        }
        let (n, m) = (self.from_size, self.to_size);
        debug_assert_eq!(x.len(), n * n);
        // rows first (n rows of length n -> m), then columns
        let mut tmp = vec![0.0; n * m];
        for y in 0..n {
            let src = &x[y * n..(y + 1) * n];
            let dst = &mut tmp[y * m..(y + 1) * m];
            for (r, d) in dst.iter_mut().enumerate() {
                *d = self.axis.row(r).fold(0.0, |acc, (k, w)| acc + w * src[k]);
            }
        }
        let mut out = vec![0.0; m * m];
        for r in 0..m {
            let dst = &mut out[r * m..(r + 1) * m];
            for (k, w) in self.axis.row(r) {
                let src = &tmp[k * m..(k + 1) * m];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }

    pub fn adjoint_raw(&self, y: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            return y.to_vec();
        }
        let (n, m) = (self.from_size, self.to_size);
        debug_assert_eq!(y.len(), m * m);
        let mut tmp = vec![0.0; n * m];
        for r in 0..m {
            let src = &y[r * m..(r + 1) * m];
            for (k, w) in self.axis.row(r) {
                let dst = &mut tmp[k * m..(k + 1) * m];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        let mut out = vec![0.0; n * n];
        for yy in 0..n {
            let src = &tmp[yy * m..(yy + 1) * m];
            let dst = &mut out[yy * n..(yy + 1) * n];
            for (r, &s) in src.iter().enumerate() {
                for (k, w) in self.axis.row(r) {
                    dst[k] += w * s;
                }
            }
        }
        out
    }
}

fn build_axis(from: usize, to: usize, up: usize, down: usize, filter: InterpFilter) -> AxisMatrix {
    let (taps, center) = filter.taps(up);
    let mut starts = Vec::with_capacity(to + 1);
    let mut index = Vec::new();
    let mut weight = Vec::new();
    starts.push(0);
    for r in 0..to {
        let t = (r * down) as isize;
        for (k, &h) in taps.iter().enumerate() {
            let p = t - (k as isize - center as isize);
            if p.rem_euclid(up as isize) == 0 {
                index.push(mirror_index(p.div_euclid(up as isize), from));
                weight.push(h);
            }
        }
        starts.push(index.len());
    }
    AxisMatrix {
        rows: to,
        cols: from,
        starts,
        index,
        weight,
    }
}

/// Resamples a square image with `op`.
pub fn resample(img: &Image, op: &ResampleOp) -> Result<Image> {
    if img.width() != op.from_size || img.height() != op.from_size {
        return Err(Error::SizeMismatch {
            expected: op.from_size,
            found: if img.width() != op.from_size { img.width() } else { img.height() },
        });
    }
    Ok(Image::from_vec(op.to_grid(), op.apply_raw(img.data())).with_channel(img.channel()))
}
