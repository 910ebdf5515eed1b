//! Value types shared by every stage: grid geometry, images, scattered
//! sample sets and the regularization parameter bundle.
//!
//! Pixel centers sit at integer coordinates `0..width` / `0..height`; storage
//! is row-major with `y` as the outer index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn square(size: usize) -> Result<Self> {
        Self::new(size, size)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub(crate) fn require_min(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
                min,
            });
        }
        Ok(())
    }

    pub(crate) fn require_square(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::GridMismatch(format!(
                "square grid required, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub(crate) fn require_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Dense 2D image of finite `f64` intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    grid: GridSpec,
    data: Vec<f64>,
    channel: String,
}

impl Image {
    pub fn new(grid: GridSpec, data: Vec<f64>, channel: impl Into<String>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite pixel value at index {i}")));
        }
        Ok(Self {
            grid,
            data,
            channel: channel.into(),
        })
    }

    /// Wraps a buffer produced by internal arithmetic on finite inputs.
    pub(crate) fn from_vec(grid: GridSpec, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self {
            grid,
            data,
            channel: String::new(),
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_vec(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self::from_vec(grid, vec![value; grid.len()])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel center.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for y in 0..grid.height {
            for x in 0..grid.width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(grid, data)
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grid.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn with_channel(mut self, channel: impl Into<String>) -> Self {
        self.channel = channel.into();
        self
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[self.grid.index(x, y)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.grid, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Scattered measurements inside the extent of a reconstruction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    samples: Vec<Sample>,
    grid: GridSpec,
}

impl SampleSet {
    pub fn new(samples: Vec<Sample>, grid: GridSpec) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.x.is_finite() && s.y.is_finite() && s.value.is_finite()) {
                return Err(Error::Format(format!("sample {i} has a non-finite field")));
            }
            if s.x < 0.0 || s.x >= grid.width as f64 || s.y < 0.0 || s.y >= grid.height as f64 {
                return Err(Error::Format(format!(
                    "sample {i} at ({}, {}) lies outside the {}x{} grid",
                    s.x, s.y, grid.width, grid.height
                )));
            }
        }
        Ok(Self { samples, grid })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Weights and exponents of the regularized reconstruction costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegParams {
    /// Regularization weight.
    pub lambda: f64,
    /// Variance exponent of the entropic prior (also the MSDA weight exponent).
    pub q: f64,
    /// MSDA roughness exponent.
    pub r: f64,
    /// Exponent of the plain roughness penalty.
    pub p: f64,
    /// Smoothing floor added to derivative magnitudes.
    pub epsilon: f64,
    /// Upper pixel bound of the box constraint.
    pub bound_m: f64,
}

impl Default for RegParams {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            q: 0.9,
            r: 0.5,
            p: 1.0,
            epsilon: 1e-6,
            bound_m: 1.0,
        }
    }
}

impl RegParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidParameter(format!("{what} = {v} is out of range")))
        };
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", self.lambda);
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return bad("q", self.q);
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad("r", self.r);
        }
        if !(self.p > 0.0 && self.p <= 2.0) {
            return bad("p", self.p);
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", self.epsilon);
        }
        if !(self.bound_m > 0.0 && self.bound_m.is_finite()) {
            return bad("bound_m", self.bound_m);
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    /// Upper bound with 5% headroom over the brightest measurement.
    pub fn default_bound(h: &Image) -> f64 {
        let m = 1.05 * h.max();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }
}
