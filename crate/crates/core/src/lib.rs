//! Reconstruction of images from undersampled point measurements with a
//! multiresolution maximum-entropy Hessian prior.
//!
//! The pipeline bins scattered samples onto a grid, solves a quadratic
//! Hessian-regularized problem on the coarsest level of a fractional pyramid,
//! and refines level by level with a prior whose statistics come from the
//! previous estimate.

pub mod binning;
pub mod diffops;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod multires;
pub mod regularizers;
pub mod simulate;
pub mod solver;

pub use binning::{bin_samples, BinnedMeasurement};
pub use error::{Error, Result};
pub use grid::{GridSpec, Image, RegParams, Sample, SampleSet};
