//! End-to-end runs: simulate acquisitions, reconstruct with every method,
//! score against the truth, and persist tables, images and a manifest.

mod method;
mod run;
mod sweep;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Image, RegParams};
use crate::io::load_pgm;
use crate::metrics::SsimParams;
use crate::simulate::phantoms::Phantom;

pub use method::{run_method, run_method_detailed, Method, MethodRun, PyramidConfig};
pub use run::{config_hash, run_experiment, FileHash, Manifest, worker_threads, CellResult, ExperimentReport, MethodScore, THREADS_ENV};
pub use sweep::{sweep_q, sweep_csv, SweepRow};

/// Where a ground-truth image comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ImageSource {
    Phantom { phantom: Phantom },
    /// PGM file, normalized to `[0, 1]`.
    File { path: PathBuf },
}

impl ImageSource {
    pub fn label(&self) -> String {
        match self {
            ImageSource::Phantom { phantom } => phantom.name().to_string(),
            ImageSource::File { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into()),
        }
    }

    pub fn load(&self, size: usize, seed: u64) -> Result<Image> {
        match self {
            ImageSource::Phantom { phantom } => phantom.render(size, seed),
            ImageSource::File { path } => {
                let (img, _) = load_pgm(path)?;
                if !img.grid().is_square() {
                    return Err(Error::GridMismatch(format!("{} is not square", path.display())));
                }
                Ok(img)
            }
        }
    }
}

/// Candidate parameters for one method. Several values form a grid that is
/// searched against the ground truth per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodGrid {
    pub lambdas: Vec<f64>,
    /// Entropic variance exponent (MERR) or weight exponent (MSDA).
    #[serde(default = "default_qs")]
    pub qs: Vec<f64>,
}

fn default_qs() -> Vec<f64> {
    vec![0.9]
}

impl MethodGrid {
    pub fn new(lambdas: &[f64], qs: &[f64]) -> Self {
        Self { lambdas: lambdas.to_vec(), qs: qs.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodGrids {
    pub quad: MethodGrid,
    pub l1: MethodGrid,
    pub msda: MethodGrid,
    pub merr: MethodGrid,
}

impl MethodGrids {
    pub fn get(&self, m: Method) -> &MethodGrid {
        match m {
            Method::Quad => &self.quad,
            Method::L1 => &self.l1,
            Method::Msda => &self.msda,
            Method::Merr => &self.merr,
        }
    }

    pub fn get_mut(&mut self, m: Method) -> &mut MethodGrid {
        match m {
            Method::Quad => &mut self.quad,
            Method::L1 => &mut self.l1,
            Method::Msda => &mut self.msda,
            Method::Merr => &mut self.merr,
        }
    }
}

impl Default for MethodGrids {
    fn default() -> Self {
        Self {
            quad: MethodGrid::new(&[0.3, 1.0, 3.0], &[0.9]),
            l1: MethodGrid::new(&[0.01, 0.03, 0.1, 0.3], &[0.9]),
            msda: MethodGrid::new(&[3e-4, 1e-3, 3e-3, 1e-2], &[0.5]),
            merr: MethodGrid::new(&[0.01, 0.03, 0.1, 0.3], &[0.9]),
        }
    }
}

/// Sweep settings: `qs` crossed with `base_lambda * 10^k` for `k` in `-decades..=decades`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub method: Method,
    pub base_lambda: f64,
    pub decades: i32,
    pub qs: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            method: Method::Merr,
            base_lambda: 0.1,
            decades: 3,
            qs: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        }
    }
}

impl SweepConfig {
    pub fn lambdas(&self) -> Vec<f64> {
        (-self.decades..=self.decades).map(|k| self.base_lambda * 10f64.powi(k)).collect()
    }
}

/// Everything needed to re-run an experiment. Saved next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Side length of rendered phantoms.
    pub size: usize,
    pub images: Vec<ImageSource>,
    pub snr_db: Vec<f64>,
    pub densities: Vec<f64>,
    pub methods: Vec<Method>,
    pub grids: MethodGrids,
    /// MSDA roughness exponent.
    pub msda_r: f64,
    pub epsilon: f64,
    pub pyramid: PyramidConfig,
    pub ssim: SsimParams,
    pub sweep: SweepConfig,
    /// Write every reconstruction as raw `f32`.
    pub save_images: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("merr-out"),
            seed: 1,
            size: 128,
            images: Phantom::ALL.iter().map(|&phantom| ImageSource::Phantom { phantom }).collect(),
            snr_db: vec![12.1, 13.3, 14.3],
            densities: vec![0.3, 0.4, 0.5],
            methods: Method::ALL.to_vec(),
            grids: MethodGrids::default(),
            msda_r: 0.5,
            epsilon: 1e-6,
            pyramid: PyramidConfig::default(),
            ssim: SsimParams::default(),
            sweep: SweepConfig::default(),
            save_images: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.images.is_empty() || self.snr_db.is_empty() || self.densities.is_empty() || self.methods.is_empty() {
            return bad("images, snr_db, densities and methods must be non-empty".into());
        }
        for &m in &self.methods {
            let g = self.grids.get(m);
            if g.lambdas.is_empty() || g.qs.is_empty() {
                return bad(format!("{} needs at least one lambda and one q", m.name()));
            }
        }
        self.ssim.validate()?;
        self.params(0.1, 0.9, 1.0).validate()
    }

    /// Solver parameters for one grid point.
    pub fn params(&self, lambda: f64, q: f64, bound_m: f64) -> RegParams {
        RegParams {
            lambda,
            q,
            r: self.msda_r,
            p: 1.0,
            epsilon: self.epsilon,
            bound_m,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(format!("run config: {e}")))
    }
}
