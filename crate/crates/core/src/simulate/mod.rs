//! Synthetic acquisitions: mixed Poisson-Gaussian noise calibrated to a target
//! SNR, and random point subsampling.
//!
//! Randomness comes from a seeded ChaCha8 generator. Noise draws use stream 0
//! and subsampling uses stream 1, so both can share one seed.

pub mod phantoms;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Image, Sample, SampleSet};

/// Generator identifier written into metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9)";
/// Fraction of the noise variance assigned to the Poisson part when a target SNR is given.
pub const POISSON_SHARE: f64 = 0.7;

const NOISE_STREAM: u64 = 0;
const SAMPLING_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NoiseDrive {
    /// Calibrate gain and Gaussian level to reach this SNR.
    TargetSnr { target_snr_db: f64 },
    /// Use the given gain and Gaussian standard deviation.
    Explicit { gain_alpha: f64, sigma_g: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub drive: NoiseDrive,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn target_snr(target_snr_db: f64, seed: u64) -> Self {
        Self { drive: NoiseDrive::TargetSnr { target_snr_db }, seed }
    }

    pub fn explicit(gain_alpha: f64, sigma_g: f64, seed: u64) -> Self {
        Self { drive: NoiseDrive::Explicit { gain_alpha, sigma_g }, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub achieved_snr_db: f64,
    pub gain_alpha: f64,
    pub sigma_g: f64,
    pub poisson_share: Option<f64>,
    pub seed: u64,
    pub rng: &'static str,
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    rng
}

fn apply_noise(img: &Image, alpha: f64, sigma: f64, seed: u64) -> Result<Image> {
    let mut rng = noise_rng(seed);
    let gauss = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("sigma_g: {e}")))?;
    let mut out = Vec::with_capacity(img.data().len());
    for &v in img.data() {
        let photons = if alpha < 1e-12 {
            v
        } else {
            let rate = v / alpha;
            let k: f64 = if rate > 0.0 {
                Poisson::new(rate)
                    .map_err(|e| Error::InvalidParameter(format!("Poisson rate {rate}: {e}")))?
                    .sample(&mut rng)
            } else {
                0.0
            };
            k * alpha
        };
        out.push(photons + gauss.sample(&mut rng));
    }
    Ok(Image::from_vec(img.grid(), out).with_channel("noisy"))
}

/// Adds mixed Poisson-Gaussian noise; returns the noisy image and what was used.
pub fn add_noise(img: &Image, spec: &NoiseSpec) -> Result<(Image, NoiseReport)> {
    if img.data().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("noise model needs nonnegative intensities".into()));
    }
    let (alpha, sigma, share) = match spec.drive {
        NoiseDrive::Explicit { gain_alpha, sigma_g } => {
            if !(gain_alpha >= 0.0 && sigma_g >= 0.0) {
                return Err(Error::InvalidParameter("gain and sigma must be nonnegative".into()));
            }
            (gain_alpha, sigma_g, None)
        }
        NoiseDrive::TargetSnr { target_snr_db } => {
            let alpha = calibrate(img, target_snr_db, spec.seed)?;
            (alpha, gaussian_sigma(img, alpha), Some(POISSON_SHARE))
        }
    };
    let noisy = apply_noise(img, alpha, sigma, spec.seed)?;
    let achieved = snr_db(img, &noisy).unwrap_or(f64::INFINITY);
    Ok((
        noisy,
        NoiseReport {
            achieved_snr_db: achieved,
            gain_alpha: alpha,
            sigma_g: sigma,
            poisson_share: share,
            seed: spec.seed,
            rng: RNG_NAME,
        },
    ))
}

/// Gaussian level giving the 70/30 variance split at the mean intensity.
fn gaussian_sigma(img: &Image, alpha: f64) -> f64 {
    (alpha * img.mean() * (1.0 - POISSON_SHARE) / POISSON_SHARE).sqrt()
}

fn calibrate(img: &Image, target: f64, seed: u64) -> Result<f64> {
    let unreachable = || Error::SnrUnreachable { target_db: target };
    if !target.is_finite() || img.mean() <= 0.0 {
        return Err(unreachable());
    }
    let snr_at = |log_alpha: f64| -> Result<f64> {
        let alpha = log_alpha.exp();
        let noisy = apply_noise(img, alpha, gaussian_sigma(img, alpha), seed)?;
        Ok(snr_db(img, &noisy).unwrap_or(f64::INFINITY))
    };
    let (mut lo, mut hi) = (1e-6f64.ln(), 1e3f64.ln());
    let (s_lo, s_hi) = (snr_at(lo)?, snr_at(hi)?);
    if !(s_lo >= target && s_hi <= target) {
        return Err(unreachable());
    }
    let mut best = (f64::INFINITY, lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let s = snr_at(mid)?;
        if (s - target).abs() < best.0 {
            best = ((s - target).abs(), mid);
        }
        if (s - target).abs() < 0.005 {
            break;
        }
        if s > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > 0.1 {
        return Err(unreachable());
    }
    Ok(best.1.exp())
}

/// `10 log10(Σ clean² / Σ (noisy - clean)²)`.
pub fn snr_db(clean: &Image, noisy: &Image) -> Result<f64> {
    clean.grid().require_same(&noisy.grid(), "SNR pair")?;
    let signal: f64 = clean.data().iter().map(|v| v * v).sum();
    let noise: f64 = clean
        .data()
        .iter()
        .zip(noisy.data())
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    if noise == 0.0 {
        return Err(Error::ZeroNoise);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// Keeps `round(density * pixels)` distinct pixels chosen uniformly at random.
pub fn subsample(img: &Image, density: f64, seed: u64) -> Result<SampleSet> {
    let n = img.grid().len();
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::DensityOutOfRange(density));
    }
    let count = (density * n as f64).round() as usize;
    if count == 0 {
        return Err(Error::DensityOutOfRange(density));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SAMPLING_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut picked = order[..count].to_vec();
    picked.sort_unstable();
    let w = img.width();
    let samples = picked
        .into_iter()
        .map(|k| Sample {
            x: (k % w) as f64,
            y: (k / w) as f64,
            value: img.data()[k],
        })
        .collect();
    SampleSet::new(samples, img.grid())
}
