#![allow(dead_code)]

use merr::binning::BinnedMeasurement;
use merr::{GridSpec, Image};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(n: usize, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Image {
    let g = GridSpec::square(n).unwrap();
    Image::from_fn(g, |_, _| rng.random_range(lo..hi))
}

/// Smooth random field: a few random low-frequency cosines.
pub fn smooth_image(n: usize, rng: &mut ChaCha8Rng) -> Image {
    let terms: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.0..3.0),
                rng.random_range(0.0..3.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(-0.3..0.3),
            )
        })
        .collect();
    let g = GridSpec::square(n).unwrap();
    Image::from_fn(g, |x, y| {
        let (u, v) = (x as f64 / n as f64, y as f64 / n as f64);
        0.5 + terms
            .iter()
            .map(|&(a, b, ph, amp)| amp * (std::f64::consts::PI * (a * u + b * v) + ph).cos())
            .sum::<f64>()
    })
}

pub fn measurement(h: Image, c: Image) -> BinnedMeasurement {
    let grid = h.grid();
    BinnedMeasurement { h, c, grid }
}

/// Half-sample mirror written out independently of the library.
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut k = i;
    loop {
        if k < 0 {
            k = -k - 1;
        } else if k >= n {
            k = 2 * n - 1 - k;
        } else {
            return k as usize;
        }
    }
}

/// Dense second-difference matrices (dxx, dyy, dxy) on an `n x n` grid, row-major.
pub fn dense_hessian(n: usize) -> [DMatrix<f64>; 3] {
    let len = n * n;
    let mut dxx = DMatrix::zeros(len, len);
    let mut dyy = DMatrix::zeros(len, len);
    let mut dxy = DMatrix::zeros(len, len);
    let at = |x: isize, y: isize| reflect(y, n) * n + reflect(x, n);
    for y in 0..n as isize {
        for x in 0..n as isize {
            let row = y as usize * n + x as usize;
            for (dx, w) in [(-1, 1.0), (0, -2.0), (1, 1.0)] {
                dxx[(row, at(x + dx, y))] += w;
                dyy[(row, at(x, y + dx))] += w;
            }
            for (dx, dy, w) in [(-1, -1, 0.25), (1, -1, -0.25), (-1, 1, -0.25), (1, 1, 0.25)] {
                dxy[(row, at(x + dx, y + dy))] += w;
            }
        }
    }
    [dxx, dyy, dxy]
}

/// Minimizer of `Σ c (u - h)² + λ Σ (dxx² + dyy² + 2 dxy²)` by dense normal equations.
pub fn dense_quadratic_solution(h: &Image, c: &Image, lambda: f64) -> DVector<f64> {
    let n = h.width();
    let [dxx, dyy, dxy] = dense_hessian(n);
    let reg = dxx.transpose() * &dxx + dyy.transpose() * &dyy + 2.0 * dxy.transpose() * &dxy;
    let cm = DMatrix::from_diagonal(&DVector::from_column_slice(c.data()));
    let a = cm + lambda * reg;
    let rhs = DVector::from_iterator(n * n, c.data().iter().zip(h.data()).map(|(a, b)| a * b));
    a.lu().solve(&rhs).expect("nonsingular normal equations")
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}
