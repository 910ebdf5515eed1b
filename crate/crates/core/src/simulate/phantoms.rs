//! Seeded synthetic test images with intensities in `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{GridSpec, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phantom {
    /// Overlapping ellipses of constant intensity on a dark background.
    Blobs,
    /// Thin curved fibers with a Gaussian cross-section.
    Filaments,
    /// Smooth illumination gradient with small Gaussian spots.
    GradientSpots,
}

impl Phantom {
    pub const ALL: [Phantom; 3] = [Phantom::Blobs, Phantom::Filaments, Phantom::GradientSpots];

    pub fn name(self) -> &'static str {
        match self {
            Phantom::Blobs => "blobs",
            Phantom::Filaments => "filaments",
            Phantom::GradientSpots => "gradient-spots",
        }
    }

    pub fn render(self, n: usize, seed: u64) -> Result<Image> {
        let grid = GridSpec::square(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = match self {
            Phantom::Blobs => blobs(grid, &mut rng),
            Phantom::Filaments => filaments(grid, &mut rng),
            Phantom::GradientSpots => gradient_spots(grid, &mut rng),
        };
        Ok(img.map(|v| v.clamp(0.0, 1.0)).with_channel(self.name()))
    }
}

fn blobs(grid: GridSpec, rng: &mut ChaCha8Rng) -> Image {
    let n = grid.width as f64;
    let shapes: Vec<[f64; 6]> = (0..9)
        .map(|_| {
            [
                rng.random_range(0.15..0.85) * n,
                rng.random_range(0.15..0.85) * n,
                rng.random_range(0.05..0.16) * n,
                rng.random_range(0.03..0.10) * n,
                rng.random_range(0.0..std::f64::consts::PI),
                rng.random_range(0.3..0.95),
            ]
        })
        .collect();
    Image::from_fn(grid, |x, y| {
        let mut v = 0.05;
        for &[cx, cy, a, b, th, level] in &shapes {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let (c, s) = (th.cos(), th.sin());
            let (u, w) = ((c * dx + s * dy) / a, (-s * dx + c * dy) / b);
            if u * u + w * w <= 1.0 {
                v = level;
            }
        }
        v
    })
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * vx - p.0, a.1 + t * vy - p.1);
    (qx * qx + qy * qy).sqrt()
}

fn filaments(grid: GridSpec, rng: &mut ChaCha8Rng) -> Image {
    let n = grid.width as f64;
    let mut paths: Vec<(Vec<(f64, f64)>, f64, f64)> = Vec::new();
    for _ in 0..10 {
        let mut p = (rng.random_range(0.0..n), rng.random_range(0.0..n));
        let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mut turn: f64 = rng.random_range(-0.08..0.08);
        let mut pts = vec![p];
        for _ in 0..(1.2 * n) as usize / 2 {
            turn = (turn + rng.random_range(-0.03..0.03)).clamp(-0.12, 0.12);
            heading += turn;
            p = (p.0 + 2.0 * heading.cos(), p.1 + 2.0 * heading.sin());
            pts.push(p);
        }
        paths.push((pts, rng.random_range(0.5..1.0), rng.random_range(0.8..1.4)));
    }
    Image::from_fn(grid, |x, y| {
        let q = (x as f64, y as f64);
        let mut v: f64 = 0.05;
        for (pts, level, width) in &paths {
            let d = pts
                .windows(2)
                .map(|s| segment_distance(q, s[0], s[1]))
                .fold(f64::INFINITY, f64::min);
            if d < 5.0 * width {
                v = v.max(0.05 + level * (-0.5 * d * d / (width * width)).exp());
            }
        }
        v
    })
}

fn gradient_spots(grid: GridSpec, rng: &mut ChaCha8Rng) -> Image {
    let n = grid.width as f64;
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (gx, gy) = (th.cos(), th.sin());
    let wave: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let spots: Vec<[f64; 4]> = (0..30)
        .map(|_| {
            [
                rng.random_range(0.05..0.95) * n,
                rng.random_range(0.05..0.95) * n,
                rng.random_range(1.0..3.0),
                rng.random_range(0.25..0.55),
            ]
        })
        .collect();
    Image::from_fn(grid, |x, y| {
        let (u, w) = (x as f64 / n - 0.5, y as f64 / n - 0.5);
        let mut v = 0.3 + 0.3 * (gx * u + gy * w) + 0.06 * (2.0 * std::f64::consts::PI * (u - w) + wave).sin();
        for &[cx, cy, s, a] in &spots {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            v += a * (-0.5 * d2 / (s * s)).exp();
        }
        v
    })
}
