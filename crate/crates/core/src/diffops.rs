//! Discrete second derivatives, per-pixel Hessian eigen-analysis and
//! directional second derivatives.
//!
//! Stencils: `[1, -2, 1]` along x and y for the pure derivatives and
//! `1/4 [[1, 0, -1], [0, 0, 0], [-1, 0, 1]]` for the mixed one. Images are
//! extended by half-sample symmetric mirroring (`u[-1] = u[0]`,
//! `u[n] = u[n - 1]`) so constants stay in the null space up to the border.

use crate::error::Result;
use crate::grid::{GridSpec, Image};

/// Folds an out-of-range index back into `0..n` by half-sample symmetric reflection.
#[inline]
pub fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

/// Mirrored neighbor indices along one axis.
#[derive(Debug, Clone)]
pub(crate) struct AxisNeighbors {
    pub prev: Vec<usize>,
    pub next: Vec<usize>,
}

impl AxisNeighbors {
    pub fn new(n: usize) -> Self {
        Self {
            prev: (0..n).map(|i| mirror_index(i as isize - 1, n)).collect(),
            next: (0..n).map(|i| mirror_index(i as isize + 1, n)).collect(),
        }
    }
}

/// Per-pixel Hessian `[[dxx, dxy], [dxy, dyy]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianField {
    pub grid: GridSpec,
    pub dxx: Image,
    pub dyy: Image,
    pub dxy: Image,
}

impl HessianField {
    #[inline]
    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.dxx.data()[i], self.dyy.data()[i], self.dxy.data()[i]]
    }
}

/// Hessian channels of a raw row-major buffer: `[dxx, dyy, dxy]`.
pub(crate) fn hessian_raw(u: &[f64], grid: GridSpec) -> [Vec<f64>; 3] {
    let (w, h) = (grid.width, grid.height);
    let nx = AxisNeighbors::new(w);
    let ny = AxisNeighbors::new(h);
    let mut dxx = vec![0.0; w * h];
    let mut dyy = vec![0.0; w * h];
    let mut dxy = vec![0.0; w * h];
    for y in 0..h {
        let row = y * w;
        let up = ny.prev[y] * w;
        let down = ny.next[y] * w;
        for x in 0..w {
            let (l, r) = (nx.prev[x], nx.next[x]);
            let c = u[row + x];
            dxx[row + x] = u[row + l] - 2.0 * c + u[row + r];
            dyy[row + x] = u[up + x] - 2.0 * c + u[down + x];
            dxy[row + x] = 0.25 * (u[up + l] - u[up + r] - u[down + l] + u[down + r]);
        }
    }
    [dxx, dyy, dxy]
}

/// Adjoint of [`hessian_raw`]: `Dxxᵀ gxx + Dyyᵀ gyy + Dxyᵀ gxy`.
pub(crate) fn hessian_adjoint_raw(g: [&[f64]; 3], grid: GridSpec) -> Vec<f64> {
    let (w, h) = (grid.width, grid.height);
    let nx = AxisNeighbors::new(w);
    let ny = AxisNeighbors::new(h);
    let [gxx, gyy, gxy] = g;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let row = y * w;
        let up = ny.prev[y] * w;
        let down = ny.next[y] * w;
        for x in 0..w {
            let i = row + x;
            let (l, r) = (nx.prev[x], nx.next[x]);
            let a = gxx[i];
            out[row + l] += a;
            out[i] -= 2.0 * a;
            out[row + r] += a;
            let b = gyy[i];
            out[up + x] += b;
            out[i] -= 2.0 * b;
            out[down + x] += b;
            let c = 0.25 * gxy[i];
            out[up + l] += c;
            out[up + r] -= c;
            out[down + l] -= c;
            out[down + r] += c;
        }
    }
    out
}

pub fn apply_hessian(u: &Image) -> Result<HessianField> {
    let grid = u.grid();
    grid.require_min(3)?;
    let [dxx, dyy, dxy] = hessian_raw(u.data(), grid);
    Ok(HessianField {
        grid,
        dxx: Image::from_vec(grid, dxx).with_channel("dxx"),
        dyy: Image::from_vec(grid, dyy).with_channel("dyy"),
        dxy: Image::from_vec(grid, dxy).with_channel("dxy"),
    })
}

/// Eigenpairs of the symmetric matrix `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen2 {
    pub lam1: f64,
    pub lam2: f64,
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

#[inline]
fn canonical_sign(v: [f64; 2]) -> [f64; 2] {
    if v[0] > 0.0 || (v[0] == 0.0 && v[1] >= 0.0) {
        v
    } else {
        [-v[0], -v[1]]
    }
}

/// Closed-form eigen-decomposition with `lam1 >= lam2`.
///
/// The eigenvector angle is `theta = atan2(2b, a - c) / 2`; a repeated
/// eigenvalue yields the coordinate axes. Each vector's first nonzero
/// component is made nonnegative.
pub fn eig_sym2(a: f64, b: f64, c: f64) -> SymEigen2 {
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = theta.sin_cos();
    SymEigen2 {
        lam1: mean + radius,
        lam2: mean - radius,
        e1: canonical_sign([co, s]),
        e2: canonical_sign([-s, co]),
    }
}

/// Per-pixel eigenvalues and unit eigenvectors of a Hessian field.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenField {
    pub grid: GridSpec,
    pub lam1: Image,
    pub lam2: Image,
    pub e1: Vec<[f64; 2]>,
    pub e2: Vec<[f64; 2]>,
}

pub fn eig2x2(field: &HessianField) -> EigenField {
    let n = field.grid.len();
    let mut lam1 = Vec::with_capacity(n);
    let mut lam2 = Vec::with_capacity(n);
    let mut e1 = Vec::with_capacity(n);
    let mut e2 = Vec::with_capacity(n);
    for i in 0..n {
        let [a, c, b] = field.at(i);
        let eg = eig_sym2(a, b, c);
        lam1.push(eg.lam1);
        lam2.push(eg.lam2);
        e1.push(eg.e1);
        e2.push(eg.e2);
    }
    EigenField {
        grid: field.grid,
        lam1: Image::from_vec(field.grid, lam1).with_channel("lam1"),
        lam2: Image::from_vec(field.grid, lam2).with_channel("lam2"),
        e1,
        e2,
    }
}

/// Which pair of eigen-directions a directional second derivative uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    First,
    Second,
    Cross,
}

/// Coefficients `(k_xx, k_yy, k_xy)` with `d1ᵀ H d2 = k_xx dxx + k_yy dyy + k_xy dxy`.
#[inline]
pub fn quadratic_form_coefs(d1: [f64; 2], d2: [f64; 2]) -> [f64; 3] {
    [d1[0] * d2[0], d1[1] * d2[1], d1[0] * d2[1] + d1[1] * d2[0]]
}

impl EigenField {
    #[inline]
    pub fn coefs(&self, i: usize, which: Direction) -> [f64; 3] {
        match which {
            Direction::First => quadratic_form_coefs(self.e1[i], self.e1[i]),
            Direction::Second => quadratic_form_coefs(self.e2[i], self.e2[i]),
            Direction::Cross => quadratic_form_coefs(self.e1[i], self.e2[i]),
        }
    }
}

/// `d1ᵀ H(u) d2` per pixel, with directions taken from `dirs`.
pub fn directional_dd(u: &Image, dirs: &EigenField, which: Direction) -> Result<Image> {
    u.grid().require_same(&dirs.grid, "directional derivative")?;
    let hess = apply_hessian(u)?;
    let out = (0..u.grid().len())
        .map(|i| {
            let k = dirs.coefs(i, which);
            let [dxx, dyy, dxy] = hess.at(i);
            k[0] * dxx + k[1] * dyy + k[2] * dxy
        })
        .collect();
    Ok(Image::from_vec(u.grid(), out))
}

/// Squared Frobenius norm of the Hessian, `dxx² + dyy² + 2 dxy²`.
pub fn roughness_image(u: &Image) -> Result<Image> {
    let hess = apply_hessian(u)?;
    Ok(roughness_of(&hess))
}

pub(crate) fn roughness_of(hess: &HessianField) -> Image {
    let data = (0..hess.grid.len())
        .map(|i| {
            let [a, c, b] = hess.at(i);
            a * a + c * c + 2.0 * b * b
        })
        .collect();
    Image::from_vec(hess.grid, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, n).unwrap()
    }

    #[test]
    fn mirror_folds_both_sides() {
        assert_eq!(mirror_index(-1, 5), 0);
        assert_eq!(mirror_index(-2, 5), 1);
        assert_eq!(mirror_index(5, 5), 4);
        assert_eq!(mirror_index(6, 5), 3);
        assert_eq!(mirror_index(12, 5), 2);
        assert_eq!(mirror_index(3, 5), 3);
    }

    #[test]
    fn constant_has_zero_hessian() {
        let u = Image::constant(grid(6), 3.5);
        let h = apply_hessian(&u).unwrap();
        assert!(h.dxx.data().iter().chain(h.dyy.data()).chain(h.dxy.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_and_bilinear_interior() {
        let g = grid(7);
        let h = apply_hessian(&Image::from_fn(g, |x, _| (x * x) as f64)).unwrap();
        let hb = apply_hessian(&Image::from_fn(g, |x, y| (x * y) as f64)).unwrap();
        for y in 1..6 {
            for x in 1..6 {
                assert_eq!(h.dxx.get(x, y), 2.0);
                assert_eq!(h.dyy.get(x, y), 0.0);
                assert_eq!(h.dxy.get(x, y), 0.0);
                assert_eq!(hb.dxy.get(x, y), 1.0);
                assert_eq!(hb.dxx.get(x, y), 0.0);
                assert_eq!(hb.dyy.get(x, y), 0.0);
            }
        }
    }

    #[test]
    fn too_small_image_is_rejected() {
        let u = Image::zeros(GridSpec::new(2, 5).unwrap());
        assert!(apply_hessian(&u).is_err());
    }

    #[test]
    fn eigen_special_cases() {
        let d = eig_sym2(3.0, 0.0, -1.0);
        assert_eq!((d.lam1, d.lam2), (3.0, -1.0));
        assert_eq!(d.e1, [1.0, 0.0]);
        assert_eq!(d.e2, [0.0, 1.0]);

        let s = eig_sym2(0.0, 1.0, 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.lam1 - 1.0).abs() < 1e-15 && (s.lam2 + 1.0).abs() < 1e-15);
        assert!((s.e1[0] - r).abs() < 1e-15 && (s.e1[1] - r).abs() < 1e-15);
        assert!((s.e2[0] - r).abs() < 1e-15 && (s.e2[1] + r).abs() < 1e-15);

        let z = eig_sym2(0.0, 0.0, 0.0);
        assert_eq!(z.e1, [1.0, 0.0]);
        assert_eq!(z.e2, [0.0, 1.0]);
        let iso = eig_sym2(2.0, 0.0, 2.0);
        assert_eq!(iso.e1, [1.0, 0.0]);
    }

    #[test]
    fn own_directions_give_eigenvalues() {
        let g = grid(9);
        let u = Image::from_fn(g, |x, y| ((x * 7 + y * 13) % 5) as f64 * 0.3 + (x as f64).sin());
        let eig = eig2x2(&apply_hessian(&u).unwrap());
        let d1 = directional_dd(&u, &eig, Direction::First).unwrap();
        let d2 = directional_dd(&u, &eig, Direction::Second).unwrap();
        let d12 = directional_dd(&u, &eig, Direction::Cross).unwrap();
        assert!(d1.max_abs_diff(&eig.lam1) < 1e-12);
        assert!(d2.max_abs_diff(&eig.lam2) < 1e-12);
        assert!(d12.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn roughness_of_quadratic() {
        let g = grid(6);
        let e = roughness_image(&Image::from_fn(g, |x, _| (x * x) as f64)).unwrap();
        for y in 0..6 {
            for x in 1..5 {
                assert_eq!(e.get(x, y), 4.0);
            }
        }
        assert!(roughness_image(&Image::constant(g, 1.0)).unwrap().data().iter().all(|&v| v == 0.0));
    }
}
