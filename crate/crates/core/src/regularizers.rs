//! Roughness functionals on second derivatives: the plain `R_p` family, the
//! Hessian-Schatten norm, the multiresolution reweighted MSDA penalty and the
//! maximum-entropy penalty built from a structure guide.
//!
//! The maximum-entropy penalty models each directional second derivative of
//! the unknown image, taken along the guide's Hessian eigen-directions, as a
//! Gaussian whose mean is the guide's own eigenvalue and whose variance grows
//! like `(eps + |eigenvalue|)^q`. The cross derivative has mean zero and the
//! geometric mean of the two variances.

use crate::diffops::{
    apply_hessian, eig2x2, hessian_adjoint_raw, hessian_raw, roughness_of, Direction, EigenField,
};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Image, RegParams};

/// Per-pixel prior statistics extracted from a guide image `v`.
#[derive(Debug, Clone)]
pub struct StructureGuide {
    pub v: Image,
    pub eig: EigenField,
    /// `(eps + |lam1|)^q`
    pub w1: Image,
    /// `(eps + |lam2|)^q`
    pub w2: Image,
    /// `(eps + |lam1|)^(q/2) (eps + |lam2|)^(q/2)`
    pub w12: Image,
    pub d1v: Image,
    pub d2v: Image,
    pub q: f64,
    pub epsilon: f64,
}

pub fn build_guide(v: &Image, params: &RegParams) -> Result<StructureGuide> {
    params.validate()?;
    let hess = apply_hessian(v)?;
    let eig = eig2x2(&hess);
    let (q, eps) = (params.q, params.epsilon);
    let grid = v.grid();
    let n = grid.len();
    let mut w1 = Vec::with_capacity(n);
    let mut w2 = Vec::with_capacity(n);
    let mut w12 = Vec::with_capacity(n);
    for i in 0..n {
        let a1 = eps + eig.lam1.data()[i].abs();
        let a2 = eps + eig.lam2.data()[i].abs();
        w1.push(a1.powf(q));
        w2.push(a2.powf(q));
        w12.push(a1.powf(0.5 * q) * a2.powf(0.5 * q));
    }
    Ok(StructureGuide {
        v: v.clone(),
        d1v: eig.lam1.clone(),
        d2v: eig.lam2.clone(),
        eig,
        w1: Image::from_vec(grid, w1),
        w2: Image::from_vec(grid, w2),
        w12: Image::from_vec(grid, w12),
        q,
        epsilon: eps,
    })
}

/// `Σ_y E(y)^(p/2)` with `E = dxx² + dyy² + 2 dxy²`.
pub fn reg_lp(u: &Image, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 2]")));
    }
    let e = roughness_of(&apply_hessian(u)?);
    Ok(if p == 2.0 {
        e.data().iter().sum()
    } else {
        e.data().iter().map(|&v| v.powf(0.5 * p)).sum()
    })
}

/// Hessian-Schatten norm of order `p >= 1`, summed over pixels.
pub fn reg_schatten(u: &Image, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("Schatten order {p} must be >= 1")));
    }
    let eig = eig2x2(&apply_hessian(u)?);
    let sum = eig
        .lam1
        .data()
        .iter()
        .zip(eig.lam2.data())
        .map(|(&a, &b)| {
            if p.is_infinite() {
                a.abs().max(b.abs())
            } else {
                (a.abs().powf(p) + b.abs().powf(p)).powf(1.0 / p)
            }
        })
        .sum();
    Ok(sum)
}

/// MSDA reweighting `(eps + E_v)^(-q)` taken from the guide's roughness.
pub fn msda_weights(v: &Image, q: f64, eps: f64) -> Result<Vec<f64>> {
    let ev = roughness_of(&apply_hessian(v)?);
    Ok(ev.data().iter().map(|&e| (eps + e).powf(-q)).collect())
}

/// `Σ_y (eps + E_v(y))^(-q) E_u(y)^r`.
pub fn reg_msda(u: &Image, v: &Image, q: f64, r: f64, eps: f64) -> Result<f64> {
    u.grid().require_same(&v.grid(), "MSDA guide")?;
    let weights = msda_weights(v, q, eps)?;
    let eu = roughness_of(&apply_hessian(u)?);
    Ok(weights
        .iter()
        .zip(eu.data())
        .map(|(&w, &e)| w * if r == 1.0 { e } else { e.powf(r) })
        .sum())
}

pub fn reg_merr(u: &Image, guide: &StructureGuide) -> Result<f64> {
    u.grid().require_same(&guide.v.grid(), "structure guide")?;
    let hess = apply_hessian(u)?;
    let eig = &guide.eig;
    let mut total = 0.0;
    for i in 0..u.grid().len() {
        let h = hess.at(i);
        let dd = |which| {
            let k = eig.coefs(i, which);
            k[0] * h[0] + k[1] * h[1] + k[2] * h[2]
        };
        let r1 = dd(Direction::First) - guide.d1v.data()[i];
        let r2 = dd(Direction::Second) - guide.d2v.data()[i];
        let r12 = dd(Direction::Cross);
        total += r1 * r1 / guide.w1.data()[i] + r2 * r2 / guide.w2.data()[i]
            + r12 * r12 / guide.w12.data()[i];
    }
    Ok(total)
}

pub fn grad_reg_merr(u: &Image, guide: &StructureGuide) -> Result<Image> {
    u.grid().require_same(&guide.v.grid(), "structure guide")?;
    u.grid().require_min(3)?;
    let quad = HessianQuadratic::merr(guide);
    Ok(Image::from_vec(u.grid(), quad.gradient(u.data())))
}

/// A quadratic functional of the Hessian stack `h(y) = (dxx, dyy, dxy)(y)`:
///
/// `Q(u) = Σ_y h(y)ᵀ M(y) h(y) - 2 b(y)ᵀ h(y) + k(y)`
///
/// with a symmetric 3×3 `M(y)` stored as `[m00, m11, m22, m01, m02, m12]`.
#[derive(Debug, Clone)]
pub struct HessianQuadratic {
    pub grid: GridSpec,
    pub metric: Vec<[f64; 6]>,
    pub linear: Vec<[f64; 3]>,
    pub constant: Vec<f64>,
}

#[inline]
pub(crate) fn metric_apply(m: &[f64; 6], h: [f64; 3]) -> [f64; 3] {
    [
        m[0] * h[0] + m[3] * h[1] + m[4] * h[2],
        m[3] * h[0] + m[1] * h[1] + m[5] * h[2],
        m[4] * h[0] + m[5] * h[1] + m[2] * h[2],
    ]
}

#[inline]
fn add_outer(m: &mut [f64; 6], a: [f64; 3], w: f64) {
    m[0] += w * a[0] * a[0];
    m[1] += w * a[1] * a[1];
    m[2] += w * a[2] * a[2];
    m[3] += w * a[0] * a[1];
    m[4] += w * a[0] * a[2];
    m[5] += w * a[1] * a[2];
}

impl HessianQuadratic {
    /// Quadratic roughness `Σ ω(y) E(y)`; unit weights when `weights` is `None`.
    pub fn roughness(grid: GridSpec, weights: Option<&[f64]>) -> Self {
        let metric = (0..grid.len())
            .map(|i| {
                let w = weights.map_or(1.0, |ws| ws[i]);
                [w, w, 2.0 * w, 0.0, 0.0, 0.0]
            })
            .collect();
        Self {
            grid,
            metric,
            linear: vec![[0.0; 3]; grid.len()],
            constant: vec![0.0; grid.len()],
        }
    }

    /// The maximum-entropy penalty of `guide` in metric form.
    pub fn merr(guide: &StructureGuide) -> Self {
        let grid = guide.v.grid();
        let n = grid.len();
        let mut metric = vec![[0.0; 6]; n];
        let mut linear = vec![[0.0; 3]; n];
        let mut constant = vec![0.0; n];
        for i in 0..n {
            let terms = [
                (Direction::First, guide.d1v.data()[i], guide.w1.data()[i]),
                (Direction::Second, guide.d2v.data()[i], guide.w2.data()[i]),
                (Direction::Cross, 0.0, guide.w12.data()[i]),
            ];
            for (which, target, var) in terms {
                let a = guide.eig.coefs(i, which);
                let inv = 1.0 / var;
                add_outer(&mut metric[i], a, inv);
                for c in 0..3 {
                    linear[i][c] += inv * target * a[c];
                }
                constant[i] += inv * target * target;
            }
        }
        Self {
            grid,
            metric,
            linear,
            constant,
        }
    }

    pub fn scale(mut self, s: f64) -> Self {
        for m in &mut self.metric {
            m.iter_mut().for_each(|v| *v *= s);
        }
        for b in &mut self.linear {
            b.iter_mut().for_each(|v| *v *= s);
        }
        self.constant.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let [dxx, dyy, dxy] = hessian_raw(u, self.grid);
        let mut total = 0.0;
        for i in 0..self.grid.len() {
            let h = [dxx[i], dyy[i], dxy[i]];
            let mh = metric_apply(&self.metric[i], h);
            let b = self.linear[i];
            total += h[0] * (mh[0] - 2.0 * b[0])
                + h[1] * (mh[1] - 2.0 * b[1])
                + h[2] * (mh[2] - 2.0 * b[2])
                + self.constant[i];
        }
        total
    }

    /// `2 Hᵀ (M h - b)`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        self.backproject(u, true)
    }

    /// `2 Hᵀ M H d`, the Hessian-vector product.
    pub fn hess_vec(&self, d: &[f64]) -> Vec<f64> {
        self.backproject(d, false)
    }

    fn backproject(&self, u: &[f64], with_linear: bool) -> Vec<f64> {
        let [mut dxx, mut dyy, mut dxy] = hessian_raw(u, self.grid);
        for i in 0..self.grid.len() {
            let mut g = metric_apply(&self.metric[i], [dxx[i], dyy[i], dxy[i]]);
            if with_linear {
                let b = self.linear[i];
                g = [g[0] - b[0], g[1] - b[1], g[2] - b[2]];
            }
            dxx[i] = 2.0 * g[0];
            dyy[i] = 2.0 * g[1];
            dxy[i] = 2.0 * g[2];
        }
        hessian_adjoint_raw([&dxx, &dyy, &dxy], self.grid)
    }
}
