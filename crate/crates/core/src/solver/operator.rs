//! Matrix-free pieces of the reconstruction cost seen from the variable grid.
//!
//! With `A` the upsampler, `H` the Hessian stack on the data grid and
//! `G = diag(1, 1, sqrt 2) H` the roughness stack, the u-subproblem matrix is
//!
//! `K = 2 Aᵀ C A + Aᵀ Hᵀ (2 M + rho_g S) H A + rho_z I`,  `S = diag(1, 1, 2)`,
//!
//! where `M` is the metric of the smooth part of the regularizer.

use crate::diffops::{hessian_adjoint_raw, hessian_raw, AxisNeighbors};
use crate::grid::GridSpec;
use crate::multires::resample::{AxisMatrix, ResampleOp};
use crate::regularizers::{metric_apply, HessianQuadratic};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Per coarse index: fine indices touched by `A e_j` or its second differences,
/// with the column value, its second difference and its centered difference.
struct AxisColumns {
    starts: Vec<usize>,
    entries: Vec<(usize, f64, f64, f64)>,
}

impl AxisColumns {
    fn new(axis: &AxisMatrix) -> Self {
        let nb = AxisNeighbors::new(axis.rows);
        let mut dense = vec![vec![0.0; axis.rows]; axis.cols];
        for r in 0..axis.rows {
            for (k, w) in axis.row(r) {
                dense[k][r] += w;
            }
        }
        let mut starts = vec![0];
        let mut entries = Vec::new();
        for a in &dense {
            for x in 0..axis.rows {
                let (l, r) = (nb.prev[x], nb.next[x]);
                let s0 = a[x];
                let s2 = a[l] - 2.0 * a[x] + a[r];
                let d1 = a[l] - a[r];
                if s0 != 0.0 || s2 != 0.0 || d1 != 0.0 {
                    entries.push((x, s0, s2, d1));
                }
            }
            starts.push(entries.len());
        }
        Self { starts, entries }
    }

    fn column(&self, j: usize) -> &[(usize, f64, f64, f64)] {
        &self.entries[self.starts[j]..self.starts[j + 1]]
    }
}

pub(crate) struct Problem<'a> {
    pub var: GridSpec,
    pub fine: GridSpec,
    pub up: &'a ResampleOp,
    pub c: &'a [f64],
    pub h: &'a [f64],
    /// Smooth regularizer, already multiplied by lambda.
    pub smooth: HessianQuadratic,
    pub bound: f64,
    /// `2 Aᵀ C h + 2 Aᵀ Hᵀ b`, the negated gradient of the smooth cost at 0.
    pub rhs0: Vec<f64>,
    columns: AxisColumns,
    /// Diagonal of `2 AᵀCA + 2 AᵀHᵀMHA` and of `AᵀHᵀSHA`.
    diag_smooth: Vec<f64>,
    diag_rough: Vec<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(up: &'a ResampleOp, c: &'a [f64], h: &'a [f64], smooth: HessianQuadratic, bound: f64) -> Self {
        let var = up.from_grid();
        let fine = up.to_grid();
        let columns = AxisColumns::new(up.axis());
        let ch: Vec<f64> = c.iter().zip(h).map(|(a, b)| 2.0 * a * b).collect();
        let mut rhs0 = up.adjoint_raw(&ch);
        let lin = &smooth.linear;
        if lin.iter().any(|b| b.iter().any(|&v| v != 0.0)) {
            let bx: Vec<f64> = lin.iter().map(|b| 2.0 * b[0]).collect();
            let by: Vec<f64> = lin.iter().map(|b| 2.0 * b[1]).collect();
            let bxy: Vec<f64> = lin.iter().map(|b| 2.0 * b[2]).collect();
            let back = up.adjoint_raw(&hessian_adjoint_raw([&bx, &by, &bxy], fine));
            rhs0.iter_mut().zip(&back).for_each(|(r, b)| *r += b);
        }
        let mut p = Self {
            var,
            fine,
            up,
            c,
            h,
            smooth,
            bound,
            rhs0,
            columns,
            diag_smooth: Vec::new(),
            diag_rough: Vec::new(),
        };
        p.refresh_diagonal();
        p
    }

    /// Replaces the smooth metric (reweighting) and updates the diagonal.
    pub fn set_smooth_metric(&mut self, metric: Vec<[f64; 6]>) {
        self.smooth.metric = metric;
        self.refresh_diagonal();
    }

    fn refresh_diagonal(&mut self) {
        let n = self.var.width;
        let w = self.fine.width;
        let mut ds = vec![0.0; n * n];
        let mut dr = vec![0.0; n * n];
        for jy in 0..n {
            let cy = self.columns.column(jy);
            for jx in 0..n {
                let cx = self.columns.column(jx);
                let (mut s, mut r) = (0.0, 0.0);
                for &(py, y0, y2, yd) in cy {
                    for &(px, x0, x2, xd) in cx {
                        let p = py * w + px;
                        let a = x0 * y0;
                        let hv = [x2 * y0, x0 * y2, 0.25 * xd * yd];
                        let mh = metric_apply(&self.smooth.metric[p], hv);
                        s += 2.0 * self.c[p] * a * a
                            + 2.0 * (hv[0] * mh[0] + hv[1] * mh[1] + hv[2] * mh[2]);
                        r += hv[0] * hv[0] + hv[1] * hv[1] + 2.0 * hv[2] * hv[2];
                    }
                }
                ds[jy * n + jx] = s;
                dr[jy * n + jx] = r;
            }
        }
        self.diag_smooth = ds;
        self.diag_rough = dr;
    }

    pub fn mean_smooth_diagonal(&self) -> f64 {
        self.diag_smooth.iter().sum::<f64>() / self.diag_smooth.len() as f64
    }

    /// Inverse diagonal of `K(rho_z, rho_g)`; `free` masks frozen entries.
    pub fn inv_diag(&self, rho_z: f64, rho_g: f64, free: Option<&[bool]>) -> Vec<f64> {
        (0..self.diag_smooth.len())
            .map(|i| {
                if free.is_some_and(|f| !f[i]) {
                    return 0.0;
                }
                let d = self.diag_smooth[i] + rho_g * self.diag_rough[i] + rho_z;
                if d > 0.0 {
                    1.0 / d
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// `K(rho_z, rho_g) x`.
    pub fn apply(&self, x: &[f64], rho_z: f64, rho_g: f64) -> Vec<f64> {
        let fine = self.up.apply_raw(x);
        let [mut hxx, mut hyy, mut hxy] = hessian_raw(&fine, self.fine);
        for i in 0..fine.len() {
            let hv = [hxx[i], hyy[i], hxy[i]];
            let mh = metric_apply(&self.smooth.metric[i], hv);
            hxx[i] = 2.0 * mh[0] + rho_g * hv[0];
            hyy[i] = 2.0 * mh[1] + rho_g * hv[1];
            hxy[i] = 2.0 * mh[2] + 2.0 * rho_g * hv[2];
        }
        let mut back = hessian_adjoint_raw([&hxx, &hyy, &hxy], self.fine);
        for i in 0..back.len() {
            back[i] += 2.0 * self.c[i] * fine[i];
        }
        let mut out = self.up.adjoint_raw(&back);
        if rho_z != 0.0 {
            out.iter_mut().zip(x).for_each(|(o, v)| *o += rho_z * v);
        }
        out
    }

    /// Gradient of the smooth cost (data + smooth regularizer).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.apply(x, 0.0, 0.0);
        g.iter_mut().zip(&self.rhs0).for_each(|(a, b)| *a -= b);
        g
    }

    /// Data and smooth-regularizer cost at `x`, together with `A x`.
    pub fn smooth_cost(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let fine = self.up.apply_raw(x);
        let data: f64 = fine
            .iter()
            .zip(self.h)
            .zip(self.c)
            .map(|((f, h), c)| {
                let d = f - h;
                c * d * d
            })
            .sum();
        (data + self.smooth.value(&fine), fine)
    }

    /// The roughness stack `G A x` on the data grid, given `A x`.
    pub fn rough_stack(&self, fine_x: &[f64]) -> Vec<[f64; 3]> {
        let [hxx, hyy, hxy] = hessian_raw(fine_x, self.fine);
        (0..fine_x.len())
            .map(|i| [hxx[i], hyy[i], SQRT2 * hxy[i]])
            .collect()
    }

    /// `(G A)ᵀ w`.
    pub fn rough_adjoint(&self, w: &[[f64; 3]]) -> Vec<f64> {
        let a: Vec<f64> = w.iter().map(|v| v[0]).collect();
        let b: Vec<f64> = w.iter().map(|v| v[1]).collect();
        let c: Vec<f64> = w.iter().map(|v| SQRT2 * v[2]).collect();
        self.up.adjoint_raw(&hessian_adjoint_raw([&a, &b, &c], self.fine))
    }
}
