//! Jacobi-preconditioned conjugate gradients on a matrix-free SPD operator.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `K x = b` from the warm start in `x`. `inv_diag` is the Jacobi
/// preconditioner; entries of 0 freeze the corresponding unknowns. Returns the
/// final relative residual.
pub(crate) fn pcg<F>(mut apply: F, b: &[f64], inv_diag: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> f64
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let bnorm = norm(b);
    if bnorm == 0.0 {
        // the origin solves the system; keep frozen entries untouched
        for (xi, &m) in x.iter_mut().zip(inv_diag) {
            if m != 0.0 {
                *xi = 0.0;
            }
        }
        return 0.0;
    }
    let kx = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&kx).zip(inv_diag).map(|((bi, ki), &m)| if m != 0.0 { bi - ki } else { 0.0 }).collect();
    let mut rel = norm(&r) / bnorm;
    if rel <= tol {
        return rel;
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let mut kp = apply(&p);
        for (v, &m) in kp.iter_mut().zip(inv_diag) {
            if m == 0.0 {
                *v = 0.0;
            }
        }
        let pkp = dot(&p, &kp);
        if !(pkp > 0.0) {
            break;
        }
        let alpha = rz / pkp;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        rel = norm(&r) / bnorm;
        if rel <= tol {
            break;
        }
        for i in 0..z.len() {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    rel
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // tridiagonal 2, -1 plus identity
        let n = 20;
        let apply = |x: &[f64]| {
            (0..n)
                .map(|i| {
                    let mut v = 3.0 * x[i];
                    if i > 0 {
                        v -= x[i - 1];
                    }
                    if i + 1 < n {
                        v -= x[i + 1];
                    }
                    v
                })
                .collect::<Vec<_>>()
        };
        let truth: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = apply(&truth);
        let mut x = vec![0.0; n];
        let out = pcg(apply, &b, &vec![1.0 / 3.0; n], &mut x, 1e-13, 200);
        assert!(out <= 1e-13);
        for (a, t) in x.iter().zip(&truth) {
            assert!((a - t).abs() < 1e-11);
        }
    }

    #[test]
    fn frozen_entries_stay_put() {
        let apply = |x: &[f64]| x.iter().map(|v| 2.0 * v).collect::<Vec<_>>();
        let mut x = vec![5.0, 0.0, 0.0];
        pcg(apply, &[2.0, 4.0, 6.0], &[0.0, 0.5, 0.5], &mut x, 1e-14, 10);
        assert_eq!(x[0], 5.0);
        assert!((x[1] - 2.0).abs() < 1e-14 && (x[2] - 3.0).abs() < 1e-14);
    }
}
