//! ADMM iterations behind [`super::solve`].

use super::cg::{dot, norm, pcg};
use super::operator::Problem;
use super::{RegKind, SolveSpec, SolverOptions};
use crate::error::{Error, Result};
use crate::regularizers::{msda_weights, HessianQuadratic};

const TINY: f64 = 1e-300;

pub(super) struct Outcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    pub kkt_residual: Option<f64>,
}

enum Penalty {
    Smooth,
    /// `Σ κ_i sqrt(E_i)`
    Group(Vec<f64>),
    /// `Σ κ_i E_i^t`, `0 < t < 1`, `t != 1/2`
    Reweighted(Vec<f64>, f64),
}

fn clamp_into(x: &[f64], m: f64) -> Vec<f64> {
    x.iter().map(|v| v.clamp(0.0, m)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct Best {
    x: Vec<f64>,
    cost: f64,
}

impl Best {
    fn offer(&mut self, x: &[f64], cost: f64) {
        if cost < self.cost {
            self.cost = cost;
            self.x.copy_from_slice(x);
        }
    }
}

fn check_finite(cost: f64, iteration: usize) -> Result<f64> {
    if cost.is_finite() {
        Ok(cost)
    } else {
        Err(Error::NonFiniteCost { iteration })
    }
}

fn progress(opts: &SolverOptions, k: usize, cost: f64, rp: f64, rd: f64) {
    if opts.verbose {
        eprintln!("{k},{cost:.12e},{rp:.6e},{rd:.6e}");
    }
}

pub(super) fn run(spec: &SolveSpec, init: &[f64]) -> Result<Outcome> {
    let params = &spec.params;
    let lambda = params.lambda;
    let fine = spec.data.grid;
    let zero = || HessianQuadratic::roughness(fine, Some(&vec![0.0; fine.len()]));
    let exponent_penalty = |t: f64, kappa: Vec<f64>| -> Result<(HessianQuadratic, Penalty)> {
        if t == 1.0 {
            Ok((HessianQuadratic::roughness(fine, Some(&kappa)), Penalty::Smooth))
        } else if t == 0.5 {
            Ok((zero(), Penalty::Group(kappa)))
        } else if t > 0.0 && t < 1.0 {
            Ok((zero(), Penalty::Reweighted(kappa, t)))
        } else {
            Err(Error::InvalidParameter(format!("roughness exponent {t} outside (0, 1]")))
        }
    };
    let (smooth, penalty) = match spec.reg_kind {
        RegKind::Quadratic => (HessianQuadratic::roughness(fine, None).scale(lambda), Penalty::Smooth),
        RegKind::Merr => {
            let guide = spec.guide.as_ref().ok_or(Error::MissingGuide)?;
            (HessianQuadratic::merr(guide).scale(lambda), Penalty::Smooth)
        }
        RegKind::Lp => exponent_penalty(0.5 * params.p, vec![lambda; fine.len()])?,
        RegKind::Msda => {
            let guide = spec.guide.as_ref().ok_or(Error::MissingGuide)?;
            let w = msda_weights(&guide.v, params.q, params.epsilon)?;
            exponent_penalty(params.r, w.into_iter().map(|v| lambda * v).collect())?
        }
    };
    let mut prob = Problem::new(
        &spec.upsampler,
        spec.data.c.data(),
        spec.data.h.data(),
        smooth,
        params.bound_m,
    );
    let opts = &spec.options;
    if opts.verbose {
        eprintln!("iter,cost,primal_res,dual_res");
    }
    match penalty {
        Penalty::Smooth => smooth_admm(&prob, init, opts),
        Penalty::Group(kappa) => group_admm(&prob, &kappa, init, opts),
        Penalty::Reweighted(kappa, t) => reweighted(&mut prob, &kappa, t, params.epsilon, init, opts),
    }
}

/// Relative projected-gradient norm of the smooth cost.
fn kkt(prob: &Problem, x: &[f64]) -> f64 {
    let g = prob.gradient(x);
    let m = prob.bound;
    let step: f64 = x
        .iter()
        .zip(&g)
        .map(|(&xi, &gi)| {
            let d = (xi - gi).clamp(0.0, m) - xi;
            d * d
        })
        .sum::<f64>()
        .sqrt();
    step / norm(&prob.rhs0).max(TINY)
}

fn initial_rho(prob: &Problem) -> f64 {
    let r = prob.mean_smooth_diagonal();
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

/// Residual balancing; returns the factor applied to rho.
fn balance(rp: f64, ep: f64, rd: f64, ed: f64) -> f64 {
    let (p, d) = (rp / ep, rd / ed);
    if p > 10.0 * d {
        2.0
    } else if d > 10.0 * p {
        0.5
    } else {
        1.0
    }
}

fn smooth_admm(prob: &Problem, init: &[f64], opts: &SolverOptions) -> Result<Outcome> {
    let m = prob.bound;
    let n = init.len();
    let mut best = Best { x: init.to_vec(), cost: check_finite(prob.smooth_cost(init).0, 0)? };
    let mut u = init.to_vec();
    let mut z = init.to_vec();
    let mut yz = vec![0.0; n];
    let mut rho = initial_rho(prob);
    let grad_scale = norm(&prob.rhs0).max(TINY);
    let (mut rp, mut rd, mut converged, mut iters) = (0.0, 0.0, false, 0);
    for k in 1..=opts.max_iter {
        iters = k;
        let rhs: Vec<f64> = (0..n).map(|i| prob.rhs0[i] + rho * (z[i] - yz[i])).collect();
        let inv = prob.inv_diag(rho, 0.0, None);
        pcg(|x| prob.apply(x, rho, 0.0), &rhs, &inv, &mut u, opts.cg_tol, opts.cg_max_iter);
        let z_old = std::mem::replace(&mut z, (0..n).map(|i| (u[i] + yz[i]).clamp(0.0, m)).collect());
        for i in 0..n {
            yz[i] += u[i] - z[i];
        }
        rp = dist(&u, &z);
        rd = rho * dist(&z, &z_old);
        let ep = opts.tol_rel * norm(&u).max(norm(&z)).max(TINY);
        let ed = opts.tol_rel * (rho * norm(&yz)).max(grad_scale);
        let cost = check_finite(prob.smooth_cost(&z).0, k)?;
        best.offer(&z, cost);
        progress(opts, k, cost, rp, rd);
        if (rp <= ep && rd <= ed) || kkt(prob, &z) <= opts.tol_rel {
            converged = true;
            break;
        }
        let f = balance(rp, ep, rd, ed);
        if f != 1.0 {
            rho *= f;
            yz.iter_mut().for_each(|v| *v /= f);
        }
    }
    if let Some(x) = polish(prob, &best.x, opts) {
        let cost = prob.smooth_cost(&x).0;
        if cost.is_finite() {
            best.offer(&x, cost);
        }
    }
    let kkt_res = kkt(prob, &best.x);
    Ok(Outcome {
        solution: best.x,
        iterations: iters,
        primal_residual: rp,
        dual_residual: rd,
        converged: converged || kkt_res <= opts.tol_rel,
        kkt_residual: Some(kkt_res),
    })
}

/// Minimizes the smooth cost with the pixels pinned at a bound held fixed and
/// the rest free, refining the active set a few times.
fn polish(prob: &Problem, start: &[f64], opts: &SolverOptions) -> Option<Vec<f64>> {
    let m = prob.bound;
    let g = prob.gradient(start);
    let mut free: Vec<bool> = start
        .iter()
        .zip(&g)
        .map(|(&x, &gi)| !((x <= 0.0 && gi > 0.0) || (x >= m && gi < 0.0)))
        .collect();
    let mut x = start.to_vec();
    for _ in 0..4 {
        if !free.iter().any(|&f| f) {
            return None;
        }
        let inv = prob.inv_diag(0.0, 0.0, Some(&free));
        pcg(|v| prob.apply(v, 0.0, 0.0), &prob.rhs0, &inv, &mut x, opts.polish_tol, opts.polish_max_iter);
        let mut changed = false;
        for i in 0..x.len() {
            if free[i] && (x[i] < 0.0 || x[i] > m) {
                free[i] = false;
                x[i] = x[i].clamp(0.0, m);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Some(clamp_into(&x, m))
}

fn group_norms(stack: &[[f64; 3]]) -> impl Iterator<Item = f64> + '_ {
    stack.iter().map(|s| (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt())
}

fn group_admm(prob: &Problem, kappa: &[f64], init: &[f64], opts: &SolverOptions) -> Result<Outcome> {
    let m = prob.bound;
    let n = init.len();
    let cost_of = |x: &[f64]| {
        let (s, fine) = prob.smooth_cost(x);
        let stack = prob.rough_stack(&fine);
        s + group_norms(&stack).zip(kappa).map(|(e, k)| k * e).sum::<f64>()
    };
    let mut best = Best { x: init.to_vec(), cost: check_finite(cost_of(init), 0)? };
    let mut u = init.to_vec();
    let mut z = init.to_vec();
    let mut yz = vec![0.0; n];
    let mut g = prob.rough_stack(&prob.up.apply_raw(&u));
    let mut yg = vec![[0.0; 3]; g.len()];
    let mut rho_z = initial_rho(prob);
    let mut rho_g = kappa.iter().sum::<f64>() / kappa.len() as f64;
    if !(rho_g > 0.0) {
        rho_g = rho_z;
    }
    let grad_scale = norm(&prob.rhs0).max(TINY);
    let (mut rp, mut rd, mut converged, mut iters) = (0.0, 0.0, false, 0);
    for k in 1..=opts.max_iter {
        iters = k;
        let target: Vec<[f64; 3]> = g
            .iter()
            .zip(&yg)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
            .collect();
        let back = prob.rough_adjoint(&target);
        let rhs: Vec<f64> = (0..n)
            .map(|i| prob.rhs0[i] + rho_z * (z[i] - yz[i]) + rho_g * back[i])
            .collect();
        let inv = prob.inv_diag(rho_z, rho_g, None);
        pcg(|x| prob.apply(x, rho_z, rho_g), &rhs, &inv, &mut u, opts.cg_tol, opts.cg_max_iter);
        let s = prob.rough_stack(&prob.up.apply_raw(&u));
        let z_old = std::mem::replace(&mut z, (0..n).map(|i| (u[i] + yz[i]).clamp(0.0, m)).collect());
        let g_old = std::mem::replace(
            &mut g,
            s.iter()
                .zip(&yg)
                .zip(kappa)
                .map(|((a, b), &kp)| {
                    let v = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    let keep = if len > 0.0 { (1.0 - kp / (rho_g * len)).max(0.0) } else { 0.0 };
                    [keep * v[0], keep * v[1], keep * v[2]]
                })
                .collect(),
        );
        let mut pri2 = 0.0;
        for i in 0..n {
            yz[i] += u[i] - z[i];
            pri2 += (u[i] - z[i]) * (u[i] - z[i]);
        }
        for i in 0..g.len() {
            for c in 0..3 {
                let d = s[i][c] - g[i][c];
                yg[i][c] += d;
                pri2 += d * d;
            }
        }
        rp = pri2.sqrt();
        let dg: Vec<[f64; 3]> = g
            .iter()
            .zip(&g_old)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
            .collect();
        let dual_back = prob.rough_adjoint(&dg);
        let dual: Vec<f64> = (0..n).map(|i| rho_z * (z[i] - z_old[i]) + rho_g * dual_back[i]).collect();
        rd = norm(&dual);
        let y_back = prob.rough_adjoint(&yg);
        let y_full: Vec<f64> = (0..n).map(|i| rho_z * yz[i] + rho_g * y_back[i]).collect();
        let stack_norm = |v: &[[f64; 3]]| v.iter().map(|a| a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sum::<f64>();
        let ep = opts.tol_rel
            * (dot(&u, &u) + stack_norm(&s))
                .sqrt()
                .max((dot(&z, &z) + stack_norm(&g)).sqrt())
                .max(TINY);
        let ed = opts.tol_rel * norm(&y_full).max(grad_scale);
        let cost = check_finite(cost_of(&z), k)?;
        best.offer(&z, cost);
        progress(opts, k, cost, rp, rd);
        if rp <= ep && rd <= ed {
            converged = true;
            break;
        }
        let f = balance(rp, ep, rd, ed);
        if f != 1.0 {
            rho_z *= f;
            rho_g *= f;
            yz.iter_mut().for_each(|v| *v /= f);
            yg.iter_mut().for_each(|v| v.iter_mut().for_each(|a| *a /= f));
        }
    }
    Ok(Outcome {
        solution: best.x,
        iterations: iters,
        primal_residual: rp,
        dual_residual: rd,
        converged,
        kkt_residual: None,
    })
}

fn reweighted(
    prob: &mut Problem,
    kappa: &[f64],
    t: f64,
    eps: f64,
    init: &[f64],
    opts: &SolverOptions,
) -> Result<Outcome> {
    let true_cost = |prob: &Problem, x: &[f64]| {
        let fine = prob.up.apply_raw(x);
        let data: f64 = fine
            .iter()
            .zip(prob.h)
            .zip(prob.c)
            .map(|((f, h), c)| c * (f - h) * (f - h))
            .sum();
        let stack = prob.rough_stack(&fine);
        data + stack
            .iter()
            .zip(kappa)
            .map(|(s, k)| k * (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).powf(t))
            .sum::<f64>()
    };
    let mut best = Best { x: init.to_vec(), cost: check_finite(true_cost(prob, init), 0)? };
    let mut current = init.to_vec();
    let (mut iters, mut rp, mut rd, mut converged) = (0, 0.0, 0.0, false);
    for outer in 0..opts.max_reweight {
        let stack = prob.rough_stack(&prob.up.apply_raw(&current));
        let metric = stack
            .iter()
            .zip(kappa)
            .map(|(s, k)| {
                let e = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
                let w = k * t * (eps + e).powf(t - 1.0);
                [w, w, 2.0 * w, 0.0, 0.0, 0.0]
            })
            .collect();
        prob.set_smooth_metric(metric);
        let inner = smooth_admm(prob, &current, opts)?;
        iters += inner.iterations;
        rp = inner.primal_residual;
        rd = inner.dual_residual;
        let cost = check_finite(true_cost(prob, &inner.solution), outer + 1)?;
        best.offer(&inner.solution, cost);
        let change = dist(&inner.solution, &current) / norm(&current).max(TINY);
        current = inner.solution;
        if change <= opts.tol_rel * 10.0 {
            converged = true;
            break;
        }
    }
    Ok(Outcome {
        solution: best.x,
        iterations: iters,
        primal_residual: rp,
        dual_residual: rd,
        converged,
        kkt_residual: None,
    })
}
