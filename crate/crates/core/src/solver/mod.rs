//! Minimization of `Σ c (h - A u)² + λ R(A u)` over `0 <= u <= m`, where `A`
//! upsamples the variable grid onto the data grid.
//!
//! Smooth regularizers go through ADMM with the box on a copy of `u`. The
//! nonsmooth `E^(1/2)` penalties (ℓ1 on the Hessian and MSDA with `r = 1/2`)
//! add a second split on the roughness stack, solved by group shrinkage. Other
//! exponents are handled by reweighting around the smooth solver.

mod admm;
pub(crate) mod cg;
pub(crate) mod operator;

use serde::{Deserialize, Serialize};

use crate::binning::BinnedMeasurement;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Image, RegParams};
use crate::multires::ResampleOp;
use crate::regularizers::{reg_lp, reg_merr, reg_msda, HessianQuadratic, StructureGuide};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegKind {
    /// `Σ E`, the squared Frobenius norm of the Hessian.
    Quadratic,
    /// `Σ E^(p/2)`.
    Lp,
    /// `Σ (eps + E_v)^(-q) E^r` with weights from the guide.
    Msda,
    /// Maximum-entropy penalty from the guide's Hessian eigen-structure.
    Merr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub tol_rel: f64,
    pub cg_max_iter: usize,
    pub cg_tol: f64,
    /// CG budget for the active-set refinement of smooth problems.
    pub polish_max_iter: usize,
    pub polish_tol: f64,
    /// Outer reweighting steps for exponents other than 1/2 and 1.
    pub max_reweight: usize,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol_rel: 1e-5,
            cg_max_iter: 50,
            cg_tol: 1e-8,
            polish_max_iter: 2000,
            polish_tol: 1e-12,
            max_reweight: 20,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveSpec {
    pub data: BinnedMeasurement,
    pub reg_kind: RegKind,
    pub params: RegParams,
    pub guide: Option<StructureGuide>,
    pub upsampler: ResampleOp,
    pub variable_grid: GridSpec,
    pub init: Option<Image>,
    pub options: SolverOptions,
}

impl SolveSpec {
    /// Spec solving directly on the data grid.
    pub fn on_data_grid(data: BinnedMeasurement, reg_kind: RegKind, params: RegParams) -> Result<Self> {
        data.grid.require_square()?;
        let upsampler = ResampleOp::identity(data.grid.width);
        Ok(Self {
            variable_grid: data.grid,
            data,
            reg_kind,
            params,
            guide: None,
            upsampler,
            init: None,
            options: SolverOptions::default(),
        })
    }

    pub fn with_guide(mut self, guide: StructureGuide) -> Self {
        self.guide = Some(guide);
        self
    }

    pub fn with_init(mut self, init: Image) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_upsampler(mut self, upsampler: ResampleOp) -> Self {
        self.variable_grid = upsampler.from_grid();
        self.upsampler = upsampler;
        self
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let g = self.data.grid;
        g.require_same(&self.data.h.grid(), "measurement h")?;
        g.require_same(&self.data.c.grid(), "measurement c")?;
        if self.upsampler.to_grid() != g {
            return Err(Error::GridMismatch(format!(
                "upsampler produces {0}x{0}, data grid is {1}x{2}",
                self.upsampler.to_size, g.width, g.height
            )));
        }
        if self.upsampler.from_grid() != self.variable_grid {
            return Err(Error::GridMismatch(format!(
                "upsampler expects {0}x{0}, variable grid is {1}x{2}",
                self.upsampler.from_size, self.variable_grid.width, self.variable_grid.height
            )));
        }
        if let Some(init) = &self.init {
            init.grid().require_same(&self.variable_grid, "initialization")?;
        }
        match (self.reg_kind, &self.guide) {
            (RegKind::Msda | RegKind::Merr, None) => return Err(Error::MissingGuide),
            (_, Some(guide)) => guide.v.grid().require_same(&g, "structure guide")?,
            _ => {}
        }
        g.require_min(3)?;
        if self.params.bound_m <= 0.0 {
            return Err(Error::InvalidParameter("bound_m must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Image,
    pub iterations: usize,
    /// Cost of the clamped starting point.
    pub init_cost: f64,
    pub final_cost: f64,
    /// Box violation of the returned solution.
    pub box_violation: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// `‖P(u - ∇J(u)) - u‖` relative to the data gradient scale; smooth costs only.
    pub kkt_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub data: f64,
    pub regularization: f64,
    pub total: f64,
    /// Largest distance of a pixel outside `[0, bound_m]`.
    pub box_violation: f64,
}

impl CostBreakdown {
    pub fn feasible(&self, slack: f64) -> bool {
        self.box_violation <= slack
    }
}

/// Regularizer value of an image on the data grid.
pub fn reg_value(fine: &Image, kind: RegKind, params: &RegParams, guide: Option<&StructureGuide>) -> Result<f64> {
    let p = params;
    match kind {
        RegKind::Quadratic => reg_lp(fine, 2.0),
        RegKind::Lp => reg_lp(fine, p.p),
        RegKind::Msda => {
            let g = guide.ok_or(Error::MissingGuide)?;
            reg_msda(fine, &g.v, p.q, p.r, p.epsilon)
        }
        RegKind::Merr => reg_merr(fine, guide.ok_or(Error::MissingGuide)?),
    }
}

pub fn eval_cost(u: &Image, spec: &SolveSpec) -> Result<CostBreakdown> {
    u.grid().require_same(&spec.variable_grid, "variable")?;
    let fine = Image::from_vec(spec.data.grid, spec.upsampler.apply_raw(u.data()));
    let data: f64 = fine
        .data()
        .iter()
        .zip(spec.data.h.data())
        .zip(spec.data.c.data())
        .map(|((f, h), c)| c * (h - f) * (h - f))
        .sum();
    let reg = spec.params.lambda * reg_value(&fine, spec.reg_kind, &spec.params, spec.guide.as_ref())?;
    let m = spec.params.bound_m;
    let box_violation = u
        .data()
        .iter()
        .map(|&v| (-v).max(v - m).max(0.0))
        .fold(0.0, f64::max);
    Ok(CostBreakdown {
        data,
        regularization: reg,
        total: data + reg,
        box_violation,
    })
}

/// Gradient of the total cost with respect to the variable, for the
/// differentiable penalties (quadratic, entropic, and `Lp` with `p = 2`).
pub fn cost_gradient(u: &Image, spec: &SolveSpec) -> Result<Image> {
    u.grid().require_same(&spec.variable_grid, "variable")?;
    let fine_grid = spec.data.grid;
    let reg = match spec.reg_kind {
        RegKind::Quadratic => HessianQuadratic::roughness(fine_grid, None),
        RegKind::Lp if spec.params.p == 2.0 => HessianQuadratic::roughness(fine_grid, None),
        RegKind::Merr => HessianQuadratic::merr(spec.guide.as_ref().ok_or(Error::MissingGuide)?),
        kind => {
            return Err(Error::InvalidParameter(format!("{kind:?} with p = {} is not differentiable", spec.params.p)));
        }
    };
    let fine = spec.upsampler.apply_raw(u.data());
    let lambda = spec.params.lambda;
    let g: Vec<f64> = reg
        .gradient(&fine)
        .iter()
        .zip(&fine)
        .zip(spec.data.h.data().iter().zip(spec.data.c.data()))
        .map(|((r, f), (h, c))| 2.0 * c * (f - h) + lambda * r)
        .collect();
    Ok(Image::from_vec(spec.variable_grid, spec.upsampler.adjoint_raw(&g)))
}

/// Default starting point: `Aᵀ(c h) / Aᵀ c` clamped to the box, the weighted
/// mean of `h` where no sample reaches a variable pixel.
pub fn default_init(spec: &SolveSpec) -> Image {
    let up = &spec.upsampler;
    let c = spec.data.c.data();
    let ch: Vec<f64> = c.iter().zip(spec.data.h.data()).map(|(a, b)| a * b).collect();
    let num = up.adjoint_raw(&ch);
    let den = up.adjoint_raw(c);
    let total: f64 = c.iter().sum();
    let fallback = if total > 0.0 { ch.iter().sum::<f64>() / total } else { 0.0 };
    let m = spec.params.bound_m;
    let data = num
        .iter()
        .zip(&den)
        .map(|(&n, &d)| if d > 1e-12 { n / d } else { fallback }.clamp(0.0, m))
        .collect();
    Image::from_vec(spec.variable_grid, data)
}

pub fn solve(spec: &SolveSpec) -> Result<SolveReport> {
    spec.validate()?;
    let init = match &spec.init {
        Some(u) => u.map(|v| v.clamp(0.0, spec.params.bound_m)),
        None => default_init(spec),
    };
    let outcome = admm::run(spec, init.data())?;
    let candidate = Image::from_vec(spec.variable_grid, outcome.solution).with_channel("u");
    let cand_cost = eval_cost(&candidate, spec)?;
    if !cand_cost.total.is_finite() {
        return Err(Error::NonFiniteCost { iteration: outcome.iterations });
    }
    let init_cost = eval_cost(&init, spec)?;
    let (solution, chosen) = if cand_cost.total <= init_cost.total {
        (candidate, cand_cost)
    } else {
        (init.with_channel("u"), init_cost)
    };
    Ok(SolveReport {
        solution,
        iterations: outcome.iterations,
        init_cost: init_cost.total,
        final_cost: chosen.total,
        box_violation: chosen.box_violation,
        primal_residual: outcome.primal_residual,
        dual_residual: outcome.dual_residual,
        converged: outcome.converged,
        kkt_residual: outcome.kkt_residual,
    })
}
