use serde::{Deserialize, Serialize};

use crate::binning::BinnedMeasurement;
use crate::error::{Error, Result};
use crate::grid::{Image, RegParams};
use crate::multires::{build_dyadic_schedule, build_schedule, reconstruct_detailed, Baseline, MultiresOptions};
use crate::solver::{solve, RegKind, SolveSpec};

/// Reconstruction methods compared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Quadratic Hessian penalty on the full grid.
    Quad,
    /// `Σ sqrt(E)` on the full grid.
    L1,
    /// Reweighted roughness through a halving pyramid.
    Msda,
    /// Maximum-entropy penalty through the fractional pyramid.
    Merr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Quad, Method::L1, Method::Msda, Method::Merr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Quad => "quad",
            Method::L1 => "l1",
            Method::Msda => "msda",
            Method::Merr => "merr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Pyramid settings shared by the multiresolution methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyramidConfig {
    pub n_d: usize,
    pub coarse_ratio: usize,
    #[serde(default)]
    pub options: MultiresOptions,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self { n_d: 16, coarse_ratio: 4, options: MultiresOptions::default() }
    }
}

/// Output of one method run.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub image: Image,
    /// For pyramid methods: (final cost, cost of the upsampled coarse
    /// quadratic solution), both in the full-resolution problem.
    pub level0_costs: Option<(f64, f64)>,
    /// Every solve ended at or below the cost of its starting point.
    pub solves_descend: bool,
    /// Largest box violation over all solves.
    pub box_violation: f64,
}

/// Runs one method on binned data. `params.p` is forced to 1 for [`Method::L1`].
pub fn run_method(method: Method, data: &BinnedMeasurement, params: &RegParams, pyramid: &PyramidConfig) -> Result<Image> {
    Ok(run_method_detailed(method, data, params, pyramid)?.image)
}

pub fn run_method_detailed(
    method: Method,
    data: &BinnedMeasurement,
    params: &RegParams,
    pyramid: &PyramidConfig,
) -> Result<MethodRun> {
    let single = |kind: RegKind, params: RegParams| -> Result<MethodRun> {
        let spec = SolveSpec::on_data_grid(data.clone(), kind, params)?.with_options(pyramid.options.solver.clone());
        let rep = solve(&spec)?;
        Ok(MethodRun {
            solves_descend: rep.final_cost <= rep.init_cost,
            box_violation: rep.box_violation,
            image: rep.solution,
            level0_costs: None,
        })
    };
    let (sched, baseline) = match method {
        Method::Quad => return single(RegKind::Quadratic, *params),
        Method::L1 => return single(RegKind::Lp, RegParams { p: 1.0, ..*params }),
        Method::Msda => (build_dyadic_schedule(data.grid.width, pyramid.coarse_ratio)?, Baseline::Msda),
        Method::Merr => (build_schedule(data.grid.width, pyramid.n_d, pyramid.coarse_ratio)?, Baseline::Merr),
    };
    let rec = reconstruct_detailed(data, params, &sched, baseline, &pyramid.options)?;
    Ok(MethodRun {
        solves_descend: rec.levels.iter().all(|l| l.final_cost <= l.init_cost),
        box_violation: rec.levels.iter().map(|l| l.box_violation).fold(0.0, f64::max),
        image: rec.image,
        level0_costs: Some((rec.final_cost, rec.quadratic_cost)),
    })
}
