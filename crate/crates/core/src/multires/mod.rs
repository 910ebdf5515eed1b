//! Resolution pyramids and the coarse-to-fine reconstruction.
//!
//! The coarsest level is solved with the quadratic penalty. Every finer level
//! takes the previous solution, upsampled to full size, as the structure
//! guide of its penalty and as its starting point. Data term and penalty are
//! always evaluated on the full-size grid.

pub mod resample;
pub mod schedule;

use serde::{Deserialize, Serialize};

pub use resample::{resample, InterpFilter, ResampleOp};
pub use schedule::{build_dyadic_schedule, build_schedule, PyramidSchedule};

use crate::binning::{bin_samples, BinnedMeasurement};
use crate::error::{Error, Result};
use crate::grid::{Image, RegParams, SampleSet};
use crate::regularizers::build_guide;
use crate::solver::{eval_cost, solve, RegKind, SolveSpec, SolverOptions};

/// Penalty used on the levels above the coarsest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    Merr,
    Msda,
}

impl Baseline {
    fn reg_kind(self) -> RegKind {
        match self {
            Baseline::Merr => RegKind::Merr,
            Baseline::Msda => RegKind::Msda,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiresOptions {
    pub filter: InterpFilter,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone)]
pub struct LevelReport {
    pub level: usize,
    pub size: usize,
    pub solution: Image,
    pub iterations: usize,
    pub init_cost: f64,
    pub final_cost: f64,
    pub box_violation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub image: Image,
    /// Coarsest level first.
    pub levels: Vec<LevelReport>,
    /// Cost of the final image in the level-0 problem.
    pub final_cost: f64,
    /// The coarse quadratic solution, upsampled, in the same level-0 problem.
    pub quadratic_cost: f64,
}

pub fn reconstruct(samples: &SampleSet, params: &RegParams, sched: &PyramidSchedule, baseline: Baseline) -> Result<Image> {
    Ok(reconstruct_detailed(&bin_samples(samples)?, params, sched, baseline, &MultiresOptions::default())?.image)
}

pub fn reconstruct_detailed(
    data: &BinnedMeasurement,
    params: &RegParams,
    sched: &PyramidSchedule,
    baseline: Baseline,
    opts: &MultiresOptions,
) -> Result<Reconstruction> {
    params.validate()?;
    let g = data.grid;
    if !g.is_square() || g.width != sched.size(0) {
        return Err(Error::ScheduleMismatch(format!(
            "schedule starts at {}, data grid is {}x{}",
            sched.size(0),
            g.width,
            g.height
        )));
    }
    let top = sched.coarsest();
    if top < 1 {
        return Err(Error::ScheduleMismatch("schedule needs at least two levels".into()));
    }
    let to_full = |j: usize| sched.op(0, j, opts.filter);

    let coarse_up = to_full(top)?;
    let coarse = SolveSpec::on_data_grid(data.clone(), RegKind::Quadratic, *params)?
        .with_upsampler(coarse_up.clone())
        .with_options(opts.solver.clone());
    let rep = solve(&coarse)?;
    let mut levels = vec![LevelReport {
        level: top,
        size: sched.size(top),
        solution: rep.solution.clone(),
        iterations: rep.iterations,
        init_cost: rep.init_cost,
        final_cost: rep.final_cost,
        box_violation: rep.box_violation,
        converged: rep.converged,
    }];
    let quadratic_full = resample(&rep.solution, &coarse_up)?;
    let mut prev = rep.solution;
    let mut last_spec = None;
    for j in (0..top).rev() {
        let v = resample(&prev, &to_full(j + 1)?)?;
        let guide = build_guide(&v, params)?;
        let init = resample(&prev, &sched.op(j, j + 1, opts.filter)?)?.map(|x| x.clamp(0.0, params.bound_m));
        let spec = SolveSpec::on_data_grid(data.clone(), baseline.reg_kind(), *params)?
            .with_upsampler(to_full(j)?)
            .with_guide(guide)
            .with_init(init)
            .with_options(opts.solver.clone());
        let rep = solve(&spec)?;
        levels.push(LevelReport {
            level: j,
            size: sched.size(j),
            solution: rep.solution.clone(),
            iterations: rep.iterations,
            init_cost: rep.init_cost,
            final_cost: rep.final_cost,
            box_violation: rep.box_violation,
            converged: rep.converged,
        });
        prev = rep.solution;
        last_spec = Some(spec);
    }
    let spec = last_spec.expect("at least one refinement level");
    let final_cost = eval_cost(&prev, &spec)?.total;
    let quadratic_cost = eval_cost(&quadratic_full.map(|x| x.clamp(0.0, params.bound_m)), &spec)?.total;
    Ok(Reconstruction {
        image: prev.with_channel("reconstruction"),
        levels,
        final_cost,
        quadratic_cost,
    })
}
