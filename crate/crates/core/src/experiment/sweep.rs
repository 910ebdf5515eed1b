use serde::Serialize;

use crate::binning::bin_samples;
use crate::error::Result;
use crate::experiment::{run_method, RunConfig};
use crate::grid::{Image, RegParams, SampleSet};
use crate::metrics::ssim;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub q: f64,
    pub lambda: f64,
    pub ssim: f64,
}

/// Scores `base.sweep.method` over the q × λ grid against `truth`. Rows come
/// back best first; ties keep grid order.
pub fn sweep_q(samples: &SampleSet, truth: &Image, base: &RunConfig) -> Result<Vec<SweepRow>> {
    samples.grid().require_same(&truth.grid(), "sweep truth")?;
    let data = bin_samples(samples)?;
    let bound = RegParams::default_bound(&data.h);
    let mut rows = Vec::new();
    for &q in &base.sweep.qs {
        for lambda in base.sweep.lambdas() {
            let params = base.params(lambda, q, bound);
            let u = run_method(base.sweep.method, &data, &params, &base.pyramid)?;
            rows.push(SweepRow { q, lambda, ssim: ssim(truth, &u, &base.ssim)? });
        }
    }
    rows.sort_by(|a, b| b.ssim.total_cmp(&a.ssim));
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("q,lambda,ssim\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.q, r.lambda, r.ssim));
    }
    out
}
