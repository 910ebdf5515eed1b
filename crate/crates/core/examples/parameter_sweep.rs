//! Grid search of q and lambda against the ground truth.

use merr::experiment::{sweep_csv, sweep_q, Method, RunConfig};
use merr::simulate::phantoms::Phantom;
use merr::simulate::{add_noise, subsample, NoiseSpec};

fn main() -> merr::Result<()> {
    let truth = Phantom::GradientSpots.render(64, 4)?;
    let (noisy, _) = add_noise(&truth, &NoiseSpec::target_snr(13.3, 4))?;
    let samples = subsample(&noisy, 0.4, 4)?;

    let mut cfg = RunConfig::default();
    cfg.sweep.method = Method::Merr;
    cfg.sweep.qs = vec![0.7, 0.9];
    cfg.sweep.base_lambda = 0.03;
    cfg.sweep.decades = 1;
    // 64 px with a step of 16 needs a coarse ratio of 2
    cfg.pyramid.coarse_ratio = 2;
    let rows = sweep_q(&samples, &truth, &cfg)?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
