//! All four methods on one acquisition, each at a fixed parameter.

use merr::experiment::{run_method, Method, PyramidConfig};
use merr::simulate::phantoms::Phantom;
use merr::simulate::{add_noise, subsample, NoiseSpec};
use merr::metrics::{ssim, SsimParams};
use merr::{bin_samples, RegParams};

fn main() -> merr::Result<()> {
    let truth = Phantom::Filaments.render(128, 1)?;
    let (noisy, _) = add_noise(&truth, &NoiseSpec::target_snr(13.3, 5))?;
    let data = bin_samples(&subsample(&noisy, 0.4, 5)?)?;
    let bound = RegParams::default_bound(&data.h);
    let settings = [(Method::Quad, 1.0, 0.9), (Method::L1, 0.03, 0.9), (Method::Msda, 0.003, 0.5), (Method::Merr, 0.03, 0.9)];
    for (method, lambda, q) in settings {
        let t = std::time::Instant::now();
        let params = RegParams { lambda, q, bound_m: bound, ..RegParams::default() };
        let u = run_method(method, &data, &params, &PyramidConfig::default())?;
        println!(
            "{:>4}: ssim {:.4} in {:.1}s",
            method.name(),
            ssim(&truth, &u, &SsimParams::default())?,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
