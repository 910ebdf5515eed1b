//! Coarse-to-fine reconstruction with the entropic penalty, level by level.

use merr::multires::{build_schedule, reconstruct_detailed, Baseline, MultiresOptions};
use merr::simulate::phantoms::Phantom;
use merr::simulate::{add_noise, subsample, NoiseSpec};
use merr::metrics::{ssim, SsimParams};
use merr::{bin_samples, RegParams};

fn main() -> merr::Result<()> {
    let truth = Phantom::Blobs.render(128, 1)?;
    let (noisy, _) = add_noise(&truth, &NoiseSpec::target_snr(13.3, 2))?;
    let data = bin_samples(&subsample(&noisy, 0.4, 2)?)?;
    let params = RegParams { lambda: 0.1, q: 0.9, bound_m: RegParams::default_bound(&data.h), ..RegParams::default() };
    let sched = build_schedule(128, 16, 4)?;
    let rec = reconstruct_detailed(&data, &params, &sched, Baseline::Merr, &MultiresOptions::default())?;
    for lv in &rec.levels {
        println!("level {:>2} ({:>3} px): {:>3} iterations, cost {:.4}", lv.level, lv.size, lv.iterations, lv.final_cost);
    }
    println!("full-resolution cost {:.4} vs coarse quadratic start {:.4}", rec.final_cost, rec.quadratic_cost);
    println!("ssim {:.4}", ssim(&truth, &rec.image, &SsimParams::default())?);
    Ok(())
}
