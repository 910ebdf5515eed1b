//! Noisy, undersampled acquisition of a synthetic phantom.

use merr::simulate::phantoms::Phantom;
use merr::simulate::{add_noise, snr_db, subsample, NoiseSpec};

fn main() -> merr::Result<()> {
    let truth = Phantom::Filaments.render(128, 1)?;
    for target in [12.1, 13.3, 14.3] {
        let (noisy, report) = add_noise(&truth, &NoiseSpec::target_snr(target, 7))?;
        println!(
            "target {target:>4} dB: achieved {:.3} dB, gain {:.4}, sigma {:.4}",
            snr_db(&truth, &noisy)?,
            report.gain_alpha,
            report.sigma_g
        );
    }
    let (noisy, _) = add_noise(&truth, &NoiseSpec::target_snr(13.3, 7))?;
    let samples = subsample(&noisy, 0.4, 7)?;
    println!("{} of {} pixels kept", samples.len(), truth.grid().len());
    Ok(())
}
