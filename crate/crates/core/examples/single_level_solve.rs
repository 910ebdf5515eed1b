//! One regularized solve on the data grid, for each penalty that needs no guide.

use merr::simulate::phantoms::Phantom;
use merr::simulate::{add_noise, subsample, NoiseSpec};
use merr::solver::{eval_cost, solve, RegKind, SolveSpec};
use merr::metrics::{ssim, SsimParams};
use merr::{bin_samples, RegParams};

fn main() -> merr::Result<()> {
    let truth = Phantom::GradientSpots.render(64, 3)?;
    let (noisy, _) = add_noise(&truth, &NoiseSpec::target_snr(14.3, 3))?;
    let data = bin_samples(&subsample(&noisy, 0.5, 3)?)?;
    let bound = RegParams::default_bound(&data.h);
    for (kind, lambda, p) in [(RegKind::Quadratic, 0.01, 2.0), (RegKind::Lp, 0.05, 1.0), (RegKind::Lp, 0.05, 0.8)] {
        let params = RegParams { lambda, p, bound_m: bound, ..RegParams::default() };
        let spec = SolveSpec::on_data_grid(data.clone(), kind, params)?;
        let rep = solve(&spec)?;
        let cost = eval_cost(&rep.solution, &spec)?;
        println!(
            "{kind:?} p={p}: {} iterations, cost {:.4} (data {:.4}), ssim {:.4}",
            rep.iterations,
            cost.total,
            cost.data,
            ssim(&truth, &rep.solution, &SsimParams::default())?
        );
    }
    Ok(())
}
