//! Fractional and dyadic pyramids and the resamplers between their levels.

use merr::multires::{build_dyadic_schedule, build_schedule, resample, InterpFilter, ResampleOp};
use merr::{GridSpec, Image};

fn main() -> merr::Result<()> {
    let frac = build_schedule(256, 16, 4)?;
    println!("fractional: {:?}", frac.sizes());
    println!("dyadic:     {:?}", build_dyadic_schedule(256, 4)?.sizes());

    let op = frac.op(0, 1, InterpFilter::LinearSpline)?;
    println!("level 1 -> 0: up {} down {}", op.up, op.down);

    let op = ResampleOp::new(8, 12, InterpFilter::LinearSpline)?;
    let signal: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
    let out = op.apply_1d(&signal);
    println!("8 -> 12 samples: {:?}", out.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());

    let flat = resample(&Image::constant(GridSpec::square(64)?, 0.25), &frac.op(0, frac.coarsest(), InterpFilter::LinearSpline)?)?;
    println!("constant through {}x upsampling: min {:.15} max {:.15}", 256 / 64, flat.min(), flat.max());
    Ok(())
}
