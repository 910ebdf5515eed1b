//! The structure-guided penalty: zero on the guide itself, positive elsewhere,
//! with an analytic gradient.

use merr::regularizers::{build_guide, grad_reg_merr, reg_merr};
use merr::{GridSpec, Image, RegParams};

fn main() -> merr::Result<()> {
    let g = GridSpec::square(32)?;
    let guide_img = Image::from_fn(g, |x, y| ((x as f64 / 5.0).sin() * (y as f64 / 7.0).cos() + 1.0) / 2.0);
    let params = RegParams { q: 0.9, ..RegParams::default() };
    let guide = build_guide(&guide_img, &params)?;
    println!("penalty at the guide: {:.3e}", reg_merr(&guide_img, &guide)?);

    let bumped = Image::from_fn(g, |x, y| guide_img.get(x, y) + if (x, y) == (16, 16) { 0.05 } else { 0.0 });
    println!("penalty after a single-pixel bump: {:.3e}", reg_merr(&bumped, &guide)?);

    let grad = grad_reg_merr(&bumped, &guide)?;
    let step = 1e-6;
    let probe = Image::from_fn(g, |x, y| bumped.get(x, y) + if (x, y) == (16, 16) { step } else { 0.0 });
    let fd = (reg_merr(&probe, &guide)? - reg_merr(&bumped, &guide)?) / step;
    println!("d/du at the bump: analytic {:.6e}, forward difference {:.6e}", grad.get(16, 16), fd);
    Ok(())
}
