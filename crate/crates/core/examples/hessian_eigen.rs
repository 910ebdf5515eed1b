//! Hessian of an image and its per-pixel eigen-decomposition.

use merr::diffops::{apply_hessian, directional_dd, eig2x2, eig_sym2, Direction};
use merr::{GridSpec, Image};

fn main() -> merr::Result<()> {
    let e = eig_sym2(2.0, 1.0, -1.0);
    println!("[[2, 1], [1, -1]]: lam = ({:.4}, {:.4}), e1 = {:?}", e.lam1, e.lam2, e.e1);

    // a ridge along the diagonal
    let img = Image::from_fn(GridSpec::square(16)?, |x, y| {
        let d = x as f64 - y as f64;
        (-0.5 * d * d / 4.0).exp()
    });
    let eig = eig2x2(&apply_hessian(&img)?);
    let i = img.grid().index(8, 8);
    println!("on the ridge: lam1 = {:.4}, lam2 = {:.4}", eig.lam1.data()[i], eig.lam2.data()[i]);
    println!("first direction {:?}, second {:?}", eig.e1[i], eig.e2[i]);
    let cross = directional_dd(&img, &eig, Direction::Cross)?;
    println!("cross derivative of the image along its own directions: max |.| = {:.2e}", cross.data().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    Ok(())
}
