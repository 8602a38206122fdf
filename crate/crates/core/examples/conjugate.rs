//! Grid conjugates: Legendre transform of a quadratic and the
//! zeta-convex hull of a non-convex potential.
//!
//! cargo run --example conjugate

use hedonic::conjugate::{double_conjugate, is_zeta_convex, legendre, GridFunction};
use hedonic::measures::closed_lattice;
use hedonic::surplus::SurplusFamily;
use ndarray::Array1;

fn main() -> hedonic::Result<()> {
    let z = closed_lattice(&[-2.0], &[2.0], 81);
    let eps = closed_lattice(&[-2.0], &[2.0], 81);

    let slopes = closed_lattice(&[-25.0], &[25.0], 501);
    let quad = GridFunction::tabulate(z.clone(), |p| 0.5 * p[0] * p[0])?;
    let star = legendre(&quad, &eps)?;
    let worst = star
        .function
        .points
        .rows()
        .into_iter()
        .zip(star.function.values.iter())
        .map(|(e, v)| (v - 0.5 * e[0] * e[0]).abs())
        .fold(0.0, f64::max);
    println!("|V* - e^2/2| max {worst:.2e}");

    // Double well: not convex, its biconjugate fills the dip.
    let well = GridFunction::tabulate(z.clone(), |p| (p[0] * p[0] - 1.0).powi(2))?;
    let x = Array1::zeros(0);
    let hull = double_conjugate(&well, &SurplusFamily::Bilinear, x.view(), &slopes)?;
    for k in (0..81).step_by(10) {
        println!("z {:>5.2}  V {:>7.4}  V** {:>7.4}", z[[k, 0]], well.values[k], hull.function.values[k]);
    }
    let c = is_zeta_convex(&well, &SurplusFamily::Bilinear, x.view(), &slopes, 1e-9, None)?;
    println!("double well convex: {} (max deviation {:.3})", c.is_convex, c.max_deviation);
    Ok(())
}
