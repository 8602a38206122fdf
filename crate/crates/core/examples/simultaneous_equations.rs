//! Forward map z = h(eps) per observable cell, with h the gradient of a
//! convex function. Two cells with different linear maps.
//!
//! cargo run --example simultaneous_equations

use hedonic::identify::simultaneous_equations_identify;
use hedonic::measures::{midpoint_lattice, DiscreteMeasure, MarketDataset, PartitionScheme};
use ndarray::{array, concatenate, Array1, Array2, Axis};

fn main() -> hedonic::Result<()> {
    let eps = midpoint_lattice(&[0.0, 0.0], &[1.0, 1.0], 15);
    let n = eps.nrows();
    let maps = [array![[2.0, 0.5], [0.5, 1.0]], array![[1.0, -0.3], [-0.3, 0.6]]];
    let z = concatenate(Axis(0), &[eps.dot(&maps[0]).view(), eps.dot(&maps[1]).view()]).unwrap();
    let x = Array2::from_shape_fn((2 * n, 1), |(r, _)| (r / n) as f64);
    let data = MarketDataset::new(x, z, Array1::zeros(2 * n))?;

    let cells = simultaneous_equations_identify(&data, &DiscreteMeasure::uniform(eps.clone())?, &PartitionScheme::Exact)?;
    for (cell, a) in cells.iter().zip(&maps) {
        let truth = eps.dot(a);
        let worst = (&cell.h - &truth).mapv(f64::abs).fold(0.0, |m: f64, v| m.max(*v));
        println!("x = {}: max |h - A eps| = {worst:.2e}", cell.x_value);
    }
    Ok(())
}
