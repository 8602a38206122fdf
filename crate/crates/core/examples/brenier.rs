//! Brenier identification: tastes on a lattice, qualities an affine image,
//! so the inverse demand is the inverse affine map.
//!
//! cargo run --example brenier

use hedonic::identify::{brenier_identify, IdentifyOptions};
use hedonic::measures::{midpoint_lattice, partition_by_x, DiscreteMeasure, MarketDataset, PartitionScheme};
use hedonic::ot::monotonicity_violations;
use ndarray::{array, Array1, Array2};

fn main() -> hedonic::Result<()> {
    let eps = midpoint_lattice(&[0.0, 0.0], &[1.0, 1.0], 12);
    let a = array![[1.5, 0.4], [0.4, 0.8]];
    let b = array![0.3, -0.2];
    let z = eps.dot(&a) + &b;
    // p = 1/2 z' A^{-1} z.
    let inv = array![[0.8, -0.4], [-0.4, 1.5]] / (1.5 * 0.8 - 0.16);
    let p = Array1::from_iter(z.rows().into_iter().map(|r| 0.5 * r.dot(&inv.dot(&r))));
    let n = z.nrows();
    let data = MarketDataset::new(Array2::zeros((n, 0)), z, p)?;
    let slice = &partition_by_x(&data, &PartitionScheme::Exact)?[0];
    let pot = brenier_identify(slice, &DiscreteMeasure::uniform(eps.clone())?, &IdentifyOptions::default())?;

    let expected = (slice.z_measure.points() - &b).dot(&inv);
    let err = (&pot.inverse_demand - &expected).mapv(f64::abs).fold(0.0, |m: f64, v| m.max(*v));
    println!("max inverse-demand error {err:.2e}");
    // grad Ubar = grad p - eps = A^{-1} b everywhere.
    let mean = pot.u_bar_grad.mean_axis(ndarray::Axis(0)).unwrap();
    println!("mean grad Ubar {:.4}, expected {:.4}", mean, inv.dot(&b));
    println!(
        "monotonicity violations {}",
        monotonicity_violations(&pot.plan, &eps, slice.z_measure.points(), 1e-12)
    );
    if let Some(c) = &pot.diagnostics.curl {
        println!("curl residual rms {:.2e}", c.rms_residual);
    }
    Ok(())
}
