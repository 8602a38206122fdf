//! Averaged marginal price effects E[grad p(Z) | x] per observable cell.
//!
//! cargo run --example partial_effects

use hedonic::identify::averaged_partial_effects;
use hedonic::measures::{partition_by_x, sample_reference, DistributionSpec, MarketDataset, PartitionScheme};
use ndarray::{Array1, Array2};

fn main() -> hedonic::Result<()> {
    let n = 400;
    let z = sample_reference(&DistributionSpec::UniformBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, n, 2)?.points().clone();
    let x = Array2::from_shape_fn((n, 1), |(r, _)| (r % 2) as f64);
    // p = (1 + x) z_1 + z_1 z_2, so E[grad p] = (1 + x + E z_2, E z_1).
    let p = Array1::from_iter((0..n).map(|r| (1.0 + x[[r, 0]]) * z[[r, 0]] + z[[r, 0]] * z[[r, 1]]));
    let data = MarketDataset::new(x, z, p)?;
    for slice in partition_by_x(&data, &PartitionScheme::Exact)? {
        let pe = averaged_partial_effects(&slice, 8)?;
        println!(
            "x = {}: {} rows, effect [{:.3}, {:.3}], expected about [{:.1}, 0.5], skipped {}",
            slice.x_value[0],
            slice.row_ids.len(),
            pe.effect[0],
            pe.effect[1],
            1.5 + slice.x_value[0],
            pe.skipped.len()
        );
    }
    Ok(())
}
