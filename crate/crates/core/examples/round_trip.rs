//! Simulate a two-dimensional quadratic market and recover grad Ubar.
//!
//! Ubar = -1/2 |z - a|^2, zeta = z' eps, C = 1/2 |z - y|^2, tastes and
//! producer types uniform on the unit square.
//!
//! cargo run --release --example round_trip

use hedonic::equilibrium::{simulate_market, verify_equilibrium, GridSpec, MarketSpec, DEFAULT_BOUNDARY_THRESHOLD};
use hedonic::identify::{general_identify, reference_measure, relative_rmse, IdentifyOptions};
use hedonic::measures::{partition_by_x, DistributionSpec, PartitionScheme};
use hedonic::surplus::{ScalarFunction, StructuralSpec, SurplusFamily};
use ndarray::Array2;

const A: [f64; 2] = [3.0, 2.0];

fn market(n: usize, per_axis: usize) -> MarketSpec {
    let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let unit = DistributionSpec::UniformBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
    MarketSpec {
        structure: StructuralSpec {
            u_bar: ScalarFunction::Quadratic { scale: -1.0, center_offset: A.to_vec(), center_slope: None, q: eye.clone(), constant: 0.0 },
            zeta: SurplusFamily::Bilinear,
            cost: ScalarFunction::Quadratic {
                scale: 1.0,
                center_offset: vec![0.0, 0.0],
                center_slope: Some(eye.clone()),
                q: eye,
                constant: 0.0,
            },
        },
        consumer_x: None,
        consumer_eps: unit.clone(),
        producers: unit,
        n_consumers: n,
        n_producers: n,
        z_grid: GridSpec { lo: vec![1.4, 0.9], hi: vec![2.6, 2.1], per_axis },
        boundary_threshold: DEFAULT_BOUNDARY_THRESHOLD,
    }
}

fn main() -> hedonic::Result<()> {
    for (n, g) in [(100, 30), (200, 42), (400, 60)] {
        let out = simulate_market(&market(n, g), 1)?;
        let check = verify_equilibrium(&out, 1e-7);
        let slice = &partition_by_x(&out.dataset, &PartitionScheme::Exact)?[0];
        let per_axis = (2.0 * (n as f64).sqrt()).round() as usize;
        let eps = reference_measure(&DistributionSpec::Lattice { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0], per_axis }, 0, 1)?;
        let pot = general_identify(slice, &eps, &SurplusFamily::Bilinear, &IdentifyOptions::default())?;
        let truth = Array2::from_shape_fn(pot.z_points.dim(), |(j, k)| A[k] - pot.z_points[[j, k]]);
        println!(
            "n {n:>3}  grid {g}^2  equilibrium {}  relative RMSE {:.4}",
            if check.pass { "ok" } else { "FAIL" },
            relative_rmse(&pot.u_bar_grad, &truth)
        );
    }
    Ok(())
}
