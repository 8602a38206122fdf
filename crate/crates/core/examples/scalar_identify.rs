//! One-dimensional identification by quantile matching on a simulated
//! Tinbergen market: Ubar = 0, zeta = z eps, C = z^2 / (2 y).
//!
//! cargo run --example scalar_identify

use hedonic::equilibrium::{simulate_market, GridSpec, MarketSpec, DEFAULT_BOUNDARY_THRESHOLD};
use hedonic::identify::{reference_measure, rmse, scalar_identify, IdentifyOptions};
use hedonic::measures::{partition_by_x, DistributionSpec, PartitionScheme};
use hedonic::surplus::{Polynomial, ScalarFunction, StructuralSpec, SurplusFamily};
use ndarray::Array2;

fn main() -> hedonic::Result<()> {
    let taste = DistributionSpec::UniformBox { lo: vec![1.0], hi: vec![2.0] };
    let spec = MarketSpec {
        structure: StructuralSpec {
            u_bar: ScalarFunction::Zero,
            zeta: SurplusFamily::Bilinear,
            cost: ScalarFunction::Polynomial { dw: 1, poly: Polynomial::new(2, vec![(0.5, vec![-1, 2])])? },
        },
        consumer_x: None,
        consumer_eps: taste.clone(),
        producers: taste.clone(),
        n_consumers: 300,
        n_producers: 300,
        z_grid: GridSpec { lo: vec![0.0], hi: vec![6.0], per_axis: 3001 },
        boundary_threshold: DEFAULT_BOUNDARY_THRESHOLD,
    };
    let out = simulate_market(&spec, 4)?;
    let slice = &partition_by_x(&out.dataset, &PartitionScheme::Exact)?[0];
    let eps = reference_measure(&taste, 2000, 4)?;
    let pot = scalar_identify(slice, &eps, &SurplusFamily::Bilinear, &IdentifyOptions::default())?;

    // With Ubar = 0 the price gradient equals the inverse demand.
    let truth = Array2::zeros(pot.u_bar_grad.dim());
    println!("{} qualities, grad Ubar RMSE {:.4}", pot.z_points.nrows(), rmse(&pot.u_bar_grad, &truth));
    for j in (0..pot.z_points.nrows()).step_by(pot.z_points.nrows() / 8) {
        println!(
            "z {:.3}  eps(z) {:.3}  V {:>7.4}  p {:>7.4}",
            pot.z_points[[j, 0]],
            pot.inverse_demand[[j, 0]],
            pot.v_values[j],
            slice.prices[j]
        );
    }
    Ok(())
}
