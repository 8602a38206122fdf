//! Exact and entropic transport between two small clouds, with duals.
//!
//! cargo run --example transport

use hedonic::measures::{sample_reference, DiscreteMeasure, DistributionSpec};
use hedonic::ot::{optimality_report, solve_entropic, solve_exact, surplus_matrix, EntropicOptions};
use hedonic::surplus::SurplusFamily;
use ndarray::{array, Array1};

fn main() -> hedonic::Result<()> {
    let unit = DistributionSpec::UniformBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
    let mu = sample_reference(&unit, 6, 1)?;
    let nu = DiscreteMeasure::from_samples(
        array![[0.2, 0.1], [0.9, 0.3], [0.5, 0.8], [0.1, 0.9]],
        Some(array![0.4, 0.3, 0.2, 0.1]),
    )?;
    let x = Array1::zeros(0);
    let s = surplus_matrix(&mu, &nu, &SurplusFamily::Bilinear, x.view())?;

    let (plan, duals) = solve_exact(&mu, &nu, &s)?;
    println!("exact plan");
    for e in plan.entries() {
        println!("  {} -> {}  mass {:.4}", e.source, e.target, e.mass);
    }
    let rep = optimality_report(&plan, &duals, mu.weights(), nu.weights(), &s);
    println!("primal {:.6} dual {:.6} gap {:.1e}", rep.primal, rep.dual, rep.duality_gap);
    println!("v (pinned at target {}): {:.4}", duals.normalization, duals.v_target);

    for eps in [1.0, 0.05, 0.005] {
        let sol = solve_entropic(&mu, &nu, &s, EntropicOptions { epsilon: eps, ..Default::default() })?;
        println!(
            "entropic eps={eps:<6} objective {:.6}  support {:>2}  converged {}",
            sol.plan.objective(),
            sol.plan.entries().len(),
            sol.converged
        );
    }
    Ok(())
}
