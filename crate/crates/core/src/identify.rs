//! Identification of the consumer potential `V(x, .)`, the inverse demand
//! `eps(x, z)` and the base-utility gradient `grad_z Ubar(x, z)` from one
//! conditional slice of market data.
//!
//! Every pipeline works against a discrete reference measure for the taste
//! distribution; [`reference_measure`] draws one from a distribution spec.
//! The potential is pinned to zero at the lexicographically smallest traded
//! quality and is only reported on the traded support.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{
    empirical_cdf, empirical_cdf_quantile, partition_by_x, sample_with, stream_rng, ConditionalSlice, DiscreteMeasure,
    DistributionSpec, MarketDataset, PartitionScheme,
};
use crate::ot::{
    barycentric_projection, optimality_report, solve_exact, surplus_matrix, DualPair, OptimalityReport, PlanEntry,
    TransportPlan,
};
use crate::surplus::{check_twist, SurplusFamily, TwistReport, TWIST_SV_THRESHOLD};

/// Largest number of taste or quality points fed to the twist diagnostic.
pub const TWIST_SAMPLE: usize = 120;

/// Random stream for reference taste draws.
pub const STREAM_REFERENCE: u64 = 4;

/// Uniformly weighted reference sample of the taste distribution, drawn
/// from the reference stream of `seed`. Lattice specs are used as is.
pub fn reference_measure(spec: &DistributionSpec, n_ref: usize, seed: u64) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(sample_with(spec, n_ref, &mut stream_rng(seed, STREAM_REFERENCE))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentifyOptions {
    /// Neighbours in the local price regression; `None` means `2 d_z + 2`.
    pub k_neighbors: Option<usize>,
    pub twist_threshold: f64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self { k_neighbors: None, twist_threshold: TWIST_SV_THRESHOLD }
    }
}

impl IdentifyOptions {
    fn k(&self, dz: usize) -> usize {
        self.k_neighbors.unwrap_or(2 * dz + 2)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxBounds {
    pub fn of(points: &Array2<f64>) -> Self {
        let lo = points.fold_axis(Axis(0), f64::INFINITY, |a, b| a.min(*b)).to_vec();
        let hi = points.fold_axis(Axis(0), f64::NEG_INFINITY, |a, b| a.max(*b)).to_vec();
        Self { lo, hi }
    }
}

/// Path-integration residual on one edge between traded qualities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeResidual {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    /// `v(to) - v(from)` minus the trapezoid integral of `grad_z zeta`.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurlReport {
    pub edges: Vec<EdgeResidual>,
    pub max_abs_residual: f64,
    pub rms_residual: f64,
}

/// Diagnostics attached to every identified potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentifyDiagnostics {
    pub pipeline: String,
    pub family: String,
    pub n_reference: usize,
    pub twist: Option<TwistReport>,
    /// `+1` or `-1` for the scalar pipeline.
    pub cross_derivative_sign: Option<i8>,
    pub optimality: Option<OptimalityReport>,
    pub split_columns: usize,
    pub zero_mass_columns: usize,
    /// Points where no price gradient could be estimated.
    pub gradient_skipped: Vec<usize>,
    pub curl: Option<CurlReport>,
    pub truncation_warnings: Vec<String>,
    pub support_box: BoxBounds,
    pub reference_box: BoxBounds,
}

/// Identified objects on the traded qualities of one slice.
#[derive(Debug, Clone)]
pub struct IdentifiedPotential {
    pub x_value: Array1<f64>,
    pub z_points: Array2<f64>,
    /// `V(x, z)` up to a constant; zero at `normalization_point`.
    pub v_values: Array1<f64>,
    /// `eps(x, z)` per traded quality.
    pub inverse_demand: Array2<f64>,
    /// Recovered `grad_z Ubar(x, z)`; NaN rows where the price gradient is
    /// unavailable.
    pub u_bar_grad: Array2<f64>,
    pub normalization_point: usize,
    /// Coupling from reference tastes (source) to traded qualities (target).
    pub plan: TransportPlan,
    /// Transport duals; absent for the scalar pipeline.
    pub duals: Option<DualPair>,
    pub diagnostics: IdentifyDiagnostics,
}

fn thin(points: &Array2<f64>, max: usize) -> Array2<f64> {
    let n = points.nrows();
    if n <= max {
        return points.clone();
    }
    let idx: Vec<usize> = (0..max).map(|k| k * (n - 1) / (max - 1)).collect();
    points.select(Axis(0), &idx)
}

/// Indices of the `k` nearest other points to `j`, ties by index.
fn nearest(points: &Array2<f64>, j: usize, k: usize) -> Vec<usize> {
    let pj = points.row(j);
    let mut d: Vec<(f64, usize)> = (0..points.nrows())
        .filter(|&l| l != j)
        .map(|l| {
            let dist = points.row(l).iter().zip(pj.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            (dist, l)
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, l)| l).collect()
}

/// Local least-squares fit `p ~ c + g'(z - z_j)` over `z_j` and its `k`
/// nearest neighbours. `None` when the neighbourhood is rank-deficient.
pub fn local_price_gradient(points: &Array2<f64>, prices: &Array1<f64>, j: usize, k: usize) -> Option<Array1<f64>> {
    let d = points.ncols();
    let mut rows = vec![j];
    rows.extend(nearest(points, j, k));
    if rows.len() < d + 1 {
        return None;
    }
    let zj = points.row(j);
    let a = DMatrix::from_fn(rows.len(), d + 1, |r, c| if c == 0 { 1.0 } else { points[[rows[r], c - 1]] - zj[c - 1] });
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&r| prices[r]));
    let svd = a.svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if !(smin > 1e-10 * smax) {
        return None;
    }
    let sol = svd.solve(&b, 0.0).ok()?;
    Some(Array1::from_iter(sol.iter().skip(1).copied()))
}

fn price_gradients(points: &Array2<f64>, prices: &Array1<f64>, k: usize) -> Vec<Option<Array1<f64>>> {
    (0..points.nrows()).map(|j| local_price_gradient(points, prices, j, k)).collect()
}

fn ubar_gradients(
    grads: &[Option<Array1<f64>>],
    f: &SurplusFamily,
    x: &[f64],
    eps: &Array2<f64>,
    z: &Array2<f64>,
) -> (Array2<f64>, Vec<usize>) {
    let mut out = Array2::from_elem(z.raw_dim(), f64::NAN);
    let mut skipped = Vec::new();
    for (j, g) in grads.iter().enumerate() {
        match g {
            Some(g) if eps.row(j).iter().all(|v| v.is_finite()) => {
                let gz = f.grad_z_raw(x, &eps.row(j).to_vec(), &z.row(j).to_vec());
                for k in 0..z.ncols() {
                    out[[j, k]] = g[k] - gz[k];
                }
            }
            _ => skipped.push(j),
        }
    }
    (out, skipped)
}

fn sign_of_cross_derivative(f: &SurplusFamily, x: &[f64], eps: &Array2<f64>, z: &Array2<f64>) -> Result<i8> {
    let mut sign = 0i8;
    for e in thin(eps, TWIST_SAMPLE).rows() {
        for zz in thin(z, TWIST_SAMPLE).rows() {
            let h = f.cross_hessian_raw(x, &e.to_vec(), &zz.to_vec())[[0, 0]];
            let s = if h > 0.0 {
                1
            } else if h < 0.0 {
                -1
            } else {
                0
            };
            if s == 0 || (sign != 0 && s != sign) {
                return Err(Error::NotSingleCrossing(format!(
                    "cross derivative {h} at eps {}, z {} is not sign-definite on the data range",
                    e[0], zz[0]
                )));
            }
            sign = s;
        }
    }
    Ok(sign)
}

/// Comonotone (or anti-monotone) coupling by the north-west corner rule on
/// sorted supports.
fn monotone_coupling(eps: &[f64], we: &[f64], z: &[f64], wz: &[f64], anti: bool) -> Vec<PlanEntry> {
    let sorted = |v: &[f64]| {
        let mut o: Vec<usize> = (0..v.len()).collect();
        o.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
        o
    };
    let oe = sorted(eps);
    let mut oz = sorted(z);
    if anti {
        oz.reverse();
    }
    let (mut a, mut b) = (0, 0);
    let (mut ra, mut rb) = (we[oe[0]], wz[oz[0]]);
    let mut out = Vec::new();
    while a < oe.len() && b < oz.len() {
        let m = ra.min(rb);
        if m > 0.0 {
            out.push(PlanEntry { source: oe[a], target: oz[b], mass: m });
        }
        ra -= m;
        rb -= m;
        if ra <= 1e-15 {
            a += 1;
            if a < oe.len() {
                ra = we[oe[a]];
            }
        }
        if rb <= 1e-15 {
            b += 1;
            if b < oz.len() {
                rb = wz[oz[b]];
            }
        }
    }
    out
}

fn check_reference(slice: &ConditionalSlice, eps_ref: &DiscreteMeasure, f: &SurplusFamily) -> Result<()> {
    let dz = slice.dz();
    if eps_ref.dim() != dz {
        return Err(Error::Dimension { context: "taste dimension", expected: dz, got: eps_ref.dim() });
    }
    f.validate()?;
    f.check_dims(slice.x_value.len(), dz, dz)
}

/// Quantile identification for one-dimensional qualities under a
/// single-crossing surplus.
pub fn scalar_identify(
    slice: &ConditionalSlice,
    eps_ref: &DiscreteMeasure,
    f: &SurplusFamily,
    opts: &IdentifyOptions,
) -> Result<IdentifiedPotential> {
    if slice.dz() != 1 {
        return Err(Error::InvalidArgument(format!(
            "scalar identification needs one-dimensional qualities, got d_z = {}",
            slice.dz()
        )));
    }
    check_reference(slice, eps_ref, f)?;
    let x = slice.x_value.to_vec();
    let zm = &slice.z_measure;
    let sign = sign_of_cross_derivative(f, &x, eps_ref.points(), zm.points())?;
    let z: Vec<f64> = zm.points().column(0).to_vec();
    let wz = zm.weights().to_vec();
    let e: Vec<f64> = eps_ref.points().column(0).to_vec();
    let we = eps_ref.weights().to_vec();
    let m = z.len();

    let mut inv = vec![0.0; m];
    if m == 1 {
        inv[0] = empirical_cdf_quantile(&e, &we, 0.5)?;
    } else {
        for j in 0..m {
            let q = if sign > 0 {
                empirical_cdf(&z, &wz, z[j])
            } else {
                let below: f64 = z.iter().zip(&wz).filter(|(v, _)| **v < z[j]).map(|(_, w)| w).sum();
                1.0 - below
            };
            inv[j] = empirical_cdf_quantile(&e, &we, q.clamp(0.0, 1.0))?;
        }
    }

    // Integrate the first-order condition from the smallest quality.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    let slope: Vec<f64> = (0..m).map(|j| f.grad_z_raw(&x, &[inv[j]], &[z[j]])[0]).collect();
    let mut v = vec![0.0; m];
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        v[b] = v[a] + 0.5 * (z[b] - z[a]) * (slope[a] + slope[b]);
    }
    let pin = order[0];

    let inverse_demand = Array2::from_shape_vec((m, 1), inv).expect("shape");
    let grads = price_gradients(zm.points(), &slice.prices, opts.k(1));
    let (u_bar_grad, skipped) = ubar_gradients(&grads, f, &x, &inverse_demand, zm.points());

    let s = surplus_matrix(eps_ref, zm, f, slice.x_value.view())?;
    let entries = monotone_coupling(&e, &we, &z, &wz, sign < 0);
    let plan = TransportPlan::from_entries(eps_ref.len(), m, entries, &s)?;
    let split = (0..m).filter(|&j| plan.entries().iter().filter(|en| en.target == j).count() > 1).count();

    let diagnostics = IdentifyDiagnostics {
        pipeline: "scalar".into(),
        family: f.name().into(),
        n_reference: eps_ref.len(),
        twist: None,
        cross_derivative_sign: Some(sign),
        optimality: None,
        split_columns: split,
        zero_mass_columns: 0,
        gradient_skipped: skipped,
        curl: None,
        truncation_warnings: Vec::new(),
        support_box: BoxBounds::of(zm.points()),
        reference_box: BoxBounds::of(eps_ref.points()),
    };
    Ok(IdentifiedPotential {
        x_value: slice.x_value.clone(),
        z_points: zm.points().clone(),
        v_values: Array1::from(v),
        inverse_demand,
        u_bar_grad,
        normalization_point: pin,
        plan,
        duals: None,
        diagnostics,
    })
}

fn curl_report(
    f: &SurplusFamily,
    x: &[f64],
    z: &Array2<f64>,
    eps: &Array2<f64>,
    v: &Array1<f64>,
    k: usize,
) -> CurlReport {
    let m = z.nrows();
    let grads: Vec<Option<Vec<f64>>> = (0..m)
        .map(|j| {
            let e = eps.row(j);
            e.iter().all(|v| v.is_finite()).then(|| f.grad_z_raw(x, &e.to_vec(), &z.row(j).to_vec()))
        })
        .collect();
    let mut edges = Vec::new();
    for j in 0..m {
        for l in nearest(z, j, k) {
            // Each undirected edge once, unless only reachable from one side.
            if l < j && nearest(z, l, k).contains(&j) {
                continue;
            }
            let (Some(gj), Some(gl)) = (&grads[j], &grads[l]) else { continue };
            let dz: Vec<f64> = z.row(l).iter().zip(z.row(j).iter()).map(|(a, b)| a - b).collect();
            let integral: f64 = dz.iter().enumerate().map(|(c, d)| 0.5 * d * (gj[c] + gl[c])).sum();
            edges.push(EdgeResidual {
                from: j,
                to: l,
                length: dz.iter().map(|d| d * d).sum::<f64>().sqrt(),
                residual: v[l] - v[j] - integral,
            });
        }
    }
    let max_abs_residual = edges.iter().map(|e| e.residual.abs()).fold(0.0, f64::max);
    let rms_residual = if edges.is_empty() {
        0.0
    } else {
        (edges.iter().map(|e| e.residual * e.residual).sum::<f64>() / edges.len() as f64).sqrt()
    };
    CurlReport { edges, max_abs_residual, rms_residual }
}

/// Transport identification under the twist condition: the potential is the
/// dual of the optimal coupling between reference tastes and traded
/// qualities under surplus `f`.
pub fn general_identify(
    slice: &ConditionalSlice,
    eps_ref: &DiscreteMeasure,
    f: &SurplusFamily,
    opts: &IdentifyOptions,
) -> Result<IdentifiedPotential> {
    check_reference(slice, eps_ref, f)?;
    let x = slice.x_value.to_vec();
    let zm = &slice.z_measure;
    let dz = slice.dz();
    let twist = check_twist(
        f,
        slice.x_value.view(),
        &thin(eps_ref.points(), TWIST_SAMPLE),
        &thin(zm.points(), TWIST_SAMPLE),
        opts.twist_threshold,
    );
    if !twist.pass {
        return Err(match &twist.witness {
            Some(w) => Error::TwistViolation { eps_a: w.eps_a.clone(), eps_b: w.eps_b.clone(), z: w.z.clone() },
            None if twist.determinant_sign_change => {
                Error::NotSingleCrossing("cross-Hessian determinant changes sign over the sampled tastes and qualities".into())
            }
            None => Error::NotSingleCrossing(format!(
                "smallest singular value of the cross Hessian {} is below {}",
                twist.min_singular_value, twist.threshold
            )),
        });
    }

    let s = surplus_matrix(eps_ref, zm, f, slice.x_value.view())?;
    let (plan, duals) = solve_exact(eps_ref, zm, &s)?;
    let optimality = optimality_report(&plan, &duals, eps_ref.weights(), zm.weights(), &s);
    let bary = barycentric_projection(&plan, eps_ref.points())?;
    let k = opts.k(dz);
    let grads = price_gradients(zm.points(), &slice.prices, k);
    let (u_bar_grad, skipped) = ubar_gradients(&grads, f, &x, &bary.points, zm.points());
    let v = duals.v_target.clone();
    let curl = curl_report(f, &x, zm.points(), &bary.points, &v, k);

    let mut warnings = Vec::new();
    if !bary.split.is_empty() {
        warnings.push(format!("{} qualities matched to several reference tastes; inverse demand averaged", bary.split.len()));
    }
    if !bary.zero_mass.is_empty() {
        warnings.push(format!("{} qualities received no reference mass", bary.zero_mass.len()));
    }
    let diagnostics = IdentifyDiagnostics {
        pipeline: if matches!(f, SurplusFamily::Bilinear) { "brenier".into() } else { "general".into() },
        family: f.name().into(),
        n_reference: eps_ref.len(),
        twist: Some(twist),
        cross_derivative_sign: None,
        optimality: Some(optimality),
        split_columns: bary.split.len(),
        zero_mass_columns: bary.zero_mass.len(),
        gradient_skipped: skipped,
        curl: Some(curl),
        truncation_warnings: warnings,
        support_box: BoxBounds::of(zm.points()),
        reference_box: BoxBounds::of(eps_ref.points()),
    };
    Ok(IdentifiedPotential {
        x_value: slice.x_value.clone(),
        z_points: zm.points().clone(),
        v_values: v,
        inverse_demand: bary.points,
        u_bar_grad,
        normalization_point: duals.normalization,
        plan,
        duals: Some(duals),
        diagnostics,
    })
}

/// Transport identification with bilinear surplus `z' eps`.
pub fn brenier_identify(
    slice: &ConditionalSlice,
    eps_ref: &DiscreteMeasure,
    opts: &IdentifyOptions,
) -> Result<IdentifiedPotential> {
    general_identify(slice, eps_ref, &SurplusFamily::Bilinear, opts)
}

/// Forward map `h(x, eps)` of one observable-type cell.
#[derive(Debug, Clone)]
pub struct ForwardMap {
    pub x_value: Array1<f64>,
    pub eps_points: Array2<f64>,
    /// `h(eps)` per reference point.
    pub h: Array2<f64>,
    /// Coupling from reference tastes to the cell's qualities.
    pub plan: TransportPlan,
}

/// Recovers `z = h(x, eps)` with `h(x, .)` the gradient of a convex function,
/// separately for each cell of `scheme`.
pub fn simultaneous_equations_identify(
    data: &MarketDataset,
    eps_ref: &DiscreteMeasure,
    scheme: &PartitionScheme,
) -> Result<Vec<ForwardMap>> {
    if eps_ref.dim() != data.dz() {
        return Err(Error::Dimension { context: "taste dimension", expected: data.dz(), got: eps_ref.dim() });
    }
    partition_by_x(data, scheme)?
        .into_iter()
        .map(|slice| {
            let zm = &slice.z_measure;
            let s = surplus_matrix(eps_ref, zm, &SurplusFamily::Bilinear, ArrayView1::from(&[] as &[f64]))?;
            let (plan, _) = solve_exact(eps_ref, zm, &s)?;
            let forward = plan.transpose(&s.t().to_owned())?;
            let bary = barycentric_projection(&forward, zm.points())?;
            Ok(ForwardMap { x_value: slice.x_value, eps_points: eps_ref.points().clone(), h: bary.points, plan })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartialEffects {
    /// Estimate of `E[grad p(Z) | X = x]`.
    pub effect: Vec<f64>,
    /// Points whose neighbourhood was rank-deficient.
    pub skipped: Vec<usize>,
}

/// Slice-weighted average of local least-squares price gradients.
pub fn averaged_partial_effects(slice: &ConditionalSlice, k_neighbors: usize) -> Result<PartialEffects> {
    let zm = &slice.z_measure;
    let (m, d) = zm.points().dim();
    if m < k_neighbors + 1 || k_neighbors < d {
        return Err(Error::InvalidArgument(format!(
            "averaged effects need at least {} distinct qualities and {} neighbours, got {m} and {k_neighbors}",
            k_neighbors + 1,
            d
        )));
    }
    let mut acc = vec![0.0; d];
    let mut mass = 0.0;
    let mut skipped = Vec::new();
    for (j, g) in price_gradients(zm.points(), &slice.prices, k_neighbors).into_iter().enumerate() {
        match g {
            Some(g) => {
                let w = zm.weights()[j];
                for c in 0..d {
                    acc[c] += w * g[c];
                }
                mass += w;
            }
            None => skipped.push(j),
        }
    }
    if mass == 0.0 {
        return Err(Error::InvalidArgument("every neighbourhood is rank-deficient".into()));
    }
    Ok(PartialEffects { effect: acc.iter().map(|a| a / mass).collect(), skipped })
}

/// Squared error, squared truth norm and row count over rows where both
/// are finite.
fn error_sums(estimate: &Array2<f64>, truth: &Array2<f64>) -> (f64, f64, usize) {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut rows = 0;
    for (e, t) in estimate.rows().into_iter().zip(truth.rows()) {
        if e.iter().chain(t.iter()).all(|v| v.is_finite()) {
            num += e.iter().zip(t.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            den += t.iter().map(|b| b * b).sum::<f64>();
            rows += 1;
        }
    }
    (num, den, rows)
}

/// Root mean squared error per row (Euclidean norm of the row error).
pub fn rmse(estimate: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    let (num, _, rows) = error_sums(estimate, truth);
    (num / rows as f64).sqrt()
}

/// `sqrt(sum |e - t|^2 / sum |t|^2)` over rows where both are finite.
pub fn relative_rmse(estimate: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    let (num, den, _) = error_sums(estimate, truth);
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{closed_lattice, midpoint_lattice};
    use ndarray::array;

    fn slice_of(z: Array2<f64>, p: Array1<f64>) -> ConditionalSlice {
        let n = z.nrows();
        let data = MarketDataset::new(Array2::zeros((n, 0)), z, p).unwrap();
        ConditionalSlice::from_rows(Array1::zeros(0), &data, (0..n).collect()).unwrap()
    }

    fn grid_1d(lo: f64, hi: f64, n: usize) -> Array2<f64> {
        midpoint_lattice(&[lo], &[hi], n)
    }

    #[test]
    fn scalar_uniform_identity() {
        let z = grid_1d(0.0, 1.0, 50);
        let p = z.column(0).mapv(|v| v * v);
        let sl = slice_of(z.clone(), p);
        let eps = DiscreteMeasure::uniform(grid_1d(0.0, 1.0, 50)).unwrap();
        let out = scalar_identify(&sl, &eps, &SurplusFamily::Bilinear, &IdentifyOptions::default()).unwrap();
        let z0 = z[[0, 0]];
        for j in 0..50 {
            let zj = z[[j, 0]];
            assert_eq!(out.inverse_demand[[j, 0]], zj);
            assert!((out.v_values[j] - (zj * zj / 2.0 - z0 * z0 / 2.0)).abs() < 1e-12);
        }
        assert_eq!(out.normalization_point, 0);
        assert!(out.plan.is_pure());
    }

    #[test]
    fn scalar_half_scale() {
        let sl = slice_of(grid_1d(0.0, 2.0, 40), Array1::zeros(40));
        let eps = DiscreteMeasure::uniform(grid_1d(0.0, 1.0, 40)).unwrap();
        let out = scalar_identify(&sl, &eps, &SurplusFamily::Bilinear, &IdentifyOptions::default()).unwrap();
        for j in 0..40 {
            assert!((out.inverse_demand[[j, 0]] - out.z_points[[j, 0]] / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn scalar_single_point_uses_median() {
        let sl = slice_of(array![[0.7]], array![1.0]);
        let eps = DiscreteMeasure::uniform(array![[0.0], [1.0], [2.0]]).unwrap();
        let out = scalar_identify(&sl, &eps, &SurplusFamily::Bilinear, &IdentifyOptions::default()).unwrap();
        assert_eq!(out.inverse_demand[[0, 0]], 1.0);
        assert_eq!(out.v_values[0], 0.0);
    }

    #[test]
    fn scalar_rejects_two_dimensions_and_sign_change() {
        let sl = slice_of(array![[0.0, 1.0], [1.0, 0.0]], array![0.0, 1.0]);
        let eps = DiscreteMeasure::uniform(array![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(scalar_identify(&sl, &eps, &SurplusFamily::Bilinear, &IdentifyOptions::default()).is_err());

        // zeta = z eps^2 has cross derivative 2 eps, changing sign at 0.
        let f = SurplusFamily::polynomial(0, 1, vec![(1.0, vec![2, 1])]).unwrap();
        let sl = slice_of(grid_1d(0.0, 1.0, 5), Array1::zeros(5));
        let eps = DiscreteMeasure::uniform(grid_1d(-1.0, 1.0, 6)).unwrap();
        let err = scalar_identify(&sl, &eps, &f, &IdentifyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotSingleCrossing(_)));
    }

    #[test]
    fn scalar_anti_monotone() {
        // zeta = -z eps: the largest quality goes to the smallest taste.
        let f = SurplusFamily::polynomial(0, 1, vec![(-1.0, vec![1, 1])]).unwrap();
        let sl = slice_of(grid_1d(0.0, 1.0, 10), Array1::zeros(10));
        let e = grid_1d(0.0, 1.0, 10);
        let eps = DiscreteMeasure::uniform(e.clone()).unwrap();
        let out = scalar_identify(&sl, &eps, &f, &IdentifyOptions::default()).unwrap();
        for j in 0..10 {
            assert_eq!(out.inverse_demand[[j, 0]], e[[9 - j, 0]]);
        }
        let g = general_identify(&sl, &eps, &f, &IdentifyOptions::default()).unwrap();
        assert_eq!(g.plan.entries(), out.plan.entries());
    }

    #[test]
    fn brenier_lattice_doubling() {
        let e = midpoint_lattice(&[0.0, 0.0], &[1.0, 1.0], 6);
        let z = e.mapv(|v| 2.0 * v);
        let sl = slice_of(z.clone(), Array1::zeros(36));
        let eps = DiscreteMeasure::uniform(e).unwrap();
        let out = brenier_identify(&sl, &eps, &IdentifyOptions::default()).unwrap();
        for j in 0..36 {
            for c in 0..2 {
                assert_eq!(out.inverse_demand[[j, c]], out.z_points[[j, c]] / 2.0);
            }
        }
        let opt = out.diagnostics.optimality.as_ref().unwrap();
        assert!(opt.duality_gap < 1e-9);
    }

    #[test]
    fn brenier_single_point() {
        let sl = slice_of(array![[1.0, 2.0]], array![3.0]);
        let eps = DiscreteMeasure::uniform(midpoint_lattice(&[0.0, 0.0], &[1.0, 1.0], 3)).unwrap();
        let out = brenier_identify(&sl, &eps, &IdentifyOptions::default()).unwrap();
        assert_eq!(out.v_values[0], 0.0);
        assert_eq!(out.plan.entries().len(), 9);
        assert!((out.inverse_demand[[0, 0]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn neg_quadratic_matches_bilinear_coupling() {
        let e = midpoint_lattice(&[0.0, 0.0], &[1.0, 1.0], 5);
        let z = e.mapv(|v| 1.5 * v + 0.1);
        let sl = slice_of(z.clone(), Array1::zeros(25));
        let eps = DiscreteMeasure::uniform(e).unwrap();
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let nq = general_identify(&sl, &eps, &SurplusFamily::neg_quadratic(id).unwrap(), &IdentifyOptions::default()).unwrap();
        let bl = brenier_identify(&sl, &eps, &IdentifyOptions::default()).unwrap();
        assert_eq!(nq.plan.entries(), bl.plan.entries());
        // Adding back the separable terms turns the neg-quadratic duals into
        // optimal duals of the bilinear problem.
        let e = eps.points();
        let half = |p: ndarray::ArrayView1<f64>| 0.5 * p.dot(&p);
        let d = nq.duals.as_ref().unwrap();
        for i in 0..25 {
            for j in 0..25 {
                let w = d.w_source[i] + half(e.row(i));
                let v = d.v_target[j] + half(z.row(j));
                assert!(w + v >= e.row(i).dot(&z.row(j)) - 1e-9);
            }
        }
        for en in nq.plan.entries() {
            let w = d.w_source[en.source] + half(e.row(en.source));
            let v = d.v_target[en.target] + half(z.row(en.target));
            assert!((w + v - e.row(en.source).dot(&z.row(en.target))).abs() < 1e-9);
        }
    }

    #[test]
    fn general_refuses_untwisted() {
        // zeta = z eps^2 on tastes symmetric around zero.
        let f = SurplusFamily::polynomial(0, 1, vec![(1.0, vec![2, 1])]).unwrap();
        let sl = slice_of(grid_1d(0.0, 1.0, 4), Array1::zeros(4));
        let eps = DiscreteMeasure::uniform(grid_1d(-1.0, 1.0, 4)).unwrap();
        let err = general_identify(&sl, &eps, &f, &IdentifyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TwistViolation { .. }));
    }

    #[test]
    fn local_gradient_exact_for_affine_prices() {
        let z = closed_lattice(&[-1.0, -1.0], &[1.0, 1.0], 5);
        let p = z.rows().into_iter().map(|r| 0.3 * r[0] - 1.7 * r[1] + 2.0).collect::<Array1<f64>>();
        let sl = slice_of(z, p);
        let eff = averaged_partial_effects(&sl, 3).unwrap();
        assert!((eff.effect[0] - 0.3).abs() < 1e-12);
        assert!((eff.effect[1] + 1.7).abs() < 1e-12);
        let flat = slice_of(closed_lattice(&[0.0], &[1.0], 4), Array1::from_elem(4, 5.0));
        assert!(averaged_partial_effects(&flat, 2).unwrap().effect[0].abs() < 1e-12);
        assert!(averaged_partial_effects(&flat, 4).is_err());
    }

    #[test]
    fn simeq_shift() {
        let e = midpoint_lattice(&[0.0, 0.0], &[1.0, 1.0], 5);
        let z = e.mapv(|v| v) + &array![0.4, -0.2];
        let data = MarketDataset::new(Array2::zeros((25, 0)), z.clone(), Array1::zeros(25)).unwrap();
        let eps = DiscreteMeasure::uniform(e.clone()).unwrap();
        let maps = simultaneous_equations_identify(&data, &eps, &PartitionScheme::Exact).unwrap();
        assert_eq!(maps.len(), 1);
        for i in 0..25 {
            assert_eq!(maps[0].h.row(i), z.row(i));
        }
    }
}
