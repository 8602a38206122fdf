//! Discrete measures, market datasets and conditioning on observable type.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total-mass tolerance after normalisation.
pub const MASS_TOL: f64 = 1e-12;

/// Two prices for the same quality must agree within this tolerance.
pub const PRICE_AGREEMENT_TOL: f64 = 1e-9;

/// Weighted point cloud with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from sample points. Missing weights default to
    /// uniform; given weights are renormalised to unit mass.
    pub fn from_samples(points: Array2<f64>, weights: Option<Array1<f64>>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::Empty("measure points"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measure point coordinate".into()));
        }
        let weights = match weights {
            None => Array1::from_elem(n, 1.0 / n as f64),
            Some(w) => {
                if w.len() != n {
                    return Err(Error::Dimension {
                        context: "measure weights",
                        expected: n,
                        got: w.len(),
                    });
                }
                if let Some(bad) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(Error::Weights(format!("weight {bad} is negative or non-finite")));
                }
                let total: f64 = w.sum();
                if total <= 0.0 {
                    return Err(Error::Weights("total mass is zero".into()));
                }
                w / total
            }
        };
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Array2<f64>) -> Result<Self> {
        Self::from_samples(points, None)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    /// True when all weights are equal (bitwise up to one ulp-scale slack).
    pub fn is_uniform(&self) -> bool {
        let target = 1.0 / self.len() as f64;
        self.weights.iter().all(|w| (w - target).abs() <= 1e-15)
    }

    /// Index of the lexicographically smallest point (first on exact ties).
    pub fn lexicographic_min(&self) -> usize {
        lexicographic_argmin(&self.points)
    }
}

/// Index of the lexicographically smallest row; lowest index on ties.
pub fn lexicographic_argmin(points: &Array2<f64>) -> usize {
    let mut best = 0;
    for i in 1..points.nrows() {
        if lex_cmp(points.row(i), points.row(best)) == Ordering::Less {
            best = i;
        }
    }
    best
}

pub(crate) fn lex_cmp(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Observed rows `(x, z, p)` from one market.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketDataset {
    x: Array2<f64>,
    z: Array2<f64>,
    p: Array1<f64>,
}

impl MarketDataset {
    /// `x` may have zero columns when no observable type is recorded.
    pub fn new(x: Array2<f64>, z: Array2<f64>, p: Array1<f64>) -> Result<Self> {
        let n = z.nrows();
        if n == 0 {
            return Err(Error::Empty("dataset"));
        }
        if z.ncols() == 0 {
            return Err(Error::InvalidArgument("quality dimension d_z must be at least 1".into()));
        }
        if x.nrows() != n {
            return Err(Error::Dimension { context: "dataset x rows", expected: n, got: x.nrows() });
        }
        if p.len() != n {
            return Err(Error::Dimension { context: "dataset price rows", expected: n, got: p.len() });
        }
        if p.iter().chain(z.iter()).chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset entry".into()));
        }
        Ok(Self { x, z, p })
    }

    pub fn len(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.nrows() == 0
    }

    pub fn dx(&self) -> usize {
        self.x.ncols()
    }

    pub fn dz(&self) -> usize {
        self.z.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn prices(&self) -> &Array1<f64> {
        &self.p
    }

    /// Same rows with every price shifted by `c`.
    pub fn with_price_shift(&self, c: f64) -> Self {
        Self { x: self.x.clone(), z: self.z.clone(), p: &self.p + c }
    }
}

/// Qualities traded by one observable-type cell, with their prices.
#[derive(Debug, Clone)]
pub struct ConditionalSlice {
    pub x_value: Array1<f64>,
    pub z_measure: DiscreteMeasure,
    /// Price of each (merged) point of `z_measure`.
    pub prices: Array1<f64>,
    /// Dataset rows falling in this cell, ascending.
    pub row_ids: Vec<usize>,
    /// For each entry of `row_ids`, the index of its merged point.
    pub point_of_row: Vec<usize>,
}

impl ConditionalSlice {
    /// Builds a slice from the given rows: duplicate qualities are merged with
    /// summed weights and must carry the same price.
    pub fn from_rows(x_value: Array1<f64>, data: &MarketDataset, rows: Vec<usize>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("slice rows"));
        }
        let dz = data.dz();
        // Key qualities by exact bit pattern so merging is deterministic.
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut pts: Vec<f64> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        let mut prices: Vec<f64> = Vec::new();
        let mut point_of_row = Vec::with_capacity(rows.len());
        for &r in &rows {
            let zr = data.z.row(r);
            let key: Vec<u64> = zr.iter().map(|v| (v + 0.0).to_bits()).collect();
            let p = data.p[r];
            let k = match index.get(&key) {
                Some(&k) => {
                    if (prices[k] - p).abs() > PRICE_AGREEMENT_TOL {
                        return Err(Error::PriceConflict { first: prices[k], second: p });
                    }
                    counts[k] += 1.0;
                    k
                }
                None => {
                    let k = counts.len();
                    index.insert(key, k);
                    pts.extend(zr.iter());
                    counts.push(1.0);
                    prices.push(p);
                    k
                }
            };
            point_of_row.push(k);
        }
        let npts = counts.len();
        let points = Array2::from_shape_vec((npts, dz), pts).expect("shape");
        let z_measure = DiscreteMeasure::from_samples(points, Some(Array1::from(counts)))?;
        Ok(Self { x_value, z_measure, prices: Array1::from(prices), row_ids: rows, point_of_row })
    }

    pub fn dz(&self) -> usize {
        self.z_measure.dim()
    }
}

/// How rows are grouped by observable type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionScheme {
    /// One cell per distinct `x` value.
    #[default]
    Exact,
    /// Half-open hypercubes of the given edge widths, anchored at the data
    /// minimum. The last cell along each axis is closed.
    Bins { widths: Vec<f64> },
}

/// Splits a dataset into disjoint conditional slices covering every row.
/// Slices are ordered lexicographically by cell.
pub fn partition_by_x(data: &MarketDataset, scheme: &PartitionScheme) -> Result<Vec<ConditionalSlice>> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let dx = data.dx();
    let mut cells: BTreeMap<Vec<i64>, (Array1<f64>, Vec<usize>)> = BTreeMap::new();
    match scheme {
        PartitionScheme::Exact => {
            // Order cells by x value through a sortable integer key.
            for r in 0..data.len() {
                let xr = data.x.row(r);
                let key: Vec<i64> = xr.iter().map(|v| sortable_key(*v)).collect();
                cells.entry(key).or_insert_with(|| (xr.to_owned(), Vec::new())).1.push(r);
            }
        }
        PartitionScheme::Bins { widths } => {
            if widths.len() != dx {
                return Err(Error::Dimension { context: "bin widths", expected: dx, got: widths.len() });
            }
            if let Some(w) = widths.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
                return Err(Error::InvalidArgument(format!("bin width {w} must be positive")));
            }
            let lo = data.x.fold_axis(Axis(0), f64::INFINITY, |a, b| a.min(*b));
            let hi = data.x.fold_axis(Axis(0), f64::NEG_INFINITY, |a, b| a.max(*b));
            let ncells: Vec<i64> = (0..dx)
                .map(|k| (((hi[k] - lo[k]) / widths[k]).ceil() as i64).max(1))
                .collect();
            for r in 0..data.len() {
                let key: Vec<i64> = (0..dx)
                    .map(|k| {
                        let idx = ((data.x[[r, k]] - lo[k]) / widths[k]).floor() as i64;
                        idx.clamp(0, ncells[k] - 1)
                    })
                    .collect();
                let mid: Array1<f64> =
                    (0..dx).map(|k| lo[k] + (key[k] as f64 + 0.5) * widths[k]).collect();
                cells.entry(key).or_insert_with(|| (mid, Vec::new())).1.push(r);
            }
        }
    }
    cells
        .into_values()
        .map(|(x_value, rows)| ConditionalSlice::from_rows(x_value, data, rows))
        .collect()
}

fn sortable_key(v: f64) -> i64 {
    let bits = (v + 0.0).to_bits() as i64;
    if bits < 0 {
        bits ^ i64::MAX
    } else {
        bits
    }
}

/// One-dimensional marginal used by [`DistributionSpec::Product`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    TruncatedNormal { mean: f64, sd: f64, lo: f64, hi: f64 },
    Exponential { rate: f64 },
    PointMass { value: f64 },
}

/// A reference distribution that can be sampled reproducibly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Uniform on the box `[lo, hi]`.
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Standard Gaussian in `dim` dimensions, optionally truncated to a box.
    Gaussian {
        dim: usize,
        #[serde(default)]
        truncate_lo: Option<Vec<f64>>,
        #[serde(default)]
        truncate_hi: Option<Vec<f64>>,
    },
    /// Independent coordinates with the given marginals.
    Product { marginals: Vec<Marginal> },
    /// Midpoint lattice of the box with `per_axis` cells per axis: a
    /// deterministic quadrature of the uniform distribution. Ignores `n`.
    Lattice { lo: Vec<f64>, hi: Vec<f64>, per_axis: usize },
    /// Finite list of atoms, sampled with the given (or uniform) weights.
    Discrete {
        points: Vec<Vec<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

impl DistributionSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::UniformBox { lo, .. } | Self::Lattice { lo, .. } => lo.len(),
            Self::Gaussian { dim, .. } => *dim,
            Self::Product { marginals } => marginals.len(),
            Self::Discrete { points, .. } => points.first().map_or(0, Vec::len),
        }
    }

    /// Parses a spec from its JSON form; unknown kinds are rejected.
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("distribution spec: {e}")))
    }

    fn validate(&self) -> Result<()> {
        let check_box = |lo: &[f64], hi: &[f64]| -> Result<()> {
            if lo.len() != hi.len() {
                return Err(Error::Dimension { context: "box bounds", expected: lo.len(), got: hi.len() });
            }
            if lo.is_empty() {
                return Err(Error::InvalidArgument("box has dimension zero".into()));
            }
            for (l, h) in lo.iter().zip(hi) {
                if !(l < h) || !l.is_finite() || !h.is_finite() {
                    return Err(Error::InvalidArgument(format!("degenerate box side [{l}, {h}]")));
                }
            }
            Ok(())
        };
        match self {
            Self::UniformBox { lo, hi } => check_box(lo, hi),
            Self::Lattice { lo, hi, per_axis } => {
                if *per_axis == 0 {
                    return Err(Error::InvalidArgument("lattice needs per_axis >= 1".into()));
                }
                check_box(lo, hi)
            }
            Self::Gaussian { dim, truncate_lo, truncate_hi } => {
                if *dim == 0 {
                    return Err(Error::InvalidArgument("gaussian dimension zero".into()));
                }
                match (truncate_lo, truncate_hi) {
                    (None, None) => Ok(()),
                    (Some(lo), Some(hi)) => {
                        check_box(lo, hi)?;
                        if lo.len() != *dim {
                            return Err(Error::Dimension { context: "truncation box", expected: *dim, got: lo.len() });
                        }
                        Ok(())
                    }
                    _ => Err(Error::InvalidArgument("truncation needs both truncate_lo and truncate_hi".into())),
                }
            }
            Self::Product { marginals } => {
                if marginals.is_empty() {
                    return Err(Error::InvalidArgument("product of zero marginals".into()));
                }
                for m in marginals {
                    match m {
                        Marginal::Uniform { lo, hi } | Marginal::TruncatedNormal { lo, hi, .. } if !(lo < hi) => {
                            return Err(Error::InvalidArgument(format!("degenerate interval [{lo}, {hi}]")))
                        }
                        Marginal::Normal { sd, .. } | Marginal::TruncatedNormal { sd, .. } if !(*sd > 0.0) => {
                            return Err(Error::InvalidArgument(format!("non-positive sd {sd}")))
                        }
                        Marginal::Exponential { rate } if !(*rate > 0.0) => {
                            return Err(Error::InvalidArgument(format!("non-positive rate {rate}")))
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
            Self::Discrete { points, weights } => {
                if points.is_empty() {
                    return Err(Error::Empty("discrete distribution atoms"));
                }
                let d = points[0].len();
                if points.iter().any(|p| p.len() != d) {
                    return Err(Error::InvalidArgument("discrete atoms of unequal dimension".into()));
                }
                if let Some(w) = weights {
                    if w.len() != points.len() || w.iter().any(|v| *v < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                        return Err(Error::Weights("discrete distribution weights".into()));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Deterministic generator for the named random stream of a run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const TRUNCATION_ATTEMPTS: usize = 1_000_000;

fn truncated<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64, lo: f64, hi: f64) -> Result<f64> {
    for _ in 0..TRUNCATION_ATTEMPTS {
        let v: f64 = mean + sd * rng.sample::<f64, _>(StandardNormal);
        if v >= lo && v <= hi {
            return Ok(v);
        }
    }
    Err(Error::InvalidArgument(format!(
        "truncation interval [{lo}, {hi}] has negligible Gaussian mass"
    )))
}

/// Draws `n` points from `spec` with uniform weights. Lattice specs ignore `n`.
pub fn sample_reference(spec: &DistributionSpec, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(spec, n, &mut rng).and_then(DiscreteMeasure::uniform)
}

/// Draws `n` points from `spec` using the supplied generator.
pub fn sample_with<R: Rng + ?Sized>(spec: &DistributionSpec, n: usize, rng: &mut R) -> Result<Array2<f64>> {
    spec.validate()?;
    if n == 0 && !matches!(spec, DistributionSpec::Lattice { .. }) {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let d = spec.dim();
    match spec {
        DistributionSpec::UniformBox { lo, hi } => Ok(Array2::from_shape_fn((n, d), |_| 0.0)).map(|mut a| {
            for mut row in a.rows_mut() {
                for k in 0..d {
                    row[k] = rng.random_range(lo[k]..hi[k]);
                }
            }
            a
        }),
        DistributionSpec::Gaussian { truncate_lo, truncate_hi, .. } => {
            let mut a = Array2::zeros((n, d));
            for mut row in a.rows_mut() {
                for k in 0..d {
                    row[k] = match (truncate_lo, truncate_hi) {
                        (Some(lo), Some(hi)) => truncated(rng, 0.0, 1.0, lo[k], hi[k])?,
                        _ => rng.sample(StandardNormal),
                    };
                }
            }
            Ok(a)
        }
        DistributionSpec::Product { marginals } => {
            let mut a = Array2::zeros((n, d));
            for mut row in a.rows_mut() {
                for (k, m) in marginals.iter().enumerate() {
                    row[k] = match *m {
                        Marginal::Uniform { lo, hi } => rng.random_range(lo..hi),
                        Marginal::Normal { mean, sd } => {
                            Normal::new(mean, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng)
                        }
                        Marginal::TruncatedNormal { mean, sd, lo, hi } => truncated(rng, mean, sd, lo, hi)?,
                        Marginal::Exponential { rate } => {
                            Exp::new(rate).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng)
                        }
                        Marginal::PointMass { value } => value,
                    };
                }
            }
            Ok(a)
        }
        DistributionSpec::Lattice { lo, hi, per_axis } => Ok(midpoint_lattice(lo, hi, *per_axis)),
        DistributionSpec::Discrete { points, weights } => {
            let cum: Vec<f64> = match weights {
                Some(w) => {
                    let total: f64 = w.iter().sum();
                    w.iter()
                        .scan(0.0, |acc, v| {
                            *acc += v / total;
                            Some(*acc)
                        })
                        .collect()
                }
                None => (1..=points.len()).map(|k| k as f64 / points.len() as f64).collect(),
            };
            let mut a = Array2::zeros((n, d));
            for mut row in a.rows_mut() {
                let u: f64 = rng.random();
                let k = cum.iter().position(|c| u < *c).unwrap_or(points.len() - 1);
                for j in 0..d {
                    row[j] = points[k][j];
                }
            }
            Ok(a)
        }
    }
}

/// Cell midpoints of a regular `per_axis^d` subdivision of the box,
/// in row-major order with the last coordinate varying fastest.
pub fn midpoint_lattice(lo: &[f64], hi: &[f64], per_axis: usize) -> Array2<f64> {
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| (0..per_axis).map(|k| l + (k as f64 + 0.5) * (h - l) / per_axis as f64).collect())
        .collect();
    tensor_grid(&axes)
}

/// Regular lattice including both box faces (`per_axis >= 2`), or the box
/// centre when `per_axis == 1`.
pub fn closed_lattice(lo: &[f64], hi: &[f64], per_axis: usize) -> Array2<f64> {
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| {
            if per_axis <= 1 {
                vec![0.5 * (l + h)]
            } else {
                (0..per_axis).map(|k| l + k as f64 * (h - l) / (per_axis - 1) as f64).collect()
            }
        })
        .collect();
    tensor_grid(&axes)
}

fn tensor_grid(axes: &[Vec<f64>]) -> Array2<f64> {
    let d = axes.len();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = Array2::zeros((total, d));
    for (r, mut row) in out.rows_mut().into_iter().enumerate() {
        let mut rem = r;
        for k in (0..d).rev() {
            let len = axes[k].len();
            row[k] = axes[k][rem % len];
            rem /= len;
        }
    }
    out
}

/// Weighted empirical CDF `F(v) = P(X <= v)`.
pub fn empirical_cdf(values: &[f64], weights: &[f64], v: f64) -> f64 {
    values.iter().zip(weights).filter(|(x, _)| **x <= v).map(|(_, w)| w).sum()
}

/// Left-continuous generalised inverse `inf { v : F(v) >= q }` of the
/// weighted empirical CDF. `q = 0` returns the smallest value.
pub fn empirical_cdf_quantile(values: &[f64], weights: &[f64], q: f64) -> Result<f64> {
    if !(-MASS_TOL..=1.0 + MASS_TOL).contains(&q) {
        return Err(Error::InvalidArgument(format!("quantile level {q} outside [0, 1]")));
    }
    let q = q.clamp(0.0, 1.0);
    if values.is_empty() {
        return Err(Error::Empty("quantile values"));
    }
    if values.len() != weights.len() {
        return Err(Error::Dimension { context: "quantile weights", expected: values.len(), got: weights.len() });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cum = 0.0;
    for (pos, &k) in order.iter().enumerate() {
        cum += weights[k];
        // Only step at the last copy of a repeated value.
        let last_of_value = order.get(pos + 1).is_none_or(|&n| values[n] != values[k]);
        if last_of_value && cum >= q - MASS_TOL {
            return Ok(values[k]);
        }
    }
    Ok(values[order[order.len() - 1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_default_weights() {
        let m = DiscreteMeasure::from_samples(array![[0.0], [1.0], [2.0]], None).unwrap();
        for w in m.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_renormalised() {
        let m = DiscreteMeasure::from_samples(array![[0.0], [1.0]], Some(array![2.0, 2.0])).unwrap();
        assert_eq!(m.weights(), &array![0.5, 0.5]);
    }

    #[test]
    fn negative_and_zero_weights_rejected() {
        assert!(DiscreteMeasure::from_samples(array![[0.0], [1.0]], Some(array![1.0, -1.0])).is_err());
        assert!(DiscreteMeasure::from_samples(array![[0.0], [1.0]], Some(array![0.0, 0.0])).is_err());
        assert!(DiscreteMeasure::from_samples(Array2::zeros((0, 2)), None).is_err());
    }

    fn dataset(x: Vec<f64>, z: Vec<f64>) -> MarketDataset {
        let n = x.len();
        let p = Array1::from_iter(z.iter().map(|v| v * v));
        MarketDataset::new(
            Array2::from_shape_vec((n, 1), x).unwrap(),
            Array2::from_shape_vec((n, 1), z).unwrap(),
            p,
        )
        .unwrap()
    }

    #[test]
    fn exact_partition_two_cells() {
        let d = dataset(vec![0.0, 1.0, 0.0, 1.0, 1.0], vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        let slices = partition_by_x(&d, &PartitionScheme::Exact).unwrap();
        assert_eq!(slices.len(), 2);
        assert_eq!(slices.iter().map(|s| s.row_ids.len()).sum::<usize>(), 5);
        assert_eq!(slices[0].row_ids, vec![0, 2]);
        assert_eq!(slices[1].x_value, array![1.0]);
    }

    #[test]
    fn identical_x_single_slice() {
        let d = dataset(vec![3.0; 4], vec![0.1, 0.2, 0.3, 0.4]);
        let slices = partition_by_x(&d, &PartitionScheme::Exact).unwrap();
        assert_eq!(slices.len(), 1);
        assert_eq!(slices[0].row_ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn binned_partition_matches_brute_force() {
        let xs = vec![0.0, 0.49, 0.5, 0.75, 1.0, 0.2, 0.99];
        let d = dataset(xs.clone(), (0..7).map(|k| k as f64).collect());
        let slices = partition_by_x(&d, &PartitionScheme::Bins { widths: vec![0.5] }).unwrap();
        assert_eq!(slices.len(), 2);
        // Brute-force membership scan.
        let lower: Vec<usize> = (0..xs.len()).filter(|&r| xs[r] < 0.5).collect();
        let upper: Vec<usize> = (0..xs.len()).filter(|&r| xs[r] >= 0.5 && xs[r] <= 1.0).collect();
        assert_eq!(slices[0].row_ids, lower);
        assert_eq!(slices[1].row_ids, upper);
        assert_eq!(slices[0].x_value, array![0.25]);
        assert_eq!(slices[1].x_value, array![0.75]);
    }

    #[test]
    fn bad_bin_width() {
        let d = dataset(vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!(partition_by_x(&d, &PartitionScheme::Bins { widths: vec![0.0] }).is_err());
        assert!(partition_by_x(&d, &PartitionScheme::Bins { widths: vec![-1.0] }).is_err());
    }

    #[test]
    fn duplicate_qualities_merge() {
        let x = Array2::zeros((3, 0));
        let z = array![[1.0], [2.0], [1.0]];
        let d = MarketDataset::new(x.clone(), z.clone(), array![5.0, 6.0, 5.0]).unwrap();
        let s = &partition_by_x(&d, &PartitionScheme::Exact).unwrap()[0];
        assert_eq!(s.z_measure.len(), 2);
        assert!((s.z_measure.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.point_of_row, vec![0, 1, 0]);
        let bad = MarketDataset::new(x, z, array![5.0, 6.0, 5.1]).unwrap();
        assert!(matches!(partition_by_x(&bad, &PartitionScheme::Exact), Err(Error::PriceConflict { .. })));
    }

    #[test]
    fn uniform_box_contained_and_deterministic() {
        let spec = DistributionSpec::UniformBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let a = sample_reference(&spec, 100, 7).unwrap();
        let b = sample_reference(&spec, 100, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.points().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn truncated_gaussian_mean() {
        let spec = DistributionSpec::Gaussian {
            dim: 1,
            truncate_lo: Some(vec![-1.0]),
            truncate_hi: Some(vec![1.0]),
        };
        let n = 10_000;
        let m = sample_reference(&spec, n, 3).unwrap();
        assert!(m.points().iter().all(|v| v.abs() <= 1.0));
        let mean = m.points().sum() / n as f64;
        assert!(mean.abs() < 5.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn degenerate_box_and_unknown_kind() {
        let spec = DistributionSpec::UniformBox { lo: vec![1.0], hi: vec![1.0] };
        assert!(sample_reference(&spec, 3, 0).is_err());
        assert!(DistributionSpec::from_json(r#"{"kind":"cauchy_blob","dim":2}"#).is_err());
        let ok = DistributionSpec::from_json(r#"{"kind":"uniform_box","lo":[0],"hi":[1]}"#).unwrap();
        assert_eq!(ok.dim(), 1);
    }

    #[test]
    fn lattice_midpoints() {
        let l = midpoint_lattice(&[0.0, 0.0], &[1.0, 2.0], 2);
        assert_eq!(l, array![[0.25, 0.5], [0.25, 1.5], [0.75, 0.5], [0.75, 1.5]]);
    }

    #[test]
    fn quantile_examples() {
        let third = 1.0 / 3.0;
        assert_eq!(empirical_cdf_quantile(&[1.0, 2.0, 3.0], &[third; 3], 0.5).unwrap(), 2.0);
        for q in [0.0, 0.3, 1.0] {
            assert_eq!(empirical_cdf_quantile(&[5.0], &[1.0], q).unwrap(), 5.0);
        }
        assert_eq!(empirical_cdf_quantile(&[1.0, 2.0], &[0.25, 0.75], 0.2).unwrap(), 1.0);
        assert_eq!(empirical_cdf_quantile(&[1.0, 2.0], &[0.25, 0.75], 0.26).unwrap(), 2.0);
        assert!(empirical_cdf_quantile(&[1.0], &[1.0], 1.5).is_err());
        assert!(empirical_cdf_quantile(&[1.0], &[1.0], -0.1).is_err());
    }
}
