//! Discrete hedonic equilibria from known primitives.
//!
//! Consumers `(x, eps)` and producers `y` are sampled, each pair's joint
//! surplus is maximised over a finite quality grid, and the optimal coupling
//! of the two samples with its duals gives the matching, the indirect
//! utilities and the price schedule on traded qualities.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{closed_lattice, sample_with, stream_rng, DistributionSpec, MarketDataset};
use crate::ot::{solve_exact_weights, PlanEntry, TransportPlan, MARGINAL_TOL};
use crate::surplus::StructuralSpec;

/// Default largest fraction of matched pairs allowed a boundary argmax.
pub const DEFAULT_BOUNDARY_THRESHOLD: f64 = 0.01;

/// Closed regular lattice of qualities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub per_axis: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InvalidArgument("quality grid bounds must be non-empty and of equal length".into()));
        }
        if self.per_axis == 0 {
            return Err(Error::InvalidArgument("quality grid needs at least one point per axis".into()));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidArgument("quality grid bounds must satisfy lo <= hi".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn points(&self) -> Array2<f64> {
        closed_lattice(&self.lo, &self.hi, self.per_axis)
    }
}

fn default_threshold() -> f64 {
    DEFAULT_BOUNDARY_THRESHOLD
}

/// Primitives and sizes of a simulated market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub structure: StructuralSpec,
    /// Observable consumer types; `None` when consumers have no `x`.
    #[serde(default)]
    pub consumer_x: Option<DistributionSpec>,
    /// Taste distribution, the same for every `x`.
    pub consumer_eps: DistributionSpec,
    pub producers: DistributionSpec,
    pub n_consumers: usize,
    pub n_producers: usize,
    pub z_grid: GridSpec,
    #[serde(default = "default_threshold")]
    pub boundary_threshold: f64,
}

impl MarketSpec {
    pub fn dx(&self) -> usize {
        self.consumer_x.as_ref().map_or(0, DistributionSpec::dim)
    }

    pub fn validate(&self) -> Result<()> {
        self.z_grid.validate()?;
        if self.n_consumers == 0 || self.n_producers == 0 {
            return Err(Error::InvalidArgument("consumer and producer counts must be at least 1".into()));
        }
        let dz = self.z_grid.dim();
        self.structure.validate(self.dx(), self.producers.dim(), dz)?;
        self.structure.zeta.check_dims(self.dx(), self.consumer_eps.dim(), dz)
    }
}

/// Best quality for one consumer-producer pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSurplus {
    pub value: f64,
    pub argmax: usize,
    pub interior: bool,
}

/// Grid points touching the grid's bounding box.
pub fn boundary_mask(grid: &Array2<f64>) -> Vec<bool> {
    let lo = grid.fold_axis(Axis(0), f64::INFINITY, |a, b| a.min(*b));
    let hi = grid.fold_axis(Axis(0), f64::NEG_INFINITY, |a, b| a.max(*b));
    grid.rows().into_iter().map(|r| r.iter().enumerate().any(|(k, v)| *v == lo[k] || *v == hi[k])).collect()
}

fn argmax_row(u: &[f64], c: &[f64]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (g, (a, b)) in u.iter().zip(c).enumerate() {
        let v = a - b;
        if v > best {
            best = v;
            arg = g;
        }
    }
    (best, arg)
}

/// `max_z [Ubar(x, z) + zeta(x, eps, z) - C(y, z)]` over `z_grid`, lowest
/// index on ties.
pub fn joint_surplus(spec: &StructuralSpec, x: &[f64], eps: &[f64], y: &[f64], z_grid: &Array2<f64>) -> Result<JointSurplus> {
    if z_grid.nrows() == 0 {
        return Err(Error::Empty("quality grid"));
    }
    let zs: Vec<Vec<f64>> = z_grid.rows().into_iter().map(|r| r.to_vec()).collect();
    let u: Vec<f64> = zs.iter().map(|z| spec.utility(x, eps, z)).collect();
    let c: Vec<f64> = zs.iter().map(|z| spec.cost(y, z)).collect();
    let (value, argmax) = argmax_row(&u, &c);
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("joint surplus {value}")));
    }
    Ok(JointSurplus { value, argmax, interior: !boundary_mask(z_grid)[argmax] })
}

/// A simulated equilibrium. Consumers are the transport source, producers
/// the target.
#[derive(Debug, Clone)]
pub struct EquilibriumOutcome {
    pub spec: MarketSpec,
    pub consumer_x: Array2<f64>,
    pub consumer_eps: Array2<f64>,
    pub producers: Array2<f64>,
    pub z_grid: Array2<f64>,
    pub surplus: Array2<f64>,
    /// Grid index of the best quality for every pair.
    pub argmax: Array2<usize>,
    pub matching: TransportPlan,
    /// Traded quality per matching entry.
    pub traded_z: Array2<f64>,
    /// Price per matching entry.
    pub prices: Array1<f64>,
    pub indirect_v: Array1<f64>,
    pub indirect_w: Array1<f64>,
    /// One row `(x, z, p)` per matching entry.
    pub dataset: MarketDataset,
    pub boundary_fraction: f64,
}

struct Tables {
    surplus: Array2<f64>,
    argmax: Array2<usize>,
}

fn tables(spec: &StructuralSpec, x: &Array2<f64>, eps: &Array2<f64>, y: &Array2<f64>, grid: &Array2<f64>) -> Result<Tables> {
    let zs: Vec<Vec<f64>> = grid.rows().into_iter().map(|r| r.to_vec()).collect();
    let n = eps.nrows();
    let m = y.nrows();
    let u: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (xi, ei) = (x.row(i).to_vec(), eps.row(i).to_vec());
            zs.iter().map(|z| spec.utility(&xi, &ei, z)).collect()
        })
        .collect();
    let c: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let yj = y.row(j).to_vec();
            zs.iter().map(|z| spec.cost(&yj, z)).collect()
        })
        .collect();
    let rows: Vec<Vec<(f64, usize)>> = u.par_iter().map(|ui| c.iter().map(|cj| argmax_row(ui, cj)).collect()).collect();
    let mut surplus = Array2::zeros((n, m));
    let mut argmax = Array2::zeros((n, m));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, (v, g)) in row.into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("joint surplus {v} at pair ({i}, {j})")));
            }
            surplus[[i, j]] = v;
            argmax[[i, j]] = g;
        }
    }
    Ok(Tables { surplus, argmax })
}

/// Builds the equilibrium for given type samples.
pub fn equilibrium_from_types(
    spec: &MarketSpec,
    consumer_x: Array2<f64>,
    consumer_eps: Array2<f64>,
    producers: Array2<f64>,
) -> Result<EquilibriumOutcome> {
    spec.validate()?;
    let n = consumer_eps.nrows();
    let m = producers.nrows();
    if consumer_x.nrows() != n {
        return Err(Error::Dimension { context: "consumer x rows", expected: n, got: consumer_x.nrows() });
    }
    if n == 0 || m == 0 {
        return Err(Error::Empty("agent samples"));
    }
    let grid = spec.z_grid.points();
    let t = tables(&spec.structure, &consumer_x, &consumer_eps, &producers, &grid)?;
    let a = Array1::from_elem(n, 1.0 / n as f64);
    let b = Array1::from_elem(m, 1.0 / m as f64);
    // Producer 0 carries the price normalisation.
    let (matching, duals) = solve_exact_weights(&a, &b, &t.surplus, 0)?;

    let boundary = boundary_mask(&grid);
    let entries = matching.entries();
    let hits = entries.iter().filter(|e| boundary[t.argmax[[e.source, e.target]]]).count();
    let boundary_fraction = hits as f64 / entries.len() as f64;
    if boundary_fraction > spec.boundary_threshold {
        return Err(Error::GridBoundary { fraction: boundary_fraction, threshold: spec.boundary_threshold });
    }

    let dz = grid.ncols();
    let mut traded_z = Array2::zeros((entries.len(), dz));
    let mut prices = Array1::zeros(entries.len());
    let mut x_rows = Array2::zeros((entries.len(), consumer_x.ncols()));
    for (k, e) in entries.iter().enumerate() {
        let z = grid.row(t.argmax[[e.source, e.target]]);
        traded_z.row_mut(k).assign(&z);
        x_rows.row_mut(k).assign(&consumer_x.row(e.source));
        let u = spec.structure.utility(
            &consumer_x.row(e.source).to_vec(),
            &consumer_eps.row(e.source).to_vec(),
            &z.to_vec(),
        );
        prices[k] = u - duals.w_source[e.source];
    }
    let dataset = MarketDataset::new(x_rows, traded_z.clone(), prices.clone())?;
    Ok(EquilibriumOutcome {
        spec: spec.clone(),
        consumer_x,
        consumer_eps,
        producers,
        z_grid: grid,
        surplus: t.surplus,
        argmax: t.argmax,
        matching,
        traded_z,
        prices,
        indirect_v: duals.w_source,
        indirect_w: duals.v_target,
        dataset,
        boundary_fraction,
    })
}

/// Random stream for observable consumer types.
pub const STREAM_X: u64 = 1;
/// Random stream for consumer tastes.
pub const STREAM_EPS: u64 = 2;
/// Random stream for producer types.
pub const STREAM_PRODUCERS: u64 = 3;

/// Draws consumer and producer types from `spec` and builds the equilibrium.
pub fn simulate_market(spec: &MarketSpec, seed: u64) -> Result<EquilibriumOutcome> {
    spec.validate()?;
    let n = spec.n_consumers;
    let x = match &spec.consumer_x {
        Some(d) => sample_with(d, n, &mut stream_rng(seed, STREAM_X))?,
        None => Array2::zeros((n, 0)),
    };
    let eps = sample_with(&spec.consumer_eps, n, &mut stream_rng(seed, STREAM_EPS))?;
    let y = sample_with(&spec.producers, spec.n_producers, &mut stream_rng(seed, STREAM_PRODUCERS))?;
    if eps.nrows() != n || y.nrows() != spec.n_producers {
        return Err(Error::InvalidArgument("agent distributions must be sampled, not lattices".into()));
    }
    equilibrium_from_types(spec, x, eps, y)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub pass: bool,
    pub worst: f64,
    pub detail: Option<String>,
}

impl CheckResult {
    fn new(worst: f64, tol: f64, detail: Option<String>) -> Self {
        Self { pass: worst <= tol, worst, detail }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub tol: f64,
    /// `max S - V - W` over all pairs and `|V + W - S|` on the matching.
    pub stability: CheckResult,
    pub matched_equality: CheckResult,
    /// Posted prices against both sides of the dual split.
    pub price_consistency: CheckResult,
    pub market_clearing: CheckResult,
    /// Largest gain of a consumer switching to another traded quality.
    pub consumer_deviation: CheckResult,
    pub producer_deviation: CheckResult,
    pub boundary_fraction: f64,
    pub pass: bool,
}

/// Checks stability, price consistency, market clearing and the absence of
/// profitable deviations to traded qualities at posted prices.
pub fn verify_equilibrium(out: &EquilibriumOutcome, tol: f64) -> EquilibriumReport {
    let st = &out.spec.structure;
    let s = &out.surplus;
    let (v, w) = (&out.indirect_v, &out.indirect_w);
    let entries = out.matching.entries();

    let mut worst_stab = f64::NEG_INFINITY;
    let mut stab_at = (0, 0);
    for ((i, j), sij) in s.indexed_iter() {
        let gap = sij - v[i] - w[j];
        if gap > worst_stab {
            worst_stab = gap;
            stab_at = (i, j);
        }
    }
    let stability = CheckResult::new(
        worst_stab,
        tol,
        (worst_stab > tol).then(|| format!("consumer {} and producer {} block the matching", stab_at.0, stab_at.1)),
    );
    let eq_gap = entries.iter().map(|e| (v[e.source] + w[e.target] - s[[e.source, e.target]]).abs()).fold(0.0, f64::max);
    let matched_equality = CheckResult::new(eq_gap, tol, None);

    let xi = |i: usize| out.consumer_x.row(i).to_vec();
    let ei = |i: usize| out.consumer_eps.row(i).to_vec();
    let yj = |j: usize| out.producers.row(j).to_vec();
    let zk = |k: usize| out.traded_z.row(k).to_vec();

    let mut worst_price = 0.0;
    let mut price_at = None;
    for (k, e) in entries.iter().enumerate() {
        let z = zk(k);
        let from_consumer = st.utility(&xi(e.source), &ei(e.source), &z) - v[e.source];
        let from_producer = st.cost(&yj(e.target), &z) + w[e.target];
        let gap = (out.prices[k] - from_consumer).abs().max((out.prices[k] - from_producer).abs());
        if gap > worst_price {
            worst_price = gap;
            price_at = Some(k);
        }
    }
    let price_consistency = CheckResult::new(
        worst_price,
        tol,
        price_at.filter(|_| worst_price > tol).map(|k| format!("price of traded row {k} disagrees with the dual split")),
    );

    let clearing = out.matching.marginal_error(
        &Array1::from_elem(out.consumer_eps.nrows(), 1.0 / out.consumer_eps.nrows() as f64),
        &Array1::from_elem(out.producers.nrows(), 1.0 / out.producers.nrows() as f64),
    );
    let market_clearing = CheckResult::new(clearing, MARGINAL_TOL, None);

    // Deviations to every other traded quality at its posted price.
    let dev = |consumer: bool| -> (f64, Option<String>) {
        let gains: Vec<(f64, usize, usize)> = (0..entries.len())
            .into_par_iter()
            .map(|k| {
                let e = entries[k];
                let zk_own = zk(k);
                let own = if consumer {
                    st.utility(&xi(e.source), &ei(e.source), &zk_own) - out.prices[k]
                } else {
                    out.prices[k] - st.cost(&yj(e.target), &zk_own)
                };
                let mut best = (f64::NEG_INFINITY, k, k);
                for l in 0..entries.len() {
                    let z = zk(l);
                    let alt = if consumer {
                        st.utility(&xi(e.source), &ei(e.source), &z) - out.prices[l]
                    } else {
                        out.prices[l] - st.cost(&yj(e.target), &z)
                    };
                    if alt - own > best.0 {
                        best = (alt - own, k, l);
                    }
                }
                best
            })
            .collect();
        let worst = gains.iter().cloned().fold((f64::NEG_INFINITY, 0, 0), |a, b| if b.0 > a.0 { b } else { a });
        let who = if consumer { "consumer" } else { "producer" };
        let detail = (worst.0 > tol).then(|| {
            let e = entries[worst.1];
            let agent = if consumer { e.source } else { e.target };
            format!("{who} {agent} (traded row {}) gains {:.3e} by switching to traded row {}", worst.1, worst.0, worst.2)
        });
        (worst.0.max(0.0), detail)
    };
    let (cw, cd) = dev(true);
    let (pw, pd) = dev(false);
    let consumer_deviation = CheckResult::new(cw, tol, cd);
    let producer_deviation = CheckResult::new(pw, tol, pd);

    let pass = stability.pass
        && matched_equality.pass
        && price_consistency.pass
        && market_clearing.pass
        && consumer_deviation.pass
        && producer_deviation.pass;
    EquilibriumReport {
        tol,
        stability,
        matched_equality,
        price_consistency,
        market_clearing,
        consumer_deviation,
        producer_deviation,
        boundary_fraction: out.boundary_fraction,
        pass,
    }
}

/// Coincident traded qualities among matched pairs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AtomlessnessReport {
    pub pairs: usize,
    pub distinct_qualities: usize,
    /// Pairs sharing their traded quality with another pair.
    pub coincident_pairs: usize,
    /// Of those, pairs whose quality is shared with a different taste
    /// (grid quantization).
    pub with_distinct_eps: usize,
    /// Pairs sharing quality with an identical taste draw (atomic input).
    pub with_identical_eps: usize,
    pub note: String,
}

pub fn atomlessness_diagnostic(out: &EquilibriumOutcome) -> AtomlessnessReport {
    let entries = out.matching.entries();
    if entries.len() < 2 {
        return AtomlessnessReport { pairs: entries.len(), note: "fewer than two matched pairs".into(), ..Default::default() };
    }
    let key = |k: usize| out.traded_z.row(k).iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<u64>>();
    let mut groups: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
    for k in 0..entries.len() {
        groups.entry(key(k)).or_default().push(k);
    }
    let mut rep = AtomlessnessReport { pairs: entries.len(), distinct_qualities: groups.len(), ..Default::default() };
    for members in groups.values().filter(|g| g.len() > 1) {
        for &k in members {
            rep.coincident_pairs += 1;
            let ek = out.consumer_eps.row(entries[k].source);
            let mut identical = false;
            let mut distinct = false;
            for &l in members.iter().filter(|&&l| l != k) {
                if out.consumer_eps.row(entries[l].source) == ek {
                    identical = true;
                } else {
                    distinct = true;
                }
            }
            rep.with_identical_eps += identical as usize;
            rep.with_distinct_eps += distinct as usize;
        }
    }
    rep.note = if rep.with_identical_eps > 0 {
        "some coincidences come from identical taste draws".into()
    } else if rep.coincident_pairs > 0 {
        "coincidences reflect quality-grid quantization".into()
    } else {
        "no coincident traded qualities".into()
    };
    rep
}

/// Serializable form of an outcome; the surplus tables are rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub spec: MarketSpec,
    pub consumer_x: Array2<f64>,
    pub consumer_eps: Array2<f64>,
    pub producers: Array2<f64>,
    pub matching: Vec<PlanEntry>,
    pub traded_z: Array2<f64>,
    pub prices: Array1<f64>,
    pub indirect_v: Array1<f64>,
    pub indirect_w: Array1<f64>,
}

impl EquilibriumOutcome {
    pub fn to_record(&self) -> OutcomeRecord {
        OutcomeRecord {
            spec: self.spec.clone(),
            consumer_x: self.consumer_x.clone(),
            consumer_eps: self.consumer_eps.clone(),
            producers: self.producers.clone(),
            matching: self.matching.entries().to_vec(),
            traded_z: self.traded_z.clone(),
            prices: self.prices.clone(),
            indirect_v: self.indirect_v.clone(),
            indirect_w: self.indirect_w.clone(),
        }
    }

    /// Rebuilds an outcome from a record, recomputing the surplus tables.
    pub fn from_record(r: OutcomeRecord) -> Result<Self> {
        r.spec.validate()?;
        let (n, m) = (r.consumer_eps.nrows(), r.producers.nrows());
        let grid = r.spec.z_grid.points();
        let t = tables(&r.spec.structure, &r.consumer_x, &r.consumer_eps, &r.producers, &grid)?;
        if r.indirect_v.len() != n || r.indirect_w.len() != m {
            return Err(Error::Dimension { context: "indirect utilities", expected: n + m, got: r.indirect_v.len() + r.indirect_w.len() });
        }
        if r.traded_z.nrows() != r.matching.len() || r.prices.len() != r.matching.len() {
            return Err(Error::Dimension { context: "traded rows", expected: r.matching.len(), got: r.prices.len() });
        }
        let matching = TransportPlan::from_entries(n, m, r.matching, &t.surplus)?;
        let boundary = boundary_mask(&grid);
        let hits = matching.entries().iter().filter(|e| boundary[t.argmax[[e.source, e.target]]]).count();
        let x_rows = Array2::from_shape_fn((matching.entries().len(), r.consumer_x.ncols()), |(k, c)| {
            r.consumer_x[[matching.entries()[k].source, c]]
        });
        let dataset = MarketDataset::new(x_rows, r.traded_z.clone(), r.prices.clone())?;
        Ok(Self {
            boundary_fraction: hits as f64 / matching.entries().len().max(1) as f64,
            spec: r.spec,
            consumer_x: r.consumer_x,
            consumer_eps: r.consumer_eps,
            producers: r.producers,
            z_grid: grid,
            surplus: t.surplus,
            argmax: t.argmax,
            matching,
            traded_z: r.traded_z,
            prices: r.prices,
            indirect_v: r.indirect_v,
            indirect_w: r.indirect_w,
            dataset,
        })
    }

    /// Same outcome with posted prices replaced, e.g. by a dataset column.
    pub fn with_prices(&self, prices: Array1<f64>) -> Result<Self> {
        if prices.len() != self.prices.len() {
            return Err(Error::Dimension { context: "replacement prices", expected: self.prices.len(), got: prices.len() });
        }
        let mut out = self.clone();
        out.dataset = MarketDataset::new(self.dataset.x().clone(), self.traded_z.clone(), prices.clone())?;
        out.prices = prices;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Marginal;
    use crate::surplus::{Polynomial, ScalarFunction, SurplusFamily};

    /// Ubar = 0, zeta = z eps, C = z^2 / (2 y).
    fn tinbergen(n: usize, m: usize, per_axis: usize) -> MarketSpec {
        MarketSpec {
            structure: StructuralSpec {
                u_bar: ScalarFunction::Zero,
                cost: ScalarFunction::Polynomial { dw: 1, poly: Polynomial::new(2, vec![(0.5, vec![-1, 2])]).unwrap() },
                zeta: SurplusFamily::Bilinear,
            },
            consumer_x: None,
            consumer_eps: DistributionSpec::Product { marginals: vec![Marginal::Uniform { lo: 1.0, hi: 2.0 }] },
            producers: DistributionSpec::Product { marginals: vec![Marginal::Uniform { lo: 1.0, hi: 2.0 }] },
            n_consumers: n,
            n_producers: m,
            z_grid: GridSpec { lo: vec![0.0], hi: vec![6.0], per_axis },
            boundary_threshold: DEFAULT_BOUNDARY_THRESHOLD,
        }
    }

    #[test]
    fn joint_surplus_examples() {
        let st = tinbergen(1, 1, 2).structure;
        let eps = 0.8;
        let grid = closed_lattice(&[0.0], &[2.0 * eps], 1601);
        let js = joint_surplus(&st, &[], &[eps], &[1.0], &grid).unwrap();
        assert!((grid[[js.argmax, 0]] - eps).abs() < 1e-12);
        assert!((js.value - eps * eps / 2.0).abs() < 1e-12);
        assert!(js.interior);

        let single = closed_lattice(&[0.3], &[0.3], 1);
        let js = joint_surplus(&st, &[], &[eps], &[1.0], &single).unwrap();
        assert_eq!(js.argmax, 0);
        assert!(!js.interior);

        // Quadratic utility peaking midway between two grid points.
        let sym = StructuralSpec {
            u_bar: ScalarFunction::Quadratic { scale: -1.0, center_offset: vec![0.5], center_slope: None, q: vec![vec![1.0]], constant: 0.0 },
            cost: ScalarFunction::Zero,
            zeta: SurplusFamily::neg_quadratic(vec![vec![1.0]]).unwrap(),
        };
        let js = joint_surplus(&sym, &[], &[0.5], &[], &closed_lattice(&[0.0], &[1.0], 2)).unwrap();
        assert_eq!(js.argmax, 0);
    }

    #[test]
    fn tinbergen_market() {
        let out = simulate_market(&tinbergen(40, 40, 1201), 7).unwrap();
        for (k, e) in out.matching.entries().iter().enumerate() {
            let target = out.producers[[e.target, 0]] * out.consumer_eps[[e.source, 0]];
            assert!((out.traded_z[[k, 0]] - target).abs() <= 0.5 * 6.0 / 1200.0 + 1e-12);
        }
        let rep = verify_equilibrium(&out, 1e-7);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(out.indirect_w[0], 0.0);
    }

    #[test]
    fn single_pair_and_tampering() {
        let out = simulate_market(&tinbergen(1, 1, 301), 1).unwrap();
        assert_eq!(out.matching.entries().len(), 1);
        let rep = verify_equilibrium(&out, 1e-7);
        assert!(rep.pass);
        assert!(atomlessness_diagnostic(&out).pairs == 1);

        let out = simulate_market(&tinbergen(20, 20, 601), 3).unwrap();
        let mut p = out.prices.clone();
        p[4] += 0.1;
        let rep = verify_equilibrium(&out.with_prices(p).unwrap(), 1e-7);
        assert!(!rep.pass);
        assert!(!rep.consumer_deviation.pass);
        assert!(rep.consumer_deviation.detail.as_ref().unwrap().contains("traded row"));
    }

    #[test]
    fn duplicates_get_identical_terms() {
        let spec = tinbergen(4, 4, 601);
        let eps = Array2::from_elem((4, 1), 1.5);
        let y = Array2::from_elem((4, 1), 1.2);
        let out = equilibrium_from_types(&spec, Array2::zeros((4, 0)), eps, y).unwrap();
        for k in 1..out.prices.len() {
            assert_eq!(out.traded_z.row(k), out.traded_z.row(0));
            assert!((out.prices[k] - out.prices[0]).abs() < 1e-12);
        }
        let atom = atomlessness_diagnostic(&out);
        assert_eq!(atom.with_identical_eps, 4);
    }

    #[test]
    fn tiny_grid_aborts() {
        let mut spec = tinbergen(10, 10, 3);
        spec.z_grid = GridSpec { lo: vec![0.0], hi: vec![0.5], per_axis: 3 };
        assert!(matches!(simulate_market(&spec, 1), Err(Error::GridBoundary { .. })));
    }

    #[test]
    fn record_round_trip() {
        let out = simulate_market(&tinbergen(15, 10, 301), 5).unwrap();
        let json = serde_json::to_string(&out.to_record()).unwrap();
        let back = EquilibriumOutcome::from_record(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.surplus, out.surplus);
        assert!(verify_equilibrium(&back, 1e-7).pass);
    }
}
