//! Discrete Monge-Kantorovich problem: maximise expected surplus over
//! couplings of two discrete measures, with dual potentials.
//!
//! Conventions: the source measure sits on rows, the target on columns,
//! and dual pairs `(w, v)` satisfy `w_i + v_j >= S_ij` everywhere with
//! equality on the support of an optimal plan.

mod assignment;
mod entropic;
mod network_simplex;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{stream_rng, DiscreteMeasure};
use crate::surplus::SurplusFamily;

/// Marginal feasibility tolerance.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Dual feasibility tolerance on all pairs.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Complementary slackness tolerance on the support.
pub const SLACKNESS_TOL: f64 = 1e-7;
/// Absolute mass threshold below which entropic plan entries are dropped.
pub const ENTROPIC_SPARSITY: f64 = 1e-12;

/// One positive-mass cell of a coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Sparse coupling between a source and a target measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    n_source: usize,
    n_target: usize,
    entries: Vec<PlanEntry>,
    objective: f64,
}

impl TransportPlan {
    /// Builds a plan from entries (sorted by `(source, target)`) and computes
    /// its objective against `s`.
    pub fn from_entries(n_source: usize, n_target: usize, mut entries: Vec<PlanEntry>, s: &Array2<f64>) -> Result<Self> {
        if s.dim() != (n_source, n_target) {
            return Err(Error::Dimension { context: "plan surplus matrix", expected: n_source * n_target, got: s.len() });
        }
        for e in &entries {
            if e.source >= n_source || e.target >= n_target {
                return Err(Error::InvalidArgument(format!("plan entry ({}, {}) out of range", e.source, e.target)));
            }
            if !(e.mass >= 0.0) {
                return Err(Error::InvalidArgument(format!("plan mass {} is negative", e.mass)));
            }
        }
        entries.sort_by_key(|e| (e.source, e.target));
        let objective = entries.iter().map(|e| e.mass * s[[e.source, e.target]]).sum();
        Ok(Self { n_source, n_target, entries, objective })
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    /// Total surplus `sum mass * S`.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn row_sums(&self) -> Array1<f64> {
        let mut r = Array1::zeros(self.n_source);
        for e in &self.entries {
            r[e.source] += e.mass;
        }
        r
    }

    pub fn col_sums(&self) -> Array1<f64> {
        let mut c = Array1::zeros(self.n_target);
        for e in &self.entries {
            c[e.target] += e.mass;
        }
        c
    }

    pub fn dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.n_source, self.n_target));
        for e in &self.entries {
            d[[e.source, e.target]] += e.mass;
        }
        d
    }

    /// Largest absolute marginal violation against the given weights.
    pub fn marginal_error(&self, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        let r = (self.row_sums() - a).mapv(f64::abs).fold(0.0f64, |m, v| m.max(*v));
        let c = (self.col_sums() - b).mapv(f64::abs).fold(0.0f64, |m, v| m.max(*v));
        r.max(c)
    }

    /// Coupling with source and target exchanged.
    pub fn transpose(&self, s_t: &Array2<f64>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| PlanEntry { source: e.target, target: e.source, mass: e.mass })
            .collect();
        Self::from_entries(self.n_target, self.n_source, entries, s_t)
    }

    /// True when every source is coupled to a single target and vice versa.
    pub fn is_pure(&self) -> bool {
        let mut rows = vec![0usize; self.n_source];
        let mut cols = vec![0usize; self.n_target];
        for e in &self.entries {
            rows[e.source] += 1;
            cols[e.target] += 1;
        }
        rows.iter().chain(&cols).all(|&c| c <= 1)
    }
}

/// Dual potentials: `w_source` on source points, `v_target` on target points.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    pub w_source: Array1<f64>,
    pub v_target: Array1<f64>,
    /// Target index where `v_target` is pinned to zero.
    pub normalization: usize,
}

impl DualPair {
    fn pinned(mut w: Array1<f64>, mut v: Array1<f64>, pin: usize) -> Self {
        let c = v[pin];
        v.mapv_inplace(|x| x - c);
        w.mapv_inplace(|x| x + c);
        v[pin] = 0.0;
        Self { w_source: w, v_target: v, normalization: pin }
    }

    pub fn objective(&self, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        a.dot(&self.w_source) + b.dot(&self.v_target)
    }

    /// Largest `S_ij - w_i - v_j` over all pairs (non-positive when feasible).
    pub fn max_violation(&self, s: &Array2<f64>) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for ((i, j), sij) in s.indexed_iter() {
            worst = worst.max(sij - self.w_source[i] - self.v_target[j]);
        }
        worst
    }

    /// Largest `|w_i + v_j - S_ij|` over the plan support.
    pub fn max_slackness_gap(&self, plan: &TransportPlan, s: &Array2<f64>) -> f64 {
        plan.entries()
            .iter()
            .map(|e| (self.w_source[e.source] + self.v_target[e.target] - s[[e.source, e.target]]).abs())
            .fold(0.0, f64::max)
    }
}

/// Summary of optimality certificates for a solved problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub primal: f64,
    pub dual: f64,
    pub duality_gap: f64,
    pub max_dual_violation: f64,
    pub max_slackness_gap: f64,
    pub marginal_error: f64,
}

pub fn optimality_report(
    plan: &TransportPlan,
    duals: &DualPair,
    a: &Array1<f64>,
    b: &Array1<f64>,
    s: &Array2<f64>,
) -> OptimalityReport {
    let primal = plan.objective();
    let dual = duals.objective(a, b);
    OptimalityReport {
        primal,
        dual,
        duality_gap: (primal - dual).abs(),
        max_dual_violation: duals.max_violation(s).max(0.0),
        max_slackness_gap: duals.max_slackness_gap(plan, s),
        marginal_error: plan.marginal_error(a, b),
    }
}

/// Surplus matrix `S_ij = zeta(x, eps_i, z_j)`.
pub fn surplus_matrix(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    f: &SurplusFamily,
    x: ArrayView1<f64>,
) -> Result<Array2<f64>> {
    f.validate()?;
    f.check_dims(x.len(), mu.dim(), nu.dim())?;
    let xs = x.to_vec();
    let targets: Vec<Vec<f64>> = nu.points().rows().into_iter().map(|r| r.to_vec()).collect();
    let mut s = Array2::zeros((mu.len(), nu.len()));
    for (i, mut row) in s.rows_mut().into_iter().enumerate() {
        let e = mu.point(i).to_vec();
        for (j, z) in targets.iter().enumerate() {
            row[j] = f.value(&xs, &e, z);
        }
    }
    if let Some(((i, j), v)) = s.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!("surplus {v} at pair ({i}, {j})")));
    }
    Ok(s)
}

fn check_problem(a: &Array1<f64>, b: &Array1<f64>, s: &Array2<f64>) -> Result<()> {
    if s.dim() != (a.len(), b.len()) {
        return Err(Error::Dimension { context: "surplus matrix", expected: a.len() * b.len(), got: s.len() });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("transport marginals"));
    }
    for w in [a, b] {
        if w.iter().any(|v| !(*v >= 0.0)) || (w.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::Weights("transport marginals must be probability vectors".into()));
        }
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("surplus matrix".into()));
    }
    Ok(())
}

fn is_uniform(w: &Array1<f64>) -> bool {
    let t = 1.0 / w.len() as f64;
    w.iter().all(|v| (v - t).abs() <= 1e-15)
}

/// Exact solve on raw weights, pinning `v_target[pin] = 0`.
///
/// Square problems with uniform weights go to the assignment routine; all
/// other shapes to the network simplex.
pub fn solve_exact_weights(
    a: &Array1<f64>,
    b: &Array1<f64>,
    s: &Array2<f64>,
    pin: usize,
) -> Result<(TransportPlan, DualPair)> {
    check_problem(a, b, s)?;
    if pin >= b.len() {
        return Err(Error::InvalidArgument(format!("pin index {pin} out of range")));
    }
    let (n, m) = s.dim();
    if n == m && is_uniform(a) && is_uniform(b) {
        let cost = s.mapv(|v| -v);
        let (col_of_row, u, v) = assignment::hungarian(&cost);
        let mass = 1.0 / n as f64;
        let entries = col_of_row
            .iter()
            .enumerate()
            .map(|(i, &j)| PlanEntry { source: i, target: j, mass })
            .collect();
        let plan = TransportPlan::from_entries(n, m, entries, s)?;
        let w = Array1::from_iter(u.iter().map(|x| -x));
        let v = Array1::from_iter(v.iter().map(|x| -x));
        return Ok((plan, DualPair::pinned(w, v, pin)));
    }
    let sol = network_simplex::solve(a.as_slice().expect("contiguous"), b.as_slice().expect("contiguous"), s)?;
    let entries = sol
        .flows
        .into_iter()
        .map(|(source, target, mass)| PlanEntry { source, target, mass })
        .collect();
    let plan = TransportPlan::from_entries(n, m, entries, s)?;
    Ok((plan, DualPair::pinned(Array1::from(sol.w), Array1::from(sol.v), pin)))
}

/// Optimal coupling and dual potentials; `v` is pinned at the target point
/// that is lexicographically smallest.
pub fn solve_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure, s: &Array2<f64>) -> Result<(TransportPlan, DualPair)> {
    solve_exact_weights(mu.weights(), nu.weights(), s, nu.lexicographic_min())
}

/// Options for the entropic solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EntropicOptions {
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EntropicOptions {
    fn default() -> Self {
        Self { epsilon: 1e-2, tol: 1e-9, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct EntropicSolution {
    pub plan: TransportPlan,
    pub duals: DualPair,
    /// Iterations spent at the target epsilon.
    pub iterations: usize,
    /// Iterations over the whole epsilon schedule.
    pub total_iterations: usize,
    pub converged: bool,
    /// Row-marginal violation in L1 at exit.
    pub marginal_error: f64,
}

/// Entropy-regularised optimum via log-domain scaling. Hitting `max_iter`
/// is reported through `converged = false`.
pub fn solve_entropic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    s: &Array2<f64>,
    opts: EntropicOptions,
) -> Result<EntropicSolution> {
    let (a, b) = (mu.weights(), nu.weights());
    check_problem(a, b, s)?;
    if !(opts.epsilon > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("epsilon and tol must be positive".into()));
    }
    let st = entropic::sinkhorn(a.as_slice().unwrap(), b.as_slice().unwrap(), s, opts.epsilon, opts.tol, opts.max_iter);
    let (n, m) = s.dim();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let mass = entropic::plan_entry(a[i].ln(), b[j].ln(), s[[i, j]], st.w[i], st.v[j], opts.epsilon);
            if mass >= ENTROPIC_SPARSITY {
                entries.push(PlanEntry { source: i, target: j, mass });
            }
        }
    }
    let plan = TransportPlan::from_entries(n, m, entries, s)?;
    let duals = DualPair::pinned(Array1::from(st.w), Array1::from(st.v), nu.lexicographic_min());
    Ok(EntropicSolution {
        plan,
        duals,
        iterations: st.iterations,
        total_iterations: st.total_iterations,
        converged: st.converged,
        marginal_error: st.marginal_error,
    })
}

/// Conditional mean of the source point given each target.
#[derive(Debug, Clone)]
pub struct BarycentricMap {
    /// One row per target; NaN rows for targets without mass.
    pub points: Array2<f64>,
    /// Targets with zero column mass.
    pub zero_mass: Vec<usize>,
    /// Targets whose column mass is split across several sources.
    pub split: Vec<usize>,
}

pub fn barycentric_projection(plan: &TransportPlan, source_points: &Array2<f64>) -> Result<BarycentricMap> {
    if source_points.nrows() != plan.n_source() {
        return Err(Error::Dimension { context: "barycentric source points", expected: plan.n_source(), got: source_points.nrows() });
    }
    let d = source_points.ncols();
    let mut acc = Array2::<f64>::zeros((plan.n_target(), d));
    let mut mass = vec![0.0; plan.n_target()];
    let mut count = vec![0usize; plan.n_target()];
    for e in plan.entries() {
        let mut row = acc.row_mut(e.target);
        row.scaled_add(e.mass, &source_points.row(e.source));
        mass[e.target] += e.mass;
        count[e.target] += 1;
    }
    let mut zero_mass = Vec::new();
    let mut split = Vec::new();
    for j in 0..plan.n_target() {
        if mass[j] > 0.0 {
            if count[j] == 1 {
                // Pure column: pass the matched point through untouched.
                let e = plan.entries().iter().find(|e| e.target == j).expect("entry");
                acc.row_mut(j).assign(&source_points.row(e.source));
            } else {
                acc.row_mut(j).mapv_inplace(|v| v / mass[j]);
                split.push(j);
            }
        } else {
            acc.row_mut(j).fill(f64::NAN);
            zero_mass.push(j);
        }
    }
    Ok(BarycentricMap { points: acc, zero_mass, split })
}

/// Outcome of a sampled cycle test on the support of a plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CyclicalReport {
    pub applicable: bool,
    pub cycle_length: usize,
    pub trials: usize,
    pub violations: usize,
    /// Smallest `sum S(i_l, j_l) - sum S(i_l, j_{l+1})` observed.
    pub worst_margin: f64,
    /// Support pairs `(source, target)` of the worst violating cycle.
    pub violating_cycle: Option<Vec<(usize, usize)>>,
}

/// Cycles whose margin is below `-CYCLE_TOL` count as violations.
pub const CYCLE_TOL: f64 = 1e-9;

fn cycle_margin(s: &Array2<f64>, cycle: &[(usize, usize)]) -> f64 {
    let k = cycle.len();
    (0..k)
        .map(|l| s[[cycle[l].0, cycle[l].1]] - s[[cycle[l].0, cycle[(l + 1) % k].1]])
        .sum()
}

/// Samples random `k`-cycles of support pairs and checks that reassigning
/// targets along the cyclic shift never increases total surplus.
pub fn check_cyclical_monotonicity(plan: &TransportPlan, s: &Array2<f64>, k: usize, trials: usize, seed: u64) -> Result<CyclicalReport> {
    if k < 2 {
        return Err(Error::InvalidArgument("cycle length must be at least 2".into()));
    }
    let support = plan.entries();
    let mut report = CyclicalReport {
        applicable: support.len() >= k,
        cycle_length: k,
        trials: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        violating_cycle: None,
    };
    if !report.applicable {
        return Ok(report);
    }
    let mut rng = stream_rng(seed, 0);
    for _ in 0..trials {
        let cycle: Vec<(usize, usize)> =
            sample(&mut rng, support.len(), k).into_iter().map(|p| (support[p].source, support[p].target)).collect();
        record_cycle(&mut report, s, cycle);
    }
    Ok(report)
}

/// Exhaustive 2-cycle test over every pair of support entries.
pub fn check_two_monotonicity(plan: &TransportPlan, s: &Array2<f64>) -> CyclicalReport {
    let support = plan.entries();
    let mut report = CyclicalReport {
        applicable: support.len() >= 2,
        cycle_length: 2,
        trials: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        violating_cycle: None,
    };
    for a in 0..support.len() {
        for b in a + 1..support.len() {
            let cycle = vec![(support[a].source, support[a].target), (support[b].source, support[b].target)];
            record_cycle(&mut report, s, cycle);
        }
    }
    report
}

fn record_cycle(report: &mut CyclicalReport, s: &Array2<f64>, cycle: Vec<(usize, usize)>) {
    report.trials += 1;
    let margin = cycle_margin(s, &cycle);
    if margin < -CYCLE_TOL {
        report.violations += 1;
    }
    if margin < report.worst_margin {
        report.worst_margin = margin;
        if margin < -CYCLE_TOL {
            report.violating_cycle = Some(cycle);
        }
    }
}

/// Pairs of support entries violating `(eps_i - eps_k)'(z_j - z_l) >= -tol`,
/// the monotone-graph property of optimal plans under bilinear surplus.
pub fn monotonicity_violations(plan: &TransportPlan, source: &Array2<f64>, target: &Array2<f64>, tol: f64) -> usize {
    let support = plan.entries();
    let mut count = 0;
    for a in 0..support.len() {
        for b in a + 1..support.len() {
            let (ea, za) = (source.row(support[a].source), target.row(support[a].target));
            let (eb, zb) = (source.row(support[b].source), target.row(support[b].target));
            let dot: f64 = (&ea - &eb).dot(&(&za - &zb));
            if dot < -tol {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(vals: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::uniform(Array2::from_shape_vec((vals.len(), 1), vals.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn surplus_matrix_examples() {
        let x = Array1::zeros(0);
        let m = line(&[0.0, 1.0]);
        let s = surplus_matrix(&m, &m, &SurplusFamily::Bilinear, x.view()).unwrap();
        assert_eq!(s, array![[0.0, 0.0], [0.0, 1.0]]);
        let one = line(&[2.0]);
        assert_eq!(surplus_matrix(&one, &one, &SurplusFamily::Bilinear, x.view()).unwrap().dim(), (1, 1));
        let nq = SurplusFamily::neg_quadratic(vec![vec![1.0]]).unwrap();
        let g = line(&[-1.0, 0.5, 3.0]);
        let s = surplus_matrix(&g, &g, &nq, x.view()).unwrap();
        assert!(s.diag().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_by_two_identity() {
        let x = Array1::zeros(0);
        let m = line(&[0.0, 1.0]);
        let s = surplus_matrix(&m, &m, &SurplusFamily::Bilinear, x.view()).unwrap();
        let (plan, duals) = solve_exact(&m, &m, &s).unwrap();
        // Enumerated: identity 0.5 beats anti-matching 0.
        assert_eq!(plan.objective(), 0.5);
        assert_eq!(plan.dense(), array![[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!(duals.v_target[0], 0.0);
    }

    #[test]
    fn point_mass_target_forces_plan() {
        let mu = DiscreteMeasure::from_samples(array![[0.0], [1.0], [2.0]], Some(array![0.2, 0.3, 0.5])).unwrap();
        let nu = line(&[1.5]);
        let s = array![[1.0], [-2.0], [4.0]];
        let (plan, duals) = solve_exact(&mu, &nu, &s).unwrap();
        let expected = 0.2 * 1.0 + 0.3 * -2.0 + 0.5 * 4.0;
        assert!((plan.objective() - expected).abs() < 1e-12);
        assert_eq!(plan.col_sums()[0], 1.0);
        let rep = optimality_report(&plan, &duals, mu.weights(), nu.weights(), &s);
        assert!(rep.duality_gap < 1e-12);
    }

    #[test]
    fn network_simplex_small_mixed() {
        let a = array![0.5, 0.3, 0.2];
        let b = array![0.25, 0.25, 0.5];
        let s = array![[1.0, 0.0, 2.0], [0.5, 3.0, 0.1], [2.0, 1.0, 0.0]];
        let (plan, duals) = solve_exact_weights(&a, &b, &s, 0).unwrap();
        let rep = optimality_report(&plan, &duals, &a, &b, &s);
        assert!(rep.marginal_error < 1e-12);
        assert!(rep.duality_gap < 1e-12, "{rep:?}");
        assert!(rep.max_dual_violation < 1e-12);
        assert!(rep.max_slackness_gap < 1e-12);
        // brute-force LP vertex: row 0 -> col 2 (0.5), row 1 -> col 1 (0.25) + col 0 (0.05), row 2 -> col 0 (0.2)
        assert!((plan.objective() - (0.5 * 2.0 + 0.25 * 3.0 + 0.05 * 0.5 + 0.2 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn entropic_large_epsilon_is_product() {
        let m = line(&[0.0, 1.0]);
        let s = array![[0.0, 0.0], [0.0, 1.0]];
        let sol = solve_entropic(&m, &m, &s, EntropicOptions { epsilon: 1e4, tol: 1e-12, max_iter: 1000 }).unwrap();
        assert!(sol.converged);
        let d = sol.plan.dense();
        assert!(d.iter().all(|v| (v - 0.25).abs() < 1e-3));
    }

    #[test]
    fn entropic_small_epsilon_matches_exact() {
        let m = line(&[0.0, 1.0]);
        let s = array![[0.0, 0.0], [0.0, 1.0]];
        let (exact, _) = solve_exact(&m, &m, &s).unwrap();
        let sol = solve_entropic(&m, &m, &s, EntropicOptions { epsilon: 1e-3, tol: 1e-10, max_iter: 10_000 }).unwrap();
        let dev = (sol.plan.dense() - exact.dense()).mapv(f64::abs).fold(0.0f64, |a, b| a.max(*b));
        assert!(dev <= 1e-2);
        assert!(sol.plan.objective() <= exact.objective() + 1e-9);
        assert!(sol.plan.objective() >= exact.objective() - 1e-3 * 4f64.ln());
    }

    #[test]
    fn entropic_point_masses_one_iteration() {
        let m = line(&[0.3]);
        let s = array![[2.0]];
        let sol = solve_entropic(&m, &m, &s, EntropicOptions { epsilon: 1e-2, tol: 1e-12, max_iter: 50 }).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.converged);
    }

    #[test]
    fn entropic_reports_non_convergence() {
        let m = line(&[0.0, 1.0, 2.0]);
        let s = array![[0.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 2.0, 4.0]];
        let sol = solve_entropic(&m, &m, &s, EntropicOptions { epsilon: 1e-3, tol: 1e-15, max_iter: 1 }).unwrap();
        assert!(!sol.converged);
    }

    #[test]
    fn barycentric_examples() {
        let s = Array2::zeros((2, 2));
        let src = array![[0.0], [2.0]];
        let perm = TransportPlan::from_entries(
            2,
            2,
            vec![PlanEntry { source: 0, target: 1, mass: 0.5 }, PlanEntry { source: 1, target: 0, mass: 0.5 }],
            &s,
        )
        .unwrap();
        let b = barycentric_projection(&perm, &src).unwrap();
        assert_eq!(b.points, array![[2.0], [0.0]]);
        let split = TransportPlan::from_entries(
            2,
            2,
            vec![PlanEntry { source: 0, target: 0, mass: 0.5 }, PlanEntry { source: 1, target: 0, mass: 0.5 }],
            &s,
        )
        .unwrap();
        let b = barycentric_projection(&split, &src).unwrap();
        assert_eq!(b.points[[0, 0]], 1.0);
        assert_eq!(b.zero_mass, vec![1]);
        assert!(b.points[[1, 0]].is_nan());
    }

    #[test]
    fn swapped_pair_detected() {
        let (e0, e1, z0, z1) = (0.0, 1.0, 0.5, 2.0);
        let s = array![[e0 * z0, e0 * z1], [e1 * z0, e1 * z1]];
        let swapped = TransportPlan::from_entries(
            2,
            2,
            vec![PlanEntry { source: 0, target: 1, mass: 0.5 }, PlanEntry { source: 1, target: 0, mass: 0.5 }],
            &s,
        )
        .unwrap();
        let r = check_cyclical_monotonicity(&swapped, &s, 2, 10, 1).unwrap();
        assert_eq!(r.violations, 10);
        // hand-computed margin of the 2-cycle
        assert!((r.worst_margin + (e1 - e0) * (z1 - z0)).abs() < 1e-12);
        assert!(r.violating_cycle.is_some());
    }

    #[test]
    fn single_pair_not_applicable() {
        let s = array![[1.0]];
        let p = TransportPlan::from_entries(1, 1, vec![PlanEntry { source: 0, target: 0, mass: 1.0 }], &s).unwrap();
        let r = check_cyclical_monotonicity(&p, &s, 2, 100, 0).unwrap();
        assert!(!r.applicable);
        assert_eq!(r.trials, 0);
        assert!(check_cyclical_monotonicity(&p, &s, 1, 1, 0).is_err());
    }
}
