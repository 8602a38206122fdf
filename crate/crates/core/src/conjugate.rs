//! Grid zeta-conjugation, Legendre-Fenchel transforms and zeta-convexity.
//!
//! All conjugates are exhaustive scans over a finite grid, so they truncate
//! the supremum over the whole space. Arg-maxima landing on the bounding
//! box of the scanned grid are reported as truncation warnings.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::closed_lattice;
use crate::surplus::SurplusFamily;

/// Function tabulated at grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub points: Array2<f64>,
    pub values: Array1<f64>,
}

impl GridFunction {
    pub fn new(points: Array2<f64>, values: Array1<f64>) -> Result<Self> {
        if points.nrows() != values.len() {
            return Err(Error::Dimension { context: "grid function values", expected: points.nrows(), got: values.len() });
        }
        if points.nrows() == 0 {
            return Err(Error::Empty("grid"));
        }
        if values.iter().chain(points.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function entry".into()));
        }
        Ok(Self { points, values })
    }

    /// Tabulates `f` on the given points.
    pub fn tabulate(points: Array2<f64>, f: impl Fn(ArrayView1<f64>) -> f64) -> Result<Self> {
        let values = points.rows().into_iter().map(&f).collect();
        Self::new(points, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A conjugate together with its arg-max bookkeeping.
#[derive(Debug, Clone)]
pub struct Conjugate {
    pub function: GridFunction,
    /// Index into the scanned grid attaining each maximum (lowest on ties).
    pub argmax: Vec<usize>,
    /// Output points whose arg-max lies on the scanned grid's bounding box.
    pub boundary_hits: Vec<usize>,
}

fn on_bounding_box(points: &Array2<f64>) -> Vec<bool> {
    let lo = points.fold_axis(Axis(0), f64::INFINITY, |a, b| a.min(*b));
    let hi = points.fold_axis(Axis(0), f64::NEG_INFINITY, |a, b| a.max(*b));
    points
        .rows()
        .into_iter()
        .map(|r| r.iter().enumerate().any(|(k, v)| *v == lo[k] || *v == hi[k]))
        .collect()
}

/// `out(p) = max_k [kernel(p, q_k) - g(q_k)]` for every output point `p`.
fn scan(
    g: &GridFunction,
    out_points: &Array2<f64>,
    kernel: impl Fn(&[f64], &[f64]) -> f64 + Sync,
) -> Result<Conjugate> {
    if out_points.nrows() == 0 {
        return Err(Error::Empty("conjugate output grid"));
    }
    let scanned: Vec<Vec<f64>> = g.points.rows().into_iter().map(|r| r.to_vec()).collect();
    let outs: Vec<Vec<f64>> = out_points.rows().into_iter().map(|r| r.to_vec()).collect();
    let res: Vec<(f64, usize)> = outs
        .par_iter()
        .map(|p| {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (k, q) in scanned.iter().enumerate() {
                let v = kernel(p, q) - g.values[k];
                if v > best {
                    best = v;
                    arg = k;
                }
            }
            (best, arg)
        })
        .collect();
    let boundary = on_bounding_box(&g.points);
    let argmax: Vec<usize> = res.iter().map(|r| r.1).collect();
    let boundary_hits = argmax.iter().enumerate().filter(|(_, a)| boundary[**a]).map(|(i, _)| i).collect();
    let function = GridFunction::new(out_points.clone(), res.iter().map(|r| r.0).collect())?;
    Ok(Conjugate { function, argmax, boundary_hits })
}

fn check(f: &SurplusFamily, x: ArrayView1<f64>, eps_dim: usize, z_dim: usize) -> Result<()> {
    f.validate()?;
    f.check_dims(x.len(), eps_dim, z_dim)
}

/// `V^zeta(eps) = max_z [zeta(x, eps, z) - V(z)]` over the grid of `v`.
pub fn zeta_conjugate(v: &GridFunction, f: &SurplusFamily, x: ArrayView1<f64>, eps_grid: &Array2<f64>) -> Result<Conjugate> {
    check(f, x, eps_grid.ncols(), v.points.ncols())?;
    let xs = x.to_vec();
    scan(v, eps_grid, |e, z| f.value(&xs, e, z))
}

/// Conjugate of a function of tastes back to qualities:
/// `W^zeta(z) = max_eps [zeta(x, eps, z) - W(eps)]`.
pub fn zeta_conjugate_of_taste(w: &GridFunction, f: &SurplusFamily, x: ArrayView1<f64>, z_grid: &Array2<f64>) -> Result<Conjugate> {
    check(f, x, w.points.ncols(), z_grid.ncols())?;
    let xs = x.to_vec();
    scan(w, z_grid, |z, e| f.value(&xs, e, z))
}

/// `V^{zeta zeta}` on the grid of `v`; never exceeds `v`.
pub fn double_conjugate(v: &GridFunction, f: &SurplusFamily, x: ArrayView1<f64>, eps_grid: &Array2<f64>) -> Result<Conjugate> {
    let first = zeta_conjugate(v, f, x, eps_grid)?;
    zeta_conjugate_of_taste(&first.function, f, x, &v.points)
}

/// Result of a zeta-convexity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexityCheck {
    pub is_convex: bool,
    pub max_deviation: f64,
    pub worst_point: usize,
}

/// `max |V^{zeta zeta} - V|` over all grid points, or over `subset`.
pub fn is_zeta_convex(
    v: &GridFunction,
    f: &SurplusFamily,
    x: ArrayView1<f64>,
    eps_grid: &Array2<f64>,
    tol: f64,
    subset: Option<&[usize]>,
) -> Result<ConvexityCheck> {
    let dd = double_conjugate(v, f, x, eps_grid)?;
    let idx: Vec<usize> = match subset {
        Some(s) => s.to_vec(),
        None => (0..v.len()).collect(),
    };
    let mut worst = 0.0;
    let mut worst_point = idx.first().copied().unwrap_or(0);
    for &k in &idx {
        let d = (dd.function.values[k] - v.values[k]).abs();
        if d > worst {
            worst = d;
            worst_point = k;
        }
    }
    Ok(ConvexityCheck { is_convex: worst <= tol, max_deviation: worst, worst_point })
}

/// Legendre-Fenchel transform `V*(eps) = max_z [z' eps - V(z)]`: the
/// bilinear zeta-conjugate.
pub fn legendre(v: &GridFunction, eps_grid: &Array2<f64>) -> Result<Conjugate> {
    let x = Array1::zeros(0);
    zeta_conjugate(v, &SurplusFamily::Bilinear, x.view(), eps_grid)
}

/// Regular lattice over the bounding box of `observed` padded by `pad`
/// (a fraction of the side length) on each side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaddedGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub pad: f64,
    pub per_axis: usize,
}

impl PaddedGrid {
    pub fn around(observed: &Array2<f64>, pad: f64, per_axis: usize) -> Result<Self> {
        if observed.nrows() == 0 {
            return Err(Error::Empty("observed points for grid"));
        }
        let lo0 = observed.fold_axis(Axis(0), f64::INFINITY, |a, b| a.min(*b));
        let hi0 = observed.fold_axis(Axis(0), f64::NEG_INFINITY, |a, b| a.max(*b));
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for k in 0..observed.ncols() {
            let side = (hi0[k] - lo0[k]).max(1e-6);
            lo.push(lo0[k] - pad * side);
            hi.push(hi0[k] + pad * side);
        }
        Ok(Self { lo, hi, pad, per_axis })
    }

    pub fn points(&self) -> Array2<f64> {
        closed_lattice(&self.lo, &self.hi, self.per_axis)
    }
}

/// Default lattice resolution per axis for taste grids.
pub const DEFAULT_GRID_PER_AXIS: usize = 50;
/// Default padding fraction per side.
pub const DEFAULT_GRID_PAD: f64 = 0.1;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::closed_lattice;
    use ndarray::array;

    fn x0() -> Array1<f64> {
        Array1::zeros(0)
    }

    #[test]
    fn conjugate_of_zero_on_two_points() {
        let v = GridFunction::new(array![[0.0], [1.0]], array![0.0, 0.0]).unwrap();
        let eps = array![[-2.0], [-0.5], [0.0], [0.7], [3.0]];
        let c = zeta_conjugate(&v, &SurplusFamily::Bilinear, x0().view(), &eps).unwrap();
        for (e, val) in eps.column(0).iter().zip(c.function.values.iter()) {
            assert_eq!(*val, e.max(0.0));
        }
        let l = legendre(&v, &eps).unwrap();
        assert_eq!(l.function, c.function);
    }

    #[test]
    fn conjugate_of_half_square() {
        let z = closed_lattice(&[-2.0], &[2.0], 401);
        let v = GridFunction::tabulate(z, |p| 0.5 * p[0] * p[0]).unwrap();
        let c = legendre(&v, &array![[1.0]]).unwrap();
        // grid contains z = 1 exactly
        assert!((c.function.values[0] - 0.5).abs() <= 1e-4);
    }

    #[test]
    fn single_point_degenerate_sup() {
        let nq = SurplusFamily::neg_quadratic(vec![vec![1.0]]).unwrap();
        let v = GridFunction::new(array![[0.4]], array![1.5]).unwrap();
        let eps = array![[-1.0], [2.0]];
        let c = zeta_conjugate(&v, &nq, x0().view(), &eps).unwrap();
        for (k, e) in eps.column(0).iter().enumerate() {
            assert_eq!(c.function.values[k], -0.5 * (0.4 - e) * (0.4 - e) - 1.5);
        }
        assert_eq!(c.boundary_hits, vec![0, 1]);
    }

    #[test]
    fn envelope_removes_bump() {
        let z = closed_lattice(&[-1.0], &[1.0], 21);
        let bump = GridFunction::tabulate(z.clone(), |p| p[0] * p[0] + if p[0].abs() < 1e-9 { 0.3 } else { 0.0 }).unwrap();
        let eps = closed_lattice(&[-4.0], &[4.0], 801);
        let dd = double_conjugate(&bump, &SurplusFamily::Bilinear, x0().view(), &eps).unwrap();
        let mid = 10;
        assert!(dd.function.values[mid] < bump.values[mid] - 0.2);
        for k in 0..z.nrows() {
            assert!(dd.function.values[k] <= bump.values[k] + 1e-12);
        }
        let chk = is_zeta_convex(&bump, &SurplusFamily::Bilinear, x0().view(), &eps, 1e-6, None).unwrap();
        assert!(!chk.is_convex);
        assert_eq!(chk.worst_point, mid);
    }

    #[test]
    fn zero_on_two_points_is_convex() {
        let v = GridFunction::new(array![[0.0], [1.0]], array![0.0, 0.0]).unwrap();
        let eps = closed_lattice(&[-1.0], &[1.0], 5);
        assert!(is_zeta_convex(&v, &SurplusFamily::Bilinear, x0().view(), &eps, 1e-12, None).unwrap().is_convex);
    }

    #[test]
    fn abs_value_conjugate() {
        let z = closed_lattice(&[-3.0], &[3.0], 61);
        let v = GridFunction::tabulate(z, |p| p[0].abs()).unwrap();
        let c = legendre(&v, &array![[0.5]]).unwrap();
        assert!(c.function.values[0].abs() <= 0.1);
    }

    #[test]
    fn affine_conjugate_at_matching_slope() {
        let a = [0.3, -0.7];
        let z = closed_lattice(&[-1.0, -1.0], &[1.0, 1.0], 11);
        let v = GridFunction::tabulate(z.clone(), |p| a[0] * p[0] + a[1] * p[1]).unwrap();
        let c = legendre(&v, &array![[a[0], a[1]]]).unwrap();
        // Direct scan oracle: z'a - a'z = 0 everywhere.
        let oracle = z.rows().into_iter().map(|p| a[0] * p[0] + a[1] * p[1] - (a[0] * p[0] + a[1] * p[1])).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(c.function.values[0], oracle);
        assert!(c.function.values[0].abs() < 1e-15);
    }

    #[test]
    fn padded_grid() {
        let g = PaddedGrid::around(&array![[0.0, 1.0], [1.0, 3.0]], 0.1, 3).unwrap();
        assert_eq!(g.lo, vec![-0.1, 0.8]);
        assert!((g.hi[1] - 3.2).abs() < 1e-12);
        assert_eq!(g.points().nrows(), 9);
    }
}
