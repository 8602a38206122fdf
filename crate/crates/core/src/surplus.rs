//! Taste surplus `zeta(x, eps, z)`, base utility `Ubar(x, z)` and cost
//! `C(y, z)` as closed parametric families with analytic derivatives.
//!
//! Cross second derivatives are returned as the Jacobian of `grad_z zeta`
//! with respect to `eps`: entry `(i, j)` is `d^2 zeta / dz_i deps_j`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One monomial `coef * prod v_k^exps[k]`. Negative exponents are allowed
/// (the variable must then stay away from zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exps: Vec<i32>,
}

/// Sparse (Laurent) polynomial in `nvars` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub nvars: usize,
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn new(nvars: usize, terms: Vec<(f64, Vec<i32>)>) -> Result<Self> {
        let p = Self { nvars, terms: terms.into_iter().map(|(coef, exps)| Term { coef, exps }).collect() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.exps.len() != self.nvars {
                return Err(Error::Dimension { context: "monomial exponents", expected: self.nvars, got: t.exps.len() });
            }
            if !t.coef.is_finite() {
                return Err(Error::NonFinite("polynomial coefficient".into()));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> i32 {
        self.terms.iter().map(|t| t.exps.iter().map(|e| e.abs()).sum()).max().unwrap_or(0)
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.exps.iter().zip(v).map(|(e, x)| x.powi(*e)).product::<f64>())
            .sum()
    }

    /// Partial derivative in variable `k`.
    pub fn partial(&self, v: &[f64], k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.exps[k] != 0)
            .map(|t| {
                let mut prod = t.coef * t.exps[k] as f64;
                for (idx, (e, x)) in t.exps.iter().zip(v).enumerate() {
                    let e = if idx == k { e - 1 } else { *e };
                    prod *= x.powi(e);
                }
                prod
            })
            .sum()
    }

    /// Mixed second partial derivative in variables `a` and `b`.
    pub fn second_partial(&self, v: &[f64], a: usize, b: usize) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut exps = t.exps.clone();
                let mut c = t.coef * exps[a] as f64;
                exps[a] -= 1;
                c *= exps[b] as f64;
                exps[b] -= 1;
                if c == 0.0 {
                    return 0.0;
                }
                c * exps.iter().zip(v).map(|(e, x)| x.powi(*e)).product::<f64>()
            })
            .sum()
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], context: &'static str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty(context));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument(format!("{context}: ragged rows")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn check_spd(q: &[Vec<f64>], context: &'static str) -> Result<()> {
    let m = matrix_from_rows(q, context)?;
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!("{context} must be square")));
    }
    if (&m - m.transpose()).abs().max() > 1e-12 {
        return Err(Error::InvalidArgument(format!("{context} must be symmetric")));
    }
    let min_eig = m.symmetric_eigen().eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(Error::InvalidArgument(format!("{context} not positive definite (min eigenvalue {min_eig})")));
    }
    Ok(())
}

/// Known functional form of the taste surplus `zeta(x, eps, z)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurplusFamily {
    /// `zeta = z' eps`.
    #[default]
    Bilinear,
    /// `zeta = sum_k phi_k(z) psi_k(x, eps)`; `phi_k` are polynomials in `z`
    /// and `psi_k` polynomials in the concatenation `(x, eps)`.
    BilinearFeature {
        dx: usize,
        dz: usize,
        phi: Vec<Polynomial>,
        psi: Vec<Polynomial>,
    },
    /// `zeta = -1/2 (z - eps)' Q (z - eps)` with `Q` symmetric positive definite.
    NegQuadratic { q: Vec<Vec<f64>> },
    /// Polynomial in the concatenation `(x, eps, z)`.
    Polynomial { dx: usize, dz: usize, poly: Polynomial },
}

impl SurplusFamily {
    pub fn neg_quadratic(q: Vec<Vec<f64>>) -> Result<Self> {
        let f = Self::NegQuadratic { q };
        f.validate()?;
        Ok(f)
    }

    pub fn polynomial(dx: usize, dz: usize, terms: Vec<(f64, Vec<i32>)>) -> Result<Self> {
        let f = Self::Polynomial { dx, dz, poly: Polynomial::new(dx + 2 * dz, terms)? };
        f.validate()?;
        Ok(f)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bilinear => "bilinear",
            Self::BilinearFeature { .. } => "bilinear_feature",
            Self::NegQuadratic { .. } => "neg_quadratic",
            Self::Polynomial { .. } => "polynomial",
        }
    }

    /// Checks the family's structural invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Bilinear => Ok(()),
            Self::NegQuadratic { q } => check_spd(q, "neg_quadratic Q"),
            Self::Polynomial { dx, dz, poly } => {
                poly.validate()?;
                if poly.nvars != dx + 2 * dz {
                    return Err(Error::Dimension { context: "polynomial surplus variables", expected: dx + 2 * dz, got: poly.nvars });
                }
                Ok(())
            }
            Self::BilinearFeature { dx, dz, phi, psi } => {
                if phi.len() != psi.len() {
                    return Err(Error::Dimension { context: "feature maps phi/psi", expected: phi.len(), got: psi.len() });
                }
                for p in phi {
                    p.validate()?;
                    if p.nvars != *dz {
                        return Err(Error::Dimension { context: "phi variables", expected: *dz, got: p.nvars });
                    }
                }
                for p in psi {
                    p.validate()?;
                    if p.nvars != dx + dz {
                        return Err(Error::Dimension { context: "psi variables", expected: dx + dz, got: p.nvars });
                    }
                }
                Ok(())
            }
        }
    }

    /// Quality dimension fixed by the family, if any.
    pub fn fixed_dz(&self) -> Option<usize> {
        match self {
            Self::Bilinear => None,
            Self::NegQuadratic { q } => Some(q.len()),
            Self::Polynomial { dz, .. } | Self::BilinearFeature { dz, .. } => Some(*dz),
        }
    }

    /// Observable-type dimension fixed by the family, if any.
    pub fn fixed_dx(&self) -> Option<usize> {
        match self {
            Self::Polynomial { dx, .. } | Self::BilinearFeature { dx, .. } => Some(*dx),
            _ => None,
        }
    }

    /// Validates argument dimensions.
    pub fn check_dims(&self, dx: usize, deps: usize, dz: usize) -> Result<()> {
        if deps != dz {
            return Err(Error::Dimension { context: "taste vs quality dimension", expected: dz, got: deps });
        }
        if let Some(d) = self.fixed_dz() {
            if d != dz {
                return Err(Error::Dimension { context: "quality dimension", expected: d, got: dz });
            }
        }
        if let Some(d) = self.fixed_dx() {
            if d != dx {
                return Err(Error::Dimension { context: "observable type dimension", expected: d, got: dx });
            }
        }
        Ok(())
    }

    fn vars(x: &[f64], eps: &[f64], z: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(x.len() + eps.len() + z.len());
        v.extend_from_slice(x);
        v.extend_from_slice(eps);
        v.extend_from_slice(z);
        v
    }

    /// Unchecked evaluation; callers must have validated dimensions.
    pub fn value(&self, x: &[f64], eps: &[f64], z: &[f64]) -> f64 {
        match self {
            Self::Bilinear => z.iter().zip(eps).map(|(a, b)| a * b).sum(),
            Self::NegQuadratic { q } => {
                let d: Vec<f64> = z.iter().zip(eps).map(|(a, b)| a - b).collect();
                let mut s = 0.0;
                for (i, row) in q.iter().enumerate() {
                    for (j, qij) in row.iter().enumerate() {
                        s += d[i] * qij * d[j];
                    }
                }
                -0.5 * s
            }
            Self::Polynomial { poly, .. } => poly.value(&Self::vars(x, eps, z)),
            Self::BilinearFeature { phi, psi, .. } => {
                let xe = Self::vars(x, eps, &[]);
                phi.iter().zip(psi).map(|(f, g)| f.value(z) * g.value(&xe)).sum()
            }
        }
    }

    /// Unchecked gradient in `z`.
    pub fn grad_z_raw(&self, x: &[f64], eps: &[f64], z: &[f64]) -> Vec<f64> {
        let d = z.len();
        match self {
            Self::Bilinear => eps.to_vec(),
            Self::NegQuadratic { q } => {
                // Q (eps - z)
                (0..d).map(|i| (0..d).map(|j| q[i][j] * (eps[j] - z[j])).sum()).collect()
            }
            Self::Polynomial { dx, dz, poly } => {
                let v = Self::vars(x, eps, z);
                (0..d).map(|k| poly.partial(&v, dx + dz + k)).collect()
            }
            Self::BilinearFeature { phi, psi, .. } => {
                let xe = Self::vars(x, eps, &[]);
                let weights: Vec<f64> = psi.iter().map(|g| g.value(&xe)).collect();
                (0..d).map(|k| phi.iter().zip(&weights).map(|(f, w)| f.partial(z, k) * w).sum()).collect()
            }
        }
    }

    /// Unchecked gradient in `eps`.
    pub fn grad_eps_raw(&self, x: &[f64], eps: &[f64], z: &[f64]) -> Vec<f64> {
        let d = eps.len();
        match self {
            Self::Bilinear => z.to_vec(),
            Self::NegQuadratic { q } => (0..d).map(|i| (0..d).map(|j| q[i][j] * (z[j] - eps[j])).sum()).collect(),
            Self::Polynomial { dx, poly, .. } => {
                let v = Self::vars(x, eps, z);
                (0..d).map(|k| poly.partial(&v, dx + k)).collect()
            }
            Self::BilinearFeature { dx, phi, psi, .. } => {
                let xe = Self::vars(x, eps, &[]);
                let feats: Vec<f64> = phi.iter().map(|f| f.value(z)).collect();
                (0..d).map(|k| psi.iter().zip(&feats).map(|(g, f)| g.partial(&xe, dx + k) * f).sum()).collect()
            }
        }
    }

    /// Unchecked cross Hessian, `(i, j) = d^2 zeta / dz_i deps_j`.
    pub fn cross_hessian_raw(&self, x: &[f64], eps: &[f64], z: &[f64]) -> Array2<f64> {
        let d = z.len();
        match self {
            Self::Bilinear => Array2::eye(d),
            Self::NegQuadratic { q } => Array2::from_shape_fn((d, d), |(i, j)| q[i][j]),
            Self::Polynomial { dx, dz, poly } => {
                let v = Self::vars(x, eps, z);
                Array2::from_shape_fn((d, d), |(i, j)| poly.second_partial(&v, dx + dz + i, dx + j))
            }
            Self::BilinearFeature { dx, phi, psi, .. } => {
                let xe = Self::vars(x, eps, &[]);
                Array2::from_shape_fn((d, d), |(i, j)| {
                    phi.iter().zip(psi).map(|(f, g)| f.partial(z, i) * g.partial(&xe, dx + j)).sum()
                })
            }
        }
    }

    pub fn eval(&self, x: ArrayView1<f64>, eps: ArrayView1<f64>, z: ArrayView1<f64>) -> Result<f64> {
        self.check_dims(x.len(), eps.len(), z.len())?;
        let v = self.value(&x.to_vec(), &eps.to_vec(), &z.to_vec());
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{} surplus at eps {eps}, z {z}", self.name())));
        }
        Ok(v)
    }

    pub fn grad_z(&self, x: ArrayView1<f64>, eps: ArrayView1<f64>, z: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_dims(x.len(), eps.len(), z.len())?;
        Ok(Array1::from(self.grad_z_raw(&x.to_vec(), &eps.to_vec(), &z.to_vec())))
    }

    pub fn grad_eps(&self, x: ArrayView1<f64>, eps: ArrayView1<f64>, z: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_dims(x.len(), eps.len(), z.len())?;
        Ok(Array1::from(self.grad_eps_raw(&x.to_vec(), &eps.to_vec(), &z.to_vec())))
    }

    pub fn cross_hessian(&self, x: ArrayView1<f64>, eps: ArrayView1<f64>, z: ArrayView1<f64>) -> Result<Array2<f64>> {
        self.check_dims(x.len(), eps.len(), z.len())?;
        Ok(self.cross_hessian_raw(&x.to_vec(), &eps.to_vec(), &z.to_vec()))
    }
}

/// Deterministic utility or cost component: a function of an agent
/// characteristic `w` (observable type `x`, or producer type `y`) and `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFunction {
    Zero,
    Constant { value: f64 },
    /// Polynomial in the concatenation `(w, z)`.
    Polynomial { dw: usize, poly: Polynomial },
    /// `scale/2 (z - c(w))' Q (z - c(w)) + constant`, with affine centre
    /// `c(w) = center_offset + center_slope w`.
    Quadratic {
        scale: f64,
        center_offset: Vec<f64>,
        #[serde(default)]
        center_slope: Option<Vec<Vec<f64>>>,
        q: Vec<Vec<f64>>,
        #[serde(default)]
        constant: f64,
    },
}

impl ScalarFunction {
    pub fn validate(&self, dw: usize, dz: usize) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Constant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::NonFinite("constant function".into()))
                }
            }
            Self::Polynomial { dw: d, poly } => {
                poly.validate()?;
                if *d != dw {
                    return Err(Error::Dimension { context: "polynomial agent variables", expected: dw, got: *d });
                }
                if poly.nvars != dw + dz {
                    return Err(Error::Dimension { context: "polynomial variables", expected: dw + dz, got: poly.nvars });
                }
                Ok(())
            }
            Self::Quadratic { center_offset, center_slope, q, scale, constant } => {
                if center_offset.len() != dz {
                    return Err(Error::Dimension { context: "quadratic centre", expected: dz, got: center_offset.len() });
                }
                if q.len() != dz || q.iter().any(|r| r.len() != dz) {
                    return Err(Error::Dimension { context: "quadratic matrix", expected: dz, got: q.len() });
                }
                if let Some(s) = center_slope {
                    if s.len() != dz || s.iter().any(|r| r.len() != dw) {
                        return Err(Error::Dimension { context: "quadratic centre slope", expected: dw, got: s.first().map_or(0, Vec::len) });
                    }
                }
                if !scale.is_finite() || !constant.is_finite() {
                    return Err(Error::NonFinite("quadratic scale".into()));
                }
                Ok(())
            }
        }
    }

    fn center(offset: &[f64], slope: &Option<Vec<Vec<f64>>>, w: &[f64]) -> Vec<f64> {
        let mut c = offset.to_vec();
        if let Some(s) = slope {
            for (ci, row) in c.iter_mut().zip(s) {
                *ci += row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        c
    }

    pub fn value(&self, w: &[f64], z: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => *value,
            Self::Polynomial { poly, .. } => {
                let mut v = w.to_vec();
                v.extend_from_slice(z);
                poly.value(&v)
            }
            Self::Quadratic { scale, center_offset, center_slope, q, constant } => {
                let c = Self::center(center_offset, center_slope, w);
                let d: Vec<f64> = z.iter().zip(&c).map(|(a, b)| a - b).collect();
                let mut s = 0.0;
                for (i, row) in q.iter().enumerate() {
                    for (j, qij) in row.iter().enumerate() {
                        s += d[i] * qij * d[j];
                    }
                }
                0.5 * scale * s + constant
            }
        }
    }

    pub fn grad_z(&self, w: &[f64], z: &[f64]) -> Vec<f64> {
        let dz = z.len();
        match self {
            Self::Zero | Self::Constant { .. } => vec![0.0; dz],
            Self::Polynomial { dw, poly } => {
                let mut v = w.to_vec();
                v.extend_from_slice(z);
                (0..dz).map(|k| poly.partial(&v, dw + k)).collect()
            }
            Self::Quadratic { scale, center_offset, center_slope, q, .. } => {
                let c = Self::center(center_offset, center_slope, w);
                (0..dz).map(|i| scale * (0..dz).map(|j| q[i][j] * (z[j] - c[j])).sum::<f64>()).collect()
            }
        }
    }

    /// Same function plus a constant.
    pub fn shifted(&self, c: f64) -> Self {
        match self {
            Self::Zero => Self::Constant { value: c },
            Self::Constant { value } => Self::Constant { value: value + c },
            Self::Polynomial { dw, poly } => {
                let mut poly = poly.clone();
                poly.terms.push(Term { coef: c, exps: vec![0; poly.nvars] });
                Self::Polynomial { dw: *dw, poly }
            }
            Self::Quadratic { scale, center_offset, center_slope, q, constant } => Self::Quadratic {
                scale: *scale,
                center_offset: center_offset.clone(),
                center_slope: center_slope.clone(),
                q: q.clone(),
                constant: constant + c,
            },
        }
    }
}

/// Full structural model: `U(x, eps, z) = Ubar(x, z) + zeta(x, eps, z)`
/// for consumers and `C(y, z)` for producers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralSpec {
    pub u_bar: ScalarFunction,
    pub cost: ScalarFunction,
    pub zeta: SurplusFamily,
}

impl StructuralSpec {
    pub fn validate(&self, dx: usize, dy: usize, dz: usize) -> Result<()> {
        self.zeta.validate()?;
        self.zeta.check_dims(dx, dz, dz)?;
        self.u_bar.validate(dx, dz)?;
        self.cost.validate(dy, dz)
    }

    /// Consumer utility `Ubar(x, z) + zeta(x, eps, z)`.
    pub fn utility(&self, x: &[f64], eps: &[f64], z: &[f64]) -> f64 {
        self.u_bar.value(x, z) + self.zeta.value(x, eps, z)
    }

    pub fn cost(&self, y: &[f64], z: &[f64]) -> f64 {
        self.cost.value(y, z)
    }
}

/// Sampled check of the twist condition on grids of tastes and qualities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistReport {
    /// Smallest singular value of the cross Hessian over the grid.
    pub min_singular_value: f64,
    /// Largest singular value over the grid (sampled bound on the cross Hessian).
    pub max_singular_value: f64,
    /// Largest `|grad_z zeta|` over the grid (sampled bound on the gradient).
    pub max_grad_z_norm: f64,
    /// Pair of distinct tastes sharing `grad_z zeta` at some grid quality.
    pub witness: Option<TwistWitness>,
    /// The cross-Hessian determinant takes both signs on the grid, so it
    /// vanishes somewhere in between.
    #[serde(default)]
    pub determinant_sign_change: bool,
    pub threshold: f64,
    pub pass: bool,
    pub growth_condition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistWitness {
    pub eps_a: Vec<f64>,
    pub eps_b: Vec<f64>,
    pub z: Vec<f64>,
}

/// Default pass threshold on the smallest singular value.
pub const TWIST_SV_THRESHOLD: f64 = 1e-8;

/// Gradients closer than this are treated as a collision.
pub const TWIST_COLLISION_TOL: f64 = 1e-9;

pub fn check_twist(
    f: &SurplusFamily,
    x: ArrayView1<f64>,
    eps_grid: &Array2<f64>,
    z_grid: &Array2<f64>,
    threshold: f64,
) -> TwistReport {
    let xs = x.to_vec();
    let mut min_sv = f64::INFINITY;
    let mut max_sv: f64 = 0.0;
    let mut max_grad: f64 = 0.0;
    let mut witness = None;
    let (mut pos, mut neg) = (false, false);
    let eps_rows: Vec<Vec<f64>> = eps_grid.rows().into_iter().map(|r| r.to_vec()).collect();
    for z in z_grid.rows() {
        let zs = z.to_vec();
        let mut grads: Vec<(Vec<f64>, usize)> = Vec::with_capacity(eps_rows.len());
        for (k, e) in eps_rows.iter().enumerate() {
            let h = f.cross_hessian_raw(&xs, e, &zs);
            let d = h.nrows();
            let m = DMatrix::from_fn(d, d, |i, j| h[[i, j]]);
            let det = m.determinant();
            pos |= det > 0.0;
            neg |= det < 0.0;
            let sv = m.singular_values();
            min_sv = min_sv.min(sv.min());
            max_sv = max_sv.max(sv.max());
            let g = f.grad_z_raw(&xs, e, &zs);
            max_grad = max_grad.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
            grads.push((g, k));
        }
        if witness.is_some() {
            continue;
        }
        grads.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.1.cmp(&b.1)));
        'outer: for a in 0..grads.len() {
            for b in a + 1..grads.len() {
                if grads[b].0[0] - grads[a].0[0] > TWIST_COLLISION_TOL {
                    break;
                }
                let gap: f64 = grads[a].0.iter().zip(&grads[b].0).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                let (ia, ib) = (grads[a].1.min(grads[b].1), grads[a].1.max(grads[b].1));
                if gap <= TWIST_COLLISION_TOL && eps_rows[ia] != eps_rows[ib] {
                    witness = Some(TwistWitness { eps_a: eps_rows[ia].clone(), eps_b: eps_rows[ib].clone(), z: zs.clone() });
                    break 'outer;
                }
            }
        }
    }
    let sign_change = pos && neg;
    let pass = witness.is_none() && !sign_change && min_sv > threshold;
    TwistReport {
        min_singular_value: min_sv,
        max_singular_value: max_sv,
        max_grad_z_norm: max_grad,
        witness,
        determinant_sign_change: sign_change,
        threshold,
        pass,
        growth_condition: "not checked".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn empty() -> Array1<f64> {
        Array1::zeros(0)
    }

    /// zeta = z * eps^2 in d_z = 1, no x.
    fn z_eps_sq() -> SurplusFamily {
        SurplusFamily::polynomial(0, 1, vec![(1.0, vec![2, 1])]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let x = empty();
        assert_eq!(SurplusFamily::Bilinear.eval(x.view(), array![1.0, 2.0].view(), array![3.0, 4.0].view()).unwrap(), 11.0);
        let nq = SurplusFamily::neg_quadratic(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(nq.eval(x.view(), array![0.3, -0.2].view(), array![0.3, -0.2].view()).unwrap(), 0.0);
        assert_eq!(z_eps_sq().eval(x.view(), array![2.0].view(), array![3.0].view()).unwrap(), 12.0);
    }

    #[test]
    fn gradient_examples() {
        let x = empty();
        let e = array![0.7, -1.2];
        let z = array![2.0, 0.5];
        assert_eq!(SurplusFamily::Bilinear.grad_z(x.view(), e.view(), z.view()).unwrap(), e);
        assert_eq!(SurplusFamily::Bilinear.grad_eps(x.view(), e.view(), z.view()).unwrap(), z);
        let nq = SurplusFamily::neg_quadratic(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(nq.grad_z(x.view(), array![1.0, 0.0].view(), array![0.0, 0.0].view()).unwrap(), array![1.0, 0.0]);
        let g = z_eps_sq().grad_eps(x.view(), array![2.0].view(), array![3.0].view()).unwrap();
        // central difference oracle
        let h = 1e-5;
        let f = |e: f64| 3.0 * e * e;
        let fd = (f(2.0 + h) - f(2.0 - h)) / (2.0 * h);
        assert!((g[0] - fd).abs() / fd.abs() <= 1e-6);
        assert_eq!(g[0], 12.0);
    }

    #[test]
    fn cross_hessian_examples() {
        let x = empty();
        let e = array![0.1, 0.2];
        let z = array![0.3, 0.4];
        assert_eq!(SurplusFamily::Bilinear.cross_hessian(x.view(), e.view(), z.view()).unwrap(), Array2::<f64>::eye(2));
        let q = vec![vec![2.0, 0.5], vec![0.5, 1.0]];
        let nq = SurplusFamily::neg_quadratic(q).unwrap();
        assert_eq!(nq.cross_hessian(x.view(), e.view(), z.view()).unwrap(), array![[2.0, 0.5], [0.5, 1.0]]);
        let h = z_eps_sq().cross_hessian(x.view(), array![2.0].view(), array![3.0].view()).unwrap();
        assert_eq!(h[[0, 0]], 4.0);
    }

    #[test]
    fn dimension_mismatch() {
        let x = empty();
        assert!(SurplusFamily::Bilinear.eval(x.view(), array![1.0].view(), array![1.0, 2.0].view()).is_err());
        assert!(z_eps_sq().eval(array![1.0].view(), array![1.0].view(), array![1.0].view()).is_err());
    }

    #[test]
    fn non_spd_rejected() {
        assert!(SurplusFamily::neg_quadratic(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).is_err());
        assert!(SurplusFamily::neg_quadratic(vec![vec![1.0, 0.3], vec![0.0, 1.0]]).is_err());
        let bad = SurplusFamily::BilinearFeature {
            dx: 0,
            dz: 1,
            phi: vec![Polynomial::new(1, vec![(1.0, vec![1])]).unwrap()],
            psi: vec![],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn twist_examples() {
        let x = empty();
        let grid = array![[-1.0, 0.5], [0.0, 0.0], [2.0, 1.0]];
        let r = check_twist(&SurplusFamily::Bilinear, x.view(), &grid, &grid, TWIST_SV_THRESHOLD);
        assert!(r.pass);
        assert!((r.min_singular_value - 1.0).abs() < 1e-12);

        let even = SurplusFamily::polynomial(0, 1, vec![(1.0, vec![2, 1])]).unwrap();
        let eg = array![[-0.5], [0.5], [1.0]];
        let zg = array![[1.0], [2.0]];
        let r = check_twist(&even, x.view(), &eg, &zg, TWIST_SV_THRESHOLD);
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert_eq!((w.eps_a, w.eps_b), (vec![-0.5], vec![0.5]));

        // No colliding pair sampled, but the determinant 2 eps changes sign.
        let r = check_twist(&even, x.view(), &array![[-0.3], [0.7]], &zg, TWIST_SV_THRESHOLD);
        assert!(r.witness.is_none() && r.determinant_sign_change && !r.pass);
        assert!(!r.min_singular_value.is_nan());

        let nq = SurplusFamily::neg_quadratic(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = check_twist(&nq, x.view(), &grid, &grid, TWIST_SV_THRESHOLD);
        assert!(r.pass);
        assert!((r.min_singular_value - 1.0).abs() < 1e-12);
        assert!((r.max_singular_value - 2.0).abs() < 1e-12);
        assert_eq!(r.growth_condition, "not checked");
    }

    #[test]
    fn scalar_function_quadratic() {
        let u = ScalarFunction::Quadratic {
            scale: -1.0,
            center_offset: vec![1.0, 2.0],
            center_slope: Some(vec![vec![1.0], vec![0.0]]),
            q: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            constant: 0.0,
        };
        u.validate(1, 2).unwrap();
        // centre (1 + x, 2)
        assert_eq!(u.value(&[1.0], &[2.0, 2.0]), 0.0);
        assert_eq!(u.grad_z(&[0.0], &[2.0, 4.0]), vec![-1.0, -2.0]);
        assert_eq!(u.shifted(3.0).value(&[1.0], &[2.0, 2.0]), 3.0);
    }
}
