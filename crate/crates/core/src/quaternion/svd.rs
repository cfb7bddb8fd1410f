//! Quaternion SVD through the complex adjoint.
//!
//! Every singular value of a quaternion matrix shows up twice in the spectrum
//! of its adjoint, and the two singular vectors of a pair are related by the
//! antilinear map `[x₁; x₂] ↦ [−conj(x₂); conj(x₁)]`. A quaternion singular
//! vector is read off the first column of each pair as `x₁ + (−conj(x₂))·j`.
//! Repeated quaternion singular values make the complex solver free to mix
//! pairs, so columns are picked greedily and orthogonalized against every
//! already accepted vector and its partner.

use nalgebra::{Complex, DMatrix, SymmetricEigen, SVD};

use super::{qmul, qmul_adj, qmul_adj_right, to_adjoint, Quaternion, QuaternionMatrix};

type C64 = Complex<f64>;

/// Thin QSVD `A = U·diag(σ)·Vᴴ` with `σ` descending.
#[derive(Debug, Clone)]
pub struct QSvdResult {
    /// `m×k` with orthonormal columns.
    pub u: QuaternionMatrix,
    pub sigma: Vec<f64>,
    /// `n×k` with orthonormal columns.
    pub v: QuaternionMatrix,
}

impl QSvdResult {
    /// Number of singular values above `tol·σ₁`.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma
            .iter()
            .filter(|&&s| s > tol * top && s > 0.0)
            .count()
    }

    pub fn truncate(mut self, r: usize) -> Self {
        let r = r.min(self.sigma.len());
        self.sigma.truncate(r);
        self.u = self.u.columns(0, r);
        self.v = self.v.columns(0, r);
        self
    }

    pub fn compose(&self) -> QuaternionMatrix {
        compose(&self.u, &self.sigma, &self.v)
    }
}

/// `U·diag(σ)·Vᴴ`.
pub(crate) fn compose(
    u: &QuaternionMatrix,
    sigma: &[f64],
    v: &QuaternionMatrix,
) -> QuaternionMatrix {
    let mut us = u.clone();
    for p in 0..4 {
        let mut part = us.part_mut(p);
        for (c, &s) in sigma.iter().enumerate() {
            part.column_mut(c).mapv_inplace(|x| x * s);
        }
    }
    qmul_adj_right(&us, v).expect("factor shapes agree")
}

fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Adjoint-space partner of a column: the second column of the same
/// quaternion vector's adjoint.
fn partner(x: &[C64]) -> Vec<C64> {
    let m = x.len() / 2;
    let (top, bottom) = x.split_at(m);
    bottom
        .iter()
        .map(|v| -v.conj())
        .chain(top.iter().map(|v| v.conj()))
        .collect()
}

fn to_quaternion_column(x: &[C64]) -> Vec<Quaternion> {
    let m = x.len() / 2;
    (0..m)
        .map(|i| Quaternion::new(x[i].re, x[i].im, -x[i + m].re, x[i + m].im))
        .collect()
}

fn qdot(a: &[Quaternion], b: &[Quaternion]) -> Quaternion {
    let mut s = Quaternion::ZERO;
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * *y;
    }
    s
}

fn qnorm(a: &[Quaternion]) -> f64 {
    a.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormalizes `x` against `basis` (two passes). Falls back to canonical
/// vectors when `x` is (numerically) inside the span.
pub(crate) fn orthonormalize(mut x: Vec<Quaternion>, basis: &[Vec<Quaternion>]) -> Vec<Quaternion> {
    let project = |x: &mut Vec<Quaternion>| {
        for _ in 0..2 {
            for b in basis {
                let c = qdot(b, x);
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= *bi * c;
                }
            }
        }
    };
    let start = qnorm(&x);
    project(&mut x);
    let n = qnorm(&x);
    if start > 0.0 && n > 0.5 * start {
        return x.into_iter().map(|q| q.scale(1.0 / n)).collect();
    }
    let len = x.len();
    let mut best = (Vec::new(), 0.0);
    for p in 0..len {
        let mut e = vec![Quaternion::ZERO; len];
        e[p] = Quaternion::ONE;
        project(&mut e);
        let n = qnorm(&e);
        if n > 0.5 {
            return e.into_iter().map(|q| q.scale(1.0 / n)).collect();
        }
        if n > best.1 {
            best = (e, n);
        }
    }
    let (best, norm) = best;
    assert!(norm > 1e-8, "basis spans the whole space");
    best.into_iter().map(|q| q.scale(1.0 / norm)).collect()
}

pub(crate) fn columns_to_matrix(cols: &[Vec<Quaternion>], rows: usize) -> QuaternionMatrix {
    let mut q = QuaternionMatrix::zeros(rows, cols.len());
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            q.set(r, c, *v);
        }
    }
    q
}

pub(crate) fn matrix_columns(a: &QuaternionMatrix) -> Vec<Vec<Quaternion>> {
    (0..a.ncols())
        .map(|c| (0..a.nrows()).map(|r| a.get(r, c)).collect())
        .collect()
}

/// Rotates each `(u, v)` pair by a right unit quaternion so that the first
/// non-negligible entry of `u` is real and nonnegative.
fn fix_phase(u: &mut [Vec<Quaternion>], v: &mut [Vec<Quaternion>]) {
    for (uc, vc) in u.iter_mut().zip(v.iter_mut()) {
        let Some(first) = uc.iter().find(|q| q.norm() > 1e-10) else {
            continue;
        };
        let d = first.phase().conj();
        for q in uc.iter_mut().chain(vc.iter_mut()) {
            *q = *q * d;
        }
    }
}

fn null_tolerance(sigma_max: f64, m: usize, n: usize) -> f64 {
    sigma_max * (m.max(n) as f64) * f64::EPSILON * 8.0
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Thin QSVD from the complex SVD of the adjoint, optionally truncated to the
/// leading `truncate` triplets.
///
/// Phase convention: the first entry of each `U` column with magnitude above
/// `1e-10` is real and nonnegative.
pub fn qsvd(a: &QuaternionMatrix, truncate: Option<usize>) -> QSvdResult {
    let (m, n) = a.dim();
    let k = m.min(n);
    if k == 0 {
        return QSvdResult {
            u: QuaternionMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: QuaternionMatrix::zeros(n, 0),
        };
    }
    let c = to_adjoint(a).into_inner();
    let svd = SVD::new(c, true, true);
    let uc = svd.u.expect("u requested");
    let vc = svd.v_t.expect("v requested").adjoint();
    let sv = svd.singular_values.as_slice().to_vec();

    let mut acc_u: Vec<Vec<C64>> = Vec::new();
    let mut acc_v: Vec<Vec<C64>> = Vec::new();
    let mut sigma = Vec::with_capacity(k);
    let mut ucols = Vec::with_capacity(k);
    let mut vcols = Vec::with_capacity(k);
    for idx in descending_order(&sv) {
        if sigma.len() == k {
            break;
        }
        let mut xu: Vec<C64> = uc.column(idx).iter().copied().collect();
        let mut xv: Vec<C64> = vc.column(idx).iter().copied().collect();
        // Same coefficients on both sides.
        for (bu, bv) in acc_u.iter().zip(&acc_v) {
            let coef = cdot(bu, &xu);
            for (x, b) in xu.iter_mut().zip(bu) {
                *x -= b * coef;
            }
            for (x, b) in xv.iter_mut().zip(bv) {
                *x -= b * coef;
            }
        }
        let nrm = cnorm(&xu);
        if nrm < 0.5 {
            continue;
        }
        xu.iter_mut().for_each(|x| *x /= nrm);
        xv.iter_mut().for_each(|x| *x /= nrm);
        ucols.push(to_quaternion_column(&xu));
        vcols.push(to_quaternion_column(&xv));
        sigma.push(sv[idx]);
        acc_u.push(partner(&xu));
        acc_v.push(partner(&xv));
        acc_u.push(xu);
        acc_v.push(xv);
    }

    let tol = null_tolerance(sigma[0], m, n);
    for l in 0..k {
        if sigma[l] <= tol {
            let (prev, rest) = ucols.split_at_mut(l);
            rest[0] = orthonormalize(std::mem::take(&mut rest[0]), prev);
            let (prev, rest) = vcols.split_at_mut(l);
            rest[0] = orthonormalize(std::mem::take(&mut rest[0]), prev);
        }
    }

    let keep = truncate.unwrap_or(k).min(k);
    sigma.truncate(keep);
    ucols.truncate(keep);
    vcols.truncate(keep);
    fix_phase(&mut ucols, &mut vcols);
    QSvdResult {
        u: columns_to_matrix(&ucols, m),
        sigma,
        v: columns_to_matrix(&vcols, n),
    }
}

/// QSVD through the eigendecomposition of the Gram matrix `AᴴA` (or `AAᴴ`
/// for wide input), computing the other factor as `A·v/σ`.
///
/// Costs `O(min(m,n)·m·n)`. Singular vectors of clustered small values are
/// less accurate than with [`qsvd`]; the values themselves are `‖A·v‖`.
pub fn qsvd_gram(a: &QuaternionMatrix, truncate: Option<usize>) -> QSvdResult {
    let (m, n) = a.dim();
    if m < n {
        let t = qsvd_gram(&a.conj_transpose(), truncate);
        let mut ucols = matrix_columns(&t.v);
        let mut vcols = matrix_columns(&t.u);
        fix_phase(&mut ucols, &mut vcols);
        return QSvdResult {
            u: columns_to_matrix(&ucols, m),
            sigma: t.sigma,
            v: columns_to_matrix(&vcols, n),
        };
    }
    let k = n;
    if k == 0 {
        return QSvdResult {
            u: QuaternionMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: QuaternionMatrix::zeros(n, 0),
        };
    }
    let gram = qmul_adj(a, a).expect("square gram");
    let h = to_adjoint(&gram).into_inner();
    let h: DMatrix<C64> = (&h + h.adjoint()) * Complex::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let ev = eig.eigenvalues.as_slice().to_vec();

    let mut acc: Vec<Vec<C64>> = Vec::new();
    let mut vcols = Vec::with_capacity(k);
    for idx in descending_order(&ev) {
        if vcols.len() == k {
            break;
        }
        let mut x: Vec<C64> = eig.eigenvectors.column(idx).iter().copied().collect();
        for b in &acc {
            let coef = cdot(b, &x);
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= bi * coef;
            }
        }
        let nrm = cnorm(&x);
        if nrm < 0.5 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= nrm);
        vcols.push(to_quaternion_column(&x));
        acc.push(partner(&x));
        acc.push(x);
    }

    // σ = ‖A·v‖.
    let v = columns_to_matrix(&vcols, n);
    let av = qmul(a, &v).expect("shapes agree");
    let mut order: Vec<(f64, usize)> = (0..vcols.len())
        .map(|l| {
            let norm = (0..m).map(|r| av.get(r, l).norm_sqr()).sum::<f64>().sqrt();
            (norm, l)
        })
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let keep = truncate.unwrap_or(k).min(k);
    order.truncate(keep);
    let tol = null_tolerance(order[0].0, m, n);
    let mut ucols: Vec<Vec<Quaternion>> = Vec::with_capacity(keep);
    let mut sigma = Vec::with_capacity(keep);
    let vcols: Vec<Vec<Quaternion>> = order
        .iter()
        .map(|&(_, l)| std::mem::take(&mut vcols[l]))
        .collect();
    let mut vcols = vcols;
    for &(s, l) in &order {
        let col: Vec<Quaternion> = if s > tol {
            (0..m).map(|r| av.get(r, l).scale(1.0 / s)).collect()
        } else {
            vec![Quaternion::ZERO; m]
        };
        let col = orthonormalize(col, &ucols);
        ucols.push(col);
        sigma.push(s);
    }
    fix_phase(&mut ucols, &mut vcols);
    QSvdResult {
        u: columns_to_matrix(&ucols, m),
        sigma,
        v: columns_to_matrix(&vcols, n),
    }
}

/// Singular value thresholding `U·diag(max(σ − τ, 0))·Vᴴ`.
///
/// This is the proximal map of `τ‖·‖_*`, i.e. the minimizer of
/// `½‖A − L‖²_F + τ‖L‖_*`; the unweighted form `‖A − L‖²_F + λ‖L‖_*` is
/// recovered with `τ = λ/2`, but callers here pass the threshold directly.
pub fn qsvt(a: &QuaternionMatrix, tau: f64) -> QuaternionMatrix {
    let svd = qsvd(a, None);
    let shrunk: Vec<f64> = svd.sigma.iter().map(|s| (s - tau).max(0.0)).collect();
    compose(&svd.u, &shrunk, &svd.v)
}
