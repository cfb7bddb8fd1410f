//! Quaternion matrices stored as four real planes.
//!
//! A color video frame sequence is carried as a pure quaternion matrix whose
//! `i`, `j`, `k` planes hold the red, green and blue channels. Products are
//! evaluated as sixteen real GEMMs following the Hamilton table, so no
//! interleaved storage is ever built; the complex adjoint form is only
//! materialized inside the decompositions.

mod adjoint;
mod qr;
mod scalar;
mod svd;

use std::ops::{Add, Sub};

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, ArrayViewMut2, Zip};

use crate::error::{shape_err, Error, Result};

pub use adjoint::{from_adjoint, is_valid_adjoint, to_adjoint, ComplexAdjoint, ADJOINT_TOL};
pub use qr::{qqr_thin, QrResult};
pub use scalar::Quaternion;
pub(crate) use svd::{columns_to_matrix, compose, matrix_columns, orthonormalize};
pub use svd::{qsvd, qsvd_gram, qsvt, QSvdResult};

/// `(out, lhs, rhs, sign)` entries of the Hamilton product of two quaternions
/// with parts indexed `0 = re, 1 = i, 2 = j, 3 = k`.
const HAMILTON: [(usize, usize, usize, f64); 16] = [
    (0, 0, 0, 1.0),
    (0, 1, 1, -1.0),
    (0, 2, 2, -1.0),
    (0, 3, 3, -1.0),
    (1, 0, 1, 1.0),
    (1, 1, 0, 1.0),
    (1, 2, 3, 1.0),
    (1, 3, 2, -1.0),
    (2, 0, 2, 1.0),
    (2, 1, 3, -1.0),
    (2, 2, 0, 1.0),
    (2, 3, 1, 1.0),
    (3, 0, 3, 1.0),
    (3, 1, 2, 1.0),
    (3, 2, 1, -1.0),
    (3, 3, 0, 1.0),
];

/// An `m×n` quaternion matrix `N₀ + N₁i + N₂j + N₃k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionMatrix {
    parts: [Array2<f64>; 4],
}

impl QuaternionMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            parts: std::array::from_fn(|_| Array2::zeros((rows, cols))),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut q = Self::zeros(n, n);
        q.parts[0] = Array2::eye(n);
        q
    }

    /// Builds a matrix from its real and three imaginary planes.
    pub fn from_parts(
        re: Array2<f64>,
        im_i: Array2<f64>,
        im_j: Array2<f64>,
        im_k: Array2<f64>,
    ) -> Result<Self> {
        let dim = re.dim();
        for p in [&im_i, &im_j, &im_k] {
            if p.dim() != dim {
                return Err(shape_err("from_parts", dim, p.dim()));
            }
        }
        Ok(Self {
            parts: [re, im_i, im_j, im_k],
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Quaternion,
    ) -> Self {
        let mut q = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                q.set(r, c, f(r, c));
            }
        }
        q
    }

    pub fn nrows(&self) -> usize {
        self.parts[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.parts[0].ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.parts[0].dim()
    }

    pub fn re(&self) -> &Array2<f64> {
        &self.parts[0]
    }

    pub fn im_i(&self) -> &Array2<f64> {
        &self.parts[1]
    }

    pub fn im_j(&self) -> &Array2<f64> {
        &self.parts[2]
    }

    pub fn im_k(&self) -> &Array2<f64> {
        &self.parts[3]
    }

    /// Plane `p` (`0 = re, 1 = i, 2 = j, 3 = k`).
    pub fn part(&self, p: usize) -> &Array2<f64> {
        &self.parts[p]
    }

    /// Mutable view of plane `p`; the view cannot change the shape.
    pub fn part_mut(&mut self, p: usize) -> ArrayViewMut2<'_, f64> {
        self.parts[p].view_mut()
    }

    pub fn parts(&self) -> &[Array2<f64>; 4] {
        &self.parts
    }

    pub fn into_parts(self) -> [Array2<f64>; 4] {
        self.parts
    }

    pub fn get(&self, r: usize, c: usize) -> Quaternion {
        Quaternion::new(
            self.parts[0][[r, c]],
            self.parts[1][[r, c]],
            self.parts[2][[r, c]],
            self.parts[3][[r, c]],
        )
    }

    pub fn set(&mut self, r: usize, c: usize, q: Quaternion) {
        self.parts[0][[r, c]] = q.w;
        self.parts[1][[r, c]] = q.x;
        self.parts[2][[r, c]] = q.y;
        self.parts[3][[r, c]] = q.z;
    }

    /// Pure quaternion matrix: the real plane is identically zero.
    pub fn is_pure(&self) -> bool {
        self.parts[0].iter().all(|&v| v == 0.0)
    }

    /// Quaternion conjugate transpose `Aᴴ`.
    pub fn conj_transpose(&self) -> Self {
        let mut parts = self.parts.clone().map(|p| p.reversed_axes());
        for p in &mut parts[1..] {
            p.mapv_inplace(|v| -v);
        }
        // Standard layout.
        Self {
            parts: parts.map(|p| p.as_standard_layout().into_owned()),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// Drops the real plane, keeping `i`, `j`, `k` untouched.
    pub fn pure_part(&self) -> Self {
        let mut out = self.clone();
        out.parts[0].fill(0.0);
        out
    }

    /// The `i`, `j`, `k` planes, i.e. the R, G, B channels of a color matrix.
    pub fn split_channels(&self) -> [Array2<f64>; 3] {
        [
            self.parts[1].clone(),
            self.parts[2].clone(),
            self.parts[3].clone(),
        ]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            parts: self.parts.clone().map(|p| p * s),
        }
    }

    /// `self += alpha * other`.
    pub fn scaled_add(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.parts.iter_mut().zip(&other.parts) {
            a.scaled_add(alpha, b);
        }
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Self {
        Self {
            parts: std::array::from_fn(|p| self.parts[p].slice(s![.., start..end]).to_owned()),
        }
    }

    /// Column `c` as an `m×1` matrix.
    pub fn column(&self, c: usize) -> Self {
        self.columns(c, c + 1)
    }

    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.nrows() != other.nrows() {
            return Err(shape_err("hstack", self.dim(), other.dim()));
        }
        let mut out = Self::zeros(self.nrows(), self.ncols() + other.ncols());
        let split = self.ncols();
        for p in 0..4 {
            out.parts[p]
                .slice_mut(s![.., ..split])
                .assign(&self.parts[p]);
            out.parts[p]
                .slice_mut(s![.., split..])
                .assign(&other.parts[p]);
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.parts
            .iter()
            .zip(&other.parts)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

impl Add for &QuaternionMatrix {
    type Output = QuaternionMatrix;
    fn add(self, o: &QuaternionMatrix) -> QuaternionMatrix {
        QuaternionMatrix {
            parts: std::array::from_fn(|p| &self.parts[p] + &o.parts[p]),
        }
    }
}

impl Sub for &QuaternionMatrix {
    type Output = QuaternionMatrix;
    fn sub(self, o: &QuaternionMatrix) -> QuaternionMatrix {
        QuaternionMatrix {
            parts: std::array::from_fn(|p| &self.parts[p] - &o.parts[p]),
        }
    }
}

/// Conjugate-transposed view of plane `p` (sign is applied by the caller).
fn view(a: &QuaternionMatrix, p: usize, adjoint: bool) -> ArrayView2<'_, f64> {
    if adjoint {
        a.parts[p].t()
    } else {
        a.parts[p].view()
    }
}

fn product(
    a: &QuaternionMatrix,
    a_h: bool,
    b: &QuaternionMatrix,
    b_h: bool,
    pure: bool,
    op: &'static str,
) -> Result<QuaternionMatrix> {
    let (ar, ac) = if a_h { (a.ncols(), a.nrows()) } else { a.dim() };
    let (br, bc) = if b_h { (b.ncols(), b.nrows()) } else { b.dim() };
    if ac != br {
        return Err(shape_err(op, (ar, ac), (br, bc)));
    }
    let mut out = QuaternionMatrix::zeros(ar, bc);
    for &(o, x, y, sign) in &HAMILTON {
        if pure && o == 0 {
            continue;
        }
        let mut sign = sign;
        if a_h && x != 0 {
            sign = -sign;
        }
        if b_h && y != 0 {
            sign = -sign;
        }
        general_mat_mul(
            sign,
            &view(a, x, a_h),
            &view(b, y, b_h),
            1.0,
            &mut out.parts[o],
        );
    }
    Ok(out)
}

/// Quaternion matrix product `a·b`.
pub fn qmul(a: &QuaternionMatrix, b: &QuaternionMatrix) -> Result<QuaternionMatrix> {
    product(a, false, b, false, false, "qmul")
}

/// `aᴴ·b` without materializing the conjugate transpose.
pub fn qmul_adj(a: &QuaternionMatrix, b: &QuaternionMatrix) -> Result<QuaternionMatrix> {
    product(a, true, b, false, false, "qmul_adj")
}

/// `a·bᴴ` without materializing the conjugate transpose.
pub fn qmul_adj_right(a: &QuaternionMatrix, b: &QuaternionMatrix) -> Result<QuaternionMatrix> {
    product(a, false, b, true, false, "qmul_adj_right")
}

/// Pure part of `a·bᴴ`; the real plane is never computed.
pub fn qmul_adj_right_pure(a: &QuaternionMatrix, b: &QuaternionMatrix) -> Result<QuaternionMatrix> {
    product(a, false, b, true, true, "qmul_adj_right_pure")
}

/// `(aᴴ·y, y·b, ‖y‖²)` in one sweep over `y`, for thin `a` (`m×r`) and
/// `b` (`t×r`).
pub fn two_sided_products(
    y: &QuaternionMatrix,
    a: &QuaternionMatrix,
    b: &QuaternionMatrix,
) -> Result<(QuaternionMatrix, QuaternionMatrix, f64)> {
    let (m, t) = y.dim();
    let r = a.ncols();
    if a.nrows() != m || b.dim() != (t, r) {
        return Err(Error::Shape {
            op: "two_sided_products",
            expected: format!("a {m}x{r}, b {t}x{r}"),
            got: format!("a {:?}, b {:?}", a.dim(), b.dim()),
        });
    }
    let ah: Vec<Quaternion> = (0..m * r).map(|k| a.get(k / r, k % r).conj()).collect();
    let bq: Vec<Quaternion> = (0..t * r).map(|k| b.get(k / r, k % r)).collect();
    let planes: Vec<_> = y.parts.iter().map(|p| p.as_standard_layout()).collect();
    let sl: Vec<&[f64]> = planes
        .iter()
        .map(|p| p.as_slice().expect("standard layout"))
        .collect();
    let mut ay = vec![Quaternion::ZERO; r * t];
    let mut yb = vec![Quaternion::ZERO; m * r];
    let mut norm = 0.0;
    for i in 0..m {
        let arow = &ah[i * r..(i + 1) * r];
        let ybrow = &mut yb[i * r..(i + 1) * r];
        for j in 0..t {
            let k = i * t + j;
            let q = Quaternion::new(sl[0][k], sl[1][k], sl[2][k], sl[3][k]);
            norm += q.norm_sqr();
            for c in 0..r {
                ay[c * t + j] += arow[c] * q;
                ybrow[c] += q * bq[j * r + c];
            }
        }
    }
    let ay = QuaternionMatrix::from_fn(r, t, |c, j| ay[c * t + j]);
    let yb = QuaternionMatrix::from_fn(m, r, |i, c| yb[i * r + c]);
    Ok((ay, yb, norm))
}

/// Pure part of `u·diag(σ)·vᴴ` written in one sweep.
pub fn scaled_outer_pure(
    u: &QuaternionMatrix,
    sigma: &[f64],
    v: &QuaternionMatrix,
) -> Result<QuaternionMatrix> {
    let (m, r) = u.dim();
    let t = v.nrows();
    if v.ncols() != r || sigma.len() != r {
        return Err(Error::Shape {
            op: "scaled_outer_pure",
            expected: format!("v {t}x{r} and {r} values"),
            got: format!("v {:?} and {} values", v.dim(), sigma.len()),
        });
    }
    let us: Vec<Quaternion> = (0..m * r)
        .map(|k| u.get(k / r, k % r).scale(sigma[k % r]))
        .collect();
    let vh: Vec<Quaternion> = (0..t * r).map(|k| v.get(k / r, k % r).conj()).collect();
    let mut out = QuaternionMatrix::zeros(m, t);
    let [_, pi, pj, pk] = &mut out.parts;
    let (si, sj, sk) = (
        pi.as_slice_mut().expect("fresh array"),
        pj.as_slice_mut().expect("fresh array"),
        pk.as_slice_mut().expect("fresh array"),
    );
    for i in 0..m {
        let urow = &us[i * r..(i + 1) * r];
        for j in 0..t {
            let mut acc = Quaternion::ZERO;
            for c in 0..r {
                acc += urow[c] * vh[j * r + c];
            }
            let k = i * t + j;
            si[k] = acc.x;
            sj[k] = acc.y;
            sk[k] = acc.z;
        }
    }
    Ok(out)
}

/// Builds a pure quaternion matrix from three color channels.
pub fn cat_channels(r: Array2<f64>, g: Array2<f64>, b: Array2<f64>) -> Result<QuaternionMatrix> {
    let dim = r.dim();
    QuaternionMatrix::from_parts(Array2::zeros(dim), r, g, b)
}

/// Real inner product `Σ x₀y₀ + x₁y₁ + x₂y₂ + x₃y₃`, i.e. `Re tr(xᴴy)`.
pub fn real_inner(x: &QuaternionMatrix, y: &QuaternionMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Shape {
            op: "real_inner",
            expected: format!("{:?}", x.dim()),
            got: format!("{:?}", y.dim()),
        });
    }
    let mut acc = 0.0;
    for p in 0..4 {
        acc += Zip::from(&x.parts[p])
            .and(&y.parts[p])
            .fold(0.0, |s, a, b| s + a * b);
    }
    Ok(acc)
}

/// `‖AᴴA − I‖_F` for a matrix with orthonormal columns.
pub fn unitarity_drift(a: &QuaternionMatrix) -> f64 {
    let gram = qmul_adj(a, a).expect("square gram");
    (&gram - &QuaternionMatrix::identity(a.ncols())).frobenius_norm()
}


#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;
    use nalgebra::{Complex, DMatrix};

    fn scalar(q: Quaternion) -> QuaternionMatrix {
        QuaternionMatrix::from_fn(1, 1, |_, _| q)
    }

    #[test]
    fn unit_products() {
        let i = scalar(Quaternion::I);
        let j = scalar(Quaternion::J);
        assert_eq!(qmul(&i, &j).unwrap().get(0, 0), Quaternion::K);
        assert_eq!(qmul(&j, &i).unwrap().get(0, 0), -Quaternion::K);
    }

    #[test]
    fn all_sixteen_unit_products_match_scalar_table() {
        let units = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K];
        for a in units {
            for b in units {
                let got = qmul(&scalar(a), &scalar(b)).unwrap().get(0, 0);
                assert_eq!(got, a * b);
            }
        }
    }

    #[test]
    fn identity_is_neutral() {
        let mut r = rng(1);
        let a = random(&mut r, 4, 3);
        let left = qmul(&QuaternionMatrix::identity(4), &a).unwrap();
        let right = qmul(&a, &QuaternionMatrix::identity(3)).unwrap();
        assert_eq!(left, a);
        assert_eq!(right, a);
    }

    #[test]
    fn qmul_matches_adjoint_product() {
        let mut r = rng(2);
        let a = random(&mut r, 3, 4);
        let b = random(&mut r, 4, 2);
        let prod = qmul(&a, &b).unwrap();
        let ca: DMatrix<Complex<f64>> = to_adjoint(&a).into_inner();
        let cb: DMatrix<Complex<f64>> = to_adjoint(&b).into_inner();
        let via = from_adjoint(&ComplexAdjoint::try_new(ca * cb).unwrap()).unwrap();
        assert!(prod.max_abs_diff(&via) < 1e-12);
    }

    #[test]
    fn qmul_rejects_bad_inner_dim() {
        let a = QuaternionMatrix::zeros(2, 3);
        let b = QuaternionMatrix::zeros(2, 3);
        assert!(matches!(qmul(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn conj_transpose_basics() {
        let q = scalar(Quaternion::I).conj_transpose();
        assert_eq!(q.get(0, 0), -Quaternion::I);

        let real = Array2::from_shape_vec((2, 3), vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let zero = Array2::zeros((2, 3));
        let q =
            QuaternionMatrix::from_parts(real.clone(), zero.clone(), zero.clone(), zero).unwrap();
        assert_eq!(q.conj_transpose().re(), &real.t().to_owned());
    }

    #[test]
    fn conj_transpose_reverses_products() {
        let mut r = rng(3);
        let a = random(&mut r, 5, 3);
        let b = random(&mut r, 3, 4);
        let lhs = qmul(&a, &b).unwrap().conj_transpose();
        let rhs = qmul(&b.conj_transpose(), &a.conj_transpose()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        assert_eq!(a.conj_transpose().conj_transpose(), a);
    }

    #[test]
    fn adjoint_products_agree_with_explicit_transpose() {
        let mut r = rng(4);
        let a = random(&mut r, 6, 3);
        let b = random(&mut r, 6, 2);
        let c = random(&mut r, 4, 2);
        let lhs = qmul_adj(&a, &b).unwrap();
        let rhs = qmul(&a.conj_transpose(), &b).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
        let lhs = qmul_adj_right(&b, &c).unwrap();
        let rhs = qmul(&b, &c.conj_transpose()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
        let pure = qmul_adj_right_pure(&b, &c).unwrap();
        assert!(pure.is_pure());
        assert_eq!(pure, lhs.pure_part());
    }

    #[test]
    fn frobenius_norm_cases() {
        assert_eq!(QuaternionMatrix::zeros(3, 2).frobenius_norm(), 0.0);
        assert_eq!(
            scalar(Quaternion::new(1., 1., 1., 1.)).frobenius_norm(),
            2.0
        );

        let mut r = rng(5);
        let a = random(&mut r, 4, 4);
        let complex_norm = to_adjoint(&a).data().norm();
        assert!((a.frobenius_norm() - complex_norm / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pure_part_cases() {
        let q = scalar(Quaternion::new(1., 1., 0., 0.)).pure_part();
        assert_eq!(q.get(0, 0), Quaternion::I);
        assert!(q.is_pure());
        assert_eq!(q.pure_part(), q);

        let mut r = rng(6);
        let a = random(&mut r, 5, 4);
        let re_sq: f64 = a.re().iter().map(|v| v * v).sum();
        let lhs = a.pure_part().frobenius_norm().powi(2);
        assert!((lhs - (a.frobenius_norm().powi(2) - re_sq)).abs() < 1e-12);
    }

    #[test]
    fn cat_split_channels() {
        let z = Array2::<f64>::zeros((3, 2));
        let q = cat_channels(z.clone(), z.clone(), z.clone()).unwrap();
        assert_eq!(q, QuaternionMatrix::zeros(3, 2));

        let mut r = rng(7);
        let a = random(&mut r, 3, 5);
        let [cr, cg, cb] = a.split_channels();
        let q = cat_channels(cr.clone(), cg.clone(), cb.clone()).unwrap();
        assert!(q.is_pure());
        assert_eq!(q.split_channels(), [cr.clone(), cg.clone(), cb.clone()]);
        let expected = (cr
            .iter()
            .chain(cg.iter())
            .chain(cb.iter())
            .map(|v| v * v)
            .sum::<f64>())
        .sqrt();
        assert!((q.frobenius_norm() - expected).abs() < 1e-12);

        let bad = cat_channels(z.clone(), Array2::zeros((2, 2)), z);
        assert!(matches!(bad, Err(Error::Shape { .. })));
    }

    #[test]
    fn real_inner_cases() {
        let mut r = rng(8);
        let x = random(&mut r, 4, 3);
        let y = random(&mut r, 4, 3);
        assert!((real_inner(&x, &x).unwrap() - x.norm_sqr()).abs() < 1e-12);

        let pure = x.pure_part();
        let mut real_only = QuaternionMatrix::zeros(4, 3);
        real_only.part_mut(0).assign(x.re());
        assert_eq!(real_inner(&pure, &real_only).unwrap(), 0.0);

        let cx = to_adjoint(&x);
        let cy = to_adjoint(&y);
        let tr = (cx.data().adjoint() * cy.data()).trace();
        assert!((real_inner(&x, &y).unwrap() - 0.5 * tr.re).abs() < 1e-12);

        assert!(real_inner(&x, &QuaternionMatrix::zeros(3, 4)).is_err());
    }
}
