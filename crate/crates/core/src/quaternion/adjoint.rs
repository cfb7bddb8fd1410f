use nalgebra::{Complex, DMatrix};

use super::QuaternionMatrix;
use crate::error::{Error, Result};

/// Absolute tolerance on the redundant adjoint blocks.
pub const ADJOINT_TOL: f64 = 1e-12;

/// Complex adjoint `[N_a, N_b; −conj(N_b), conj(N_a)]` of an `m×n` quaternion
/// matrix `N_a + N_b·j`, with `N_a = N₀ + N₁i` and `N_b = N₂ + N₃i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexAdjoint {
    data: DMatrix<Complex<f64>>,
}

impl ComplexAdjoint {
    /// Wraps a `2m×2n` complex matrix whose blocks satisfy the adjoint
    /// structure within [`ADJOINT_TOL`].
    pub fn try_new(data: DMatrix<Complex<f64>>) -> Result<Self> {
        if !data.nrows().is_multiple_of(2) || !data.ncols().is_multiple_of(2) {
            return Err(Error::Shape {
                op: "ComplexAdjoint",
                expected: "even dimensions".into(),
                got: format!("{}x{}", data.nrows(), data.ncols()),
            });
        }
        let deviation = structure_deviation(&data);
        if deviation > ADJOINT_TOL {
            return Err(Error::AdjointStructure { deviation });
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &DMatrix<Complex<f64>> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<Complex<f64>> {
        self.data
    }
}

/// Largest entrywise violation of the adjoint block pattern.
fn structure_deviation(c: &DMatrix<Complex<f64>>) -> f64 {
    let (m, n) = (c.nrows() / 2, c.ncols() / 2);
    let mut dev: f64 = 0.0;
    for col in 0..n {
        for row in 0..m {
            let a = c[(row, col)];
            let b = c[(row, col + n)];
            dev = dev.max((c[(row + m, col)] + b.conj()).norm());
            dev = dev.max((c[(row + m, col + n)] - a.conj()).norm());
        }
    }
    dev
}

pub fn is_valid_adjoint(c: &DMatrix<Complex<f64>>, tol: f64) -> bool {
    c.nrows().is_multiple_of(2) && c.ncols().is_multiple_of(2) && structure_deviation(c) <= tol
}

pub fn to_adjoint(a: &QuaternionMatrix) -> ComplexAdjoint {
    let (m, n) = a.dim();
    let [n0, n1, n2, n3] = a.parts();
    let data = DMatrix::from_fn(2 * m, 2 * n, |r, c| {
        let (br, bc) = (r / m, c / n);
        let (i, j) = (r % m, c % n);
        let na = Complex::new(n0[[i, j]], n1[[i, j]]);
        let nb = Complex::new(n2[[i, j]], n3[[i, j]]);
        match (br, bc) {
            (0, 0) => na,
            (0, 1) => nb,
            (1, 0) => -nb.conj(),
            _ => na.conj(),
        }
    });
    ComplexAdjoint { data }
}

/// Recovers the quaternion matrix, averaging the two redundant copies of
/// each block.
pub fn from_adjoint(c: &ComplexAdjoint) -> Result<QuaternionMatrix> {
    let d = &c.data;
    let deviation = structure_deviation(d);
    if deviation > ADJOINT_TOL {
        return Err(Error::AdjointStructure { deviation });
    }
    let (m, n) = (d.nrows() / 2, d.ncols() / 2);
    let mut q = QuaternionMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let na = (d[(i, j)] + d[(i + m, j + n)].conj()) * 0.5;
            let nb = (d[(i, j + n)] - d[(i + m, j)].conj()) * 0.5;
            q.set(i, j, super::Quaternion::new(na.re, na.im, nb.re, nb.im));
        }
    }
    Ok(q)
}
