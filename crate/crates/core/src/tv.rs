//! Isotropic total variation and ROF denoising.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quaternion::QuaternionMatrix;

/// Default iteration cap for [`tv_denoise`].
pub const TV_MAX_ITERS: usize = 50;
/// Default relative duality-gap tolerance for [`tv_denoise`].
pub const TV_TOL: f64 = 1e-5;

/// Forward differences; the last row (column) difference is zero.
fn gradient(f: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (m, n) = f.dim();
    let mut dx = Array2::zeros((m, n));
    let mut dy = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            if i + 1 < m {
                dx[[i, j]] = f[[i + 1, j]] - f[[i, j]];
            }
            if j + 1 < n {
                dy[[i, j]] = f[[i, j + 1]] - f[[i, j]];
            }
        }
    }
    (dx, dy)
}

/// Negative adjoint of [`gradient`].
#[cfg(test)]
fn divergence(p: &Array2<f64>, q: &Array2<f64>) -> Array2<f64> {
    let (m, n) = p.dim();
    let mut d = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            let mut v = 0.0;
            if i + 1 < m {
                v += p[[i, j]];
            }
            if i > 0 {
                v -= p[[i - 1, j]];
            }
            if j + 1 < n {
                v += q[[i, j]];
            }
            if j > 0 {
                v -= q[[i, j - 1]];
            }
            d[[i, j]] = v;
        }
    }
    d
}

/// `Σ sqrt((f[i+1,j] − f[i,j])² + (f[i,j+1] − f[i,j])²)`.
pub fn tv_norm(f: ArrayView2<f64>) -> f64 {
    let (dx, dy) = gradient(f);
    dx.iter().zip(dy.iter()).map(|(a, b)| a.hypot(*b)).sum()
}

/// `weight·TV(f) + ½‖f − m‖²`.
pub fn tv_objective(f: ArrayView2<f64>, m: ArrayView2<f64>, weight: f64) -> f64 {
    let fid: f64 = f.iter().zip(m.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    weight * tv_norm(f) + 0.5 * fid
}

/// Dense row-major buffers for the dual iteration.
struct Dual {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl Dual {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            p: vec![0.0; rows * cols],
            q: vec![0.0; rows * cols],
        }
    }

    /// `out = m + weight·div(p, q)`.
    fn primal(&self, m: &[f64], weight: f64, out: &mut [f64]) {
        let (rows, cols) = (self.rows, self.cols);
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                let mut v = 0.0;
                if i + 1 < rows {
                    v += self.p[k];
                }
                if i > 0 {
                    v -= self.p[k - cols];
                }
                if j + 1 < cols {
                    v += self.q[k];
                }
                if j > 0 {
                    v -= self.q[k - 1];
                }
                out[k] = m[k] + weight * v;
            }
        }
    }
}

fn slice_tv(x: &[f64], rows: usize, cols: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            let dx = if i + 1 < rows {
                x[k + cols] - x[k]
            } else {
                0.0
            };
            let dy = if j + 1 < cols { x[k + 1] - x[k] } else { 0.0 };
            acc += dx.hypot(dy);
        }
    }
    acc
}

/// Duality gap is checked every this many iterations.
const GAP_EVERY: usize = 5;

/// Solves `min_f weight·TV(f) + ½‖f − m‖²` by fast gradient projection on
/// the dual. Stops once the duality gap is below `tol·(1 + |primal|)` or
/// after `max_iters` iterations.
pub fn tv_denoise(m: ArrayView2<f64>, weight: f64, max_iters: usize, tol: f64) -> Array2<f64> {
    let (rows, cols) = m.dim();
    if weight <= 0.0 || rows * cols == 0 {
        return m.to_owned();
    }
    let mv: Vec<f64> = m.iter().copied().collect();
    let norm_m: f64 = mv.iter().map(|v| v * v).sum();
    let step = 1.0 / (8.0 * weight);

    let mut cur = Dual::zeros(rows, cols);
    let mut ext = Dual::zeros(rows, cols);
    let mut x = vec![0.0; rows * cols];
    let mut tk = 1.0f64;
    for it in 1..=max_iters {
        ext.primal(&mv, weight, &mut x);
        let tn = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        let beta = (tk - 1.0) / tn;
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                let gx = if i + 1 < rows {
                    x[k + cols] - x[k]
                } else {
                    0.0
                };
                let gy = if j + 1 < cols { x[k + 1] - x[k] } else { 0.0 };
                let a = ext.p[k] + step * gx;
                let b = ext.q[k] + step * gy;
                let s = a.hypot(b).max(1.0);
                let (np, nq) = (a / s, b / s);
                ext.p[k] = np + beta * (np - cur.p[k]);
                ext.q[k] = nq + beta * (nq - cur.q[k]);
                cur.p[k] = np;
                cur.q[k] = nq;
            }
        }
        tk = tn;
        if it % GAP_EVERY == 0 || it == max_iters {
            cur.primal(&mv, weight, &mut x);
            let fid: f64 = x.iter().zip(&mv).map(|(a, b)| (a - b) * (a - b)).sum();
            let primal = weight * slice_tv(&x, rows, cols) + 0.5 * fid;
            let dual = 0.5 * norm_m - 0.5 * x.iter().map(|v| v * v).sum::<f64>();
            if primal - dual <= tol * (1.0 + primal.abs()) {
                break;
            }
        }
    }
    cur.primal(&mv, weight, &mut x);
    Array2::from_shape_vec((rows, cols), x).expect("buffer matches shape")
}

/// Inner solver settings for [`update_f`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvSettings {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for TvSettings {
    fn default() -> Self {
        Self {
            max_iters: TV_MAX_ITERS,
            tol: TV_TOL,
        }
    }
}

/// Column `l` of an `mn×t` plane as an `m×n` frame (column-major).
pub fn column_to_frame(plane: &Array2<f64>, l: usize, m: usize, n: usize) -> Array2<f64> {
    let col = plane.column(l);
    Array2::from_shape_fn((m, n), |(i, j)| col[i + j * m])
}

/// TV-denoises every frame of every color channel of `M = S − E + Y/μ`
/// with weight `ρ₂/μ`.
#[allow(clippy::too_many_arguments)]
pub fn update_f(
    s: &QuaternionMatrix,
    e: &QuaternionMatrix,
    y: &QuaternionMatrix,
    mu: f64,
    rho2: f64,
    m: usize,
    n: usize,
    settings: TvSettings,
) -> Result<QuaternionMatrix> {
    if s.nrows() != m * n || e.dim() != s.dim() || y.dim() != s.dim() {
        return Err(Error::Shape {
            op: "update_f",
            expected: format!("{}x{} inputs of equal shape", m * n, s.ncols()),
            got: format!("S {:?}, E {:?}, Y {:?}", s.dim(), e.dim(), y.dim()),
        });
    }
    let mut target = s - e;
    target.scaled_add(1.0 / mu, y);
    let weight = rho2 / mu;
    let t = s.ncols();
    let mut out = QuaternionMatrix::zeros(m * n, t);
    for p in 1..4 {
        let plane = target.part(p);
        let frames: Vec<Array2<f64>> = (0..t)
            .into_par_iter()
            .map(|l| {
                tv_denoise(
                    column_to_frame(plane, l, m, n).view(),
                    weight,
                    settings.max_iters,
                    settings.tol,
                )
            })
            .collect();
        let mut dst = out.part_mut(p);
        for (l, f) in frames.iter().enumerate() {
            let mut col = dst.index_axis_mut(Axis(1), l);
            for j in 0..n {
                for i in 0..m {
                    col[i + j * m] = f[[i, j]];
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn tv_norm_cases() {
        assert_eq!(tv_norm(Array2::from_elem((3, 4), 2.5).view()), 0.0);
        let f = array![[0.0, 1.0], [0.0, 1.0]];
        assert_eq!(tv_norm(f.view()), 2.0);
        let g = &f * 3.0;
        assert_eq!(tv_norm(g.view()), 6.0);
    }

    #[test]
    fn divergence_is_negative_adjoint() {
        let f = array![[0.3, -1.0, 2.0], [0.5, 0.1, -0.7]];
        let p = array![[1.0, 0.2, -0.4], [0.6, -0.3, 0.9]];
        let q = array![[-0.5, 0.8, 0.1], [0.2, 0.4, -1.1]];
        let (gx, gy) = gradient(f.view());
        let lhs: f64 = (&gx * &p).sum() + (&gy * &q).sum();
        let rhs: f64 = -(&f * &divergence(&p, &q)).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn limits() {
        let m = array![[0.0, 1.0, 0.5], [0.2, 0.9, 0.1], [1.0, 0.0, 0.3]];
        let tiny = tv_denoise(m.view(), 1e-9, 50, 1e-5);
        assert!((&tiny - &m).iter().all(|v| v.abs() < 1e-6));
        let c = Array2::from_elem((4, 4), 0.7);
        assert_eq!(tv_denoise(c.view(), 3.0, 50, 1e-5), c);
        let big = tv_denoise(m.view(), 1e3, 5000, 1e-12);
        let mean = m.mean().unwrap();
        assert!(big.iter().all(|v| (v - mean).abs() < 1e-4));
    }

    #[test]
    fn improves_on_trivial_candidate() {
        let m = array![
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0]
        ];
        let f = tv_denoise(m.view(), 0.2, 50, 1e-5);
        assert!(tv_objective(f.view(), m.view(), 0.2) <= tv_objective(m.view(), m.view(), 0.2));
    }

    #[test]
    fn update_f_shape_error() {
        let a = QuaternionMatrix::zeros(6, 2);
        assert!(update_f(&a, &a, &a, 1.0, 1.0, 2, 2, TvSettings::default()).is_err());
        let f = update_f(&a, &a, &a, 1.0, 1.0, 2, 3, TvSettings::default()).unwrap();
        assert_eq!(f, a);
    }
}
