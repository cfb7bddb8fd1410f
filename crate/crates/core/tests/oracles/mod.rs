//! Reference computations written independently of the library code paths.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use ndarray::Array2;
use qrpca::quaternion::{Quaternion, QuaternionMatrix};
use qrpca::solver::{solve, SolverConfig};
use qrpca::video::{to_quaternion, VideoTensor};

use crate::common::*;

type C64 = Complex<f64>;

/// Triple-loop product on scalar quaternions.
pub fn naive_qmul(a: &QuaternionMatrix, b: &QuaternionMatrix) -> QuaternionMatrix {
    assert_eq!(a.ncols(), b.nrows());
    QuaternionMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        let mut acc = Quaternion::ZERO;
        for k in 0..a.ncols() {
            acc += a.get(i, k) * b.get(k, j);
        }
        acc
    })
}

pub fn naive_adj(a: &QuaternionMatrix) -> QuaternionMatrix {
    QuaternionMatrix::from_fn(a.ncols(), a.nrows(), |i, j| a.get(j, i).conj())
}

/// `[A1 A2; −conj(A2) conj(A1)]` for `A = A1 + A2·j`.
pub fn adjoint(a: &QuaternionMatrix) -> DMatrix<C64> {
    let (m, n) = a.dim();
    DMatrix::from_fn(2 * m, 2 * n, |r, c| {
        let q = a.get(r % m, c % n);
        let a1 = C64::new(q.w, q.x);
        let a2 = C64::new(q.y, q.z);
        match (r < m, c < n) {
            (true, true) => a1,
            (true, false) => a2,
            (false, true) => -a2.conj(),
            (false, false) => a1.conj(),
        }
    })
}

/// Every other singular value of the complex adjoint, largest first.
pub fn adjoint_singular_values(a: &QuaternionMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = adjoint(a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s.into_iter()
        .step_by(2)
        .take(a.nrows().min(a.ncols()))
        .collect()
}

/// `UUᴴY + YVVᴴ − UUᴴYVVᴴ`.
pub fn dense_tangent_projection(
    y: &QuaternionMatrix,
    u: &QuaternionMatrix,
    v: &QuaternionMatrix,
) -> QuaternionMatrix {
    let puy = naive_qmul(u, &naive_qmul(&naive_adj(u), y));
    let ypv = naive_qmul(&naive_qmul(y, v), &naive_adj(v));
    let both = naive_qmul(&naive_qmul(&puy, v), &naive_adj(v));
    &(&puy + &ypv) - &both
}

fn grad(u: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (m, n) = u.dim();
    let gx = Array2::from_shape_fn((m, n), |(i, j)| {
        if i + 1 < m {
            u[[i + 1, j]] - u[[i, j]]
        } else {
            0.0
        }
    });
    let gy = Array2::from_shape_fn((m, n), |(i, j)| {
        if j + 1 < n {
            u[[i, j + 1]] - u[[i, j]]
        } else {
            0.0
        }
    });
    (gx, gy)
}

fn div(px: &Array2<f64>, py: &Array2<f64>) -> Array2<f64> {
    let (m, n) = px.dim();
    Array2::from_shape_fn((m, n), |(i, j)| {
        let a = if i + 1 < m { px[[i, j]] } else { 0.0 } - if i > 0 { px[[i - 1, j]] } else { 0.0 };
        let b = if j + 1 < n { py[[i, j]] } else { 0.0 } - if j > 0 { py[[i, j - 1]] } else { 0.0 };
        a + b
    })
}

fn tv(u: &Array2<f64>) -> f64 {
    let (gx, gy) = grad(u);
    gx.iter()
        .zip(gy.iter())
        .map(|(a, b)| (a * a + b * b).sqrt())
        .sum()
}

/// Chambolle's fixed-point projection for `min ½‖u − g‖² + w·TV(u)`, run
/// until the duality gap is below `1e-9` of the primal value.
pub fn chambolle_projection(g: &Array2<f64>, w: f64) -> Array2<f64> {
    let tau = 0.125;
    let (m, n) = g.dim();
    let mut px = Array2::<f64>::zeros((m, n));
    let mut py = Array2::<f64>::zeros((m, n));
    let gnorm = g.iter().map(|v| v * v).sum::<f64>();
    for it in 0..2_000_000 {
        let inner = &div(&px, &py) - &(g / w);
        let (gx, gy) = grad(&inner);
        for ((x, y), (a, b)) in px
            .iter_mut()
            .zip(py.iter_mut())
            .zip(gx.iter().zip(gy.iter()))
        {
            let s = 1.0 + tau * (a * a + b * b).sqrt();
            *x = (*x + tau * a) / s;
            *y = (*y + tau * b) / s;
        }
        if it % 200 == 0 {
            let u = g - &(&div(&px, &py) * w);
            let primal = 0.5 * (&u - g).iter().map(|v| v * v).sum::<f64>() + w * tv(&u);
            let dual = 0.5 * gnorm - 0.5 * u.iter().map(|v| v * v).sum::<f64>();
            if primal - dual <= 1e-9 * primal.abs().max(1e-12) {
                break;
            }
        }
    }
    g - &(&div(&px, &py) * w)
}

/// Random, step-edge, checkerboard and smooth-ramp frames.
pub fn tv_battery(size: usize) -> Vec<Array2<f64>> {
    use rand::Rng;
    let mut r = rng(404 + size as u64);
    vec![
        Array2::from_shape_fn((size, size), |_| r.random::<f64>()),
        Array2::from_shape_fn((size, size), |(_, j)| if j < size / 2 { 0.2 } else { 0.8 }),
        Array2::from_shape_fn((size, size), |(i, j)| ((i + j) % 2) as f64),
        Array2::from_shape_fn((size, size), |(i, j)| {
            (i * size + j) as f64 / (size * size) as f64
        }),
    ]
}

/// `σ₂/σ₁` of a real matrix, 0 when `σ₁ = 0` or there is one column.
pub fn sigma_ratio(plane: &Array2<f64>) -> f64 {
    let (m, n) = plane.dim();
    let mat = DMatrix::from_fn(m, n, |i, j| plane[[i, j]]);
    let mut s: Vec<f64> = mat.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    if s.len() < 2 || s[0] == 0.0 {
        0.0
    } else {
        s[1] / s[0]
    }
}

/// Background estimates to run the row-mode check on: random matrices,
/// short solves on small scenes, and the all-zero matrix.
pub fn iclr_fixtures() -> Vec<QuaternionMatrix> {
    let mut r = rng(505);
    let mut out = vec![
        random_q(&mut r, 50, 20).pure_part(),
        random_q(&mut r, 7, 3).pure_part(),
        QuaternionMatrix::zeros(30, 6),
    ];
    let sc = moving_block_scene(24, 24, 6, 0.02, 3);
    let d = to_quaternion(&VideoTensor::new(sc.noisy).unwrap());
    for warm_start in [true, false] {
        let cfg = SolverConfig {
            iters: 5,
            warm_start,
            ..SolverConfig::default()
        };
        out.push(solve(&d, 24, 24, &cfg).unwrap().l);
    }
    out
}
