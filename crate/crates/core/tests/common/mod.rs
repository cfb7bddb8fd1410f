#![allow(dead_code)]

use ndarray::{Array2, Array3};
use qrpca::quaternion::{Quaternion, QuaternionMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-1, 1]` on all four parts.
pub fn random_q(rng: &mut impl Rng, rows: usize, cols: usize) -> QuaternionMatrix {
    QuaternionMatrix::from_fn(rows, cols, |_, _| {
        Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    })
}

pub fn unit_column(rng: &mut impl Rng, n: usize) -> QuaternionMatrix {
    let v = random_q(rng, n, 1);
    v.scale(1.0 / v.frobenius_norm())
}

/// Synthetic surveillance clip: static textured background, one 12×12
/// colored block moving diagonally, and salt noise on a fraction of the
/// pixels of every frame.
pub struct MovingBlockScene {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub background: Array3<f64>,
    pub clean: Vec<Array3<f64>>,
    pub noisy: Vec<Array3<f64>>,
    pub block_masks: Vec<Array2<bool>>,
    pub salt_masks: Vec<Array2<bool>>,
}

pub const BLOCK: usize = 12;
pub const BLOCK_COLOR: [f64; 3] = [0.95, 0.15, 0.1];

pub fn background_64(m: usize, n: usize) -> Array3<f64> {
    Array3::from_shape_fn((m, n, 3), |(i, j, c)| {
        let (x, y) = (j as f64 / n as f64, i as f64 / m as f64);
        let base = [0.35 + 0.25 * x, 0.45 + 0.2 * y, 0.55 - 0.2 * x * y][c];
        base + 0.05 * ((i / 8 + j / 8) % 2) as f64
    })
}

pub fn block_origin(l: usize, t: usize, m: usize, n: usize) -> (usize, usize) {
    let span_i = (m - BLOCK) as f64;
    let span_j = (n - BLOCK) as f64;
    let s = l as f64 / (t - 1).max(1) as f64;
    ((s * span_i).round() as usize, (s * span_j).round() as usize)
}

pub fn moving_block_scene(m: usize, n: usize, t: usize, salt: f64, seed: u64) -> MovingBlockScene {
    let mut r = rng(seed);
    let background = background_64(m, n);
    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    let mut block_masks = Vec::new();
    let mut salt_masks = Vec::new();
    for l in 0..t {
        let (bi, bj) = block_origin(l, t, m, n);
        let mut f = background.clone();
        let mut mask = Array2::from_elem((m, n), false);
        for i in bi..bi + BLOCK {
            for j in bj..bj + BLOCK {
                mask[[i, j]] = true;
                for c in 0..3 {
                    f[[i, j, c]] = BLOCK_COLOR[c];
                }
            }
        }
        let mut g = f.clone();
        let mut smask = Array2::from_elem((m, n), false);
        for i in 0..m {
            for j in 0..n {
                if r.random::<f64>() < salt {
                    smask[[i, j]] = true;
                    for c in 0..3 {
                        g[[i, j, c]] = 1.0;
                    }
                }
            }
        }
        clean.push(f);
        noisy.push(g);
        block_masks.push(mask);
        salt_masks.push(smask);
    }
    MovingBlockScene {
        m,
        n,
        t,
        background,
        clean,
        noisy,
        block_masks,
        salt_masks,
    }
}
