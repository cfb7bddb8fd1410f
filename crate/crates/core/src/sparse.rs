//! Block-wise sparse update with motion-saliency thresholds.

use std::ops::Range;

use ndarray::{Array2, ArrayViewMut1, Axis};
use rayon::prelude::*;

use crate::error::{shape_err, Error, Result};
use crate::quaternion::QuaternionMatrix;

/// Lower clamp for block saliency.
pub const SALIENCY_FLOOR: f64 = 1e-6;

/// BT.601 luma weights for R, G, B.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// A rectangular block of one frame. Pixel `(i, j)` sits at row `i + j·m`
/// of the vectorized frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub frame: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Vectorized pixel indices, column-major.
    pub fn pixels(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.cols
            .clone()
            .flat_map(move |j| self.rows.clone().map(move |i| i + j * m))
    }
}

/// Non-overlapping grid of `block_h×block_w` tiles over every frame; edge
/// tiles are cropped. Blocks are ordered by frame, then tile column, then
/// tile row.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub block_h: usize,
    pub block_w: usize,
    pub m: usize,
    pub n: usize,
    pub t: usize,
    blocks: Vec<Block>,
}

impl BlockPartition {
    pub fn new(m: usize, n: usize, t: usize, block_h: usize, block_w: usize) -> Result<Self> {
        if block_h == 0 || block_w == 0 {
            return Err(Error::Config(format!(
                "block size must be positive, got {block_h}x{block_w}"
            )));
        }
        let mut blocks = Vec::new();
        for frame in 0..t {
            for c0 in (0..n).step_by(block_w) {
                for r0 in (0..m).step_by(block_h) {
                    blocks.push(Block {
                        frame,
                        rows: r0..(r0 + block_h).min(m),
                        cols: c0..(c0 + block_w).min(n),
                    });
                }
            }
        }
        Ok(Self {
            block_h,
            block_w,
            m,
            n,
            t,
            blocks,
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks_per_frame(&self) -> usize {
        self.m.div_ceil(self.block_h) * self.n.div_ceil(self.block_w)
    }

    fn check(&self, a: &QuaternionMatrix, op: &'static str) -> Result<()> {
        if a.dim() != (self.m * self.n, self.t) {
            return Err(shape_err(op, (self.m * self.n, self.t), a.dim()));
        }
        Ok(())
    }
}

/// Per-block motion saliency, one entry per block of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    sm: Vec<f64>,
}

impl SaliencyMap {
    pub fn values(&self) -> &[f64] {
        &self.sm
    }

    pub fn min(&self) -> f64 {
        self.sm.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Gray plane (`mn×t`) of a pure quaternion video.
pub fn gray(d: &QuaternionMatrix) -> Array2<f64> {
    let mut g = d.im_i() * LUMA[0];
    g.scaled_add(LUMA[1], d.im_j());
    g.scaled_add(LUMA[2], d.im_k());
    g
}

/// Mean absolute gray difference to the previous frame over each block;
/// the first frame is compared with the second.
pub fn compute_saliency(d: &QuaternionMatrix, part: &BlockPartition) -> Result<SaliencyMap> {
    part.check(d, "compute_saliency")?;
    if part.t < 2 {
        return Err(Error::InsufficientFrames(part.t));
    }
    let g = gray(d);
    let sm = part
        .blocks
        .iter()
        .map(|b| {
            let prev = if b.frame == 0 { 1 } else { b.frame - 1 };
            let sum: f64 = b
                .pixels(part.m)
                .map(|p| (g[[p, b.frame]] - g[[p, prev]]).abs())
                .sum();
            (sum / b.len() as f64).max(SALIENCY_FLOOR)
        })
        .collect();
    Ok(SaliencyMap { sm })
}

/// `λ_l = 0.1·SM_min / (SM_l·√max(m, n))`.
pub fn lambda_for_blocks(sal: &SaliencyMap, m: usize, n: usize) -> Vec<f64> {
    let min = sal.min();
    let scale = 0.1 / (m.max(n) as f64).sqrt();
    sal.sm.iter().map(|s| scale * min / s).collect()
}

/// Weighted block shrinkage: scales the block so its ℓ1 norm drops by
/// `eps`, or zeroes it.
pub fn wbs(block: &Array2<f64>, eps: f64) -> Array2<f64> {
    let mut out = block.clone();
    let l1: f64 = out.iter().map(|v| v.abs()).sum();
    let factor = if l1 > eps { (l1 - eps) / l1 } else { 0.0 };
    out.mapv_inplace(|v| v * factor);
    out
}

/// `Y_S = (D − L + E + F)/2 + (X − Y)/(2μ)`.
#[allow(clippy::too_many_arguments)]
pub fn sparse_target(
    d: &QuaternionMatrix,
    l: &QuaternionMatrix,
    e: &QuaternionMatrix,
    f: &QuaternionMatrix,
    x: &QuaternionMatrix,
    y: &QuaternionMatrix,
    mu: f64,
) -> QuaternionMatrix {
    let mut out = d - l;
    out.scaled_add(1.0, e);
    out.scaled_add(1.0, f);
    let mut out = out.scale(0.5);
    out.scaled_add(0.5 / mu, x);
    out.scaled_add(-0.5 / mu, y);
    out
}

/// Sparsity weight parameters: `ω = c2·log(|S| + eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityWeights {
    pub c2: f64,
    pub eps: f64,
}

impl SparsityWeights {
    pub fn weight(&self, s: f64) -> f64 {
        self.c2 * (s.abs() + self.eps).ln()
    }
}

/// Shrinks every block of every color channel of `y_s`. The block
/// threshold is `max(mean ω, 0)·λ_l/μ` with `ω` taken from `s_prev`.
pub fn update_s(
    y_s: &QuaternionMatrix,
    s_prev: &QuaternionMatrix,
    mu: f64,
    part: &BlockPartition,
    lambdas: &[f64],
    weights: SparsityWeights,
) -> Result<QuaternionMatrix> {
    part.check(y_s, "update_s")?;
    part.check(s_prev, "update_s")?;
    if lambdas.len() != part.len() {
        return Err(Error::Shape {
            op: "update_s",
            expected: format!("{} block thresholds", part.len()),
            got: lambdas.len().to_string(),
        });
    }
    let per_frame = part.blocks_per_frame();
    let mut out = QuaternionMatrix::zeros(y_s.nrows(), y_s.ncols());
    for p in 1..4 {
        let mut plane = y_s.part(p).clone();
        let prev = s_prev.part(p);
        plane
            .axis_iter_mut(Axis(1))
            .into_par_iter()
            .enumerate()
            .for_each(|(frame, mut col): (usize, ArrayViewMut1<f64>)| {
                let prev_col = prev.column(frame);
                let blocks = &part.blocks[frame * per_frame..(frame + 1) * per_frame];
                let lams = &lambdas[frame * per_frame..(frame + 1) * per_frame];
                for (b, &lam) in blocks.iter().zip(lams) {
                    let n = b.len() as f64;
                    let mean_w: f64 = b
                        .pixels(part.m)
                        .map(|i| weights.weight(prev_col[i]))
                        .sum::<f64>()
                        / n;
                    let eps = mean_w.max(0.0) * lam / mu;
                    let l1: f64 = b.pixels(part.m).map(|i| col[i].abs()).sum();
                    let factor = if l1 > eps { (l1 - eps) / l1 } else { 0.0 };
                    if factor != 1.0 {
                        for i in b.pixels(part.m) {
                            col[i] *= factor;
                        }
                    }
                }
            });
        out.part_mut(p).assign(&plane);
    }
    Ok(out)
}
