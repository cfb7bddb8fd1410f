//! ADMM iterations for the quaternion decomposition `D = L + S`, `S = F + E`.

use std::collections::HashMap;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{low_rank_update, LowRankFactors};
use crate::quaternion::QuaternionMatrix;
use crate::sparse::{
    compute_saliency, lambda_for_blocks, sparse_target, update_s, BlockPartition, SparsityWeights,
};
use crate::tv::{update_f, TvSettings};
use crate::video::MaskSequence;

/// Solver settings. `rho1`/`rho2` left as `None` resolve to `2/√(mn)` and
/// `0.035·√(mn)` for the frame size at hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rank: usize,
    pub iters: usize,
    pub mu0: f64,
    pub rho: f64,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub eps: f64,
    pub block_h: usize,
    pub block_w: usize,
    pub fg_threshold: f64,
    pub tv_iters: usize,
    pub tv_tol: f64,
    /// Start `L` at the pure part of the initial rank-`r` factors instead
    /// of zero.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rank: 1,
            iters: 20,
            mu0: 1.0,
            rho: 1.5,
            rho1: None,
            rho2: None,
            c1: 1.0,
            c2: 0.1,
            eps: 1e-4,
            block_h: 16,
            block_w: 16,
            fg_threshold: 0.11,
            tv_iters: crate::tv::TV_MAX_ITERS,
            tv_tol: crate::tv::TV_TOL,
            warm_start: true,
        }
    }
}

impl SolverConfig {
    pub fn rho1_for(&self, m: usize, n: usize) -> f64 {
        self.rho1.unwrap_or_else(|| 2.0 / ((m * n) as f64).sqrt())
    }

    pub fn rho2_for(&self, m: usize, n: usize) -> f64 {
        self.rho2.unwrap_or_else(|| 0.035 * ((m * n) as f64).sqrt())
    }

    /// `μ` used in iteration `k` (0-based).
    pub fn mu_at(&self, k: usize) -> f64 {
        self.mu0 * self.rho.powi(k as i32)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.rank == 0 {
            return bad("rank must be at least 1");
        }
        if self.iters == 0 {
            return bad("iters must be at least 1");
        }
        if !(self.mu0 > 0.0) {
            return bad("mu0 must be positive");
        }
        if !(self.rho > 1.0) {
            return bad("rho must exceed 1");
        }
        if self.rho1.is_some_and(|v| !(v > 0.0)) || self.rho2.is_some_and(|v| !(v > 0.0)) {
            return bad("rho1 and rho2 must be positive");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.block_h == 0 || self.block_w == 0 {
            return bad("block size must be positive");
        }
        if !(self.fg_threshold >= 0.0) {
            return bad("fg_threshold must be nonnegative");
        }
        if self.tv_iters == 0 || !(self.tv_tol > 0.0) {
            return bad("tv_iters must be at least 1 and tv_tol positive");
        }
        Ok(())
    }
}

/// Relative residuals after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// `‖D − L − S‖/‖D‖`.
    pub primal: f64,
    /// `‖S − E − F‖/‖D‖`.
    pub split: f64,
}

/// Iterates of one ADMM run.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub l: QuaternionMatrix,
    pub s: QuaternionMatrix,
    pub e: QuaternionMatrix,
    pub f: QuaternionMatrix,
    pub x: QuaternionMatrix,
    pub y: QuaternionMatrix,
    pub factors: LowRankFactors,
    /// Completed iterations.
    pub k: usize,
}

/// Final components; all pure and shaped like `D`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub l: QuaternionMatrix,
    pub s: QuaternionMatrix,
    pub e: QuaternionMatrix,
    pub f: QuaternionMatrix,
    pub residuals: Vec<Residual>,
}

/// Step-wise driver; [`solve`] runs it to completion.
#[derive(Debug)]
pub struct Admm<'a> {
    d: &'a QuaternionMatrix,
    m: usize,
    n: usize,
    cfg: SolverConfig,
    part: BlockPartition,
    lambdas: Vec<f64>,
    state: AdmmState,
    residuals: Vec<Residual>,
}

impl<'a> Admm<'a> {
    /// `d` is the pure `mn×t` video matrix of `m×n` frames.
    pub fn new(d: &'a QuaternionMatrix, m: usize, n: usize, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if d.nrows() != m * n {
            return Err(Error::Config(format!(
                "frame size {m}x{n} does not match {} rows",
                d.nrows()
            )));
        }
        if !d.is_pure() {
            return Err(Error::Config("input matrix must be pure".into()));
        }
        let t = d.ncols();
        if t < 2 * cfg.rank || m * n < 2 * cfg.rank {
            return Err(Error::InsufficientFrames(t));
        }
        let part = BlockPartition::new(m, n, t, cfg.block_h, cfg.block_w)?;
        let sal = compute_saliency(d, &part)?;
        let lambdas = lambda_for_blocks(&sal, m, n);
        let zero = QuaternionMatrix::zeros(m * n, t);
        let factors = LowRankFactors::initial(d, cfg.rank);
        let l = if cfg.warm_start {
            factors.compose_pure()
        } else {
            zero.clone()
        };
        let state = AdmmState {
            l,
            s: zero.clone(),
            e: zero.clone(),
            f: zero.clone(),
            x: zero.clone(),
            y: zero,
            factors,
            k: 0,
        };
        Ok(Self {
            d,
            m,
            n,
            cfg,
            part,
            lambdas,
            state,
            residuals: Vec::new(),
        })
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn residuals(&self) -> &[Residual] {
        &self.residuals
    }

    /// `μ` of the next iteration.
    pub fn mu(&self) -> f64 {
        self.cfg.mu_at(self.state.k)
    }

    /// One pass of the S, L, E, F and multiplier updates.
    pub fn step(&mut self) -> Result<()> {
        let mu = self.mu();
        let cfg = &self.cfg;
        let d = self.d;
        let st = &mut self.state;

        let y_s = sparse_target(d, &st.l, &st.e, &st.f, &st.x, &st.y, mu);
        let weights = SparsityWeights {
            c2: cfg.c2,
            eps: cfg.eps,
        };
        let s = update_s(&y_s, &st.s, mu, &self.part, &self.lambdas, weights)?;

        let mut y_l = d - &s;
        y_l.scaled_add(1.0 / mu, &st.x);
        let (l, factors) = low_rank_update(&y_l, &st.factors, mu, cfg.c1)?;

        let e = update_e(&s, &st.f, &st.y, mu, cfg.rho1_for(self.m, self.n));
        let tv = TvSettings {
            max_iters: cfg.tv_iters,
            tol: cfg.tv_tol,
        };
        let f = update_f(
            &s,
            &e,
            &st.y,
            mu,
            cfg.rho2_for(self.m, self.n),
            self.m,
            self.n,
            tv,
        )?;

        let r1 = &(d - &l) - &s;
        let r2 = &(&s - &e) - &f;
        st.x.scaled_add(mu, &r1);
        st.y.scaled_add(mu, &r2);

        let dn = d.frobenius_norm();
        let rel = |v: f64| if dn > 0.0 { v / dn } else { 0.0 };
        self.residuals.push(Residual {
            primal: rel(r1.frobenius_norm()),
            split: rel(r2.frobenius_norm()),
        });
        st.l = l;
        st.s = s;
        st.e = e;
        st.f = f;
        st.factors = factors;
        st.k += 1;
        Ok(())
    }

    pub fn finish(self) -> Decomposition {
        Decomposition {
            l: self.state.l,
            s: self.state.s,
            e: self.state.e,
            f: self.state.f,
            residuals: self.residuals,
        }
    }
}

/// Runs `cfg.iters` iterations without early stopping.
pub fn solve(
    d: &QuaternionMatrix,
    m: usize,
    n: usize,
    cfg: &SolverConfig,
) -> Result<Decomposition> {
    let mut admm = Admm::new(d, m, n, cfg.clone())?;
    for _ in 0..cfg.iters {
        admm.step()?;
    }
    Ok(admm.finish())
}

/// Channelwise soft threshold of `P = S − F + Y/μ` at `ρ₁/μ`.
pub fn update_e(
    s: &QuaternionMatrix,
    f: &QuaternionMatrix,
    y: &QuaternionMatrix,
    mu: f64,
    rho1: f64,
) -> QuaternionMatrix {
    let mut p = s - f;
    p.scaled_add(1.0 / mu, y);
    let thr = rho1 / mu;
    let mut out = QuaternionMatrix::zeros(p.nrows(), p.ncols());
    for c in 1..4 {
        out.part_mut(c)
            .assign(&p.part(c).mapv(|v| soft_threshold(v, thr)));
    }
    out
}

pub fn soft_threshold(v: f64, thr: f64) -> f64 {
    v.signum() * (v.abs() - thr).max(0.0)
}

/// Row-wise mode replication: each row of each channel is overwritten with
/// its most frequent value (8-bit bins, smallest bin wins ties), taken from
/// the first column holding it.
pub fn crib(l: &QuaternionMatrix) -> QuaternionMatrix {
    let mut out = QuaternionMatrix::zeros(l.nrows(), l.ncols());
    for c in 1..4 {
        let plane = l.part(c);
        let mut dst = out.part_mut(c);
        for (src, mut row) in plane.axis_iter(Axis(0)).zip(dst.axis_iter_mut(Axis(0))) {
            let bins: Vec<i64> = src.iter().map(|v| (v * 255.0).round() as i64).collect();
            let mut counts: HashMap<i64, usize> = HashMap::new();
            for &b in &bins {
                *counts.entry(b).or_default() += 1;
            }
            let mode = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&b, _)| b)
                .unwrap_or(0);
            let first = bins.iter().position(|&b| b == mode).unwrap_or(0);
            row.fill(src[first]);
        }
    }
    out
}

/// Per-pixel mask `√(F_i² + F_j² + F_k²)/√3 > threshold`.
pub fn binarize_foreground(
    f: &QuaternionMatrix,
    threshold: f64,
    m: usize,
    n: usize,
) -> Result<MaskSequence> {
    if f.nrows() != m * n {
        return Err(Error::Shape {
            op: "binarize_foreground",
            expected: format!("{} rows", m * n),
            got: f.nrows().to_string(),
        });
    }
    let norm = 3f64.sqrt();
    let frames = (0..f.ncols())
        .map(|l| {
            Array2::from_shape_fn((m, n), |(i, j)| {
                let p = i + j * m;
                let (a, b, c) = (f.im_i()[[p, l]], f.im_j()[[p, l]], f.im_k()[[p, l]]);
                (a * a + b * b + c * c).sqrt() / norm > threshold
            })
        })
        .collect();
    MaskSequence::new(frames)
}
