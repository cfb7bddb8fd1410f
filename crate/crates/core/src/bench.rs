//! Timing of the full-decomposition low-rank update against the
//! fixed-rank manifold update on synthetic rank-one data.

use std::io::Write;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{full_qsvd_update, low_rank_update, LowRankFactors};
use crate::quaternion::QuaternionMatrix;

/// Untimed iterations run before timing each size.
pub const WARMUP: usize = 2;
/// Largest relative difference tolerated between the two paths.
pub const AGREEMENT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub rows: usize,
    pub cols_list: Vec<usize>,
    pub iters: usize,
    pub seed: u64,
    /// `μ` of the first timed iteration; grows by `rho` per iteration.
    pub mu0: f64,
    pub rho: f64,
    pub c1: f64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            rows: 10_000,
            cols_list: vec![25, 50, 75, 100, 125, 150, 175, 200],
            iters: 20,
            seed: 0,
            mu0: 1.0,
            rho: 1.5,
            c1: 1.0,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        let max = self.cols_list.iter().copied().max().unwrap_or(0);
        if self.cols_list.is_empty() || self.cols_list.contains(&0) {
            return Err(Error::Config(
                "cols list must be nonempty and positive".into(),
            ));
        }
        if self.rows < max || self.rows < 2 || max < 2 {
            return Err(Error::Config(format!(
                "need rows >= max cols >= 2, got rows {} and max cols {max}",
                self.rows
            )));
        }
        if self.iters == 0 {
            return Err(Error::Config("iters must be at least 1".into()));
        }
        if !(self.mu0 > 0.0) || !(self.rho > 1.0) {
            return Err(Error::Config("mu0 must be positive and rho above 1".into()));
        }
        Ok(())
    }
}

/// `C = A·B` with `A` a `rows×1` and `B` a `1×cols` matrix of `U(0, 1)`
/// entries, copied onto all three imaginary parts.
pub fn make_synthetic(spec: &BenchSpec, cols: usize) -> QuaternionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(cols as u64);
    let a: Vec<f64> = (0..spec.rows).map(|_| rng.random::<f64>()).collect();
    let b: Vec<f64> = (0..cols).map(|_| rng.random::<f64>()).collect();
    let c = Array2::from_shape_fn((spec.rows, cols), |(i, j)| a[i] * b[j]);
    QuaternionMatrix::from_parts(Array2::zeros((spec.rows, cols)), c.clone(), c.clone(), c)
        .expect("parts share a shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub cols: usize,
    /// Mean seconds per iteration of the full-decomposition path.
    pub qsvd_s: f64,
    /// Mean seconds per iteration of the manifold path.
    pub fwr1_s: f64,
    /// Largest relative difference between the paths over all iterations.
    pub max_rel_diff: f64,
}

/// Runs both update paths on the same targets for every size. Fails if the
/// paths disagree by more than [`AGREEMENT_TOL`] on any iteration.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    spec.cols_list
        .iter()
        .map(|&cols| bench_size(spec, cols))
        .collect()
}

fn bench_size(spec: &BenchSpec, cols: usize) -> Result<BenchRow> {
    let d = make_synthetic(spec, cols);
    let dn = d.frobenius_norm().max(f64::MIN_POSITIVE);
    let total = WARMUP + spec.iters;
    let mu_at = |k: usize| spec.mu0 * spec.rho.powi(k.saturating_sub(WARMUP) as i32);

    // Separate passes; only the small factors are kept for the comparison.
    let mut factors = LowRankFactors::initial(&d, 1);
    let mut history = Vec::with_capacity(total);
    let mut fwr1_s = 0.0;
    for k in 0..total {
        let start = Instant::now();
        let (_, next) = low_rank_update(&d, &factors, mu_at(k), spec.c1)?;
        if k >= WARMUP {
            fwr1_s += start.elapsed().as_secs_f64();
        }
        history.push(next.clone());
        factors = next;
    }

    let mut qsvd_s = 0.0;
    let mut max_rel_diff = 0.0f64;
    for (k, fast) in history.iter().enumerate() {
        let start = Instant::now();
        let (full, _) = full_qsvd_update(&d, 1, mu_at(k), spec.c1);
        if k >= WARMUP {
            qsvd_s += start.elapsed().as_secs_f64();
        }
        let diff = (&full - &fast.compose_pure()).frobenius_norm() / dn;
        if !(diff <= AGREEMENT_TOL) {
            return Err(Error::Numeric(format!(
                "update paths disagree at cols={cols}, iteration {k}: relative difference {diff:e}"
            )));
        }
        max_rel_diff = max_rel_diff.max(diff);
    }
    let iters = spec.iters as f64;
    Ok(BenchRow {
        cols,
        qsvd_s: qsvd_s / iters,
        fwr1_s: fwr1_s / iters,
        max_rel_diff,
    })
}

/// Writes `cols,qsvd_s,fwr1_s` followed by one row per size.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cols", "qsvd_s", "fwr1_s"])?;
    for r in rows {
        w.write_record([
            r.cols.to_string(),
            r.qsvd_s.to_string(),
            r.fwr1_s.to_string(),
        ])?;
    }
    w.flush()
}
