//! Low-rank update on the fixed-rank quaternion manifold.
//!
//! Instead of a full QSVD of the `mn×t` target, the target is projected onto
//! the tangent space at the current factors, the `2r×2r` core of that
//! projection is shrunk with singular-value weights, and the result is mapped
//! back through a retraction. Only two thin QR factorizations and a tiny
//! QSVD are needed per step.

use crate::error::{Error, Result};
use crate::quaternion::{
    columns_to_matrix, matrix_columns, orthonormalize, qmul, qmul_adj, qqr_thin, qsvd, qsvd_gram,
    scaled_outer_pure, two_sided_products, unitarity_drift, QuaternionMatrix,
};

/// The `ε` inside the `e^ε` factor of the singular value weights.
pub const WEIGHT_EPS: f64 = 1e-4;

/// Factors are re-orthonormalized once their drift exceeds this.
pub const REORTHO_TOL: f64 = 1e-8;

/// Inputs with larger drift are rejected.
pub const FACTOR_TOL: f64 = 1e-6;

/// A point `U·diag(σ)·Vᴴ` on the rank-`r` manifold.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    pub u: QuaternionMatrix,
    pub sigma: Vec<f64>,
    pub v: QuaternionMatrix,
}

/// The solver only ever runs at rank one.
pub type Rank1Factors = LowRankFactors;

impl LowRankFactors {
    pub fn new(u: QuaternionMatrix, sigma: Vec<f64>, v: QuaternionMatrix) -> Result<Self> {
        let r = sigma.len();
        if u.ncols() != r || v.ncols() != r {
            return Err(Error::Shape {
                op: "LowRankFactors",
                expected: format!("{r} factor columns"),
                got: format!("U {:?}, V {:?}", u.dim(), v.dim()),
            });
        }
        let f = Self { u, sigma, v };
        let drift = f.drift();
        if drift > FACTOR_TOL {
            return Err(Error::FactorNotUnitary { drift });
        }
        Ok(f)
    }

    /// Truncated QSVD of `d` via the Gram route.
    pub fn initial(d: &QuaternionMatrix, r: usize) -> Self {
        let s = qsvd_gram(d, Some(r));
        Self {
            u: s.u,
            sigma: s.sigma,
            v: s.v,
        }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn drift(&self) -> f64 {
        unitarity_drift(&self.u).max(unitarity_drift(&self.v))
    }

    pub fn compose(&self) -> QuaternionMatrix {
        crate::quaternion::compose(&self.u, &self.sigma, &self.v)
    }

    /// Pure part of `U·diag(σ)·Vᴴ`.
    pub fn compose_pure(&self) -> QuaternionMatrix {
        scaled_outer_pure(&self.u, &self.sigma, &self.v).expect("factor shapes agree")
    }

    /// Restores orthonormal columns by folding thin QR factors into a small
    /// core and re-diagonalizing it.
    pub fn reorthonormalize(&self) -> Self {
        let qu = qqr_thin(&self.u).expect("tall factor");
        let qv = qqr_thin(&self.v).expect("tall factor");
        let s = LowRankFactors {
            u: qu.r,
            sigma: self.sigma.clone(),
            v: qv.r,
        };
        let small = qsvd(&s.compose(), None);
        Self {
            u: qmul(&qu.q, &small.u).expect("shapes agree"),
            sigma: small.sigma,
            v: qmul(&qv.q, &small.v).expect("shapes agree"),
        }
    }
}

/// The `2r×2r` matrix `[[UᴴYV, R₁ᴴ], [R₂, 0]]`.
#[derive(Debug, Clone)]
pub struct SmallCore {
    q: QuaternionMatrix,
}

impl SmallCore {
    pub fn matrix(&self) -> &QuaternionMatrix {
        &self.q
    }
}

/// Compact tangent projection `π(Y) = [U, Q₂]·core·[V, Q₁]ᴴ`.
#[derive(Debug, Clone)]
pub struct TangentProjection {
    pub core: SmallCore,
    /// `t×r`, orthogonal to `V`.
    pub q1: QuaternionMatrix,
    /// `mn×r`, orthogonal to `U`.
    pub q2: QuaternionMatrix,
}

impl TangentProjection {
    /// Dense `π(Y)`; only meant for checks on small inputs.
    pub fn expand(&self, f: &LowRankFactors) -> QuaternionMatrix {
        let left = f.u.hstack(&self.q2).expect("same rows");
        let right = f.v.hstack(&self.q1).expect("same rows");
        let lc = qmul(&left, &self.core.q).expect("shapes agree");
        crate::quaternion::qmul_adj_right(&lc, &right).expect("shapes agree")
    }
}

/// `x ← x − B·(Bᴴx)`, applied twice.
fn project_out(x: &mut QuaternionMatrix, basis: &QuaternionMatrix) {
    for _ in 0..2 {
        let c = qmul_adj(basis, x).expect("same rows");
        let bc = qmul(basis, &c).expect("shapes agree");
        *x = &*x - &bc;
    }
}

/// Thin QR of `x` whose `Q` is kept orthogonal to `basis`. Columns whose `R`
/// diagonal is negligible carry no information; they are replaced by an
/// orthonormal completion and their `R` row is zeroed.
fn orthogonal_qr(
    x: &QuaternionMatrix,
    basis: &QuaternionMatrix,
    scale: f64,
) -> (QuaternionMatrix, QuaternionMatrix) {
    let qr = qqr_thin(x).expect("tall input");
    let (mut q, mut r) = (qr.q, qr.r);
    let k = r.nrows();
    let tiny = 1e-10 * scale;
    if (0..k).all(|i| r.get(i, i).w > tiny) {
        return (q, r);
    }
    let mut qcols = matrix_columns(&q);
    let bcols = matrix_columns(basis);
    for i in 0..k {
        if r.get(i, i).w > tiny {
            continue;
        }
        for c in 0..k {
            r.set(i, c, Default::default());
        }
        let others: Vec<_> = bcols
            .iter()
            .chain(
                qcols
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, c)| c),
            )
            .cloned()
            .collect();
        qcols[i] = orthonormalize(std::mem::take(&mut qcols[i]), &others);
    }
    q = columns_to_matrix(&qcols, q.nrows());
    (q, r)
}

/// Projects `y` onto the tangent space at `f` in compact form.
pub fn tangent_compact(y: &QuaternionMatrix, f: &LowRankFactors) -> Result<TangentProjection> {
    let (m, t) = y.dim();
    let r = f.rank();
    if f.u.nrows() != m || f.v.nrows() != t {
        return Err(Error::Shape {
            op: "tangent_compact",
            expected: format!("U {m}x{r}, V {t}x{r}"),
            got: format!("U {:?}, V {:?}", f.u.dim(), f.v.dim()),
        });
    }
    if m < 2 * r || t < 2 * r {
        return Err(Error::Shape {
            op: "tangent_compact",
            expected: format!("at least {} rows and columns", 2 * r),
            got: format!("{m}x{t}"),
        });
    }
    let drift = f.drift();
    if drift > FACTOR_TOL {
        return Err(Error::FactorNotUnitary { drift });
    }

    let (uy, yv, norm_sqr) = two_sided_products(y, &f.u, &f.v)?;
    let m11 = qmul(&uy, &f.v)?;

    let mut x1 = uy.conj_transpose();
    project_out(&mut x1, &f.v);
    let mut x2 = yv;
    project_out(&mut x2, &f.u);

    let scale = norm_sqr.sqrt();
    let (q1, r1) = orthogonal_qr(&x1, &f.v, scale);
    let (q2, r2) = orthogonal_qr(&x2, &f.u, scale);

    let mut core = QuaternionMatrix::zeros(2 * r, 2 * r);
    let r1h = r1.conj_transpose();
    for i in 0..r {
        for j in 0..r {
            core.set(i, j, m11.get(i, j));
            core.set(i, r + j, r1h.get(i, j));
            core.set(r + i, j, r2.get(i, j));
        }
    }
    Ok(TangentProjection {
        core: SmallCore { q: core },
        q1,
        q2,
    })
}

/// `ω_l = c1·σ_l / ((σ_{l+1} + σ_l)·e^ε)` with `σ` past the end taken as 0
/// and `0/0` as 0.
pub fn singular_value_weights(sigma: &[f64], c1: f64) -> Vec<f64> {
    let e = WEIGHT_EPS.exp();
    (0..sigma.len())
        .map(|l| {
            let next = sigma.get(l + 1).copied().unwrap_or(0.0);
            let denom = (next + sigma[l]) * e;
            if denom == 0.0 {
                0.0
            } else {
                c1 * sigma[l] / denom
            }
        })
        .collect()
}

/// `max(σ_l − ω_l/μ, 0)`.
pub fn weighted_shrink(sigma: &[f64], mu: f64, c1: f64) -> Vec<f64> {
    singular_value_weights(sigma, c1)
        .iter()
        .zip(sigma)
        .map(|(w, s)| (s - w / mu).max(0.0))
        .collect()
}

/// Shrunk QSVD of the core, values descending.
#[derive(Debug, Clone)]
pub struct ShrunkCore {
    pub uq: QuaternionMatrix,
    pub sigma: Vec<f64>,
    pub vq: QuaternionMatrix,
}

pub fn weighted_shrink_core(core: &SmallCore, mu: f64, c1: f64) -> ShrunkCore {
    let s = qsvd(&core.q, None);
    let shrunk = weighted_shrink(&s.sigma, mu, c1);
    let mut order: Vec<usize> = (0..shrunk.len()).collect();
    order.sort_by(|&a, &b| shrunk[b].total_cmp(&shrunk[a]).then(a.cmp(&b)));
    if order.iter().enumerate().all(|(i, &j)| i == j) {
        return ShrunkCore {
            uq: s.u,
            sigma: shrunk,
            vq: s.v,
        };
    }
    let ucols = matrix_columns(&s.u);
    let vcols = matrix_columns(&s.v);
    let pick = |cols: &[Vec<_>]| order.iter().map(|&i| cols[i].clone()).collect::<Vec<_>>();
    let n = s.u.nrows();
    ShrunkCore {
        uq: columns_to_matrix(&pick(&ucols), n),
        sigma: order.iter().map(|&i| shrunk[i]).collect(),
        vq: columns_to_matrix(&pick(&vcols), n),
    }
}

/// Maps the shrunk core back: `U ← [U, Q₂]·U_q(:, :r)`, `V ← [V, Q₁]·V_q(:, :r)`.
pub fn retract(f: &LowRankFactors, tp: &TangentProjection, shrunk: &ShrunkCore) -> LowRankFactors {
    let r = f.rank();
    let left = f.u.hstack(&tp.q2).expect("same rows");
    let right = f.v.hstack(&tp.q1).expect("same rows");
    let next = LowRankFactors {
        u: qmul(&left, &shrunk.uq.columns(0, r)).expect("shapes agree"),
        sigma: shrunk.sigma[..r].to_vec(),
        v: qmul(&right, &shrunk.vq.columns(0, r)).expect("shapes agree"),
    };
    if next.drift() > REORTHO_TOL {
        next.reorthonormalize()
    } else {
        next
    }
}

/// One weighted low-rank step: returns the pure background estimate and the
/// factors to carry into the next step.
pub fn low_rank_update(
    y: &QuaternionMatrix,
    f: &LowRankFactors,
    mu: f64,
    c1: f64,
) -> Result<(QuaternionMatrix, LowRankFactors)> {
    let tp = tangent_compact(y, f)?;
    let shrunk = weighted_shrink_core(&tp.core, mu, c1);
    let next = retract(f, &tp, &shrunk);
    Ok((next.compose_pure(), next))
}

/// Reference update through a QSVD of the whole matrix: every singular value
/// is weighted, then the result is truncated to rank `r`.
pub fn full_qsvd_update(
    y: &QuaternionMatrix,
    r: usize,
    mu: f64,
    c1: f64,
) -> (QuaternionMatrix, LowRankFactors) {
    // The whole spectrum is computed; left vectors past r + 1 are never used.
    let s = qsvd_gram(y, Some(r + 1));
    let shrunk = weighted_shrink(&s.sigma, mu, c1);
    let r = r.min(shrunk.len());
    let f = LowRankFactors {
        u: s.u.columns(0, r),
        sigma: shrunk[..r].to_vec(),
        v: s.v.columns(0, r),
    };
    (f.compose_pure(), f)
}
