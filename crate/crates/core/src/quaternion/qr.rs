use super::{Quaternion, QuaternionMatrix};
use crate::error::{Error, Result};

/// Thin factorization `A = Q·R` with `QᴴQ = I` and `R` upper triangular.
#[derive(Debug, Clone)]
pub struct QrResult {
    pub q: QuaternionMatrix,
    pub r: QuaternionMatrix,
}

fn col_vec(a: &QuaternionMatrix, c: usize) -> Vec<Quaternion> {
    (0..a.nrows()).map(|r| a.get(r, c)).collect()
}

/// `col[k..] ← (I − 2wwᴴ)·col[k..]`.
fn reflect(w: &[Quaternion], col: &mut [Quaternion]) {
    let mut s = Quaternion::ZERO;
    for (wi, ci) in w.iter().zip(col.iter()) {
        s += wi.conj() * *ci;
    }
    let s = s.scale(2.0);
    for (wi, ci) in w.iter().zip(col.iter_mut()) {
        *ci -= *wi * s;
    }
}

/// Thin quaternion QR by Householder reflections.
///
/// Each reflector maps the active column `x` to `−phase(x₀)‖x‖·e₁`; the phases
/// are then moved from `R` into `Q` so that the diagonal of `R` is real and
/// nonnegative. Zero columns leave the reflector as the identity, which keeps
/// `Q` unitary and puts an exact zero on the diagonal.
pub fn qqr_thin(a: &QuaternionMatrix) -> Result<QrResult> {
    let (m, r) = a.dim();
    if m < r {
        return Err(Error::Shape {
            op: "qqr_thin",
            expected: "rows >= cols".into(),
            got: format!("{m}x{r}"),
        });
    }
    let mut cols: Vec<Vec<Quaternion>> = (0..r).map(|c| col_vec(a, c)).collect();
    let mut reflectors: Vec<Option<Vec<Quaternion>>> = Vec::with_capacity(r);
    let mut rmat = QuaternionMatrix::zeros(r, r);

    for k in 0..r {
        let x = &cols[k][k..];
        let alpha = x.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            reflectors.push(None);
        } else {
            let x0 = x[0];
            let phase = x0.phase();
            let beta = -phase.scale(alpha);
            let mut w: Vec<Quaternion> = x.to_vec();
            w[0] = x0 - beta;
            let wnorm = w.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
            for wi in &mut w {
                *wi = wi.scale(1.0 / wnorm);
            }
            for col in cols.iter_mut().skip(k) {
                reflect(&w, &mut col[k..]);
            }
            // Exact image of the pivot column.
            cols[k][k] = beta;
            for v in &mut cols[k][k + 1..] {
                *v = Quaternion::ZERO;
            }
            reflectors.push(Some(w));
        }
        for c in k..r {
            rmat.set(k, c, cols[c][k]);
        }
    }

    // Q = H₀·H₁·…·H_{r−1}·[I_r; 0]
    let mut qcols: Vec<Vec<Quaternion>> = (0..r)
        .map(|c| {
            let mut e = vec![Quaternion::ZERO; m];
            e[c] = Quaternion::ONE;
            e
        })
        .collect();
    for k in (0..r).rev() {
        if let Some(w) = &reflectors[k] {
            for col in &mut qcols {
                reflect(w, &mut col[k..]);
            }
        }
    }

    let mut q = QuaternionMatrix::zeros(m, r);
    for k in 0..r {
        let d = rmat.get(k, k).phase();
        for (i, v) in qcols[k].iter().enumerate() {
            q.set(i, k, *v * d);
        }
        for c in k..r {
            let v = d.conj() * rmat.get(k, c);
            rmat.set(k, c, v);
        }
        // Diagonal is |beta| up to rounding in the phase product.
        let diag = rmat.get(k, k);
        rmat.set(k, k, Quaternion::real(diag.norm()));
    }
    Ok(QrResult { q, r: rmat })
}
