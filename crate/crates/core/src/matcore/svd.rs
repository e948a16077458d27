//! One-sided (Hestenes) Jacobi SVD.
//!
//! The kernel runs on the taller orientation; wide inputs are transposed and
//! the factors swapped on return. Column pairs are rotated until every Gram
//! off-diagonal satisfies `|bₚ·b_q| ≤ JACOBI_TOL·‖bₚ‖‖b_q‖`, which makes the
//! normalized left vectors orthogonal to the same relative accuracy no matter
//! how small the singular value.
//!
//! The left factor is always returned square (`n×n`). Columns that the kernel
//! cannot supply (zero singular values, and the `n − p` complement directions)
//! are filled by completing the basis against the standard unit vectors.

use super::qr::complete_basis;
use super::{dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 30;
pub const JACOBI_TOL: f64 = 1e-14;

/// Full SVD `X = U·diag(S)·Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFull {
    /// `n×n`, orthonormal columns.
    pub u: DenseMatrix,
    /// `min(n, p)` values, non-negative and descending.
    pub s: Vec<f64>,
    /// `p×p`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdFull {
    /// `U·diag(S)·Vᵀ` with `diag(S)` embedded `n×p`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let d = DenseMatrix::from_diag(self.u.cols(), self.v.cols(), &self.s)
            .expect("singular values are finite");
        self.u
            .matmul(&d)
            .and_then(|ud| ud.matmul(&self.v.transpose()))
            .expect("factor shapes agree")
    }
}

pub fn svd(x: &DenseMatrix) -> Result<SvdFull> {
    let (n, p) = x.shape();
    let mut out = if n < p {
        let t = svd_tall(&x.transpose())?;
        SvdFull {
            u: t.v,
            s: t.s,
            v: t.u,
        }
    } else {
        svd_tall(x)?
    };
    normalize_signs(&mut out);
    Ok(out)
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(svd(a)?.s.first().copied().unwrap_or(0.0))
}

fn svd_tall(x: &DenseMatrix) -> Result<SvdFull> {
    let (m, n) = x.shape();
    debug_assert!(m >= n);
    let mut b = x.clone();
    let mut v = DenseMatrix::identity(n);

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(b.col(p), b.col(p));
                let beta = dot(b.col(q), b.col(q));
                let gamma = dot(b.col(p), b.col(q));
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut b, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = (0..n).map(|j| norm2(b.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal values keep their kernel order
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v = v.select_columns(&order);

    let mut left: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&j| {
            let sj = norms[j];
            (sj > f64::MIN_POSITIVE).then(|| b.col(j).iter().map(|x| x / sj).collect())
        })
        .collect();
    left.resize(m, None);

    let known: Vec<Vec<f64>> = left.iter().flatten().cloned().collect();
    let mut extra = complete_basis(&known, m).into_iter();
    let cols: Vec<Vec<f64>> = left
        .into_iter()
        .map(|c| c.unwrap_or_else(|| extra.next().expect("completion size matches")))
        .collect();
    let u = DenseMatrix::from_columns(m, &cols)?;

    Ok(SvdFull { u, s, v })
}

fn rotate_columns(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = a.rows();
    for i in 0..rows {
        let ap = a[(i, p)];
        let aq = a[(i, q)];
        a[(i, p)] = c * ap - s * aq;
        a[(i, q)] = s * ap + c * aq;
    }
}

/// For every paired triplet, make the largest-magnitude entry of `v_k`
/// (lowest index on ties) non-negative, flipping `u_k` with it.
fn normalize_signs(f: &mut SvdFull) {
    for k in 0..f.s.len() {
        let vk = f.v.col(k);
        let mut idx = 0;
        for (i, x) in vk.iter().enumerate() {
            if x.abs() > vk[idx].abs() {
                idx = i;
            }
        }
        if vk[idx] < 0.0 {
            f.v.col_mut(k).iter_mut().for_each(|x| *x = -*x);
            f.u.col_mut(k).iter_mut().for_each(|x| *x = -*x);
        }
    }
}
