use super::{dot, frobenius_norm, norm2, DenseMatrix};
use crate::error::{Error, Result};

/// Relative threshold on `|R[j,j]|` below which the input is rank deficient.
const RANK_TOL: f64 = 1e-13;

/// Orthonormal factor `Q` of a thin QR factorization `A = Q R` with
/// `diag(R) > 0`.
///
/// Modified Gram–Schmidt with one full reorthogonalization pass, which keeps
/// `‖QᵀQ − I‖` at the level of rounding for well-conditioned inputs.
pub fn qr_orthonormal(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(Error::InvalidDims {
            n: rows,
            p: cols,
            reason: "QR needs at least as many rows as columns",
        });
    }
    let scale = frobenius_norm(a);
    let mut q = DenseMatrix::zeros(rows, cols);
    for j in 0..cols {
        let mut w = a.col(j).to_vec();
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.col(i);
                let r = dot(qi, &w);
                for (wk, &qk) in w.iter_mut().zip(qi) {
                    *wk -= r * qk;
                }
            }
        }
        let rjj = norm2(&w);
        if rjj <= RANK_TOL * scale {
            return Err(Error::RankDeficient {
                column: j,
                value: rjj,
            });
        }
        for (qk, wk) in q.col_mut(j).iter_mut().zip(&w) {
            *qk = wk / rjj;
        }
    }
    Ok(q)
}

/// Extends the orthonormal columns of `basis` (`n×k`) to a full orthonormal
/// basis of `Rⁿ`, returning only the `n − k` new columns.
///
/// Candidates are the standard basis vectors; at each step the one with the
/// largest residual after projection is taken (lowest index on ties), so the
/// result is deterministic.
pub(crate) fn complete_basis(basis: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = basis.to_vec();
    let mut added = Vec::with_capacity(n.saturating_sub(basis.len()));
    while all.len() < n {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for e in 0..n {
            let mut w = vec![0.0; n];
            w[e] = 1.0;
            for _pass in 0..2 {
                for q in &all {
                    let r = dot(q, &w);
                    for (wk, &qk) in w.iter_mut().zip(q) {
                        *wk -= r * qk;
                    }
                }
            }
            let nw = norm2(&w);
            if best.as_ref().is_none_or(|(b, _)| nw > *b) {
                best = Some((nw, w));
            }
        }
        let (nw, mut w) = best.expect("n > 0 inside loop");
        // At least one candidate keeps residual norm ≥ sqrt((n - k) / n).
        for wk in &mut w {
            *wk /= nw;
        }
        all.push(w.clone());
        added.push(w);
    }
    added
}
