//! First-order perturbation of a singular triplet.
//!
//! For `X = U Σ Vᵀ` (`n ≥ p`) with the selected triplet moved to the front,
//! write `U = (u₁, U₂, U₃)` and `V = (v₁, V₂)`, where `U₃` spans the `n − p`
//! left directions outside the range of the thin factor. For `X̃ = X + E` the
//! projected perturbation quantities are
//!
//! ```text
//! φ₁ = u₁ᵀEv₁   f₁₂ = V₂ᵀEᵀu₁   f₂₁ = U₂ᵀEv₁   f₃₁ = U₃ᵀEv₁
//! F₂₂ = U₂ᵀEV₂  F₃₂ = U₃ᵀEV₂
//! ```
//!
//! and the coefficients of the expansion solve the coupled system
//! `σ₁g₂ − Σ₂h₂ = f₂₁`, `σ₁h₂ − Σ₂g₂ = f₁₂`, whose solution is diagonal:
//!
//! ```text
//! h₂ = (σ₁²I − Σ₂²)⁻¹ (σ₁ f₁₂ + Σ₂ f₂₁)
//! g₂ = (σ₁²I − Σ₂²)⁻¹ (σ₁ f₂₁ + Σ₂ f₁₂)
//! g₃ = σ₁⁻¹ f₃₁
//! ```
//!
//! giving `ũ₁ = u₁ + U₂g₂ + U₃g₃`, `ṽ₁ = v₁ + V₂h₂`, `σ̃₁ = σ₁ + φ₁`, each
//! accurate to `O(‖E‖²)`. [`FormulaVariant`] also reproduces the defective
//! published forms (minus signs in the coupling terms, a missing `U₃` term)
//! so their first-order error can be measured.

mod audit;

pub use audit::{
    audit_formulas, corrected_formulas, printed_formulas, shape_audit_as_printed, ErrataItem,
    Finding, FormulaShape, ShapeAuditReport,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matcore::{dot, solve, svd, DenseMatrix, SvdFull};

/// Relative separation (w.r.t. `σ_max`) below which a triplet is rejected.
pub const GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaVariant {
    Corrected,
    /// Minus instead of plus in front of the `Σ₂` coupling terms of `g₂`, `h₂`.
    SignFlipped,
    /// Drops `U₃g₃` from `ũ₁`.
    U3Omitted,
    SignFlippedAndU3Omitted,
}

impl FormulaVariant {
    pub const ALL: [FormulaVariant; 4] = [
        FormulaVariant::Corrected,
        FormulaVariant::SignFlipped,
        FormulaVariant::U3Omitted,
        FormulaVariant::SignFlippedAndU3Omitted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulaVariant::Corrected => "corrected",
            FormulaVariant::SignFlipped => "sign-flipped",
            FormulaVariant::U3Omitted => "u3-omitted",
            FormulaVariant::SignFlippedAndU3Omitted => "both-defects",
        }
    }

    pub fn flips_sign(self) -> bool {
        matches!(
            self,
            FormulaVariant::SignFlipped | FormulaVariant::SignFlippedAndU3Omitted
        )
    }

    pub fn omits_u3(self) -> bool {
        matches!(
            self,
            FormulaVariant::U3Omitted | FormulaVariant::SignFlippedAndU3Omitted
        )
    }
}

impl fmt::Display for FormulaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormulaVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FormulaVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                format!("unknown variant `{s}` (expected corrected, sign-flipped, u3-omitted or both-defects)")
            })
    }
}

/// Full SVD split around one triplet.
///
/// `sigma2`, `u2`, `v2` hold the remaining `p − 1` triplets in descending
/// order. For the leading triplet `sigma1 > sigma2[0]`; for `index > 1` the
/// selected value sits inside the spectrum and the formulas still apply.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdPartition {
    /// 1-based position of the selected triplet in the descending spectrum.
    pub index: usize,
    pub u1: Vec<f64>,
    pub u2: DenseMatrix,
    /// `n×(n−p)`, empty when `n = p`.
    pub u3: DenseMatrix,
    pub v1: Vec<f64>,
    pub v2: DenseMatrix,
    pub sigma1: f64,
    pub sigma2: Vec<f64>,
    /// Largest singular value of the whole matrix.
    pub sigma_max: f64,
}

impl SvdPartition {
    pub fn n(&self) -> usize {
        self.u1.len()
    }

    pub fn p(&self) -> usize {
        self.v1.len()
    }

    /// Distance from `σ₁` to the rest of the spectrum, including the implicit
    /// zero singular value (`σ₁` itself) that sets the scale of `g₃`.
    pub fn absolute_gap(&self) -> f64 {
        self.sigma2
            .iter()
            .map(|s| (self.sigma1 - s).abs())
            .fold(self.sigma1, f64::min)
    }
}

/// Splits `full` around the `k`-th (1-based) triplet.
pub fn partition_svd(full: &SvdFull, k: usize) -> Result<SvdPartition> {
    let n = full.u.rows();
    let p = full.v.rows();
    if n < p {
        return Err(Error::InvalidDims {
            n,
            p,
            reason: "partition needs n >= p (transpose first)",
        });
    }
    if k == 0 || k > p {
        return Err(Error::IndexOutOfRange { k, max: p });
    }
    let i = k - 1;
    let sigma_max = full.s.first().copied().unwrap_or(0.0);
    let sigma1 = full.s[i];
    let gap = full
        .s
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, s)| (sigma1 - s).abs())
        .fold(sigma1, f64::min);
    if gap <= GAP_TOL * sigma_max {
        return Err(Error::GapTooSmall { k, gap });
    }

    let others: Vec<usize> = (0..p).filter(|&j| j != i).collect();
    let complement: Vec<usize> = (p..n).collect();
    Ok(SvdPartition {
        index: k,
        u1: full.u.col(i).to_vec(),
        u2: full.u.select_columns(&others),
        u3: full.u.select_columns(&complement),
        v1: full.v.col(i).to_vec(),
        v2: full.v.select_columns(&others),
        sigma1,
        sigma2: others.iter().map(|&j| full.s[j]).collect(),
        sigma_max,
    })
}

/// Coordinates of `E` in the unperturbed singular bases.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    pub phi1: f64,
    pub f12: Vec<f64>,
    pub f21: Vec<f64>,
    pub f31: Vec<f64>,
    pub f22: DenseMatrix,
    pub f32: DenseMatrix,
}

impl Projections {
    pub fn is_zero(&self) -> bool {
        self.phi1 == 0.0
            && self
                .f12
                .iter()
                .chain(&self.f21)
                .chain(&self.f31)
                .all(|&x| x == 0.0)
            && self.f22.is_zero()
            && self.f32.is_zero()
    }
}

pub fn compute_projections(part: &SvdPartition, e: &DenseMatrix) -> Result<Projections> {
    if e.shape() != (part.n(), part.p()) {
        return Err(Error::DimensionMismatch {
            op: "compute_projections",
            left: (part.n(), part.p()),
            right: e.shape(),
        });
    }
    let ev1 = e.matvec(&part.v1)?;
    let etu1 = e.tr_matvec(&part.u1)?;
    let ev2 = e.matmul(&part.v2)?;
    Ok(Projections {
        phi1: dot(&part.u1, &ev1),
        f12: part.v2.tr_matvec(&etu1)?,
        f21: part.u2.tr_matvec(&ev1)?,
        f31: part.u3.tr_matvec(&ev1)?,
        f22: part.u2.transpose().matmul(&ev2)?,
        f32: part.u3.transpose().matmul(&ev2)?,
    })
}

/// Expansion coefficients: `ũ₁ = u₁ + U₂g₂ + U₃g₃`, `ṽ₁ = v₁ + V₂h₂`,
/// `σ̃₁ = σ₁ + θ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionCoefficients {
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
    pub h2: Vec<f64>,
    pub theta1: f64,
}

impl CorrectionCoefficients {
    pub fn is_zero(&self) -> bool {
        self.theta1 == 0.0
            && self
                .g2
                .iter()
                .chain(&self.g3)
                .chain(&self.h2)
                .all(|&x| x == 0.0)
    }
}

/// Solves the coupled `2(p−1)` system
/// `σ₁g₂ − Σ₂h₂ = f₂₁`, `σ₁h₂ − Σ₂g₂ = f₁₂` by a dense LU solve.
///
/// This deliberately ignores the diagonal structure; it is the reference the
/// closed forms are checked against.
pub fn solve_coupled_system(
    part: &SvdPartition,
    proj: &Projections,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = part.sigma2.len();
    check_projection_dims(part, proj)?;
    let mut a = DenseMatrix::zeros(2 * m, 2 * m);
    for (j, &s) in part.sigma2.iter().enumerate() {
        a[(j, j)] = part.sigma1;
        a[(j, m + j)] = -s;
        a[(m + j, j)] = -s;
        a[(m + j, m + j)] = part.sigma1;
    }
    let rhs: Vec<f64> = proj.f21.iter().chain(&proj.f12).copied().collect();
    let x = solve(&a, &rhs)?;
    let (g2, h2) = x.split_at(m);
    Ok((g2.to_vec(), h2.to_vec()))
}

/// Entrywise `σ₁² − σ_k²`, rejecting near-coincident values.
pub fn resolvent_denominators(part: &SvdPartition) -> Result<Vec<f64>> {
    let floor = (GAP_TOL * part.sigma1).powi(2);
    part.sigma2
        .iter()
        .map(|&s| {
            let d = part.sigma1 * part.sigma1 - s * s;
            if d.abs() <= floor {
                Err(Error::GapTooSmall {
                    k: part.index,
                    gap: (part.sigma1 - s).abs(),
                })
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// Closed-form coefficients, evaluated entrywise.
pub fn closed_form_coefficients(
    part: &SvdPartition,
    proj: &Projections,
) -> Result<CorrectionCoefficients> {
    variant_coefficients(part, proj, false)
}

fn variant_coefficients(
    part: &SvdPartition,
    proj: &Projections,
    flip_sign: bool,
) -> Result<CorrectionCoefficients> {
    check_projection_dims(part, proj)?;
    if part.sigma1 <= 0.0 {
        return Err(Error::GapTooSmall {
            k: part.index,
            gap: part.sigma1,
        });
    }
    let denom = resolvent_denominators(part)?;
    let sign = if flip_sign { -1.0 } else { 1.0 };
    let s1 = part.sigma1;
    let mut g2 = Vec::with_capacity(denom.len());
    let mut h2 = Vec::with_capacity(denom.len());
    for (j, d) in denom.iter().enumerate() {
        let sk = part.sigma2[j];
        h2.push((s1 * proj.f12[j] + sign * sk * proj.f21[j]) / d);
        g2.push((s1 * proj.f21[j] + sign * sk * proj.f12[j]) / d);
    }
    Ok(CorrectionCoefficients {
        g2,
        g3: proj.f31.iter().map(|f| f / s1).collect(),
        h2,
        theta1: proj.phi1,
    })
}

fn check_projection_dims(part: &SvdPartition, proj: &Projections) -> Result<()> {
    let m = part.sigma2.len();
    let c = part.u3.cols();
    if proj.f12.len() != m || proj.f21.len() != m || proj.f31.len() != c {
        return Err(Error::DimensionMismatch {
            op: "projections",
            left: (m, c),
            right: (proj.f12.len(), proj.f31.len()),
        });
    }
    Ok(())
}

/// First-order prediction of the perturbed triplet. Vectors are not
/// renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletExpansion {
    pub u_tilde: Vec<f64>,
    pub v_tilde: Vec<f64>,
    pub sigma_tilde: f64,
    pub variant: FormulaVariant,
}

pub fn expand_triplet(
    part: &SvdPartition,
    e: &DenseMatrix,
    variant: FormulaVariant,
) -> Result<TripletExpansion> {
    let proj = compute_projections(part, e)?;
    let coef = variant_coefficients(part, &proj, variant.flips_sign())?;
    Ok(assemble(part, &coef, variant))
}

/// Builds the expanded vectors from coefficients.
pub fn assemble(
    part: &SvdPartition,
    coef: &CorrectionCoefficients,
    variant: FormulaVariant,
) -> TripletExpansion {
    let mut u = part.u1.clone();
    add_combination(&mut u, &part.u2, &coef.g2);
    if !variant.omits_u3() {
        add_combination(&mut u, &part.u3, &coef.g3);
    }
    let mut v = part.v1.clone();
    add_combination(&mut v, &part.v2, &coef.h2);
    TripletExpansion {
        u_tilde: u,
        v_tilde: v,
        sigma_tilde: part.sigma1 + coef.theta1,
        variant,
    }
}

/// `acc += basis · coef`.
fn add_combination(acc: &mut [f64], basis: &DenseMatrix, coef: &[f64]) {
    let mut delta = vec![0.0; acc.len()];
    for (j, &c) in coef.iter().enumerate() {
        for (d, &b) in delta.iter_mut().zip(basis.col(j)) {
            *d += b * c;
        }
    }
    for (a, d) in acc.iter_mut().zip(delta) {
        *a += d;
    }
}

/// A matrix prepared for expansion around one triplet.
///
/// Wide inputs (`n < p`) are transposed on entry so that the partition always
/// has `n ≥ p`; results are mapped back so `u_tilde` is always the left
/// vector of the matrix the caller passed in.
#[derive(Debug, Clone)]
pub struct PerturbationProblem {
    transposed: bool,
    shape: (usize, usize),
    x: DenseMatrix,
    svd: SvdFull,
    partition: SvdPartition,
}

impl PerturbationProblem {
    pub fn new(x: &DenseMatrix, k: usize) -> Result<Self> {
        let transposed = x.rows() < x.cols();
        let oriented = if transposed { x.transpose() } else { x.clone() };
        let svd = svd(&oriented)?;
        let partition = partition_svd(&svd, k)?;
        Ok(Self {
            transposed,
            shape: x.shape(),
            x: oriented,
            svd,
            partition,
        })
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    /// The matrix in `n ≥ p` orientation.
    pub fn oriented_matrix(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn svd(&self) -> &SvdFull {
        &self.svd
    }

    /// Partition of the oriented matrix.
    pub fn partition(&self) -> &SvdPartition {
        &self.partition
    }

    /// Brings a perturbation of the caller's shape into the oriented frame.
    pub fn orient(&self, e: &DenseMatrix) -> Result<DenseMatrix> {
        if e.shape() != self.shape {
            return Err(Error::DimensionMismatch {
                op: "perturbation",
                left: self.shape,
                right: e.shape(),
            });
        }
        Ok(if self.transposed {
            e.transpose()
        } else {
            e.clone()
        })
    }

    /// Projections in the oriented frame.
    pub fn projections(&self, e: &DenseMatrix) -> Result<Projections> {
        compute_projections(&self.partition, &self.orient(e)?)
    }

    pub fn expand(&self, e: &DenseMatrix, variant: FormulaVariant) -> Result<TripletExpansion> {
        let oriented = self.expand_oriented(&self.orient(e)?, variant)?;
        Ok(self.restore(oriented))
    }

    pub(crate) fn expand_oriented(
        &self,
        e: &DenseMatrix,
        variant: FormulaVariant,
    ) -> Result<TripletExpansion> {
        expand_triplet(&self.partition, e, variant)
    }

    pub(crate) fn restore(&self, mut t: TripletExpansion) -> TripletExpansion {
        if self.transposed {
            std::mem::swap(&mut t.u_tilde, &mut t.v_tilde);
        }
        t
    }
}

/// Expansion of the `k`-th triplet of `x` under `e`, any orientation.
pub fn expand(
    x: &DenseMatrix,
    e: &DenseMatrix,
    k: usize,
    variant: FormulaVariant,
) -> Result<TripletExpansion> {
    PerturbationProblem::new(x, k)?.expand(e, variant)
}

/// Corrected expansion computed from `Xᵀ, Eᵀ`, with the left/right roles
/// swapped back. For square inputs this is an independent route to the same
/// answer (up to the joint sign of the triplet).
pub fn transpose_dual_expansion(
    x: &DenseMatrix,
    e: &DenseMatrix,
    k: usize,
) -> Result<TripletExpansion> {
    let mut t = expand(&x.transpose(), &e.transpose(), k, FormulaVariant::Corrected)?;
    std::mem::swap(&mut t.u_tilde, &mut t.v_tilde);
    Ok(t)
}
