//! First-order perturbation expansions of singular triplets.
//!
//! Given `X̃ = X + E`, [`perturb`] predicts the perturbed singular triplet
//! `(σ̃₁, ũ₁, ṽ₁)` to first order, including the contribution of the
//! left-complement block `U₃` for tall matrices. [`verify`] certifies such
//! predictions by measuring how fast their error shrinks with `‖E‖`: the
//! corrected expansions converge at order two while the defective variants
//! stall at order one.
//!
//! The remaining modules supply what that needs without external linear
//! algebra: a Jacobi SVD with full left factor ([`matcore`]), seeded test
//! problems ([`gen`]), and text interchange ([`mmio`]).

pub mod error;
pub mod gen;
pub mod matcore;
pub mod mmio;
pub mod perturb;
pub mod verify;

pub use error::{Error, Result};
pub use gen::{matrix_with_spectrum, perturbation_direction, SpectrumSpec};
pub use matcore::{
    frobenius_norm, matmul, qr_orthonormal, spectral_norm, svd, DenseMatrix, SvdFull,
};
pub use perturb::{
    closed_form_coefficients, compute_projections, expand, expand_triplet, partition_svd,
    shape_audit_as_printed, solve_coupled_system, transpose_dual_expansion, CorrectionCoefficients,
    ErrataItem, FormulaVariant, PerturbationProblem, Projections, ShapeAuditReport, SvdPartition,
    TripletExpansion, GAP_TOL,
};
pub use verify::{
    align_sign, convergence_ladder, residuals_at, ConvergenceReport, Ladder, ResidualSample,
    SeriesFit,
};
