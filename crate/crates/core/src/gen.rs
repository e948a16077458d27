//! Seeded test-matrix generation.
//!
//! All randomness comes from SplitMix64 (the standard 64-bit mixer with
//! increment `0x9E3779B97F4A7C15`). Uniform variates are
//! `((x >> 11) + 1) · 2⁻⁵³ ∈ (0, 1]`. Normal variates use Box–Muller on
//! consecutive uniform pairs `(u₁, u₂)`, producing `r·cos(2πu₂)` first and
//! `r·sin(2πu₂)` second with `r = √(−2 ln u₁)`. Matrices are filled in
//! column-major order. Together this pins every generated value, so other
//! implementations following the same recipe reproduce them bit for bit
//! (modulo libm differences in `ln`, `cos`, `sin`).

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::matcore::{frobenius_norm, qr_orthonormal, DenseMatrix};

/// Standard-normal stream driven by SplitMix64.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| self.normal()).collect();
        DenseMatrix::from_parts(rows, cols, data)
    }
}

/// `rows × cols` matrix of independent standard normals from a fresh stream.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    NormalStream::new(seed).matrix(rows, cols)
}

/// Target spectrum for [`matrix_with_spectrum`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub n: usize,
    pub p: usize,
    /// One value per triplet, `min(n, p)` of them, descending.
    pub singular_values: Vec<f64>,
    pub seed: u64,
}

impl SpectrumSpec {
    pub fn new(n: usize, p: usize, singular_values: Vec<f64>, seed: u64) -> Result<Self> {
        let spec = Self {
            n,
            p,
            singular_values,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks `n, p ≥ 1`, `min(n, p)` finite non-negative values in
    /// descending order.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidDims {
                n: self.n,
                p: self.p,
                reason: "dimensions must be positive",
            });
        }
        let want = self.n.min(self.p);
        let sv = &self.singular_values;
        if sv.len() != want {
            return Err(Error::InvalidSpectrum(format!(
                "expected {want} singular values, got {}",
                sv.len()
            )));
        }
        if sv.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidSpectrum(
                "singular values must be finite and non-negative".into(),
            ));
        }
        if sv.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpectrum(
                "singular values must be descending".into(),
            ));
        }
        Ok(())
    }

    /// `(σ₁ − σ₂)/σ₁`; `None` for a single value or a zero spectrum.
    pub fn leading_gap(&self) -> Option<f64> {
        match self.singular_values.as_slice() {
            [s1, s2, ..] if *s1 > 0.0 => Some((s1 - s2) / s1),
            _ => None,
        }
    }
}

const MAX_ATTEMPTS: usize = 3;

/// `X = Q_left · diag(σ) · Q_rightᵀ` with Haar-like orthonormal factors.
///
/// With `m = min(n, p)`, `Q_left` is `n×m` and `Q_right` is `p×m`, both the Q
/// factor of a Gaussian matrix drawn from one stream (left first, then
/// right). A rank-deficient draw is retried with the continuing stream, at
/// most three attempts in total.
pub fn matrix_with_spectrum(spec: &SpectrumSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let m = spec.n.min(spec.p);
    let mut stream = NormalStream::new(spec.seed);
    let mut last_err = None;
    for _ in 0..MAX_ATTEMPTS {
        let left = qr_orthonormal(&stream.matrix(spec.n, m));
        let right = qr_orthonormal(&stream.matrix(spec.p, m));
        match (left, right) {
            (Ok(ql), Ok(qr)) => {
                let d = DenseMatrix::from_diag(m, m, &spec.singular_values)?;
                return ql.matmul(&d)?.matmul(&qr.transpose());
            }
            (Err(e), _) | (_, Err(e)) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Seeded Gaussian direction scaled to unit Frobenius norm.
pub fn perturbation_direction(n: usize, p: usize, seed: u64) -> DenseMatrix {
    let g = gaussian_matrix(n, p, seed);
    let norm = frobenius_norm(&g);
    if norm == 0.0 {
        return g;
    }
    g.scaled(1.0 / norm)
}
