//! Empirical convergence order of the expansions.
//!
//! For a ladder `ε_i = ε₀·fⁱ` the exact triplet of `X + ε_i·E` is recomputed,
//! matched to the unperturbed one and compared with the first-order
//! prediction. A correct expansion leaves an `O(ε²)` residual, a defective one
//! `O(ε)`; the least-squares slope of `log residual` against `log ε`
//! estimates that order.

use crate::error::{Error, Result};
use crate::matcore::{distance, dot, frobenius_norm, svd, DenseMatrix};
use crate::perturb::{FormulaVariant, PerturbationProblem};

/// Samples at or below this residual are rounding noise and not fitted.
pub const FLOOR_TOL: f64 = 1e-13;
/// Minimum `|⟨v̂_j, v₁⟩|` accepted when matching the perturbed triplet.
pub const MATCH_TOL: f64 = 0.7;

pub const DEFAULT_EPS0: f64 = 1e-2;
pub const DEFAULT_FACTOR: f64 = 0.5;
pub const DEFAULT_COUNT: usize = 8;

/// Returns `candidate` or its negation, whichever has a non-negative inner
/// product with `reference`.
pub fn align_sign(reference: &[f64], candidate: &[f64]) -> Result<Vec<f64>> {
    if reference.len() != candidate.len() {
        return Err(Error::DimensionMismatch {
            op: "align_sign",
            left: (reference.len(), 1),
            right: (candidate.len(), 1),
        });
    }
    if candidate.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    if dot(reference, candidate) < 0.0 {
        Ok(candidate.iter().map(|x| -x).collect())
    } else {
        Ok(candidate.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub epsilon: f64,
    pub res_u: f64,
    pub res_v: f64,
    pub res_sigma: f64,
}

/// Exact triplet of a perturbed matrix, matched and sign-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedTriplet {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma: f64,
    /// `|⟨v̂, v₁⟩|` of the match.
    pub overlap: f64,
}

fn check_direction(e_dir: &DenseMatrix) -> Result<()> {
    let norm = frobenius_norm(e_dir);
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::DirectionNotNormalized { norm });
    }
    Ok(())
}

impl PerturbationProblem {
    /// Exact triplet of `X + E` (oriented frame) that tracks the selected one.
    pub fn exact_triplet(&self, e: &DenseMatrix) -> Result<MatchedTriplet> {
        let oriented = self.orient(e)?;
        let perturbed = self.oriented_matrix().add(&oriented)?;
        let full = svd(&perturbed)?;
        let part = self.partition();
        let p = part.p();
        let (best, overlap) = (0..p)
            .map(|j| (j, dot(full.v.col(j), &part.v1).abs()))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, c| if c.1 > acc.1 { c } else { acc },
            );
        if overlap < MATCH_TOL {
            return Err(Error::TripletMatchAmbiguous { overlap });
        }
        Ok(MatchedTriplet {
            u: align_sign(&part.u1, full.u.col(best))?,
            v: align_sign(&part.v1, full.v.col(best))?,
            sigma: full.s[best],
            overlap,
        })
    }

    /// Residuals of `variant` against the exact triplet of `X + ε·E_dir`.
    pub fn residuals_at(
        &self,
        e_dir: &DenseMatrix,
        epsilon: f64,
        variant: FormulaVariant,
    ) -> Result<ResidualSample> {
        check_direction(e_dir)?;
        let e = e_dir.scaled(epsilon);
        let exact = self.exact_triplet(&e)?;
        let predicted = self.expand_oriented(&self.orient(&e)?, variant)?;
        let mut res_u = distance(&exact.u, &predicted.u_tilde);
        let mut res_v = distance(&exact.v, &predicted.v_tilde);
        if self.is_transposed() {
            std::mem::swap(&mut res_u, &mut res_v);
        }
        Ok(ResidualSample {
            epsilon,
            res_u,
            res_v,
            res_sigma: (exact.sigma - predicted.sigma_tilde).abs(),
        })
    }
}

/// Residuals for the `k`-th triplet of `x` at one perturbation size.
pub fn residuals_at(
    x: &DenseMatrix,
    e_dir: &DenseMatrix,
    epsilon: f64,
    k: usize,
    variant: FormulaVariant,
) -> Result<ResidualSample> {
    PerturbationProblem::new(x, k)?.residuals_at(e_dir, epsilon, variant)
}

/// Least-squares line through `(log ε, log r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesFit {
    pub order: f64,
    pub r2: f64,
    /// Samples above [`FLOOR_TOL`] that entered the fit.
    pub used: usize,
}

/// Fits `log r = c + order·log ε` over samples with `r > FLOOR_TOL`.
///
/// Returns `None` with fewer than three usable samples. A perfect fit has
/// `r2 = 1`; a fit with zero residual variance also reports 1.
pub fn fit_log_log(eps: &[f64], res: &[f64]) -> Option<SeriesFit> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(res)
        .filter(|(_, &r)| r > FLOOR_TOL)
        .map(|(&e, &r)| (e.ln(), r.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Some(SeriesFit {
        order: slope,
        r2,
        used: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub variant: FormulaVariant,
    /// Ordered by decreasing `epsilon`.
    pub samples: Vec<ResidualSample>,
    pub u: SeriesFit,
    pub v: SeriesFit,
    pub sigma: SeriesFit,
}

impl ConvergenceReport {
    /// Fits the three residual series of `samples`.
    pub fn from_samples(variant: FormulaVariant, samples: Vec<ResidualSample>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::InvalidLadder(format!(
                "a report needs at least 4 samples, got {}",
                samples.len()
            )));
        }
        let eps: Vec<f64> = samples.iter().map(|s| s.epsilon).collect();
        let fit = |series: &'static str, r: Vec<f64>| {
            fit_log_log(&eps, &r).ok_or_else(|| Error::InsufficientSamples {
                series,
                survived: r.iter().filter(|&&x| x > FLOOR_TOL).count(),
            })
        };
        let u = fit("res_u", samples.iter().map(|s| s.res_u).collect())?;
        let v = fit("res_v", samples.iter().map(|s| s.res_v).collect())?;
        let sigma = fit("res_sigma", samples.iter().map(|s| s.res_sigma).collect())?;
        Ok(Self {
            variant,
            samples,
            u,
            v,
            sigma,
        })
    }

    pub fn order_u(&self) -> f64 {
        self.u.order
    }

    pub fn order_v(&self) -> f64 {
        self.v.order
    }

    pub fn order_sigma(&self) -> f64 {
        self.sigma.order
    }

    pub fn min_r2(&self) -> f64 {
        self.u.r2.min(self.v.r2).min(self.sigma.r2)
    }
}

/// Ladder of perturbation sizes `eps0 · factor^i`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    pub eps0: f64,
    pub factor: f64,
    pub count: usize,
}

impl Default for Ladder {
    fn default() -> Self {
        Self {
            eps0: DEFAULT_EPS0,
            factor: DEFAULT_FACTOR,
            count: DEFAULT_COUNT,
        }
    }
}

impl Ladder {
    pub fn validate(&self) -> Result<()> {
        if self.count < 4 {
            return Err(Error::InvalidLadder(format!(
                "count must be at least 4, got {}",
                self.count
            )));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::InvalidLadder(format!(
                "factor must lie in (0, 1), got {}",
                self.factor
            )));
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(Error::InvalidLadder(format!(
                "eps0 must be positive, got {}",
                self.eps0
            )));
        }
        Ok(())
    }

    pub fn epsilons(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.eps0 * self.factor.powi(i as i32))
            .collect()
    }
}

impl PerturbationProblem {
    pub fn convergence_ladder(
        &self,
        e_dir: &DenseMatrix,
        variant: FormulaVariant,
        ladder: Ladder,
    ) -> Result<ConvergenceReport> {
        ladder.validate()?;
        check_direction(e_dir)?;
        let gap = self.partition().absolute_gap();
        if ladder.eps0 >= 0.1 * gap {
            return Err(Error::InvalidLadder(format!(
                "eps0 = {} is not below a tenth of the spectral gap {gap}",
                ladder.eps0
            )));
        }
        let samples = ladder
            .epsilons()
            .into_iter()
            .map(|eps| self.residuals_at(e_dir, eps, variant))
            .collect::<Result<Vec<_>>>()?;
        ConvergenceReport::from_samples(variant, samples)
    }
}

pub fn convergence_ladder(
    x: &DenseMatrix,
    e_dir: &DenseMatrix,
    k: usize,
    variant: FormulaVariant,
    eps0: f64,
    factor: f64,
    count: usize,
) -> Result<ConvergenceReport> {
    let ladder = Ladder {
        eps0,
        factor,
        count,
    };
    ladder.validate()?;
    PerturbationProblem::new(x, k)?.convergence_ladder(e_dir, variant, ladder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{matrix_with_spectrum, perturbation_direction, SpectrumSpec};

    fn benchmark() -> (DenseMatrix, DenseMatrix) {
        let spec = SpectrumSpec::new(8, 5, vec![3.0, 2.2, 1.5, 1.0, 0.4], 42).unwrap();
        (
            matrix_with_spectrum(&spec).unwrap(),
            perturbation_direction(8, 5, 43),
        )
    }

    #[test]
    fn align_sign_cases() {
        assert_eq!(
            align_sign(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            align_sign(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            vec![0.0, 1.0]
        );
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let n = (1.0f64 + 0.81).sqrt();
        let c = [-1.0 / n, -0.9 / n];
        assert_eq!(align_sign(&[r, r], &c).unwrap(), vec![1.0 / n, 0.9 / n]);
        assert!(matches!(align_sign(&[1.0], &[0.0]), Err(Error::ZeroVector)));
        assert!(align_sign(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_power_law_fits_exactly() {
        let eps: Vec<f64> = (0..8).map(|i| 1e-2 * 0.5f64.powi(i)).collect();
        let res: Vec<f64> = eps.iter().map(|e| e * e).collect();
        let fit = fit_log_log(&eps, &res).unwrap();
        assert!((fit.order - 2.0).abs() <= 1e-10);
        assert!((fit.r2 - 1.0).abs() <= 1e-12);
        assert_eq!(fit.used, 8);
    }

    #[test]
    fn floor_filter() {
        let eps = [1e-1, 1e-2, 1e-3, 1e-4];
        let res = [1e-2, 1e-4, 1e-14, 0.0];
        assert!(fit_log_log(&eps, &res).is_none());
        let res = [1e-2, 1e-4, 1e-6, 0.0];
        assert_eq!(fit_log_log(&eps, &res).unwrap().used, 3);
    }

    #[test]
    fn zero_step_residuals_vanish() {
        let (x, e) = benchmark();
        let problem = PerturbationProblem::new(&x, 1).unwrap();
        for variant in FormulaVariant::ALL {
            let r = problem.residuals_at(&e, 0.0, variant).unwrap();
            assert!(r.res_u <= 1e-12 && r.res_v <= 1e-12 && r.res_sigma <= 1e-12);
        }
    }

    #[test]
    fn two_by_two_residual_oracles() {
        let x = DenseMatrix::from_diag(2, 2, &[3.0, 1.0]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let e_dir = DenseMatrix::from_rows(&[&[0.0, r], &[r, 0.0]]).unwrap();
        let delta = 1e-3;
        let eps = delta * 2f64.sqrt();

        let theta = (eps * r).atan() / 2.0;
        let corrected = residuals_at(&x, &e_dir, eps, 1, FormulaVariant::Corrected).unwrap();
        let oracle = ((1.0 - theta.cos()).powi(2) + (theta.sin() - eps * r / 2.0).powi(2)).sqrt();
        assert!((corrected.res_v - oracle).abs() < 1e-13);

        // first-order defect: |2 Σ₂ f₂₁ / (σ₁² − Σ₂²)| = 2δ/8
        let flipped = residuals_at(&x, &e_dir, eps, 1, FormulaVariant::SignFlipped).unwrap();
        assert!((flipped.res_v - 2.0 * delta / 8.0).abs() < delta * delta);
    }

    #[test]
    fn unnormalized_direction_rejected() {
        let (x, e) = benchmark();
        assert!(matches!(
            residuals_at(&x, &e.scaled(2.0), 1e-3, 1, FormulaVariant::Corrected),
            Err(Error::DirectionNotNormalized { .. })
        ));
    }

    #[test]
    fn huge_perturbation_cannot_be_tracked() {
        // X + E = H diag(4, 3, 2, 1) H with H the normalized 4×4 Hadamard
        // matrix: every new right vector has overlap 1/2 with e₁
        let x = DenseMatrix::from_diag(4, 4, &[1.0, 0.999, 0.998, 0.997]).unwrap();
        let h = DenseMatrix::from_rows(&[
            &[0.5, 0.5, 0.5, 0.5],
            &[0.5, -0.5, 0.5, -0.5],
            &[0.5, 0.5, -0.5, -0.5],
            &[0.5, -0.5, -0.5, 0.5],
        ])
        .unwrap();
        let d = DenseMatrix::from_diag(4, 4, &[4.0, 3.0, 2.0, 1.0]).unwrap();
        let target = h.matmul(&d).unwrap().matmul(&h).unwrap();
        let e = target.axpy(-1.0, &x).unwrap();
        let eps = frobenius_norm(&e);
        let e_dir = e.scaled(1.0 / eps);
        match residuals_at(&x, &e_dir, eps, 1, FormulaVariant::Corrected) {
            Err(Error::TripletMatchAmbiguous { overlap }) => assert!((overlap - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ladder_preconditions() {
        let (x, e) = benchmark();
        let run = |eps0, factor, count| {
            convergence_ladder(&x, &e, 1, FormulaVariant::Corrected, eps0, factor, count)
        };
        assert!(matches!(run(1e-2, 0.5, 3), Err(Error::InvalidLadder(_))));
        assert!(matches!(run(1e-2, 1.5, 8), Err(Error::InvalidLadder(_))));
        assert!(matches!(run(-1e-2, 0.5, 8), Err(Error::InvalidLadder(_))));
        // gap is 0.8, so eps0 must stay below 0.08
        assert!(matches!(run(0.1, 0.5, 8), Err(Error::InvalidLadder(_))));
    }

    #[test]
    fn corrected_converges_quadratically() {
        let (x, e) = benchmark();
        let r = convergence_ladder(&x, &e, 1, FormulaVariant::Corrected, 1e-2, 0.5, 8).unwrap();
        assert_eq!(r.samples.len(), 8);
        for o in [r.order_u(), r.order_v(), r.order_sigma()] {
            assert!((1.9..=2.1).contains(&o), "order {o}");
        }
        for w in r.samples.windows(2) {
            assert!(w[1].epsilon < w[0].epsilon);
            assert!(w[1].res_v < w[0].res_v);
        }
    }

    #[test]
    fn sign_flipped_converges_linearly() {
        let (x, e) = benchmark();
        let r = convergence_ladder(&x, &e, 1, FormulaVariant::SignFlipped, 1e-2, 0.5, 8).unwrap();
        assert!((0.9..=1.1).contains(&r.order_v()));
        assert!((0.9..=1.1).contains(&r.order_u()));
    }

    #[test]
    fn interior_triplet_converges_quadratically() {
        let (x, e) = benchmark();
        let r = convergence_ladder(&x, &e, 3, FormulaVariant::Corrected, 1e-2, 0.5, 8).unwrap();
        assert!((1.9..=2.1).contains(&r.order_u()), "{}", r.order_u());
        assert!((1.9..=2.1).contains(&r.order_v()), "{}", r.order_v());
    }

    #[test]
    fn wide_matrix_ladder() {
        let (x, e) = benchmark();
        let xt = x.transpose();
        let et = e.transpose();
        let r = convergence_ladder(&xt, &et, 1, FormulaVariant::U3Omitted, 1e-2, 0.5, 8).unwrap();
        // the complement term now belongs to the right vector of Xᵀ
        assert!((0.9..=1.1).contains(&r.order_v()), "{}", r.order_v());
        assert!((1.9..=2.1).contains(&r.order_u()), "{}", r.order_u());
    }

    #[test]
    fn reports_are_reproducible() {
        let (x, e) = benchmark();
        let a = convergence_ladder(&x, &e, 1, FormulaVariant::Corrected, 1e-2, 0.5, 6).unwrap();
        let b = convergence_ladder(&x, &e, 1, FormulaVariant::Corrected, 1e-2, 0.5, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn matching_is_stable_for_small_steps() {
        let (x, e) = benchmark();
        let problem = PerturbationProblem::new(&x, 2).unwrap();
        let gap = problem.partition().absolute_gap();
        let m = problem.exact_triplet(&e.scaled(0.1 * gap)).unwrap();
        assert!(m.overlap > 0.9);
    }
}
