//! Fixtures shared by the benchmarks.

use svdpert::{matrix_with_spectrum, perturbation_direction, DenseMatrix, SpectrumSpec};

/// Shapes exercised by every benchmark group.
pub const SHAPES: [(usize, usize); 4] = [(8, 5), (20, 10), (40, 20), (60, 60)];

/// Seeded `n×p` matrix with geometric spectrum `3·0.8ⁱ` and a unit
/// perturbation direction.
pub fn instance(n: usize, p: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
    let sv = (0..n.min(p)).map(|i| 3.0 * 0.8f64.powi(i as i32)).collect();
    let spec = SpectrumSpec::new(n, p, sv, seed).expect("valid spectrum");
    let x = matrix_with_spectrum(&spec).expect("generator succeeds");
    (x, perturbation_direction(n, p, seed.wrapping_add(1)))
}
