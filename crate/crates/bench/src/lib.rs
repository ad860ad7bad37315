//! Seeded fixtures shared by the benchmarks.

use condmetrics::synth::{dirichlet_rows, gen_mixture, LabeledSet, MixtureClass, MixtureSpec};
use condmetrics::{GaussianStats, LabelVector, ProbabilityMatrix};
use nalgebra::{DMatrix, DVector};

/// Dense SPD matrix with a spread spectrum.
pub fn spd(d: usize, seed: u64) -> DMatrix<f64> {
    let mut state = seed.wrapping_add(1);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let b = DMatrix::from_fn(d, d, |_, _| next());
    &b * b.transpose() + DMatrix::identity(d, d) * 1e-3
}

pub fn gaussian(d: usize, seed: u64) -> GaussianStats {
    GaussianStats::new(DVector::from_element(d, seed as f64 * 0.01), spd(d, seed), 0).unwrap()
}

/// Balanced labels and flat-Dirichlet probability rows.
pub fn classifier_output(n: usize, k: usize, seed: u64) -> (ProbabilityMatrix, LabelVector) {
    let probs = dirichlet_rows(&vec![0.5; k], n, seed).unwrap();
    let labels = LabelVector::new((0..n).map(|i| i % k).collect(), k).unwrap();
    (probs, labels)
}

/// `k` isotropic classes of `per_class` samples in `d` dimensions.
pub fn mixture(k: usize, per_class: usize, d: usize, seed: u64) -> LabeledSet {
    let classes = (0..k)
        .map(|c| MixtureClass {
            mean: (0..d).map(|j| ((c * 7 + j) % 5) as f64).collect(),
            cov: DMatrix::identity(d, d),
            count: per_class,
        })
        .collect();
    gen_mixture(&MixtureSpec { classes, seed }).unwrap()
}

/// Value matrix for the assignment benchmark.
pub fn value_matrix(k: usize, seed: u64) -> DMatrix<f64> {
    let m = spd(k, seed);
    m.map(|v| v.abs())
}
