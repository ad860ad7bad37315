use condmetrics::rng::{derive_seed, seeded};
use condmetrics::synth::{dirichlet_rows, gen_mixture, label_noise, MixtureClass, MixtureSpec};
use condmetrics::{
    align_discovered, conditional_fid, inception_scores, ClassAssignment, LabelVector, ProbabilityMatrix, Weighting,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn skewed_labels(n: usize, k: usize, seed: u64) -> LabelVector {
    let mut rng = seeded(seed);
    let labels = (0..n)
        .map(|i| if i < k { i } else { (rng.random::<f64>().powi(2) * k as f64) as usize % k })
        .collect();
    LabelVector::new(labels, k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inception_score_factorises(k in 2usize..8, n in 10usize..300, seed in any::<u64>(), conc in 0.05f64..3.0) {
        prop_assume!(n >= k);
        let probs = dirichlet_rows(&vec![conc; k], n, seed).unwrap();
        let labels = skewed_labels(n, k, seed ^ 7);
        let s = inception_scores(&probs, &labels, Weighting::Empirical).unwrap();
        prop_assert!((s.is.ln() - s.bcis.ln() - s.wcis.ln()).abs() < 1e-9);
        prop_assert!(s.bcis >= 1.0 - 1e-12 && s.bcis <= k as f64 + 1e-9);
        prop_assert!(s.wcis >= 1.0 - 1e-12 && s.wcis <= k as f64 + 1e-9);
    }

    #[test]
    fn fid_is_bounded_by_conditional_sum(d in 1usize..6, k in 2usize..5, per in 3usize..40, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let mut spec = |stream: u64| MixtureSpec {
            classes: (0..k)
                .map(|_| {
                    let b = DMatrix::<f64>::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                    MixtureClass {
                        mean: (0..d).map(|_| rng.random_range(-3.0..3.0)).collect(),
                        cov: &b * b.transpose(),
                        count: per,
                    }
                })
                .collect(),
            seed: derive_seed(seed, stream),
        };
        let (r, g) = (gen_mixture(&spec(0)).unwrap(), gen_mixture(&spec(1)).unwrap());
        let s = conditional_fid(&r.features, &r.labels, &g.features, &g.labels, &ClassAssignment::identity(k), Weighting::Empirical).unwrap();
        prop_assert!(s.fid <= s.bcfid + s.within.wcfid + 1e-6, "{} > {} + {}", s.fid, s.bcfid, s.within.wcfid);
    }
}

#[test]
fn noisy_labels_lower_between_class_score() {
    let k = 5;
    let n = 2000;
    let labels = LabelVector::new((0..n).map(|i| i % k).collect(), k).unwrap();
    let rows: Vec<f64> = labels
        .as_slice()
        .iter()
        .flat_map(|&c| (0..k).map(move |j| if j == c { 0.8 } else { 0.05 }))
        .collect();
    let probs = ProbabilityMatrix::from_row_major(n, k, rows).unwrap();
    let mut last = f64::INFINITY;
    for p in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let noisy = label_noise(&labels, p, 3).unwrap();
        let s = inception_scores(&probs, &noisy, Weighting::Empirical).unwrap();
        assert!(s.bcis < last, "p = {p}");
        last = s.bcis;
    }
}

#[test]
fn discovered_clusters_are_realigned() {
    // cluster c predicts class (c + 2) % 4
    let k = 4;
    let conds = LabelVector::new((0..80).map(|i| i % k).collect(), k).unwrap();
    let rows: Vec<f64> = conds
        .as_slice()
        .iter()
        .flat_map(|&c| (0..k).map(move |j| if j == (c + 2) % k { 0.7 } else { 0.1 }))
        .collect();
    let probs = ProbabilityMatrix::from_row_major(80, k, rows).unwrap();
    let a = align_discovered(&probs, &conds).unwrap();
    assert_eq!(a.mapping(), &[2, 3, 0, 1]);
    assert!((a.score() - 2.8).abs() < 1e-12);
    let acc = condmetrics::metrics::accuracy_paired(&probs, &conds, &a).unwrap();
    assert_eq!(acc.overall, 1.0);
}
