//! Seeded synthetic data for exercising the metrics: Gaussian mixtures,
//! ring mixtures, the matched-moment and bound-tightness constructions,
//! label noising and gradual mode collapse.
//!
//! Every generator is a pure function of its arguments. Randomness comes
//! from [`crate::rng`]; sub-streams use [`derive_seed`].

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use crate::data::{FeatureMatrix, LabelVector, ProbabilityMatrix};
use crate::error::{Error, Result};
use crate::gaussian::{sqrtm_psd, GaussianStats};
use crate::metrics::ClassConditionalStats;
use crate::rng::{derive_seed, seeded};

/// Features with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub features: FeatureMatrix,
    pub labels: LabelVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureClass {
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub count: usize,
}

/// One Gaussian per class; rows are emitted class by class.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub classes: Vec<MixtureClass>,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn dim(&self) -> usize {
        self.classes.first().map_or(0, |c| c.mean.len())
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.classes.is_empty() || d == 0 {
            return Err(Error::invalid("mixture needs at least one class of positive dimension"));
        }
        for (c, class) in self.classes.iter().enumerate() {
            if class.mean.len() != d || class.cov.shape() != (d, d) {
                return Err(Error::invalid(format!("class {c}: inconsistent dimensions")));
            }
            if class.count < 2 {
                return Err(Error::ClassTooSmall {
                    class: c,
                    count: class.count,
                    required: 2,
                });
            }
        }
        Ok(())
    }

    /// Analytic class-conditional stats, priors proportional to counts.
    pub fn population(&self) -> Result<ClassConditionalStats> {
        self.validate()?;
        let total: usize = self.classes.iter().map(|c| c.count).sum();
        let per_class = self
            .classes
            .iter()
            .map(|c| GaussianStats::new(DVector::from_column_slice(&c.mean), c.cov.clone(), 0))
            .collect::<Result<Vec<_>>>()?;
        let priors = self
            .classes
            .iter()
            .map(|c| c.count as f64 / total as f64)
            .collect();
        ClassConditionalStats::from_classes(per_class, priors)
    }
}

fn diag_cov(variances: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(variances))
}

/// Draws `mean + S z` per row with `S` the PSD square root of the class
/// covariance and `z` standard normal. Class `c` uses stream `c` of the
/// spec seed.
pub fn gen_mixture(spec: &MixtureSpec) -> Result<LabeledSet> {
    spec.validate()?;
    let d = spec.dim();
    let total: usize = spec.classes.iter().map(|c| c.count).sum();
    let mut values = Vec::with_capacity(total * d);
    let mut labels = Vec::with_capacity(total);
    for (c, class) in spec.classes.iter().enumerate() {
        let factor = sqrtm_psd(&class.cov).map_err(|e| {
            Error::invalid(format!("class {c}: covariance is not a valid PSD matrix ({e})"))
        })?;
        let mean = DVector::from_column_slice(&class.mean);
        let mut rng = seeded(derive_seed(spec.seed, c as u64));
        for _ in 0..class.count {
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let x = &mean + &factor * z;
            values.extend(x.iter());
            labels.push(c);
        }
    }
    Ok(LabeledSet {
        features: FeatureMatrix::from_row_major(total, d, &values)?,
        labels: LabelVector::new(labels, spec.classes.len())?,
    })
}

fn ring_point(radius: f64, theta: f64) -> [f64; 2] {
    [radius * theta.cos(), radius * theta.sin()]
}

/// Concentric noisy rings: radius `radii[c] + N(0, radial_sigma^2)`,
/// uniform angle. Each class has zero mean and per-axis variance
/// `(R^2 + sigma^2) / 2`.
pub fn gen_rings(radii: &[f64], radial_sigma: f64, n_per_class: usize, seed: u64) -> Result<LabeledSet> {
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::invalid("ring radii must be positive"));
    }
    if !(radial_sigma >= 0.0) || n_per_class == 0 {
        return Err(Error::invalid("need radial_sigma >= 0 and at least one sample per ring"));
    }
    let noise = Normal::new(0.0, radial_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = seeded(seed);
    let mut values = Vec::with_capacity(radii.len() * n_per_class * 2);
    let mut labels = Vec::with_capacity(radii.len() * n_per_class);
    for (c, &radius) in radii.iter().enumerate() {
        for _ in 0..n_per_class {
            let r = radius + noise.sample(&mut rng);
            let theta = rng.random_range(0.0..TAU);
            values.extend(ring_point(r, theta));
            labels.push(c);
        }
    }
    Ok(LabeledSet {
        features: FeatureMatrix::from_row_major(labels.len(), 2, &values)?,
        labels: LabelVector::new(labels, radii.len())?,
    })
}

/// Two 2-D two-class mixtures with equal overall mean `(0, 0)` and overall
/// covariance `diag(2, 2)` but different class structure.
///
/// A: `N((-1,0), I)` and `N((1,0), diag(1,3))`;
/// B: `N((0,-1), diag(2,1))` and `N((0,1), diag(2,1))`.
pub fn matched_moments_specs(seed: u64, n_per_class: usize) -> (MixtureSpec, MixtureSpec) {
    let class = |mean: [f64; 2], var: [f64; 2]| MixtureClass {
        mean: mean.to_vec(),
        cov: diag_cov(&var),
        count: n_per_class,
    };
    let a = MixtureSpec {
        classes: vec![class([-1.0, 0.0], [1.0, 1.0]), class([1.0, 0.0], [1.0, 3.0])],
        seed: derive_seed(seed, 0),
    };
    let b = MixtureSpec {
        classes: vec![class([0.0, -1.0], [2.0, 1.0]), class([0.0, 1.0], [2.0, 1.0])],
        seed: derive_seed(seed, 1),
    };
    (a, b)
}

/// Population stats of the matched-moment pair (balanced classes).
pub fn matched_moments_population() -> (ClassConditionalStats, ClassConditionalStats) {
    let (a, b) = matched_moments_specs(0, 2);
    (
        a.population().expect("valid construction"),
        b.population().expect("valid construction"),
    )
}

pub fn gen_matched_moments(seed: u64, n_per_class: usize) -> Result<(LabeledSet, LabeledSet)> {
    if n_per_class < 2 {
        return Err(Error::invalid("matched-moment construction needs n_per_class >= 2"));
    }
    let (a, b) = matched_moments_specs(seed, n_per_class);
    Ok((gen_mixture(&a)?, gen_mixture(&b)?))
}

fn tightness_spec(sigma: [f64; 2], n_per_class: usize, seed: u64) -> MixtureSpec {
    MixtureSpec {
        classes: vec![
            MixtureClass {
                mean: vec![1.0, 1.0],
                cov: diag_cov(&[0.0, sigma[0] * sigma[0]]),
                count: n_per_class,
            },
            MixtureClass {
                mean: vec![1.0, 1.0],
                cov: diag_cov(&[sigma[1] * sigma[1], 0.0]),
                count: n_per_class,
            },
        ],
        seed,
    }
}

/// Population stats of the tightness construction: every class mean is
/// `(1, 1)`, class 0 varies only along the second axis and class 1 only
/// along the first.
pub fn tightness_population(
    sigma_real: [f64; 2],
    sigma_gen: [f64; 2],
) -> Result<(ClassConditionalStats, ClassConditionalStats)> {
    Ok((
        tightness_spec(sigma_real, 2, 0).population()?,
        tightness_spec(sigma_gen, 2, 0).population()?,
    ))
}

/// Samples the tightness construction: class 0 rows are `(1, 1 + e)`,
/// class 1 rows `(1 + e, 1)`, with `e ~ N(0, sigma[c]^2)` per side.
pub fn gen_tightness_case(
    sigma_real: [f64; 2],
    sigma_gen: [f64; 2],
    n_per_class: usize,
    seed: u64,
) -> Result<(LabeledSet, LabeledSet)> {
    if sigma_real.iter().chain(&sigma_gen).any(|s| !(*s >= 0.0)) {
        return Err(Error::invalid("tightness sigmas must be non-negative"));
    }
    let side = |sigma: [f64; 2], stream: u64| -> Result<LabeledSet> {
        let mut rng = seeded(derive_seed(seed, stream));
        let mut values = Vec::with_capacity(4 * n_per_class);
        for _ in 0..n_per_class {
            let e: f64 = StandardNormal.sample(&mut rng);
            values.extend([1.0, 1.0 + sigma[0] * e]);
        }
        for _ in 0..n_per_class {
            let e: f64 = StandardNormal.sample(&mut rng);
            values.extend([1.0 + sigma[1] * e, 1.0]);
        }
        let labels = (0..2 * n_per_class).map(|i| i / n_per_class).collect();
        Ok(LabeledSet {
            features: FeatureMatrix::from_row_major(2 * n_per_class, 2, &values)?,
            labels: LabelVector::new(labels, 2)?,
        })
    };
    if n_per_class < 2 {
        return Err(Error::invalid("tightness construction needs n_per_class >= 2"));
    }
    (side(sigma_real, 0), side(sigma_gen, 1)).transpose_pair()
}

trait TransposePair<A, B> {
    fn transpose_pair(self) -> Result<(A, B)>;
}

impl<A, B> TransposePair<A, B> for (Result<A>, Result<B>) {
    fn transpose_pair(self) -> Result<(A, B)> {
        Ok((self.0?, self.1?))
    }
}

/// Permutes the labels of `floor(p * N)` uniformly chosen samples.
///
/// The chosen index set comes from one seeded shuffle of all indices, so for
/// a fixed seed the sets are nested as `p` grows. Class counts are
/// preserved exactly.
pub fn label_noise(labels: &LabelVector, p: f64, seed: u64) -> Result<LabelVector> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("noise level {p} outside [0, 1]")));
    }
    let n = labels.len();
    // small slack so that e.g. 0.29 * 100 selects 29 samples
    let m = ((p * n as f64) + 1e-9).floor().min(n as f64) as usize;
    let mut rng = seeded(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let chosen = &order[..m];
    let mut values: Vec<usize> = chosen.iter().map(|&i| labels.as_slice()[i]).collect();
    values.shuffle(&mut rng);
    let mut out = labels.as_slice().to_vec();
    for (&i, v) in chosen.iter().zip(values) {
        out[i] = v;
    }
    LabelVector::new(out, labels.class_count())
}

/// Gradual per-class collapse of a labelled pool.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseSchedule {
    pub steps: usize,
    /// Kept fraction per step, `shrink.0 / shrink.1`, in (0, 1).
    pub shrink: (usize, usize),
    pub per_class_sample: usize,
    pub collapsed_classes: Vec<usize>,
}

impl Default for CollapseSchedule {
    fn default() -> Self {
        Self {
            steps: 11,
            shrink: (2, 3),
            per_class_sample: 100,
            collapsed_classes: vec![0],
        }
    }
}

impl CollapseSchedule {
    /// Collapsed pool size after one step: `ceil(prev * num / den)`.
    pub fn next_pool_size(&self, prev: usize) -> usize {
        let (num, den) = self.shrink;
        (prev * num).div_ceil(den)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseStep {
    pub step: usize,
    /// Source rows of the emitted samples, class by class.
    pub indices: Vec<usize>,
    pub data: LabeledSet,
    /// Current pool size of every class.
    pub pool_sizes: Vec<usize>,
}

/// Runs a mode-collapse schedule.
///
/// Step 0 uses the original pools. Every later step subsamples each
/// collapsed class's pool without replacement to `ceil(shrink * previous)`.
/// Each step emits `per_class_sample` rows per class from the current pool,
/// without replacement when the pool is large enough and with replacement
/// otherwise. Pool shrinking uses stream 0 of `seed`; the emission of step
/// `s` uses stream `s + 1`.
pub fn mode_collapse_run(
    features: &FeatureMatrix,
    labels: &LabelVector,
    schedule: &CollapseSchedule,
    seed: u64,
) -> Result<Vec<CollapseStep>> {
    if features.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "feature rows vs labels",
            left: features.nrows(),
            right: labels.len(),
        });
    }
    let (num, den) = schedule.shrink;
    if num == 0 || num >= den {
        return Err(Error::invalid(format!("shrink factor {num}/{den} must lie in (0, 1)")));
    }
    if schedule.steps == 0 || schedule.per_class_sample == 0 {
        return Err(Error::invalid("steps and per_class_sample must be positive"));
    }
    let k = labels.class_count();
    if let Some(&c) = schedule.collapsed_classes.iter().find(|&&c| c >= k) {
        return Err(Error::invalid(format!("collapsed class {c} outside [0, {k})")));
    }
    let mut pools = labels.members();
    if let Some((c, _)) = pools.iter().enumerate().find(|(_, p)| p.is_empty()) {
        return Err(Error::invalid(format!("class {c} has an empty pool")));
    }

    let mut shrink_rng = seeded(derive_seed(seed, 0));
    let mut out = Vec::with_capacity(schedule.steps);
    for step in 0..schedule.steps {
        if step > 0 {
            for &c in &schedule.collapsed_classes {
                let pool = &pools[c];
                let keep = schedule.next_pool_size(pool.len());
                let mut picked: Vec<usize> = rand::seq::index::sample(&mut shrink_rng, pool.len(), keep)
                    .into_iter()
                    .map(|i| pool[i])
                    .collect();
                picked.sort_unstable();
                pools[c] = picked;
            }
        }

        let mut rng = seeded(derive_seed(seed, step as u64 + 1));
        let m = schedule.per_class_sample;
        let mut indices = Vec::with_capacity(k * m);
        let mut emitted = Vec::with_capacity(k * m);
        for (c, pool) in pools.iter().enumerate() {
            if pool.len() >= m {
                indices.extend(rand::seq::index::sample(&mut rng, pool.len(), m).into_iter().map(|i| pool[i]));
            } else {
                indices.extend((0..m).map(|_| pool[rng.random_range(0..pool.len())]));
            }
            emitted.extend(std::iter::repeat_n(c, m));
        }
        out.push(CollapseStep {
            step,
            data: LabeledSet {
                features: features.select_rows(&indices)?,
                labels: LabelVector::new(emitted, k)?,
            },
            indices,
            pool_sizes: pools.iter().map(Vec::len).collect(),
        });
    }
    Ok(out)
}

/// `n` rows drawn from `Dirichlet(alpha)` via normalised Gamma variates.
pub fn dirichlet_rows(alpha: &[f64], n: usize, seed: u64) -> Result<ProbabilityMatrix> {
    if alpha.len() < 2 || alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::invalid("Dirichlet needs at least two positive concentrations"));
    }
    let gammas = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|e| Error::invalid(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = seeded(seed);
    let mut data = Vec::with_capacity(n * alpha.len());
    for _ in 0..n {
        loop {
            let draw: Vec<f64> = gammas.iter().map(|g| g.sample(&mut rng)).collect();
            let sum: f64 = draw.iter().sum();
            // tiny concentrations can underflow every component
            if sum > 0.0 && sum.is_finite() {
                data.extend(draw.iter().map(|v| v / sum));
                break;
            }
        }
    }
    ProbabilityMatrix::from_row_major(n, alpha.len(), data)
}

/// Labelled Gaussian classes with classifier-style probability rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Standard deviation of each class-mean coordinate; within-class
    /// covariance is the identity.
    pub separation: f64,
    /// Probability mass on the true class; the rest is spread over all
    /// classes by a flat Dirichlet draw.
    pub confidence: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSample {
    pub data: LabeledSet,
    pub probs: ProbabilityMatrix,
}

/// Draws features and probability rows for `spec`. The class means depend
/// only on `spec.seed`, so two calls differing in `sample_stream` give
/// independent samples of the same distribution.
pub fn gen_conditional(spec: &ConditionalSpec, sample_stream: u64) -> Result<ConditionalSample> {
    if spec.classes < 2 || spec.per_class < 2 || spec.dim == 0 {
        return Err(Error::invalid("need >= 2 classes, >= 2 samples per class and dim >= 1"));
    }
    if !(0.0..=1.0).contains(&spec.confidence) || !(spec.separation >= 0.0) {
        return Err(Error::invalid("confidence must be in [0, 1] and separation >= 0"));
    }
    let mut mean_rng = seeded(derive_seed(spec.seed, 0));
    let classes = (0..spec.classes)
        .map(|_| MixtureClass {
            mean: (0..spec.dim)
                .map(|_| spec.separation * Distribution::<f64>::sample(&StandardNormal, &mut mean_rng))
                .collect(),
            cov: DMatrix::identity(spec.dim, spec.dim),
            count: spec.per_class,
        })
        .collect();
    let stream = derive_seed(spec.seed, sample_stream.wrapping_add(1));
    let data = gen_mixture(&MixtureSpec {
        classes,
        seed: stream,
    })?;
    let spread = dirichlet_rows(&vec![1.0; spec.classes], data.labels.len(), derive_seed(stream, u64::MAX))?;
    let mut rows = Vec::with_capacity(data.labels.len() * spec.classes);
    for (i, &c) in data.labels.as_slice().iter().enumerate() {
        rows.extend(spread.row(i).iter().enumerate().map(|(j, &s)| {
            let hot = if j == c { spec.confidence } else { 0.0 };
            hot + (1.0 - spec.confidence) * s
        }));
    }
    let probs = ProbabilityMatrix::from_row_major(data.labels.len(), spec.classes, rows)?;
    Ok(ConditionalSample { data, probs })
}
