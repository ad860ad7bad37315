//! Conditional generation metrics.
//!
//! Between-class and within-class variants of the Inception Score and the
//! Fréchet Inception Distance, computed from extracted features, predicted
//! class probabilities and conditioning labels, together with their
//! unconditional counterparts, Hungarian alignment of discovered classes,
//! and seeded synthetic data for checking the metrics' identities.
//!
//! Two identities hold on empirical data:
//!
//! * `IS = BCIS * WCIS` when classes are weighted by their frequency;
//! * `FID <= BCFID + WCFID` when both sides use population covariances,
//!   their own class frequencies and matched per-class counts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod gaussian;
pub mod matching;
pub mod metrics;
pub mod rng;
pub mod synth;

pub use data::{FeatureMatrix, LabelVector, ProbabilityMatrix, Weighting};
pub use error::{Error, Result};
pub use gaussian::{estimate_gaussian, frechet_distance, sqrtm_psd, GaussianStats};
pub use matching::{align_discovered, average_class_probabilities, hungarian_max, ClassAssignment};
pub use metrics::{
    accuracy, bcfid, bcis, cfid_sum, conditional_fid, fid, inception_score, inception_scores,
    per_class_is, subsampled_fid_suite, wcfid, wcis, ClassConditionalStats, MetricReport,
};
