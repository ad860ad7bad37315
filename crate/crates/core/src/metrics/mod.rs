//! Conditional and unconditional generation metrics.

mod fid;
mod inception;

pub use fid::{
    bcfid, bcfid_from_stats, cfid_sum, conditional_fid, fid, wcfid, wcfid_from_stats,
    ClassConditionalStats, ConditionalFid, WithinClassFid,
};
pub use inception::{
    accuracy, accuracy_paired, bcis, inception_score, inception_scores, per_class_is, wcis,
    Accuracy, InceptionScores, LOG_FLOOR,
};

use rayon::prelude::*;

use crate::data::{FeatureMatrix, LabelVector, Weighting};
use crate::error::{Error, Result};
use crate::matching::ClassAssignment;
use crate::rng::{derive_seed, seeded};

/// Every scalar and per-class score. Fields are `None` when the inputs
/// needed for them were not supplied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub is: Option<f64>,
    pub bcis: Option<f64>,
    pub wcis: Option<f64>,
    pub fid: Option<f64>,
    pub bcfid: Option<f64>,
    pub wcfid: Option<f64>,
    pub cfid_sum: Option<f64>,
    pub accuracy: Option<f64>,
    pub per_class_fid: Option<Vec<f64>>,
    pub per_class_is: Option<Vec<f64>>,
    pub per_class_accuracy: Option<Vec<f64>>,
    /// Feature dimensions behind the FID values (the normaliser).
    pub dims_used: Option<usize>,
}

impl MetricReport {
    pub fn set_inception(&mut self, scores: InceptionScores) {
        self.is = Some(scores.is);
        self.bcis = Some(scores.bcis);
        self.wcis = Some(scores.wcis);
        self.per_class_is = Some(scores.per_class);
    }

    pub fn set_accuracy(&mut self, acc: Accuracy) {
        self.accuracy = Some(acc.overall);
        self.per_class_accuracy = Some(acc.per_class);
    }

    /// Raw (unnormalised) FID family values over `dims` feature dimensions.
    pub fn set_fid(&mut self, scores: ConditionalFid, dims: usize) {
        self.fid = Some(scores.fid);
        self.bcfid = Some(scores.bcfid);
        self.wcfid = Some(scores.within.wcfid);
        self.cfid_sum = Some(scores.bcfid + scores.within.wcfid);
        self.per_class_fid = Some(scores.within.per_class);
        self.dims_used = Some(dims);
    }
}

/// Feature-subsampled FID protocol.
///
/// Each trial draws `subset_size` distinct feature columns (the same columns
/// for both sides and all three scores), computes FID, BCFID and WCFID on
/// the restricted features and divides them by `subset_size`. The report
/// holds the mean over trials. Trial `t` uses seed `derive_seed(seed, t)`.
#[allow(clippy::too_many_arguments)]
pub fn subsampled_fid_suite(
    real_features: &FeatureMatrix,
    real_labels: &LabelVector,
    gen_features: &FeatureMatrix,
    gen_labels: &LabelVector,
    pairing: &ClassAssignment,
    weighting: Weighting,
    subset_size: usize,
    trials: usize,
    seed: u64,
) -> Result<MetricReport> {
    let d = real_features.ncols();
    if gen_features.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "feature dimension",
            left: d,
            right: gen_features.ncols(),
        });
    }
    if subset_size == 0 || subset_size > d {
        return Err(Error::invalid(format!(
            "subset size {subset_size} must be in [1, {d}]"
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }

    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(derive_seed(seed, t as u64));
            let mut cols = rand::seq::index::sample(&mut rng, d, subset_size).into_vec();
            cols.sort_unstable();
            let real = real_features.select_columns(&cols)?;
            let gen = gen_features.select_columns(&cols)?;
            conditional_fid(&real, real_labels, &gen, gen_labels, pairing, weighting)
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = 1.0 / (subset_size as f64 * trials as f64);
    let classes = pairing.len();
    let mut fid = 0.0;
    let mut bcfid = 0.0;
    let mut wcfid = 0.0;
    let mut per_class = vec![0.0; classes];
    for r in &results {
        fid += r.fid;
        bcfid += r.bcfid;
        wcfid += r.within.wcfid;
        per_class
            .iter_mut()
            .zip(&r.within.per_class)
            .for_each(|(acc, v)| *acc += v);
    }
    let (fid, bcfid, wcfid) = (fid * scale, bcfid * scale, wcfid * scale);
    per_class.iter_mut().for_each(|v| *v *= scale);
    Ok(MetricReport {
        fid: Some(fid),
        bcfid: Some(bcfid),
        wcfid: Some(wcfid),
        cfid_sum: Some(bcfid + wcfid),
        per_class_fid: Some(per_class),
        dims_used: Some(subset_size),
        ..MetricReport::default()
    })
}
