//! FID family: unconditional FID, between-class FID and within-class FID.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::{FeatureMatrix, LabelVector, Weighting};
use crate::error::{Error, Result};
use crate::gaussian::{estimate_gaussian, estimate_gaussian_rows, frechet_distance, GaussianStats};
use crate::matching::ClassAssignment;

/// Per-class Gaussians of one labelled population together with the
/// Gaussian of its class means.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassConditionalStats {
    per_class: Vec<GaussianStats>,
    between: GaussianStats,
    priors: Vec<f64>,
}

impl ClassConditionalStats {
    /// Estimates per-class means and within-class covariances from data.
    /// Every class needs at least one member.
    pub fn estimate(
        features: &FeatureMatrix,
        labels: &LabelVector,
        weighting: Weighting,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "feature rows vs labels",
                left: features.nrows(),
                right: labels.len(),
            });
        }
        let counts = labels.require_min_members(1)?;
        let per_class = labels
            .members()
            .par_iter()
            .map(|rows| estimate_gaussian_rows(features, rows))
            .collect::<Result<Vec<_>>>()?;
        Self::from_classes(per_class, weighting.priors(&counts))
    }

    /// Assembles class-conditional stats from known per-class Gaussians,
    /// e.g. the population parameters of a synthetic mixture.
    pub fn from_classes(per_class: Vec<GaussianStats>, priors: Vec<f64>) -> Result<Self> {
        if per_class.is_empty() || per_class.len() != priors.len() {
            return Err(Error::invalid(format!(
                "need one prior per class ({} classes, {} priors)",
                per_class.len(),
                priors.len()
            )));
        }
        let d = per_class[0].dim();
        if let Some(g) = per_class.iter().find(|g| g.dim() != d) {
            return Err(Error::DimensionMismatch {
                context: "per-class Gaussian dimension",
                left: d,
                right: g.dim(),
            });
        }
        if priors.iter().any(|&p| !(p >= 0.0)) || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("class priors must be non-negative and sum to 1"));
        }

        let mut mean = DVector::zeros(d);
        for (g, &p) in per_class.iter().zip(&priors) {
            mean.axpy(p, g.mean(), 1.0);
        }
        let mut cov = DMatrix::zeros(d, d);
        for (g, &p) in per_class.iter().zip(&priors) {
            let diff = g.mean() - &mean;
            cov.ger(p, &diff, &diff, 1.0);
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        let between = GaussianStats::new(mean, cov, per_class.len())?;
        Ok(Self {
            per_class,
            between,
            priors,
        })
    }

    pub fn class_count(&self) -> usize {
        self.per_class.len()
    }

    pub fn per_class(&self) -> &[GaussianStats] {
        &self.per_class
    }

    /// Mean of class means and the prior-weighted covariance of class means.
    pub fn between(&self) -> &GaussianStats {
        &self.between
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Prior-weighted within-class covariance `sum_c p(c) S_c`.
    pub fn mean_within_cov(&self) -> DMatrix<f64> {
        let d = self.between.dim();
        let mut acc = DMatrix::zeros(d, d);
        for (g, &p) in self.per_class.iter().zip(&self.priors) {
            acc += g.cov() * p;
        }
        acc
    }

    /// Gaussian of the whole mixture by the law of total covariance. With
    /// empirical priors this equals [`estimate_gaussian`] on the pooled data.
    pub fn pooled(&self) -> GaussianStats {
        let cov = self.between.cov() + self.mean_within_cov();
        let count = self.per_class.iter().map(GaussianStats::count).sum();
        GaussianStats::from_trusted(self.between.mean().clone(), cov, count)
    }
}

/// Fréchet distance between the Gaussians fitted to two feature sets.
pub fn fid(real: &FeatureMatrix, gen: &FeatureMatrix) -> Result<f64> {
    if real.ncols() != gen.ncols() {
        return Err(Error::DimensionMismatch {
            context: "fid feature dimension",
            left: real.ncols(),
            right: gen.ncols(),
        });
    }
    frechet_distance(&estimate_gaussian(real)?, &estimate_gaussian(gen)?)
}

fn check_class_counts(real: usize, gen: usize) -> Result<()> {
    if real != gen {
        return Err(Error::DimensionMismatch {
            context: "real vs generated class count",
            left: real,
            right: gen,
        });
    }
    Ok(())
}

/// Fréchet distance between the class-mean Gaussians of both sides.
pub fn bcfid_from_stats(real: &ClassConditionalStats, gen: &ClassConditionalStats) -> Result<f64> {
    check_class_counts(real.class_count(), gen.class_count())?;
    frechet_distance(real.between(), gen.between())
}

pub fn bcfid(
    real_features: &FeatureMatrix,
    real_labels: &LabelVector,
    gen_features: &FeatureMatrix,
    gen_labels: &LabelVector,
    weighting: Weighting,
) -> Result<f64> {
    check_class_counts(real_labels.class_count(), gen_labels.class_count())?;
    let real = ClassConditionalStats::estimate(real_features, real_labels, weighting)?;
    let gen = ClassConditionalStats::estimate(gen_features, gen_labels, weighting)?;
    bcfid_from_stats(&real, &gen)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithinClassFid {
    pub wcfid: f64,
    /// Indexed by conditioned (generated) class.
    pub per_class: Vec<f64>,
}

/// Prior-weighted mean of the per-class Fréchet distances between generated
/// class `c` and real class `pairing[c]`, weighted by the real-side prior.
pub fn wcfid_from_stats(
    real: &ClassConditionalStats,
    gen: &ClassConditionalStats,
    pairing: &ClassAssignment,
) -> Result<WithinClassFid> {
    check_class_counts(real.class_count(), gen.class_count())?;
    if pairing.len() != gen.class_count() {
        return Err(Error::DimensionMismatch {
            context: "pairing vs class count",
            left: pairing.len(),
            right: gen.class_count(),
        });
    }
    let per_class = pairing
        .mapping()
        .par_iter()
        .enumerate()
        .map(|(c, &r)| frechet_distance(&real.per_class()[r], &gen.per_class()[c]))
        .collect::<Result<Vec<_>>>()?;
    let wcfid = pairing
        .mapping()
        .iter()
        .zip(&per_class)
        .map(|(&r, v)| real.priors()[r] * v)
        .sum();
    Ok(WithinClassFid { wcfid, per_class })
}

pub fn wcfid(
    real_features: &FeatureMatrix,
    real_labels: &LabelVector,
    gen_features: &FeatureMatrix,
    gen_labels: &LabelVector,
    pairing: &ClassAssignment,
    weighting: Weighting,
) -> Result<WithinClassFid> {
    Ok(conditional_fid(
        real_features,
        real_labels,
        gen_features,
        gen_labels,
        pairing,
        weighting,
    )?
    .within)
}

/// `BCFID + WCFID`, an upper bound on FID when both sides use their own
/// empirical class frequencies and per-class counts match.
pub fn cfid_sum(
    real_features: &FeatureMatrix,
    real_labels: &LabelVector,
    gen_features: &FeatureMatrix,
    gen_labels: &LabelVector,
    pairing: &ClassAssignment,
    weighting: Weighting,
) -> Result<f64> {
    let all = conditional_fid(
        real_features,
        real_labels,
        gen_features,
        gen_labels,
        pairing,
        weighting,
    )?;
    Ok(all.bcfid + all.within.wcfid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalFid {
    pub fid: f64,
    pub bcfid: f64,
    pub within: WithinClassFid,
}

/// FID, BCFID and WCFID over the same inputs. Per-class estimation needs at
/// least two samples in every class on both sides.
pub fn conditional_fid(
    real_features: &FeatureMatrix,
    real_labels: &LabelVector,
    gen_features: &FeatureMatrix,
    gen_labels: &LabelVector,
    pairing: &ClassAssignment,
    weighting: Weighting,
) -> Result<ConditionalFid> {
    check_class_counts(real_labels.class_count(), gen_labels.class_count())?;
    real_labels.require_min_members(2)?;
    gen_labels.require_min_members(2)?;
    let fid = fid(real_features, gen_features)?;
    let real = ClassConditionalStats::estimate(real_features, real_labels, weighting)?;
    let gen = ClassConditionalStats::estimate(gen_features, gen_labels, weighting)?;
    Ok(ConditionalFid {
        fid,
        bcfid: bcfid_from_stats(&real, &gen)?,
        within: wcfid_from_stats(&real, &gen, pairing)?,
    })
}
