//! Inception-score family: IS, between-class IS, within-class IS, accuracy.
//!
//! All scores are exponentiated average KL divergences. Probabilities are
//! floored at [`LOG_FLOOR`] and renormalised per row before any logarithm,
//! and the same floored rows feed every score, so `IS = BCIS * WCIS` holds
//! to round-off on any input when classes are weighted empirically.

use rayon::prelude::*;

use crate::data::{LabelVector, ProbabilityMatrix, Weighting};
use crate::error::{Error, Result};
use crate::matching::ClassAssignment;

pub const LOG_FLOOR: f64 = 1e-12;

fn floored_rows(probs: &ProbabilityMatrix) -> Vec<f64> {
    let k = probs.nclasses();
    let mut out = Vec::with_capacity(probs.nrows() * k);
    for row in probs.rows() {
        let start = out.len();
        out.extend(row.iter().map(|&p| p.max(LOG_FLOOR)));
        let sum: f64 = out[start..].iter().sum();
        out[start..].iter_mut().for_each(|p| *p /= sum);
    }
    out
}

/// `KL(p || q)`; zero entries of `p` contribute nothing.
pub(crate) fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.ln()))
        .sum()
}

fn mean_rows<'a>(rows: impl Iterator<Item = &'a [f64]>, k: usize) -> Vec<f64> {
    let mut acc = vec![0.0; k];
    let mut n = 0usize;
    for row in rows {
        acc.iter_mut().zip(row).for_each(|(a, &p)| *a += p);
        n += 1;
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    acc
}

fn check_lengths(probs: &ProbabilityMatrix, labels: &LabelVector) -> Result<()> {
    if probs.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "probability rows vs labels",
            left: probs.nrows(),
            right: labels.len(),
        });
    }
    Ok(())
}

/// `exp(mean_x KL(p(y|x) || p(y)))` with `p(y)` the unweighted row mean.
pub fn inception_score(probs: &ProbabilityMatrix) -> f64 {
    let k = probs.nclasses();
    let rows = floored_rows(probs);
    let marginal = mean_rows(rows.chunks_exact(k), k);
    let total: f64 = rows.chunks_exact(k).map(|r| kl(r, &marginal)).sum();
    (total / probs.nrows() as f64).exp()
}

/// IS, BCIS, WCIS and the per-class IS vector from one pass over the data.
#[derive(Debug, Clone, PartialEq)]
pub struct InceptionScores {
    pub is: f64,
    pub bcis: f64,
    pub wcis: f64,
    pub per_class: Vec<f64>,
}

pub fn inception_scores(
    probs: &ProbabilityMatrix,
    labels: &LabelVector,
    weighting: Weighting,
) -> Result<InceptionScores> {
    check_lengths(probs, labels)?;
    let counts = labels.require_min_members(1)?;
    let priors = weighting.priors(&counts);
    let k = probs.nclasses();
    let rows = floored_rows(probs);
    let row = |i: usize| &rows[i * k..(i + 1) * k];

    let overall = mean_rows(rows.chunks_exact(k), k);
    let is = (rows.chunks_exact(k).map(|r| kl(r, &overall)).sum::<f64>() / probs.nrows() as f64).exp();

    let members = labels.members();
    let class_means: Vec<Vec<f64>> = members
        .par_iter()
        .map(|m| mean_rows(m.iter().map(|&i| row(i)), k))
        .collect();
    let within_kl: Vec<f64> = members
        .par_iter()
        .zip(&class_means)
        .map(|(m, mean)| m.iter().map(|&i| kl(row(i), mean)).sum::<f64>() / m.len() as f64)
        .collect();

    let mut marginal = vec![0.0; k];
    for (mean, &w) in class_means.iter().zip(&priors) {
        marginal.iter_mut().zip(mean).for_each(|(m, &p)| *m += w * p);
    }
    let between: f64 = class_means
        .iter()
        .zip(&priors)
        .map(|(mean, &w)| w * kl(mean, &marginal))
        .sum();
    let within: f64 = within_kl.iter().zip(&priors).map(|(v, &w)| w * v).sum();

    Ok(InceptionScores {
        is,
        bcis: between.exp(),
        wcis: within.exp(),
        per_class: within_kl.iter().map(|v| v.exp()).collect(),
    })
}

/// IS of the per-class average distributions (class-level mutual
/// information between condition and predicted label).
pub fn bcis(probs: &ProbabilityMatrix, labels: &LabelVector, weighting: Weighting) -> Result<f64> {
    Ok(inception_scores(probs, labels, weighting)?.bcis)
}

/// `exp` of the class-averaged within-class mutual information.
pub fn wcis(probs: &ProbabilityMatrix, labels: &LabelVector, weighting: Weighting) -> Result<f64> {
    Ok(inception_scores(probs, labels, weighting)?.wcis)
}

/// Per-class IS, each against that class's own average distribution.
pub fn per_class_is(probs: &ProbabilityMatrix, labels: &LabelVector) -> Result<Vec<f64>> {
    Ok(inception_scores(probs, labels, Weighting::Empirical)?.per_class)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accuracy {
    pub overall: f64,
    /// NaN for classes without members.
    pub per_class: Vec<f64>,
}

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
pub fn accuracy(probs: &ProbabilityMatrix, labels: &LabelVector) -> Result<Accuracy> {
    accuracy_impl(probs, labels, |c| c)
}

/// Accuracy where conditioned class `c` counts as correct on real class
/// `pairing.mapping()[c]`.
pub fn accuracy_paired(
    probs: &ProbabilityMatrix,
    labels: &LabelVector,
    pairing: &ClassAssignment,
) -> Result<Accuracy> {
    if pairing.len() != labels.class_count() {
        return Err(Error::DimensionMismatch {
            context: "pairing vs conditioned classes",
            left: pairing.len(),
            right: labels.class_count(),
        });
    }
    accuracy_impl(probs, labels, |c| pairing.mapping()[c])
}

fn accuracy_impl(
    probs: &ProbabilityMatrix,
    labels: &LabelVector,
    target: impl Fn(usize) -> usize,
) -> Result<Accuracy> {
    check_lengths(probs, labels)?;
    let mut hits = vec![0usize; labels.class_count()];
    for (i, &c) in labels.as_slice().iter().enumerate() {
        if probs.argmax(i) == target(c) {
            hits[c] += 1;
        }
    }
    let counts = labels.counts();
    let per_class = hits
        .iter()
        .zip(&counts)
        .map(|(&h, &n)| if n == 0 { f64::NAN } else { h as f64 / n as f64 })
        .collect();
    Ok(Accuracy {
        overall: hits.iter().sum::<usize>() as f64 / labels.len() as f64,
        per_class,
    })
}
