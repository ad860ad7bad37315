//! Validated input containers: features, class probabilities and labels.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Allowed deviation of a probability row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// `N x d` matrix of feature vectors, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::invalid(format!(
                "feature matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            // column-major position
            let (r, c) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::invalid(format!(
                "feature matrix has a non-finite entry at row {r}, column {c}"
            )));
        }
        Ok(Self { data })
    }

    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged feature rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, &flat)
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.data.transpose().as_slice().to_vec()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.nrows()) {
            return Err(Error::invalid(format!("row index {bad} out of range")));
        }
        Self::new(self.data.select_rows(rows))
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.ncols()) {
            return Err(Error::invalid(format!("column index {bad} out of range")));
        }
        Self::new(self.data.select_columns(cols))
    }

    /// Stacks the rows of several matrices with equal width.
    pub fn vstack(parts: &[FeatureMatrix]) -> Result<Self> {
        let cols = parts.first().map_or(0, FeatureMatrix::ncols);
        if parts.iter().any(|p| p.ncols() != cols) {
            return Err(Error::invalid("cannot stack feature matrices of different widths"));
        }
        let rows: usize = parts.iter().map(FeatureMatrix::nrows).sum();
        let mut out = DMatrix::zeros(rows, cols);
        let mut at = 0;
        for p in parts {
            out.rows_mut(at, p.nrows()).copy_from(&p.data);
            at += p.nrows();
        }
        Self::new(out)
    }
}

/// `N x K` matrix of per-sample class distributions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    rows: usize,
    classes: usize,
    data: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn from_row_major(rows: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid(format!(
                "probability matrix needs at least 2 classes, got {classes}"
            )));
        }
        if rows == 0 {
            return Err(Error::invalid("probability matrix has no rows"));
        }
        if data.len() != rows * classes {
            return Err(Error::invalid(format!(
                "expected {} probabilities, got {}",
                rows * classes,
                data.len()
            )));
        }
        for (i, row) in data.chunks_exact(classes).enumerate() {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(format!(
                    "row {i}: probability {v} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::invalid(format!("row {i}: probabilities sum to {sum}")));
            }
        }
        Ok(Self {
            rows,
            classes,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != classes) {
            return Err(Error::invalid("ragged probability rows"));
        }
        Self::from_row_major(rows.len(), classes, rows.iter().flatten().copied().collect())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn nclasses(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.classes..(i + 1) * self.classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.classes)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.classes);
        for &r in rows {
            if r >= self.rows {
                return Err(Error::invalid(format!("row index {r} out of range")));
            }
            data.extend_from_slice(self.row(r));
        }
        Self::from_row_major(rows.len(), self.classes, data)
    }

    /// Index of the largest entry of row `i`; ties go to the lowest index.
    pub fn argmax(&self, i: usize) -> usize {
        let mut best = 0;
        for (k, &v) in self.row(i).iter().enumerate().skip(1) {
            if v > self.row(i)[best] {
                best = k;
            }
        }
        best
    }
}

/// Conditioned-class index per sample, each in `[0, class_count)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector {
    labels: Vec<usize>,
    class_count: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::invalid("class count must be positive"));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= class_count) {
            return Err(Error::invalid(format!(
                "label {l} at index {i} is outside [0, {class_count})"
            )));
        }
        Ok(Self {
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Sample indices grouped by class, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.class_count];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let labels = rows
            .iter()
            .map(|&r| {
                self.labels
                    .get(r)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("row index {r} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, self.class_count)
    }

    /// Fails with [`Error::ClassTooSmall`] naming the first class below `min`.
    pub fn require_min_members(&self, min: usize) -> Result<Vec<usize>> {
        let counts = self.counts();
        if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &c)| c < min) {
            return Err(Error::ClassTooSmall {
                class,
                count,
                required: min,
            });
        }
        Ok(counts)
    }
}

/// How per-class quantities are averaged into a single score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Each class weighted by its empirical frequency.
    #[default]
    Empirical,
    /// Every class weighted `1/K`.
    Uniform,
}

impl Weighting {
    pub fn priors(self, counts: &[usize]) -> Vec<f64> {
        match self {
            Weighting::Empirical => {
                let total: usize = counts.iter().sum();
                counts.iter().map(|&c| c as f64 / total as f64).collect()
            }
            Weighting::Uniform => vec![1.0 / counts.len() as f64; counts.len()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_features() {
        let err = FeatureMatrix::from_rows(&[vec![1.0, f64::NAN]]).unwrap_err();
        assert!(err.to_string().contains("row 0, column 1"), "{err}");
        assert!(FeatureMatrix::from_rows(&[]).is_err());
    }

    #[test]
    fn probability_rows_must_sum_to_one() {
        assert!(ProbabilityMatrix::from_rows(&[vec![0.5, 0.5]]).is_ok());
        assert!(ProbabilityMatrix::from_rows(&[vec![0.5, 0.4]]).is_err());
        assert!(ProbabilityMatrix::from_rows(&[vec![1.2, -0.2]]).is_err());
        assert!(ProbabilityMatrix::from_rows(&[vec![1.0]]).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let p = ProbabilityMatrix::from_rows(&[vec![0.4, 0.4, 0.2], vec![0.2, 0.4, 0.4]]).unwrap();
        assert_eq!(p.argmax(0), 0);
        assert_eq!(p.argmax(1), 1);
    }

    #[test]
    fn label_members_and_minimums() {
        let l = LabelVector::new(vec![1, 0, 1, 2], 4).unwrap();
        assert_eq!(l.counts(), vec![1, 2, 1, 0]);
        assert_eq!(l.members()[1], vec![0, 2]);
        assert_eq!(
            l.require_min_members(1).unwrap_err(),
            Error::ClassTooSmall {
                class: 3,
                count: 0,
                required: 1
            }
        );
        assert!(LabelVector::new(vec![3], 3).is_err());
    }

    #[test]
    fn vstack_and_select() {
        let a = FeatureMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = FeatureMatrix::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let s = FeatureMatrix::vstack(&[a, b]).unwrap();
        assert_eq!(s.to_row_major(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(s.select_columns(&[1]).unwrap().to_row_major(), vec![2.0, 4.0, 6.0]);
        assert_eq!(s.select_rows(&[2, 0]).unwrap().to_row_major(), vec![5.0, 6.0, 1.0, 2.0]);
    }
}
