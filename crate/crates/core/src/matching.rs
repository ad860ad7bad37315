//! Alignment of conditioned (possibly unlabeled) classes to real classes.
//!
//! Each conditioned class is summarised by its average predicted class
//! distribution, and the one-to-one pairing maximising the total average
//! probability is found with the Hungarian method.

use nalgebra::DMatrix;

use crate::data::{LabelVector, ProbabilityMatrix};
use crate::error::{Error, Result};

/// `mapping[c]` is the real class paired with conditioned class `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAssignment {
    mapping: Vec<usize>,
    score: f64,
}

impl ClassAssignment {
    pub fn new(mapping: Vec<usize>, score: f64) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &m in &mapping {
            if m >= mapping.len() || seen[m] {
                return Err(Error::invalid(format!(
                    "class mapping {mapping:?} is not a permutation"
                )));
            }
            seen[m] = true;
        }
        Ok(Self { mapping, score })
    }

    /// The pairing `c -> c`, with score 0.
    pub fn identity(classes: usize) -> Self {
        Self {
            mapping: (0..classes).collect(),
            score: 0.0,
        }
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }
}

/// Row `c` is the mean probability row over samples conditioned on `c`.
pub fn average_class_probabilities(
    probs: &ProbabilityMatrix,
    conds: &LabelVector,
) -> Result<DMatrix<f64>> {
    let k = probs.nclasses();
    if conds.class_count() != k {
        return Err(Error::DimensionMismatch {
            context: "conditioned vs real class count",
            left: conds.class_count(),
            right: k,
        });
    }
    if conds.len() != probs.nrows() {
        return Err(Error::DimensionMismatch {
            context: "labels vs probability rows",
            left: conds.len(),
            right: probs.nrows(),
        });
    }
    let counts = conds.require_min_members(1)?;
    let mut avg = DMatrix::zeros(k, k);
    for (row, &c) in probs.rows().zip(conds.as_slice()) {
        for (j, &p) in row.iter().enumerate() {
            avg[(c, j)] += p;
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        avg.row_mut(c).unscale_mut(n as f64);
    }
    Ok(avg)
}

/// Permutation maximising `sum_c value[c][mapping[c]]`. Among optimal
/// permutations the lexicographically smallest mapping is returned.
pub fn hungarian_max(value: &DMatrix<f64>) -> Result<ClassAssignment> {
    if !value.is_square() {
        return Err(Error::invalid(format!(
            "assignment needs a square matrix, got {}x{}",
            value.nrows(),
            value.ncols()
        )));
    }
    if value.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("assignment matrix has non-finite entries"));
    }
    let n = value.nrows();
    if n == 0 {
        return Err(Error::invalid("assignment matrix is empty"));
    }
    let top = value.max();
    let cost = value.map(|v| top - v);
    let solution = min_cost_assignment(&cost);

    let scale = 1.0 + value.amax();
    let tol = 1e-11 * scale * n as f64;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| (cost[(i, j)] - solution.row_dual[i] - solution.col_dual[j]).abs() <= tol)
                .collect()
        })
        .collect();
    let mapping = lexicographic_matching(&tight, solution.row_to_col);
    let score = mapping.iter().enumerate().map(|(c, &j)| value[(c, j)]).sum();
    ClassAssignment::new(mapping, score)
}

/// Average the probabilities per conditioned class and pair classes by
/// maximum total average probability.
pub fn align_discovered(probs: &ProbabilityMatrix, conds: &LabelVector) -> Result<ClassAssignment> {
    hungarian_max(&average_class_probabilities(probs, conds)?)
}

struct AssignmentSolution {
    row_to_col: Vec<usize>,
    row_dual: Vec<f64>,
    col_dual: Vec<f64>,
}

/// O(n^3) shortest-augmenting-path Hungarian method with dual potentials.
/// On return `cost[i][j] - row_dual[i] - col_dual[j] >= 0` everywhere, with
/// equality on the assignment.
fn min_cost_assignment(cost: &DMatrix<f64>) -> AssignmentSolution {
    let n = cost.nrows();
    // 1-based with a sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }
    AssignmentSolution {
        row_to_col,
        row_dual: u[1..].to_vec(),
        col_dual: v[1..].to_vec(),
    }
}

/// Lexicographically smallest perfect matching in the bipartite graph
/// `tight`, starting from the perfect matching `start`.
fn lexicographic_matching(tight: &[Vec<usize>], start: Vec<usize>) -> Vec<usize> {
    let n = tight.len();
    let mut row_to_col = start;
    let mut col_to_row = vec![0; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }

    for row in 0..n {
        let current = row_to_col[row];
        for &col in tight[row].iter().filter(|&&c| c < current) {
            // Row `holder` must move elsewhere, ending on the column `row` frees.
            let holder = col_to_row[col];
            if holder < row {
                continue;
            }
            let mut visited = vec![false; n];
            visited[col] = true;
            let mut path = Vec::new();
            if augment(tight, &col_to_row, row, holder, current, &mut visited, &mut path) {
                for (r, c) in path {
                    row_to_col[r] = c;
                    col_to_row[c] = r;
                }
                row_to_col[row] = col;
                col_to_row[col] = row;
                break;
            }
        }
    }
    row_to_col
}

/// Depth-first search for an alternating path that re-seats `r` (and any
/// rows it displaces) on columns other than those held by rows `<= locked`,
/// terminating at column `target`.
fn augment(
    tight: &[Vec<usize>],
    col_to_row: &[usize],
    locked: usize,
    r: usize,
    target: usize,
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for &c in &tight[r] {
        if visited[c] {
            continue;
        }
        visited[c] = true;
        if c == target {
            path.push((r, c));
            return true;
        }
        let next = col_to_row[c];
        if next <= locked {
            continue;
        }
        if augment(tight, col_to_row, locked, next, target, visited, path) {
            path.push((r, c));
            return true;
        }
    }
    false
}
