//! Permutation algebra shared by every relabelling method.
//!
//! Labels are `0..K` internally and 1-based in every external format. A
//! stored permutation `tau` acts on a `K x J` parameter matrix by row
//! reindexing, `out[k] = params[tau[k]]`, and on an allocation vector
//! through its inverse, `out[i] = tau^-1[z[i]]`. That pairing is the one
//! under which the complete likelihood is unchanged, so all methods in
//! this crate emit the same convention.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView1, ArrayView2};

/// A bijection of the component labels `{0, ..., K-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// Validates that `map` is a bijection on `{0, ..., K-1}`.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let k = map.len();
        if k == 0 {
            return Err(Error::InvalidPermutation("empty mapping".into()));
        }
        let mut seen = vec![false; k];
        for &l in &map {
            if l >= k {
                return Err(Error::InvalidPermutation(format!(
                    "entry {} out of range 1..={k}",
                    l + 1
                )));
            }
            if seen[l] {
                return Err(Error::InvalidPermutation(format!(
                    "entry {} repeated",
                    l + 1
                )));
            }
            seen[l] = true;
        }
        Ok(Permutation { map })
    }

    pub fn identity(k: usize) -> Self {
        Permutation {
            map: (0..k).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.map.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(k, &l)| k == l)
    }

    /// Inverse bijection: `result[self[k]] = k` for all `k`.
    pub fn invert(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (k, &l) in self.map.iter().enumerate() {
            inv[l] = k;
        }
        Permutation { map: inv }
    }

    /// Composition `out[k] = self[inner[k]]`.
    pub fn compose(&self, inner: &Permutation) -> Permutation {
        Permutation {
            map: inner.map.iter().map(|&k| self.map[k]).collect(),
        }
    }
}

/// Convenience constructor used throughout the tests.
impl TryFrom<&[usize]> for Permutation {
    type Error = Error;
    fn try_from(map: &[usize]) -> Result<Self> {
        Permutation::new(map.to_vec())
    }
}

/// Reorder the rows of a `K x J` parameter matrix: `out[k][j] = params[perm[k]][j]`.
pub fn apply_to_parameters(params: ArrayView2<'_, f64>, perm: &Permutation) -> Result<Array2<f64>> {
    if params.nrows() != perm.k() {
        return Err(Error::DimensionMismatch(format!(
            "parameter matrix has {} rows, permutation has K={}",
            params.nrows(),
            perm.k()
        )));
    }
    let mut out = Array2::zeros(params.raw_dim());
    for (k, &l) in perm.as_slice().iter().enumerate() {
        out.row_mut(k).assign(&params.row(l));
    }
    Ok(out)
}

/// Apply the permutation as a function to labels: `out[i] = perm[alloc[i]]`.
pub fn apply_to_allocations(alloc: &[usize], perm: &Permutation) -> Result<Vec<usize>> {
    let k = perm.k();
    let map = perm.as_slice();
    alloc
        .iter()
        .map(|&z| {
            if z >= k {
                Err(Error::LabelOutOfRange { label: z + 1, k })
            } else {
                Ok(map[z])
            }
        })
        .collect()
}

/// Reindex the columns of an `n x K` classification matrix: `out[i][k] = probs[i][perm[k]]`.
pub fn apply_to_classification(
    probs: ArrayView2<'_, f64>,
    perm: &Permutation,
) -> Result<Array2<f64>> {
    if probs.ncols() != perm.k() {
        return Err(Error::DimensionMismatch(format!(
            "classification matrix has {} columns, permutation has K={}",
            probs.ncols(),
            perm.k()
        )));
    }
    let mut out = Array2::zeros(probs.raw_dim());
    for (k, &l) in perm.as_slice().iter().enumerate() {
        out.column_mut(k).assign(&probs.column(l));
    }
    Ok(out)
}

/// Most frequent label per column of an `m x n` allocation array.
/// Ties break towards the smallest label.
pub fn mode_per_observation(allocs: ArrayView2<'_, usize>, k: usize) -> Vec<usize> {
    let n = allocs.ncols();
    let mut out = Vec::with_capacity(n);
    let mut counts = vec![0usize; k];
    for i in 0..n {
        counts.iter_mut().for_each(|c| *c = 0);
        for &z in allocs.column(i) {
            counts[z] += 1;
        }
        let mut best = 0;
        for l in 1..k {
            if counts[l] > counts[best] {
                best = l;
            }
        }
        out.push(best);
    }
    out
}

/// One permutation per retained MCMC iteration, the universal output of
/// every relabelling method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSet {
    rows: Array2<usize>,
}

impl PermutationSet {
    /// Validates every row as a bijection on `{0, ..., K-1}`.
    pub fn from_rows(rows: Array2<usize>) -> Result<Self> {
        let k = rows.ncols();
        let mut seen = vec![false; k];
        for (t, row) in rows.rows().into_iter().enumerate() {
            seen.iter_mut().for_each(|s| *s = false);
            for &l in row {
                if l >= k {
                    return Err(Error::InvalidPermutation(format!(
                        "row {}: entry {} out of range 1..={k}",
                        t + 1,
                        l + 1
                    )));
                }
                if seen[l] {
                    return Err(Error::InvalidPermutation(format!(
                        "row {}: entry {} repeated",
                        t + 1,
                        l + 1
                    )));
                }
                seen[l] = true;
            }
        }
        Ok(PermutationSet { rows })
    }

    pub fn identity(m: usize, k: usize) -> Self {
        let mut rows = Array2::zeros((m, k));
        for mut row in rows.rows_mut() {
            for (l, v) in row.iter_mut().enumerate() {
                *v = l;
            }
        }
        PermutationSet { rows }
    }

    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    pub fn k(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Array2<usize> {
        &self.rows
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, usize> {
        self.rows.row(t)
    }

    pub fn permutation(&self, t: usize) -> Permutation {
        Permutation {
            map: self.rows.row(t).to_vec(),
        }
    }

    /// Row-wise inverse of the whole set.
    pub fn invert(&self) -> PermutationSet {
        let mut rows = Array2::zeros(self.rows.raw_dim());
        for (t, row) in self.rows.rows().into_iter().enumerate() {
            for (k, &l) in row.iter().enumerate() {
                rows[[t, l]] = k;
            }
        }
        PermutationSet { rows }
    }

    /// Compose a constant permutation onto every row: `out[t][k] = rows[t][inner[k]]`.
    pub fn compose_each(&self, inner: &Permutation) -> Result<PermutationSet> {
        if inner.k() != self.k() {
            return Err(Error::DimensionMismatch(format!(
                "permutation has K={}, set has K={}",
                inner.k(),
                self.k()
            )));
        }
        let mut rows = Array2::zeros(self.rows.raw_dim());
        for (t, row) in self.rows.rows().into_iter().enumerate() {
            for (k, &l) in inner.as_slice().iter().enumerate() {
                rows[[t, k]] = row[l];
            }
        }
        Ok(PermutationSet { rows })
    }
}
