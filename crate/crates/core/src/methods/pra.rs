//! Pivotal reordering: permute each iteration's parameter matrix to
//! maximize its dot product with a pivot matrix (equivalently, to minimize
//! the Euclidean distance to the pivot). The objective is linear in the
//! permutation, so it reduces to the assignment kernel instead of scanning
//! all K! dot products; the exhaustive scan survives in the tests as an
//! oracle.

use super::MethodOutput;
use crate::assignment::solve_max_assignment;
use crate::chains::ParameterChain;
use crate::error::{Error, Result};
use crate::perm::PermutationSet;
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

/// `score[k][l] = sum_j xi[l][j] * pivot[k][j]`.
pub fn pra_score(params: ArrayView2<'_, f64>, pivot: ArrayView2<'_, f64>) -> Array2<f64> {
    let k = params.nrows();
    Array2::from_shape_fn((k, k), |(c, l)| params.row(l).dot(&pivot.row(c)))
}

pub fn pra(mcmc: &ParameterChain, pivot: ArrayView2<'_, f64>) -> Result<MethodOutput> {
    if pivot.nrows() != mcmc.k() || pivot.ncols() != mcmc.j() {
        return Err(Error::DimensionMismatch(format!(
            "pivot must be {} x {}, got {} x {}",
            mcmc.k(),
            mcmc.j(),
            pivot.nrows(),
            pivot.ncols()
        )));
    }
    if let Some((idx, v)) = pivot.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "pivot[{}][{}] = {v}",
            idx.0 + 1,
            idx.1 + 1
        )));
    }
    let (m, k) = (mcmc.m(), mcmc.k());
    let per_t: Vec<(Vec<usize>, f64)> = (0..m)
        .into_par_iter()
        .map(|t| {
            let score = pra_score(mcmc.iteration(t), pivot);
            let res = solve_max_assignment(score.view()).expect("finite score matrix");
            (res.perm.as_slice().to_vec(), res.objective)
        })
        .collect();
    let mut rows = Array2::zeros((m, k));
    let mut total = 0.0;
    for (t, (row, obj)) in per_t.iter().enumerate() {
        for (c, &l) in row.iter().enumerate() {
            rows[[t, c]] = l;
        }
        total += obj;
    }
    Ok(MethodOutput::one_shot(
        PermutationSet::from_rows(rows)?,
        total,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::brute_force_assignment;
    use ndarray::{array, Array3, Axis};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_pivot_gives_identity() {
        let mut data = Array3::zeros((1, 3, 2));
        data.index_axis_mut(Axis(0), 0)
            .assign(&array![[1.0, 0.0], [4.0, 2.0], [-3.0, 5.0]]);
        let mcmc = ParameterChain::new(data.clone()).unwrap();
        let pivot = data.index_axis(Axis(0), 0).to_owned();
        let out = pra(&mcmc, pivot.view()).unwrap();
        assert_eq!(out.permutations.row(0).to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn swapped_rows_are_swapped_back() {
        let mut data = Array3::zeros((1, 2, 2));
        data.index_axis_mut(Axis(0), 0)
            .assign(&array![[0.0, 1.0], [1.0, 0.0]]);
        let mcmc = ParameterChain::new(data).unwrap();
        let pivot = array![[1.0, 0.0], [0.0, 1.0]];
        let out = pra(&mcmc, pivot.view()).unwrap();
        assert_eq!(out.permutations.row(0).to_vec(), vec![1, 0]);
    }

    #[test]
    fn matches_brute_force_per_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let k = 5;
        let j = 3;
        let data = Array3::from_shape_fn((20, k, j), |_| rng.random::<f64>() * 4.0 - 2.0);
        let mcmc = ParameterChain::new(data).unwrap();
        let pivot = Array2::from_shape_fn((k, j), |_| rng.random::<f64>() * 4.0 - 2.0);
        let out = pra(&mcmc, pivot.view()).unwrap();
        for t in 0..20 {
            let score = pra_score(mcmc.iteration(t), pivot.view());
            let oracle = brute_force_assignment(score.view(), true).unwrap();
            assert_eq!(out.permutations.row(t).to_vec(), oracle.perm.as_slice());
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let data = Array3::zeros((1, 2, 2));
        let mcmc = ParameterChain::new(data).unwrap();
        let pivot = Array2::zeros((3, 2));
        assert!(pra(&mcmc, pivot.view()).is_err());
    }
}
