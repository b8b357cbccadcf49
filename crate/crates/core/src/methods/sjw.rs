//! Probabilistic relabelling: treat the permutation applied at each MCMC
//! iteration as missing data. An EM-style loop alternates between weighting
//! all K! permutations of a running parameter estimate by the complete
//! likelihood of each iteration (E-step) and refreshing the estimate with
//! the weighted average of the permuted draws (M-step).
//!
//! The K! inner loop caps the method at K <= 6; the assignment-based
//! methods stay polynomial and should be preferred for larger K.

use super::{check_threshold, MethodOutput};
use crate::chains::{AllocationChain, Dataset, ParameterChain};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::perm::{Permutation, PermutationSet};
use ndarray::Array2;
use rayon::prelude::*;

const MAX_FACTORIAL: usize = 720; // 6!

fn enumerate_permutations(k: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut map: Vec<usize> = (0..k).collect();
    loop {
        out.push(Permutation::new(map.clone()).expect("valid by construction"));
        // lexicographic successor
        let n = map.len();
        let mut i = n - 1;
        while i > 0 && map[i - 1] >= map[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while map[j] <= map[i - 1] {
            j -= 1;
        }
        map.swap(i - 1, j);
        map[i..].reverse();
    }
    out
}

pub fn sjw(
    mcmc: &ParameterChain,
    z: &AllocationChain,
    x: &Dataset,
    model: &dyn Model,
    init_index: usize,
    thr: f64,
    max_iter: usize,
) -> Result<MethodOutput> {
    check_threshold(thr, max_iter)?;
    let (m, k) = (mcmc.m(), mcmc.k());
    if z.m() != m || z.k() != k || z.n() != x.n() || model.k() != k || mcmc.j() != model.j() {
        return Err(Error::DimensionMismatch(format!(
            "mcmc {}x{}x{}, z {}x{} (K={}), data n={}, model K={} J={}",
            m,
            k,
            mcmc.j(),
            z.m(),
            z.n(),
            z.k(),
            x.n(),
            model.k(),
            model.j()
        )));
    }
    if init_index >= m {
        return Err(Error::InvalidInput(format!(
            "initial index {} out of range 1..={m}",
            init_index + 1
        )));
    }
    let n_perms = (1..=k).product::<usize>();
    if n_perms > MAX_FACTORIAL {
        return Err(Error::InvalidInput(format!(
            "probabilistic relabelling needs K! weights per iteration; K = {k} gives {n_perms} > {MAX_FACTORIAL}"
        )));
    }
    let taus = enumerate_permutations(k);

    let mut estimate = mcmc.iteration(init_index).to_owned();
    let mut weights = Array2::<f64>::zeros((m, n_perms));
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < max_iter {
        sweeps += 1;

        // E-step: permutation weights per iteration, normalized in log space
        let permuted: Vec<Array2<f64>> = taus
            .iter()
            .map(|tau| model.permute_params(estimate.view(), tau))
            .collect();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|t| -> Result<Vec<f64>> {
                let zt = z.iteration(t).to_vec();
                let mut ll = Vec::with_capacity(n_perms);
                for params in &permuted {
                    ll.push(model.complete_log_likelihood(params.view(), x, &zt)?);
                }
                let max = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !max.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "all permutation likelihoods vanished at iteration {}",
                        t + 1
                    )));
                }
                let total: f64 = ll.iter().map(|v| (v - max).exp()).sum();
                Ok(ll.iter().map(|v| (v - max).exp() / total).collect())
            })
            .collect::<Result<_>>()?;
        for (t, row) in rows.iter().enumerate() {
            for (r, &g) in row.iter().enumerate() {
                weights[[t, r]] = g;
            }
        }

        // M-step: weighted average of the permuted draws
        let mut next = Array2::<f64>::zeros(estimate.raw_dim());
        for t in 0..m {
            let params = mcmc.iteration(t);
            for (r, tau) in taus.iter().enumerate() {
                let g = weights[[t, r]];
                if g == 0.0 {
                    continue;
                }
                let permuted = model.permute_params(params, tau);
                next.zip_mut_with(&permuted, |acc, &v| *acc += g * v);
            }
        }
        next.mapv_inplace(|v| v / m as f64);

        let delta = estimate
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        estimate = next;
        trace.push(delta);
        if delta < thr {
            converged = true;
            break;
        }
    }

    // final permutations: per-iteration argmax of the last weight matrix,
    // ties to the lexicographically smallest permutation
    let mut rows = Array2::zeros((m, k));
    for t in 0..m {
        let mut best = 0;
        for r in 1..n_perms {
            if weights[[t, r]] > weights[[t, best]] {
                best = r;
            }
        }
        for (c, &l) in taus[best].as_slice().iter().enumerate() {
            rows[[t, c]] = l;
        }
    }

    Ok(MethodOutput {
        permutations: PermutationSet::from_rows(rows)?,
        objective_trace: trace,
        iterations_used: sweeps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelFamily;
    use ndarray::{array, Array3, Axis};

    fn single_iteration_chain(params: Array2<f64>) -> ParameterChain {
        let (k, j) = (params.nrows(), params.ncols());
        let mut data = Array3::zeros((1, k, j));
        data.index_axis_mut(Axis(0), 0).assign(&params);
        ParameterChain::new(data).unwrap()
    }

    #[test]
    fn single_iteration_matches_enumeration_oracle() {
        let model = ModelFamily::univariate_normal(3);
        // deliberately scrambled draw: allocations disagree with the means
        let params = array![
            [5.0, 1.0, 0.4],
            [-5.0, 1.0, 0.3],
            [0.0, 1.0, 0.3]
        ];
        let mcmc = single_iteration_chain(params.clone());
        let x = Dataset::univariate(vec![-5.2, -4.9, 0.1, -0.2, 5.1, 4.8]).unwrap();
        let z = AllocationChain::new(
            Array2::from_shape_vec((1, 6), vec![0, 0, 1, 1, 2, 2]).unwrap(),
            3,
        )
        .unwrap();
        // a single sweep weighs the permutations of the initial estimate
        let out = sjw(&mcmc, &z, &x, &model, 0, 1e-6, 1).unwrap();

        // oracle: argmax over all K! permutations of the complete likelihood
        let taus = enumerate_permutations(3);
        let mut best = 0;
        let mut best_ll = f64::NEG_INFINITY;
        for (r, tau) in taus.iter().enumerate() {
            let permuted = model.permute_params(params.view(), tau);
            let ll = model
                .complete_log_likelihood(permuted.view(), &x, &[0, 0, 1, 1, 2, 2])
                .unwrap();
            if ll > best_ll {
                best_ll = ll;
                best = r;
            }
        }
        assert_eq!(taus[best].as_slice(), &[1, 2, 0]);
        assert_eq!(
            out.permutations.row(0).to_vec(),
            taus[best].as_slice().to_vec()
        );
    }

    #[test]
    fn consistent_single_draw_converges_to_identity() {
        let model = ModelFamily::univariate_normal(3);
        let params = array![
            [-5.0, 1.0, 0.3],
            [0.0, 1.0, 0.3],
            [5.0, 1.0, 0.4]
        ];
        let mcmc = single_iteration_chain(params);
        let x = Dataset::univariate(vec![-5.2, -4.9, 0.1, -0.2, 5.1, 4.8]).unwrap();
        let z = AllocationChain::new(
            Array2::from_shape_vec((1, 6), vec![0, 0, 1, 1, 2, 2]).unwrap(),
            3,
        )
        .unwrap();
        let out = sjw(&mcmc, &z, &x, &model, 0, 1e-6, 50).unwrap();
        assert!(out.converged);
        assert_eq!(out.permutations.row(0).to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn initializer_symmetry_at_k2() {
        // permuting the initial estimate permutes every weight vector
        let model = ModelFamily::univariate_normal(2);
        let params = array![[-3.0, 1.0, 0.5], [3.0, 1.0, 0.5]];
        let x = Dataset::univariate(vec![-3.1, -2.9, 3.2, 2.8]).unwrap();
        let z_data = Array2::from_shape_vec((1, 4), vec![0, 0, 1, 1]).unwrap();
        let z = AllocationChain::new(z_data, 2).unwrap();

        let taus = enumerate_permutations(2);
        let sigma = &taus[1]; // the swap
        let weights_for = |init: &Array2<f64>| -> Vec<f64> {
            let lls: Vec<f64> = taus
                .iter()
                .map(|tau| {
                    let p = model.permute_params(init.view(), tau);
                    model
                        .complete_log_likelihood(p.view(), &x, &[0, 0, 1, 1])
                        .unwrap()
                })
                .collect();
            let max = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = lls.iter().map(|v| (v - max).exp()).sum();
            lls.iter().map(|v| (v - max).exp() / total).collect()
        };
        let base = weights_for(&params);
        let permuted_init = model.permute_params(params.view(), sigma);
        let swapped = weights_for(&permuted_init);
        // g_tau(sigma xi) = g_{sigma . tau}(xi): at K = 2 this swaps the entries
        assert!((base[0] - swapped[1]).abs() < 1e-12);
        assert!((base[1] - swapped[0]).abs() < 1e-12);
    }

    #[test]
    fn k_too_large_is_rejected() {
        let model = ModelFamily::univariate_normal(7);
        let data = Array3::zeros((1, 7, 3));
        let mut data = data;
        for c in 0..7 {
            data[[0, c, 1]] = 1.0;
            data[[0, c, 2]] = 1.0 / 7.0;
        }
        let mcmc = ParameterChain::new(data).unwrap();
        let x = Dataset::univariate(vec![0.0]).unwrap();
        let z = AllocationChain::new(Array2::zeros((1, 1)), 7).unwrap();
        let err = sjw(&mcmc, &z, &x, &model, 0, 1e-6, 10).unwrap_err();
        assert!(err.to_string().contains("K!") || err.to_string().contains("5040"));
    }
}
