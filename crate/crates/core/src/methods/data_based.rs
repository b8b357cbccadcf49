//! Data-based relabelling: estimate per-cluster centers and dispersions
//! from the observed data, then permute each iteration so that its
//! allocations send observations to the nearest (standardized) center.
//!
//! The center/dispersion estimates come from a single deterministic
//! reference allocation: the iteration whose allocation minimizes the
//! within-cluster sum of squares of the data. That choice is invariant to
//! label permutations, so a heavily switched chain still yields one
//! coherent labeling. Clusters with fewer than two members fall back to
//! the global column mean / standard deviation, and dispersions are
//! floored at 1e-8.

use super::MethodOutput;
use crate::assignment::solve_min_assignment;
use crate::chains::{AllocationChain, Dataset};
use crate::error::{Error, Result};
use crate::perm::PermutationSet;
use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

const SCALE_FLOOR: f64 = 1e-8;

/// Cluster centers `m[k][r]` and dispersions `s[k][r]` estimated from a
/// reference allocation.
#[derive(Debug, Clone)]
pub struct ClusterSummary {
    pub centers: Array2<f64>,
    pub scales: Array2<f64>,
}

impl ClusterSummary {
    /// Within-cluster sample mean and standard deviation of `x` under
    /// `reference`, with the documented small-cluster fallbacks.
    pub fn from_reference(x: &Dataset, reference: &[usize], k: usize) -> Result<Self> {
        let (n, d) = (x.n(), x.d());
        if reference.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "reference allocation has length {}, data has n={n}",
                reference.len()
            )));
        }
        // global column statistics as the fallback
        let mut global_mean = vec![0.0; d];
        for row in x.x().rows() {
            for r in 0..d {
                global_mean[r] += row[r];
            }
        }
        global_mean.iter_mut().for_each(|v| *v /= n as f64);
        let mut global_sd = vec![0.0; d];
        for row in x.x().rows() {
            for r in 0..d {
                let dev = row[r] - global_mean[r];
                global_sd[r] += dev * dev;
            }
        }
        for v in global_sd.iter_mut() {
            *v = (*v / (n as f64 - 1.0).max(1.0)).sqrt().max(SCALE_FLOOR);
        }

        let mut centers = Array2::zeros((k, d));
        let mut scales = Array2::zeros((k, d));
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| reference[i] == c).collect();
            for r in 0..d {
                if members.is_empty() {
                    centers[[c, r]] = global_mean[r];
                    scales[[c, r]] = global_sd[r];
                    continue;
                }
                let mean =
                    members.iter().map(|&i| x.x()[[i, r]]).sum::<f64>() / members.len() as f64;
                centers[[c, r]] = mean;
                if members.len() < 2 {
                    scales[[c, r]] = global_sd[r];
                } else {
                    let ss: f64 = members
                        .iter()
                        .map(|&i| {
                            let dev = x.x()[[i, r]] - mean;
                            dev * dev
                        })
                        .sum();
                    scales[[c, r]] = (ss / (members.len() as f64 - 1.0)).sqrt().max(SCALE_FLOOR);
                }
            }
        }
        Ok(ClusterSummary { centers, scales })
    }
}

/// Within-cluster sum of squares of `x` under one allocation; empty
/// clusters contribute nothing. Invariant to label permutations.
fn within_cluster_ss(x: &Dataset, alloc: ArrayView1<'_, usize>, k: usize) -> f64 {
    let (n, d) = (x.n(), x.d());
    let mut sums = Array2::<f64>::zeros((k, d));
    let mut counts = vec![0usize; k];
    for (i, &l) in alloc.iter().enumerate() {
        counts[l] += 1;
        for r in 0..d {
            sums[[l, r]] += x.x()[[i, r]];
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let l = alloc[i];
        for r in 0..d {
            let dev = x.x()[[i, r]] - sums[[l, r]] / counts[l] as f64;
            total += dev * dev;
        }
    }
    total
}

/// Index of the iteration whose allocation minimizes the within-cluster
/// sum of squares; ties go to the earliest iteration.
fn reference_iteration(z: &AllocationChain, x: &Dataset) -> usize {
    let mut best = 0;
    let mut best_ss = f64::INFINITY;
    for t in 0..z.m() {
        let ss = within_cluster_ss(x, z.iteration(t), z.k());
        if ss < best_ss {
            best_ss = ss;
            best = t;
        }
    }
    best
}

/// `cost[k][l] = sum over {i : alloc[i] = l} of sum_r ((x[i][r] - m[k][r]) / s[k][r])^2`.
pub fn data_based_cost(
    summary: &ClusterSummary,
    x: &Dataset,
    alloc: ArrayView1<'_, usize>,
) -> Array2<f64> {
    let k = summary.centers.nrows();
    let d = x.d();
    let mut cost = Array2::zeros((k, k));
    for (i, &l) in alloc.iter().enumerate() {
        for c in 0..k {
            let mut q = 0.0;
            for r in 0..d {
                let dev = (x.x()[[i, r]] - summary.centers[[c, r]]) / summary.scales[[c, r]];
                q += dev * dev;
            }
            cost[[c, l]] += q;
        }
    }
    cost
}

pub fn data_based(z: &AllocationChain, x: &Dataset) -> Result<MethodOutput> {
    if x.n() != z.n() {
        return Err(Error::DimensionMismatch(format!(
            "data has n={}, allocations have n={}",
            x.n(),
            z.n()
        )));
    }
    let (m, k) = (z.m(), z.k());
    let reference = z.iteration(reference_iteration(z, x)).to_vec();
    let summary = ClusterSummary::from_reference(x, &reference, k)?;
    let per_t: Vec<(Vec<usize>, f64)> = (0..m)
        .into_par_iter()
        .map(|t| {
            let cost = data_based_cost(&summary, x, z.iteration(t));
            let res = solve_min_assignment(cost.view()).expect("finite cost matrix");
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
    use crate::perm::apply_to_allocations;

    fn alloc_chain(rows: Vec<Vec<usize>>, k: usize) -> AllocationChain {
        let m = rows.len();
        let n = rows[0].len();
        let flat: Vec<usize> = rows.into_iter().flatten().collect();
        AllocationChain::new(Array2::from_shape_vec((m, n), flat).unwrap(), k).unwrap()
    }

    #[test]
    fn undoes_swaps_on_two_point_clusters() {
        // two clusters at -10 and +10; half the iterations carry swapped labels
        let x = Dataset::univariate(vec![-10.0, -10.1, -9.9, 10.0, 10.1, 9.9]).unwrap();
        let truth = vec![0, 0, 0, 1, 1, 1];
        let swapped = vec![1, 1, 1, 0, 0, 0];
        let z = alloc_chain(
            vec![truth.clone(), swapped.clone(), truth.clone(), swapped.clone()],
            2,
        );
        let out = data_based(&z, &x).unwrap();
        for t in 0..4 {
            let inv = out.permutations.permutation(t).invert();
            let relabelled = apply_to_allocations(
                &z.iteration(t).to_vec(),
                &inv,
            )
            .unwrap();
            assert_eq!(relabelled, truth, "iteration {t}");
        }
    }

    #[test]
    fn single_component_is_identity() {
        let x = Dataset::univariate(vec![0.0, 1.0, 2.0]).unwrap();
        let z = alloc_chain(vec![vec![0, 0, 0], vec![0, 0, 0]], 1);
        let out = data_based(&z, &x).unwrap();
        for t in 0..2 {
            assert_eq!(out.permutations.row(t).to_vec(), vec![0]);
        }
    }

    #[test]
    fn empty_cluster_still_returns_a_valid_permutation() {
        // label 2 never used at iteration 1: its cost column is all zeros
        let x = Dataset::univariate(vec![-5.0, -5.2, 5.0, 5.1]).unwrap();
        let z = alloc_chain(vec![vec![0, 0, 1, 1], vec![0, 0, 0, 0], vec![1, 1, 2, 2]], 3);
        let out = data_based(&z, &x).unwrap();
        assert_eq!(out.permutations.m(), 3);
        // from_rows validated bijectivity already; spot-check the shape
        assert_eq!(out.permutations.k(), 3);
    }

    #[test]
    fn dimension_mismatch() {
        let x = Dataset::univariate(vec![0.0, 1.0]).unwrap();
        let z = alloc_chain(vec![vec![0, 1, 0]], 2);
        assert!(data_based(&z, &x).is_err());
    }
}
