//! Equivalence-class representative (ECR) relabelling. Two allocation
//! vectors are equivalent when one is a label permutation of the other;
//! ECR picks a representative (the pivot) and permutes every iteration's
//! allocations to match it as closely as possible.
//!
//! The per-iteration subproblem is a K x K assignment on the contingency
//! table between pivot labels and chain labels. The default version takes
//! a user pivot; iterative version 1 re-estimates the pivot as the
//! column-wise mode of the relabelled allocations, and iterative version 2
//! re-estimates it from the averaged relabelled classification
//! probabilities.

use super::{check_threshold, MethodOutput};
use crate::assignment::solve_max_assignment;
use crate::chains::{AllocationChain, ClassificationChain};
use crate::error::{Error, Result};
use crate::perm::{mode_per_observation, PermutationSet};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

/// `A[k][l] = #{i : pivot[i] = k and alloc[i] = l}` as floats, ready for
/// the assignment solver.
pub fn contingency_table(pivot: &[usize], alloc: ArrayView1<'_, usize>, k: usize) -> Array2<f64> {
    let mut table = Array2::zeros((k, k));
    for (&zp, &za) in pivot.iter().zip(alloc.iter()) {
        table[[zp, za]] += 1.0;
    }
    table
}

fn check_pivot(zpivot: &[usize], z: &AllocationChain) -> Result<()> {
    if zpivot.len() != z.n() {
        return Err(Error::DimensionMismatch(format!(
            "pivot has length {}, allocations have n={}",
            zpivot.len(),
            z.n()
        )));
    }
    if let Some(&bad) = zpivot.iter().find(|&&l| l >= z.k()) {
        return Err(Error::LabelOutOfRange {
            label: bad + 1,
            k: z.k(),
        });
    }
    Ok(())
}

/// One assignment sweep against a fixed pivot. Returns the stored-form
/// permutations and the total number of matching allocations.
fn assign_to_pivot(z: &AllocationChain, pivot: &[usize]) -> (Array2<usize>, f64) {
    let (m, k) = (z.m(), z.k());
    let per_t: Vec<(Vec<usize>, f64)> = (0..m)
        .into_par_iter()
        .map(|t| {
            let table = contingency_table(pivot, z.iteration(t), k);
            let res = solve_max_assignment(table.view()).expect("finite contingency table");
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
    (rows, total)
}

/// Default ECR with a user-supplied pivot allocation.
pub fn ecr(z: &AllocationChain, zpivot: &[usize]) -> Result<MethodOutput> {
    check_pivot(zpivot, z)?;
    let (rows, total) = assign_to_pivot(z, zpivot);
    Ok(MethodOutput::one_shot(
        PermutationSet::from_rows(rows)?,
        total,
    ))
}

/// Relabel every iteration by the stored-convention inverse and take the
/// column-wise mode.
fn mode_pivot(z: &AllocationChain, perms: &PermutationSet) -> Vec<usize> {
    let (m, n, k) = (z.m(), z.n(), z.k());
    let mut relabelled = Array2::zeros((m, n));
    for t in 0..m {
        let inv = perms.permutation(t).invert();
        let map = inv.as_slice();
        for (i, &zi) in z.iteration(t).iter().enumerate() {
            relabelled[[t, i]] = map[zi];
        }
    }
    mode_per_observation(relabelled.view(), k)
}

fn iterate_ecr<F>(
    z: &AllocationChain,
    thr: f64,
    max_iter: usize,
    mut update_pivot: F,
) -> Result<MethodOutput>
where
    F: FnMut(&AllocationChain, &PermutationSet) -> Vec<usize>,
{
    check_threshold(thr, max_iter)?;
    let (m, k) = (z.m(), z.k());
    let mut perms = PermutationSet::identity(m, k);
    let mut trace = Vec::new();
    let mut prev_total = f64::NEG_INFINITY;
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < max_iter {
        sweeps += 1;
        let pivot = update_pivot(z, &perms);
        let (rows, total) = assign_to_pivot(z, &pivot);
        let changed = rows != *perms.rows();
        perms = PermutationSet::from_rows(rows)?;
        trace.push(total);
        if total - prev_total < thr && !changed {
            converged = true;
            break;
        }
        prev_total = total;
    }

    Ok(MethodOutput {
        permutations: perms,
        objective_trace: trace,
        iterations_used: sweeps,
        converged,
    })
}

/// Iterative ECR, version 1: pivot-free, alternating mode updates with
/// assignment sweeps. The match-count trace is non-decreasing.
pub fn ecr_iterative_1(z: &AllocationChain, thr: f64, max_iter: usize) -> Result<MethodOutput> {
    iterate_ecr(z, thr, max_iter, |z, perms| mode_pivot(z, perms))
}

/// Averaged relabelled classification matrix, the quantity iterative
/// version 2 derives its pivot from.
fn averaged_relabelled_p(p: &ClassificationChain, perms: &PermutationSet) -> Array2<f64> {
    let (m, n, k) = (p.m(), p.n(), p.k());
    let mut q = Array2::<f64>::zeros((n, k));
    for t in 0..m {
        let slice = p.iteration(t);
        let row = perms.row(t);
        for i in 0..n {
            for c in 0..k {
                q[[i, c]] += slice[[i, row[c]]];
            }
        }
    }
    q.mapv_inplace(|v| v / m as f64);
    q
}

/// Iterative ECR, version 2: the pivot is the per-observation argmax of
/// the classification probabilities averaged across relabelled iterations.
/// (An alternative reading would take the argmax over the pooled draws
/// instead of the average; the averaged form is used here.)
pub fn ecr_iterative_2(
    z: &AllocationChain,
    p: &ClassificationChain,
    thr: f64,
    max_iter: usize,
) -> Result<MethodOutput> {
    if p.m() != z.m() || p.n() != z.n() || p.k() != z.k() {
        return Err(Error::DimensionMismatch(format!(
            "classification chain is {} x {} x {}, allocations are {} x {} with K={}",
            p.m(),
            p.n(),
            p.k(),
            z.m(),
            z.n(),
            z.k()
        )));
    }
    iterate_ecr(z, thr, max_iter, |_z, perms| {
        let q = averaged_relabelled_p(p, perms);
        argmax_rows(q.view())
    })
}

fn argmax_rows(q: ArrayView2<'_, f64>) -> Vec<usize> {
    q.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    fn alloc_chain(rows: Vec<Vec<usize>>, k: usize) -> AllocationChain {
        let m = rows.len();
        let n = rows[0].len();
        let flat: Vec<usize> = rows.into_iter().flatten().collect();
        AllocationChain::new(Array2::from_shape_vec((m, n), flat).unwrap(), k).unwrap()
    }

    #[test]
    fn pivot_itself_gives_identity() {
        let z = alloc_chain(vec![vec![0, 0, 1, 2]], 3);
        let out = ecr(&z, &[0, 0, 1, 2]).unwrap();
        assert_eq!(out.permutations.row(0).to_vec(), vec![0, 1, 2]);
        assert_eq!(out.objective_trace, vec![4.0]);
    }

    #[test]
    fn full_swap_recovers_all_matches() {
        let z = alloc_chain(vec![vec![0, 0, 1, 1]], 2);
        let out = ecr(&z, &[1, 1, 0, 0]).unwrap();
        // stored row (2,1): its inverse maps chain labels onto the pivot
        assert_eq!(out.permutations.row(0).to_vec(), vec![1, 0]);
        assert_eq!(out.objective_trace, vec![4.0]);
        let inv = out.permutations.permutation(0).invert();
        let relabelled =
            crate::perm::apply_to_allocations(&[0, 0, 1, 1], &inv).unwrap();
        assert_eq!(relabelled, vec![1, 1, 0, 0]);
    }

    #[test]
    fn partial_match_prefers_the_swap() {
        // swap scores 3 matches, identity only 1
        let z = alloc_chain(vec![vec![0, 0, 0, 1]], 2);
        let out = ecr(&z, &[1, 1, 0, 0]).unwrap();
        assert_eq!(out.permutations.row(0).to_vec(), vec![1, 0]);
        assert_eq!(out.objective_trace, vec![3.0]);
    }

    #[test]
    fn pivot_validation() {
        let z = alloc_chain(vec![vec![0, 1]], 2);
        assert!(ecr(&z, &[0]).is_err());
        assert!(ecr(&z, &[0, 2]).is_err());
    }

    #[test]
    fn iterative_1_identity_on_constant_chain() {
        let z = alloc_chain(vec![vec![0, 1, 1, 2]; 6], 3);
        let out = ecr_iterative_1(&z, 1e-6, 100).unwrap();
        assert!(out.converged);
        for t in 0..6 {
            assert_eq!(out.permutations.row(t).to_vec(), vec![0, 1, 2]);
        }
        // every iteration matches the pivot everywhere
        assert_eq!(*out.objective_trace.last().unwrap(), 24.0);
    }

    #[test]
    fn iterative_1_trace_non_decreasing() {
        let z = alloc_chain(
            vec![
                vec![0, 0, 1, 1, 2, 2],
                vec![1, 1, 2, 2, 0, 0],
                vec![2, 2, 0, 0, 1, 1],
                vec![0, 0, 2, 2, 1, 1],
                vec![0, 1, 1, 1, 2, 2],
            ],
            3,
        );
        let out = ecr_iterative_1(&z, 1e-6, 100).unwrap();
        for pair in out.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn iterative_2_identity_on_consistent_one_hot() {
        let z = alloc_chain(vec![vec![0, 1], vec![0, 1]], 2);
        let mut p = Array3::zeros((2, 2, 2));
        for t in 0..2 {
            p[[t, 0, 0]] = 1.0;
            p[[t, 1, 1]] = 1.0;
        }
        let p = ClassificationChain::new(p).unwrap();
        let out = ecr_iterative_2(&z, &p, 1e-6, 100).unwrap();
        assert!(out.converged);
        assert_eq!(out.permutations.row(0).to_vec(), vec![0, 1]);
        assert_eq!(out.permutations.row(1).to_vec(), vec![0, 1]);
    }

    #[test]
    fn contingency_table_counts() {
        let table = contingency_table(&[1, 1, 0, 0], array![0usize, 0, 1, 1].view(), 2);
        assert_eq!(table, array![[0.0, 2.0], [2.0, 0.0]]);
    }
}
