//! Kullback-Leibler relabelling: make the permuted draws agree on a common
//! n x K matrix of classification probabilities.
//!
//! Each sweep recomputes the averaged matrix `q` under the current
//! permutations and then re-solves, per iteration, a K x K assignment whose
//! cost is the KL contribution of matching column `l` of the iteration to
//! column `k` of `q`. Both steps lower the same objective, so the trace is
//! non-increasing.

use super::{check_threshold, MethodOutput};
use crate::assignment::solve_min_assignment;
use crate::chains::ClassificationChain;
use crate::error::Result;
use crate::perm::PermutationSet;
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

/// Floor applied to `q` entries before taking logs; terms with a zero
/// classification probability contribute nothing (0 log 0 := 0).
const Q_FLOOR: f64 = 1e-300;

/// Assignment cost of one iteration against the averaged matrix:
/// `cost[k][l] = sum_i p[i][l] * (ln p[i][l] - ln q[i][k])`.
pub fn stephens_cost(slice: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, k) = (slice.nrows(), slice.ncols());
    // self-entropy term per column, and the cross term against each q column
    let mut self_term = vec![0.0f64; k];
    let mut cross = Array2::<f64>::zeros((k, k)); // [l][k]
    for i in 0..n {
        for l in 0..k {
            let p = slice[[i, l]];
            if p > 0.0 {
                self_term[l] += p * p.ln();
                for c in 0..k {
                    cross[[l, c]] += p * q[[i, c]].max(Q_FLOOR).ln();
                }
            }
        }
    }
    Array2::from_shape_fn((k, k), |(c, l)| self_term[l] - cross[[l, c]])
}

/// Averaged classification matrix under the current permutations:
/// `q[i][k] = (1/m) * sum_t p[t][i][perm_t[k]]`.
fn averaged_q(p: &ClassificationChain, perms: &PermutationSet) -> Array2<f64> {
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

pub fn stephens(p: &ClassificationChain, thr: f64, max_iter: usize) -> Result<MethodOutput> {
    check_threshold(thr, max_iter)?;
    let (m, k) = (p.m(), p.k());
    let mut perms = PermutationSet::identity(m, k);
    let mut trace = Vec::new();
    let mut prev_total = f64::INFINITY;
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < max_iter {
        sweeps += 1;
        let q = averaged_q(p, &perms);
        let per_t: Vec<(Vec<usize>, f64)> = (0..m)
            .into_par_iter()
            .map(|t| {
                let cost = stephens_cost(p.iteration(t), q.view());
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
        let changed = rows != *perms.rows();
        perms = PermutationSet::from_rows(rows)?;
        trace.push(total);
        if prev_total - total < thr && !changed {
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
