//! Ordering-constraint relabelling: permute each iteration so that one
//! chosen parameter type comes out sorted ascending. The simplest approach
//! to label switching, and the one most likely to cut across the posterior
//! geometry; it is kept both as a method (`AIC` in the orchestrator) and as
//! a baseline the comparisons are expected to beat.

use super::MethodOutput;
use crate::chains::ParameterChain;
use crate::error::{Error, Result};
use crate::perm::PermutationSet;
use ndarray::Array2;

/// For each iteration `t`, the permutation `tau` with
/// `xi[tau[0]][s] <= ... <= xi[tau[K-1]][s]`. Ties keep the original
/// component order (stable sort). `s` is the 0-based parameter type.
pub fn ordering_constraint(mcmc: &ParameterChain, s: usize) -> Result<MethodOutput> {
    if s >= mcmc.j() {
        return Err(Error::InvalidInput(format!(
            "constraint index {} out of range 1..={}",
            s + 1,
            mcmc.j()
        )));
    }
    let (m, k) = (mcmc.m(), mcmc.k());
    let mut rows = Array2::zeros((m, k));
    let mut order: Vec<usize> = (0..k).collect();
    for t in 0..m {
        let params = mcmc.iteration(t);
        for (l, v) in order.iter_mut().enumerate() {
            *v = l;
        }
        order.sort_by(|&a, &b| params[[a, s]].partial_cmp(&params[[b, s]]).unwrap());
        for (pos, &l) in order.iter().enumerate() {
            rows[[t, pos]] = l;
        }
    }
    Ok(MethodOutput {
        permutations: PermutationSet::from_rows(rows)?,
        objective_trace: Vec::new(),
        iterations_used: 1,
        converged: true,
    })
}
