//! The eight relabelling methods. Each one maps MCMC input to a
//! [`PermutationSet`] with one permutation per retained iteration, wrapped
//! in a [`MethodOutput`] together with its objective trace.
//!
//! Iterative methods (Stephens, the two iterative ECR variants, and the
//! probabilistic method) start from identity permutations and sweep until
//! the objective stops improving by more than a threshold; the defaults
//! below match the orchestrator's.

mod data_based;
mod ecr;
mod ordering;
mod pra;
mod sjw;
mod stephens;

pub use data_based::{data_based, data_based_cost, ClusterSummary};
pub use ecr::{contingency_table, ecr, ecr_iterative_1, ecr_iterative_2};
pub use ordering::ordering_constraint;
pub use pra::{pra, pra_score};
pub use sjw::sjw;
pub use stephens::{stephens, stephens_cost};

use crate::error::{Error, Result};
use crate::perm::PermutationSet;

/// Convergence threshold shared by the iterative methods.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
/// Iteration cap shared by the iterative methods.
pub const DEFAULT_MAX_ITER: usize = 100;

/// What every relabelling method returns.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub permutations: PermutationSet,
    /// One entry per outer sweep for iterative methods; a single total for
    /// the one-shot assignment methods; empty where no objective exists.
    pub objective_trace: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl MethodOutput {
    fn one_shot(permutations: PermutationSet, objective: f64) -> Self {
        MethodOutput {
            permutations,
            objective_trace: vec![objective],
            iterations_used: 1,
            converged: true,
        }
    }
}

/// Passthrough for a user-supplied set of permutations, so external
/// relabellings can be compared against the built-in methods.
pub fn user_perm(perms: PermutationSet) -> MethodOutput {
    MethodOutput {
        permutations: perms,
        objective_trace: Vec::new(),
        iterations_used: 0,
        converged: true,
    }
}

fn check_threshold(thr: f64, max_iter: usize) -> Result<()> {
    if !(thr > 0.0) {
        return Err(Error::InvalidInput(format!(
            "convergence threshold must be positive, got {thr}"
        )));
    }
    if max_iter < 1 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    Ok(())
}
