//! Relabelling algorithms that undo label switching in MCMC samples from
//! finite mixture and hidden Markov models.
//!
//! An MCMC sampler targeting a mixture posterior is free to permute the
//! component labels at every iteration, so the raw draws are useless for
//! component-specific inference. This crate assigns one label permutation
//! per iteration so that all draws refer to a common labeling. It provides
//!
//! * eight relabelling methods ([`methods`]): ordering constraints,
//!   Kullback-Leibler (Stephens), pivotal reordering, the default and two
//!   iterative equivalence-class representative (ECR) variants,
//!   probabilistic relabelling, data-based relabelling, and user-supplied
//!   permutations;
//! * the exact linear assignment solver they share ([`assignment`]);
//! * likelihood families for classification probabilities and complete
//!   log-likelihoods ([`models`]);
//! * an orchestrator that runs any combination of methods, aligns their
//!   single best clusterings and reports a similarity matrix
//!   ([`pipeline`]);
//! * seeded Gibbs samplers and a label-switch injector for building test
//!   fixtures ([`samplers`]);
//! * a binary array format and the `labelswitch` command-line tool
//!   ([`io`], [`cli`]).
//!
//! # Conventions
//!
//! Labels are 1-based in every file format and 0-based in memory. A stored
//! permutation `tau` reorders parameters as `out[k] = params[tau[k]]` and
//! relabels allocations with its inverse, `out[i] = tau^-1[z[i]]` — the
//! unique pairing under which the complete likelihood is unchanged. Every
//! method emits this convention.

pub mod assignment;
pub mod chains;
pub mod cli;
pub mod error;
pub mod io;
pub mod methods;
pub mod models;
pub mod perm;
pub mod pipeline;
pub mod samplers;

pub use error::{Error, Result};
