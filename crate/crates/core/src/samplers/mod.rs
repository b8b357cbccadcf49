//! Desk-scale fixture generation: data simulators, conjugate Gibbs
//! samplers for the three model families, and a label-switch injector.
//!
//! These samplers exist to produce realistic, reproducible label-switching
//! chains for exercising the relabelling methods; they favour correctness
//! and determinism over mixing speed and are not a general-purpose MCMC
//! engine. All randomness flows through a `ChaCha8` generator seeded by
//! the caller, so identical seeds give bit-identical fixtures.

mod bivariate;
mod hmm;
mod normal;

pub use bivariate::{gibbs_bivariate_normal_mixture, NormalWishartPrior};
pub use hmm::{gibbs_poisson_hmm, PoissonHmmPrior};
pub use normal::{gibbs_normal_mixture, NormalMixturePrior};

use crate::chains::{AllocationChain, ClassificationChain, Dataset, ParameterChain};
use crate::error::{Error, Result};
use crate::models::{Model, ModelFamily, ModelKind};
use crate::perm::{apply_to_classification, PermutationSet};
use ndarray::{Array2, Array3, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};

/// Everything a relabelling run needs, produced by one sampler call.
#[derive(Debug, Clone)]
pub struct FixtureChain {
    pub model: ModelFamily,
    pub mcmc: ParameterChain,
    pub z: AllocationChain,
    pub p: ClassificationChain,
    /// Iteration attaining the largest complete log-likelihood (0-based).
    pub map_index: usize,
    pub x: Dataset,
    pub z_true: Option<Vec<usize>>,
    pub seed: u64,
}

/// Data-generating truth: a family plus its `K x J` parameter matrix.
#[derive(Debug, Clone)]
pub struct TruthSpec {
    pub model: ModelFamily,
    pub params: Array2<f64>,
    pub n: usize,
}

impl TruthSpec {
    pub fn new(model: ModelFamily, params: Array2<f64>, n: usize) -> Result<Self> {
        model.validate_params(params.view())?;
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be positive".into()));
        }
        Ok(TruthSpec { model, params, n })
    }
}

/// Draw a categorical index from unnormalized probabilities.
pub(crate) fn sample_categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (idx, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return idx;
        }
    }
    weights.len() - 1
}

/// Draw a categorical index from log-weights via the usual max shift.
pub(crate) fn sample_categorical_log(rng: &mut ChaCha8Rng, log_weights: &[f64]) -> usize {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|v| (v - max).exp()).collect();
    sample_categorical(rng, &weights)
}

/// Dirichlet draw via normalized gammas.
pub(crate) fn sample_dirichlet(rng: &mut ChaCha8Rng, alphas: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            Gamma::new(a, 1.0)
                .expect("positive shape")
                .sample(rng)
                .max(1e-300)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    draws.iter_mut().for_each(|v| *v /= total);
    draws
}

/// Simulate data and true allocations from a truth specification.
/// For the hidden Markov family the state sequence starts from the
/// stationary distribution of the true transition matrix.
pub fn simulate_mixture_data(truth: &TruthSpec, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = truth.model.k;
    let n = truth.n;
    let params = &truth.params;
    let mut z = Vec::with_capacity(n);
    let mut x = Array2::zeros((n, truth.model.data_dim()));
    match truth.model.kind {
        ModelKind::UnivariateNormal => {
            let weights: Vec<f64> = params.column(2).to_vec();
            for i in 0..n {
                let zi = sample_categorical(&mut rng, &weights);
                z.push(zi);
                let dist = Normal::new(params[[zi, 0]], params[[zi, 1]].sqrt())
                    .map_err(|e| Error::InvalidParameters(e.to_string()))?;
                x[[i, 0]] = dist.sample(&mut rng);
            }
        }
        ModelKind::BivariateNormal => {
            let weights: Vec<f64> = params.column(5).to_vec();
            for i in 0..n {
                let zi = sample_categorical(&mut rng, &weights);
                z.push(zi);
                let chol =
                    bivariate::cholesky2(params[[zi, 2]], params[[zi, 3]], params[[zi, 4]])?;
                let e0: f64 = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
                let e1: f64 = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
                x[[i, 0]] = params[[zi, 0]] + chol[0][0] * e0;
                x[[i, 1]] = params[[zi, 1]] + chol[1][0] * e0 + chol[1][1] * e1;
            }
        }
        ModelKind::PoissonHmm => {
            let w = params.slice(ndarray::s![.., 1..]);
            let pi = crate::models::stationary_distribution(w)?;
            let mut state = sample_categorical(&mut rng, &pi);
            for i in 0..n {
                if i > 0 {
                    let row: Vec<f64> = (0..k).map(|c| w[[state, c]]).collect();
                    state = sample_categorical(&mut rng, &row);
                }
                z.push(state);
                let dist = Poisson::new(params[[state, 0]])
                    .map_err(|e| Error::InvalidParameters(e.to_string()))?;
                x[[i, 0]] = dist.sample(&mut rng);
            }
        }
    }
    Ok((Dataset::new(x)?, z))
}

/// Apply a given permutation per iteration to a fixture: parameters get the
/// family-correct action, classification columns are reindexed, and
/// allocations are relabelled with the inverse, so every per-iteration
/// complete likelihood is untouched.
pub fn inject_with(chain: &FixtureChain, perms: &PermutationSet) -> Result<FixtureChain> {
    let (m, k) = (chain.mcmc.m(), chain.mcmc.k());
    if perms.m() != m || perms.k() != k {
        return Err(Error::DimensionMismatch(format!(
            "permutation set is {} x {}, chain has m={m}, K={k}",
            perms.m(),
            perms.k()
        )));
    }
    let n = chain.z.n();
    let mut mcmc = Array3::zeros((m, k, chain.mcmc.j()));
    let mut z = Array2::zeros((m, n));
    let mut p = Array3::zeros((m, n, k));
    for t in 0..m {
        let sigma = perms.permutation(t);
        let permuted = chain.model.permute_params(chain.mcmc.iteration(t), &sigma);
        mcmc.index_axis_mut(Axis(0), t).assign(&permuted);
        let reindexed = apply_to_classification(chain.p.iteration(t), &sigma)?;
        p.index_axis_mut(Axis(0), t).assign(&reindexed);
        let inv = sigma.invert();
        let map = inv.as_slice();
        for (i, &zi) in chain.z.iteration(t).iter().enumerate() {
            z[[t, i]] = map[zi];
        }
    }
    Ok(FixtureChain {
        model: chain.model,
        mcmc: ParameterChain::new(mcmc)?,
        z: AllocationChain::new(z, k)?,
        p: ClassificationChain::new(p)?,
        map_index: chain.map_index,
        x: chain.x.clone(),
        z_true: chain.z_true.clone(),
        seed: chain.seed,
    })
}

/// Draw one uniform random permutation per iteration and apply it with
/// [`inject_with`]. Returns the switched chain together with the applied
/// set so tests can verify recovery.
pub fn inject_label_switching(
    chain: &FixtureChain,
    seed: u64,
) -> Result<(FixtureChain, PermutationSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, k) = (chain.mcmc.m(), chain.mcmc.k());
    let mut rows = Array2::zeros((m, k));
    let mut map: Vec<usize> = (0..k).collect();
    for t in 0..m {
        for (l, v) in map.iter_mut().enumerate() {
            *v = l;
        }
        map.shuffle(&mut rng);
        for (c, &l) in map.iter().enumerate() {
            rows[[t, c]] = l;
        }
    }
    let perms = PermutationSet::from_rows(rows)?;
    let switched = inject_with(chain, &perms)?;
    Ok((switched, perms))
}

pub(crate) fn check_gibbs_args(
    x: &Dataset,
    k: usize,
    iterations: usize,
    burn: usize,
) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    if x.n() < k {
        return Err(Error::InvalidInput(format!(
            "degenerate data: n = {} observations for K = {k} components",
            x.n()
        )));
    }
    if iterations <= burn {
        return Err(Error::InvalidInput(format!(
            "iterations ({iterations}) must exceed burn-in ({burn})"
        )));
    }
    Ok(())
}

/// Shared post-processing: wrap the stored draws and locate the
/// complete-MAP iteration.
pub(crate) fn finish_fixture(
    model: ModelFamily,
    mcmc: Array3<f64>,
    z: Array2<usize>,
    p: Array3<f64>,
    x: Dataset,
    z_true: Option<Vec<usize>>,
    seed: u64,
) -> Result<FixtureChain> {
    let mcmc = ParameterChain::new(mcmc)?;
    let z = AllocationChain::new(z, model.k)?;
    let p = ClassificationChain::new(p)?;
    let map_index = crate::pipeline::select_map_pivot(&model, &mcmc, &z, &x)?;
    Ok(FixtureChain {
        model,
        mcmc,
        z,
        p,
        map_index,
        x,
        z_true,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn lln_band_for_single_component() {
        let truth = TruthSpec::new(
            ModelFamily::univariate_normal(1),
            array![[0.0, 1.0, 1.0]],
            10_000,
        )
        .unwrap();
        let (x, z) = simulate_mixture_data(&truth, 1).unwrap();
        assert!(z.iter().all(|&v| v == 0));
        let mean = x.x().column(0).sum() / 10_000.0;
        assert!(mean.abs() < 4.0 / 100.0, "sample mean {mean}");
    }

    #[test]
    fn label_frequencies_within_binomial_band() {
        let truth = TruthSpec::new(
            ModelFamily::univariate_normal(3),
            array![[-3.0, 1.0, 0.2], [0.0, 1.0, 0.3], [3.0, 1.0, 0.5]],
            5_000,
        )
        .unwrap();
        let (_, z) = simulate_mixture_data(&truth, 7).unwrap();
        for (c, &w) in [0.2, 0.3, 0.5].iter().enumerate() {
            let freq = z.iter().filter(|&&v| v == c).count() as f64 / 5_000.0;
            let sigma = (w * (1.0 - w) / 5_000.0f64).sqrt();
            assert!(
                (freq - w).abs() < 4.0 * sigma,
                "component {c}: freq {freq} vs weight {w}"
            );
        }
    }

    #[test]
    fn dataset_one_spec_generates() {
        // K = 4 bivariate means on a radius-2.5 circle, unit covariances
        let mut params = Array2::zeros((4, 6));
        for c in 0..4 {
            let angle = c as f64 * std::f64::consts::PI / 4.0;
            params[[c, 0]] = 2.5 * angle.cos();
            params[[c, 1]] = 2.5 * angle.sin();
            params[[c, 2]] = 1.0;
            params[[c, 3]] = 1.0;
            params[[c, 5]] = 0.25;
        }
        let truth = TruthSpec::new(ModelFamily::bivariate_normal(4), params, 100).unwrap();
        let (x, z) = simulate_mixture_data(&truth, 99).unwrap();
        assert_eq!(x.n(), 100);
        assert_eq!(x.d(), 2);
        assert_eq!(z.len(), 100);
    }

    #[test]
    fn hmm_simulation_respects_transitions() {
        let truth = TruthSpec::new(
            ModelFamily::poisson_hmm(2),
            array![[0.1, 0.95, 0.05], [4.0, 0.2, 0.8]],
            4_000,
        )
        .unwrap();
        let (_, z) = simulate_mixture_data(&truth, 3).unwrap();
        // sticky row 0: transitions out of state 0 should be rare
        let mut stay = 0;
        let mut leave = 0;
        for w in z.windows(2) {
            if w[0] == 0 {
                if w[1] == 0 {
                    stay += 1;
                } else {
                    leave += 1;
                }
            }
        }
        let rate = leave as f64 / (stay + leave) as f64;
        assert!((rate - 0.05).abs() < 0.02, "exit rate {rate}");
    }
}
