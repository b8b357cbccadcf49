//! Conjugate Gibbs sampler for the univariate normal mixture:
//! normal prior on means, inverse-gamma on variances, symmetric Dirichlet
//! on weights, with data augmentation for the allocations.

use super::{check_gibbs_args, finish_fixture, sample_categorical, sample_dirichlet, FixtureChain};
use crate::chains::Dataset;
use crate::error::Result;
use crate::models::{Model, ModelFamily};
use ndarray::{Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

/// Hyperparameters; all components share them, so the prior is
/// exchangeable in the labels.
#[derive(Debug, Clone)]
pub struct NormalMixturePrior {
    /// Prior mean of the component means.
    pub mean: f64,
    /// Prior variance of the component means.
    pub variance: f64,
    /// Inverse-gamma shape for the component variances.
    pub shape: f64,
    /// Inverse-gamma scale for the component variances.
    pub scale: f64,
    /// Symmetric Dirichlet concentration for the weights.
    pub concentration: f64,
}

impl NormalMixturePrior {
    /// Weakly informative defaults centred on the data: the prior mean is
    /// the sample mean, the prior variance of the means is the sample
    /// variance, and the variance prior has mean half the sample variance.
    pub fn data_scaled(x: &Dataset) -> Self {
        let n = x.n() as f64;
        let mean = x.x().column(0).sum() / n;
        let var = x
            .x()
            .column(0)
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        let var = var.max(1e-6);
        NormalMixturePrior {
            mean,
            variance: var,
            shape: 2.0,
            scale: var / 2.0,
            concentration: 1.0,
        }
    }
}

pub fn gibbs_normal_mixture(
    x: &Dataset,
    k: usize,
    iterations: usize,
    burn: usize,
    seed: u64,
    prior: &NormalMixturePrior,
) -> Result<FixtureChain> {
    check_gibbs_args(x, k, iterations, burn)?;
    let n = x.n();
    let m = iterations - burn;
    let model = ModelFamily::univariate_normal(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut z: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let mut means = vec![0.0f64; k];
    let mut vars = vec![prior.variance; k];
    let mut weights = vec![1.0 / k as f64; k];

    let mut mcmc = Array3::zeros((m, k, 3));
    let mut z_store = Array2::zeros((m, n));
    let mut p_store = Array3::zeros((m, n, k));

    for it in 0..iterations {
        // sufficient statistics per component
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0f64; k];
        for (i, &zi) in z.iter().enumerate() {
            counts[zi] += 1;
            sums[zi] += x.x()[[i, 0]];
        }

        // weights | z
        let alphas: Vec<f64> = counts
            .iter()
            .map(|&c| prior.concentration + c as f64)
            .collect();
        weights = sample_dirichlet(&mut rng, &alphas);

        // means | z, variances (empty components draw from the prior)
        for c in 0..k {
            let precision = 1.0 / prior.variance + counts[c] as f64 / vars[c];
            let mean = (prior.mean / prior.variance + sums[c] / vars[c]) / precision;
            means[c] = Normal::new(mean, (1.0 / precision).sqrt())
                .unwrap()
                .sample(&mut rng);
        }

        // variances | z, means
        for c in 0..k {
            let mut ss = 0.0;
            for (i, &zi) in z.iter().enumerate() {
                if zi == c {
                    let dev = x.x()[[i, 0]] - means[c];
                    ss += dev * dev;
                }
            }
            let shape = prior.shape + counts[c] as f64 / 2.0;
            let scale = prior.scale + 0.5 * ss;
            let g = Gamma::new(shape, 1.0 / scale).unwrap().sample(&mut rng);
            vars[c] = (1.0 / g).max(1e-12);
        }

        // classification probabilities and allocations | parameters
        let mut params = Array2::zeros((k, 3));
        for c in 0..k {
            params[[c, 0]] = means[c];
            params[[c, 1]] = vars[c];
            params[[c, 2]] = weights[c];
        }
        // weights from the Dirichlet draw sum to 1 up to rounding
        let wsum: f64 = weights.iter().sum();
        for c in 0..k {
            params[[c, 2]] /= wsum;
        }
        let probs = model.classification_probabilities(params.view(), x)?;
        for i in 0..n {
            let row: Vec<f64> = probs.row(i).to_vec();
            z[i] = sample_categorical(&mut rng, &row);
        }

        if it >= burn {
            let t = it - burn;
            for c in 0..k {
                mcmc[[t, c, 0]] = params[[c, 0]];
                mcmc[[t, c, 1]] = params[[c, 1]];
                mcmc[[t, c, 2]] = params[[c, 2]];
            }
            for i in 0..n {
                z_store[[t, i]] = z[i];
                for c in 0..k {
                    p_store[[t, i, c]] = probs[[i, c]];
                }
            }
        }
    }

    finish_fixture(model, mcmc, z_store, p_store, x.clone(), None, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{align_to_reference, single_best_clustering};
    use crate::perm::mode_per_observation;
    use crate::samplers::{simulate_mixture_data, TruthSpec};
    use ndarray::array;

    #[test]
    fn separated_clusters_are_recovered() {
        let truth = TruthSpec::new(
            ModelFamily::univariate_normal(2),
            array![[-10.0, 1.0, 0.5], [10.0, 1.0, 0.5]],
            120,
        )
        .unwrap();
        let (x, z_true) = simulate_mixture_data(&truth, 5).unwrap();
        let prior = NormalMixturePrior::data_scaled(&x);
        let chain = gibbs_normal_mixture(&x, 2, 500, 100, 11, &prior).unwrap();

        let modal = mode_per_observation(chain.z.data().view(), 2);
        let map = align_to_reference(&modal, &z_true, 2).unwrap();
        let aligned: Vec<usize> = modal.iter().map(|&c| map.as_slice()[c]).collect();
        let agree = aligned
            .iter()
            .zip(z_true.iter())
            .filter(|(a, b)| a == b)
            .count() as f64
            / 120.0;
        assert!(agree >= 0.99, "agreement {agree}");

        // identity permutations reproduce the modal clustering
        let id = crate::perm::PermutationSet::identity(chain.z.m(), 2);
        assert_eq!(single_best_clustering(&chain.z, &id).unwrap(), modal);
    }

    #[test]
    fn classification_rows_are_normalized() {
        let truth = TruthSpec::new(
            ModelFamily::univariate_normal(2),
            array![[-2.0, 1.0, 0.5], [2.0, 1.0, 0.5]],
            40,
        )
        .unwrap();
        let (x, _) = simulate_mixture_data(&truth, 2).unwrap();
        let prior = NormalMixturePrior::data_scaled(&x);
        let chain = gibbs_normal_mixture(&x, 2, 60, 20, 3, &prior).unwrap();
        for t in 0..chain.p.m() {
            for i in 0..chain.p.n() {
                let sum: f64 = chain.p.iteration(t).row(i).sum();
                assert!((sum - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let truth = TruthSpec::new(
            ModelFamily::univariate_normal(2),
            array![[-3.0, 1.0, 0.4], [3.0, 1.0, 0.6]],
            30,
        )
        .unwrap();
        let (x, _) = simulate_mixture_data(&truth, 8).unwrap();
        let prior = NormalMixturePrior::data_scaled(&x);
        let a = gibbs_normal_mixture(&x, 2, 50, 10, 21, &prior).unwrap();
        let b = gibbs_normal_mixture(&x, 2, 50, 10, 21, &prior).unwrap();
        assert_eq!(a.mcmc.data(), b.mcmc.data());
        assert_eq!(a.z.data(), b.z.data());
        assert_eq!(a.p.data(), b.p.data());
        assert_eq!(a.map_index, b.map_index);
    }
}
