//! Gibbs sampler for the Poisson hidden Markov model: gamma priors on the
//! state intensities, Dirichlet rows on the transition matrix, and
//! single-site allocation updates conditional on the neighboring states.
//! Single-site updates mix slower than forward-filtering backward-sampling
//! but keep the fixture simple.

use super::{check_gibbs_args, finish_fixture, sample_categorical_log, sample_dirichlet, FixtureChain};
use crate::chains::Dataset;
use crate::error::{Error, Result};
use crate::models::{stationary_distribution, Model, ModelFamily};
use ndarray::{Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

/// Gamma prior (shape, rate) on the intensities and a symmetric Dirichlet
/// concentration for each transition row. The stationary factor of the
/// initial state is dropped from the transition update, as usual for
/// fixture-grade samplers.
#[derive(Debug, Clone)]
pub struct PoissonHmmPrior {
    pub shape: f64,
    pub rate: f64,
    pub concentration: f64,
}

impl PoissonHmmPrior {
    /// Exponential-tailed prior whose mean matches the sample mean.
    pub fn data_scaled(x: &Dataset) -> Self {
        let mean = (x.x().column(0).sum() / x.n() as f64).max(0.1);
        PoissonHmmPrior {
            shape: 1.0,
            rate: 1.0 / mean,
            concentration: 1.0,
        }
    }
}

pub fn gibbs_poisson_hmm(
    x: &Dataset,
    k: usize,
    iterations: usize,
    burn: usize,
    seed: u64,
    prior: &PoissonHmmPrior,
) -> Result<FixtureChain> {
    check_gibbs_args(x, k, iterations, burn)?;
    if x.d() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "Poisson HMM needs univariate count data, got d = {}",
            x.d()
        )));
    }
    for (i, row) in x.x().rows().into_iter().enumerate() {
        if row[0] < 0.0 || row[0].fract() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "negative or non-integer count {} at i = {}",
                row[0],
                i + 1
            )));
        }
    }
    let n = x.n();
    let m = iterations - burn;
    let model = ModelFamily::poisson_hmm(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut z: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let mut lambda = vec![1.0f64; k];
    let mut trans = Array2::from_elem((k, k), 1.0 / k as f64);

    let mut mcmc = Array3::zeros((m, k, k + 1));
    let mut z_store = Array2::zeros((m, n));
    let mut p_store = Array3::zeros((m, n, k));

    for it in 0..iterations {
        // intensities | z
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0f64; k];
        for (i, &zi) in z.iter().enumerate() {
            counts[zi] += 1;
            sums[zi] += x.x()[[i, 0]];
        }
        for c in 0..k {
            let shape = prior.shape + sums[c];
            let rate = prior.rate + counts[c] as f64;
            lambda[c] = Gamma::new(shape, 1.0 / rate)
                .unwrap()
                .sample(&mut rng)
                .max(1e-9);
        }

        // transition rows | z
        if k == 1 {
            trans[[0, 0]] = 1.0;
        } else {
            for r in 0..k {
                let mut alphas = vec![prior.concentration; k];
                for w in z.windows(2) {
                    if w[0] == r {
                        alphas[w[1]] += 1.0;
                    }
                }
                let row = sample_dirichlet(&mut rng, &alphas);
                for c in 0..k {
                    trans[[r, c]] = row[c];
                }
            }
        }
        let pi = stationary_distribution(trans.view())?;

        // single-site allocation updates conditional on the neighbors
        let log_emission = |xi: f64, c: usize| xi * lambda[c].ln() - lambda[c];
        for i in 0..n {
            let xi = x.x()[[i, 0]];
            let mut logw = vec![0.0f64; k];
            for c in 0..k {
                let mut lw = log_emission(xi, c);
                if i == 0 {
                    lw += pi[c].ln();
                } else {
                    lw += trans[[z[i - 1], c]].ln();
                }
                if i + 1 < n {
                    lw += trans[[c, z[i + 1]]].ln();
                }
                logw[c] = lw;
            }
            z[i] = sample_categorical_log(&mut rng, &logw);
        }

        if it >= burn {
            let t = it - burn;
            let mut params = Array2::zeros((k, k + 1));
            for c in 0..k {
                params[[c, 0]] = lambda[c];
                for cc in 0..k {
                    params[[c, 1 + cc]] = trans[[c, cc]];
                }
            }
            let probs = model.classification_probabilities(params.view(), x)?;
            for c in 0..k {
                for j in 0..=k {
                    mcmc[[t, c, j]] = params[[c, j]];
                }
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
    use crate::pipeline::align_to_reference;
    use crate::perm::mode_per_observation;
    use crate::samplers::{simulate_mixture_data, TruthSpec};
    use ndarray::array;

    #[test]
    fn single_state_matches_conjugate_posterior_mean() {
        let truth = TruthSpec::new(ModelFamily::poisson_hmm(1), array![[2.0, 1.0]], 200).unwrap();
        let (x, _) = simulate_mixture_data(&truth, 4).unwrap();
        let prior = PoissonHmmPrior::data_scaled(&x);
        let chain = gibbs_poisson_hmm(&x, 1, 1200, 200, 6, &prior).unwrap();
        let m = chain.mcmc.m() as f64;
        let mean_lambda: f64 = (0..chain.mcmc.m())
            .map(|t| chain.mcmc.iteration(t)[[0, 0]])
            .sum::<f64>()
            / m;
        let total: f64 = x.x().column(0).sum();
        let exact = (prior.shape + total) / (prior.rate + 200.0);
        // Monte Carlo error band: posterior sd / sqrt(effective draws)
        let sd = ((prior.shape + total).sqrt()) / (prior.rate + 200.0);
        assert!(
            (mean_lambda - exact).abs() < 6.0 * sd / (m.sqrt() / 4.0),
            "chain mean {mean_lambda}, conjugate mean {exact}"
        );
    }

    #[test]
    fn transition_rows_stay_on_the_simplex() {
        let truth = TruthSpec::new(
            ModelFamily::poisson_hmm(2),
            array![[0.2, 0.9, 0.1], [3.0, 0.2, 0.8]],
            150,
        )
        .unwrap();
        let (x, _) = simulate_mixture_data(&truth, 10).unwrap();
        let prior = PoissonHmmPrior::data_scaled(&x);
        let chain = gibbs_poisson_hmm(&x, 2, 80, 20, 13, &prior).unwrap();
        for t in 0..chain.mcmc.m() {
            let params = chain.mcmc.iteration(t);
            for c in 0..2 {
                let sum = params[[c, 1]] + params[[c, 2]];
                assert!((sum - 1.0).abs() < 1e-12);
                assert!(params[[c, 1]] >= 0.0 && params[[c, 2]] >= 0.0);
            }
        }
    }

    #[test]
    fn separated_intensities_recover_the_state_sequence() {
        let truth = TruthSpec::new(
            ModelFamily::poisson_hmm(2),
            array![[0.1, 0.95, 0.05], [3.0, 0.1, 0.9]],
            300,
        )
        .unwrap();
        let (x, z_true) = simulate_mixture_data(&truth, 21).unwrap();
        let prior = PoissonHmmPrior::data_scaled(&x);
        let chain = gibbs_poisson_hmm(&x, 2, 800, 300, 22, &prior).unwrap();
        let modal = mode_per_observation(chain.z.data().view(), 2);
        let map = align_to_reference(&modal, &z_true, 2).unwrap();
        let aligned: Vec<usize> = modal.iter().map(|&c| map.as_slice()[c]).collect();
        let agree = aligned
            .iter()
            .zip(z_true.iter())
            .filter(|(a, b)| a == b)
            .count() as f64
            / 300.0;
        assert!(agree >= 0.85, "agreement {agree}");
    }

    #[test]
    fn rejects_negative_counts() {
        let x = Dataset::univariate(vec![1.0, -2.0, 0.0]).unwrap();
        let prior = PoissonHmmPrior {
            shape: 1.0,
            rate: 1.0,
            concentration: 1.0,
        };
        assert!(gibbs_poisson_hmm(&x, 1, 10, 2, 0, &prior).is_err());
    }
}
