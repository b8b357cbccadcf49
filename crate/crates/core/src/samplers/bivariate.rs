//! Conjugate Gibbs sampler for the bivariate normal mixture with a
//! normal-Wishart prior on each component's mean and precision. Wishart
//! draws use the Bartlett construction; all 2x2 linear algebra is done in
//! closed form.

use super::{check_gibbs_args, finish_fixture, sample_categorical, sample_dirichlet, FixtureChain};
use crate::chains::Dataset;
use crate::error::{Error, Result};
use crate::models::{Model, ModelFamily};
use ndarray::{Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

type Mat2 = [[f64; 2]; 2];

pub(crate) fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub(crate) fn inv2(m: &Mat2) -> Result<Mat2> {
    let det = det2(m);
    if !(det > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "2x2 matrix is not invertible (det = {det})"
        )));
    }
    Ok([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

/// Lower Cholesky factor of a symmetric positive-definite 2x2 matrix
/// given as (s11, s22, s12).
pub(crate) fn cholesky2(s11: f64, s22: f64, s12: f64) -> Result<Mat2> {
    if !(s11 > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "covariance has s11 = {s11}"
        )));
    }
    let l00 = s11.sqrt();
    let l10 = s12 / l00;
    let rem = s22 - l10 * l10;
    if !(rem > 0.0) {
        return Err(Error::InvalidParameters(
            "covariance is not positive definite".into(),
        ));
    }
    Ok([[l00, 0.0], [l10, rem.sqrt()]])
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Wishart(scale, dof) draw via Bartlett: `L A A^T L^T` with `scale = L L^T`.
fn sample_wishart(rng: &mut ChaCha8Rng, scale: &Mat2, dof: f64) -> Result<Mat2> {
    let l = cholesky2(scale[0][0], scale[1][1], scale[0][1])?;
    let c0 = Gamma::new(dof / 2.0, 2.0).unwrap().sample(rng);
    let c1 = Gamma::new((dof - 1.0) / 2.0, 2.0).unwrap().sample(rng);
    let n10: f64 = Normal::new(0.0, 1.0).unwrap().sample(rng);
    let a = [[c0.sqrt().max(1e-12), 0.0], [n10, c1.sqrt().max(1e-12)]];
    let la = mat_mul(&l, &a);
    Ok(mat_mul(&la, &transpose(&la)))
}

/// Normal-Wishart hyperparameters shared by all components.
#[derive(Debug, Clone)]
pub struct NormalWishartPrior {
    pub mean: [f64; 2],
    /// Strength of the prior mean (beta in the usual parameterization).
    pub beta: f64,
    /// Wishart scale matrix.
    pub scale: Mat2,
    /// Wishart degrees of freedom (> 1 for d = 2).
    pub dof: f64,
    pub concentration: f64,
}

impl NormalWishartPrior {
    /// Weakly informative defaults: prior mean at the data mean, a small
    /// beta, dof = 4, and a Wishart scale whose expectation matches the
    /// inverse sample covariance.
    pub fn data_scaled(x: &Dataset) -> Result<Self> {
        let n = x.n() as f64;
        let mut mean = [0.0f64; 2];
        for row in x.x().rows() {
            mean[0] += row[0];
            mean[1] += row[1];
        }
        mean[0] /= n;
        mean[1] /= n;
        let mut cov = [[0.0f64; 2]; 2];
        for row in x.x().rows() {
            let d0 = row[0] - mean[0];
            let d1 = row[1] - mean[1];
            cov[0][0] += d0 * d0;
            cov[0][1] += d0 * d1;
            cov[1][0] += d1 * d0;
            cov[1][1] += d1 * d1;
        }
        let denom = (n - 1.0).max(1.0);
        for r in 0..2 {
            for c in 0..2 {
                cov[r][c] /= denom;
            }
        }
        cov[0][0] = cov[0][0].max(1e-6);
        cov[1][1] = cov[1][1].max(1e-6);
        let dof = 4.0;
        let inv_cov = inv2(&cov)?;
        let scale = [
            [inv_cov[0][0] / dof, inv_cov[0][1] / dof],
            [inv_cov[1][0] / dof, inv_cov[1][1] / dof],
        ];
        Ok(NormalWishartPrior {
            mean,
            beta: 0.01,
            scale,
            dof,
            concentration: 1.0,
        })
    }
}

pub fn gibbs_bivariate_normal_mixture(
    x: &Dataset,
    k: usize,
    iterations: usize,
    burn: usize,
    seed: u64,
    prior: &NormalWishartPrior,
) -> Result<FixtureChain> {
    check_gibbs_args(x, k, iterations, burn)?;
    if x.d() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "bivariate sampler needs d = 2 data, got d = {}",
            x.d()
        )));
    }
    let n = x.n();
    let m = iterations - burn;
    let model = ModelFamily::bivariate_normal(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior_scale_inv = inv2(&prior.scale)?;

    let mut z: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let mut mu = vec![[0.0f64; 2]; k];
    let mut sigma = vec![[[1.0, 0.0], [0.0, 1.0]]; k]; // covariance per component
    let mut weights = vec![1.0 / k as f64; k];

    let mut mcmc = Array3::zeros((m, k, 6));
    let mut z_store = Array2::zeros((m, n));
    let mut p_store = Array3::zeros((m, n, k));

    for it in 0..iterations {
        let mut counts = vec![0usize; k];
        let mut sums = vec![[0.0f64; 2]; k];
        for (i, &zi) in z.iter().enumerate() {
            counts[zi] += 1;
            sums[zi][0] += x.x()[[i, 0]];
            sums[zi][1] += x.x()[[i, 1]];
        }

        let alphas: Vec<f64> = counts
            .iter()
            .map(|&c| prior.concentration + c as f64)
            .collect();
        weights = sample_dirichlet(&mut rng, &alphas);

        for c in 0..k {
            let nc = counts[c] as f64;
            let xbar = if counts[c] > 0 {
                [sums[c][0] / nc, sums[c][1] / nc]
            } else {
                prior.mean
            };
            // scatter around the component mean
            let mut scatter = [[0.0f64; 2]; 2];
            for (i, &zi) in z.iter().enumerate() {
                if zi == c {
                    let d0 = x.x()[[i, 0]] - xbar[0];
                    let d1 = x.x()[[i, 1]] - xbar[1];
                    scatter[0][0] += d0 * d0;
                    scatter[0][1] += d0 * d1;
                    scatter[1][0] += d1 * d0;
                    scatter[1][1] += d1 * d1;
                }
            }
            let beta_n = prior.beta + nc;
            let mu_n = [
                (prior.beta * prior.mean[0] + nc * xbar[0]) / beta_n,
                (prior.beta * prior.mean[1] + nc * xbar[1]) / beta_n,
            ];
            let dev = [xbar[0] - prior.mean[0], xbar[1] - prior.mean[1]];
            let shrink = prior.beta * nc / beta_n;
            let mut scale_inv_n = prior_scale_inv;
            for r in 0..2 {
                for cc in 0..2 {
                    scale_inv_n[r][cc] += scatter[r][cc] + shrink * dev[r] * dev[cc];
                }
            }
            let scale_n = inv2(&scale_inv_n)?;
            let dof_n = prior.dof + nc;
            let lambda = sample_wishart(&mut rng, &scale_n, dof_n)?;
            sigma[c] = inv2(&lambda)?;

            // mu | lambda ~ N(mu_n, (beta_n lambda)^-1)
            let cov_mu = [
                [sigma[c][0][0] / beta_n, sigma[c][0][1] / beta_n],
                [sigma[c][1][0] / beta_n, sigma[c][1][1] / beta_n],
            ];
            let l = cholesky2(cov_mu[0][0], cov_mu[1][1], cov_mu[0][1])?;
            let e0: f64 = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
            let e1: f64 = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
            mu[c] = [
                mu_n[0] + l[0][0] * e0,
                mu_n[1] + l[1][0] * e0 + l[1][1] * e1,
            ];
        }

        let mut params = Array2::zeros((k, 6));
        let wsum: f64 = weights.iter().sum();
        for c in 0..k {
            params[[c, 0]] = mu[c][0];
            params[[c, 1]] = mu[c][1];
            params[[c, 2]] = sigma[c][0][0];
            params[[c, 3]] = sigma[c][1][1];
            params[[c, 4]] = sigma[c][0][1];
            params[[c, 5]] = weights[c] / wsum;
        }
        let probs = model.classification_probabilities(params.view(), x)?;
        for i in 0..n {
            let row: Vec<f64> = probs.row(i).to_vec();
            z[i] = sample_categorical(&mut rng, &row);
        }

        if it >= burn {
            let t = it - burn;
            for c in 0..k {
                for j in 0..6 {
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
