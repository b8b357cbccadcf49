//! Likelihood families: classification probabilities and complete
//! log-likelihoods for the mixture and hidden Markov models the
//! relabelling methods consume.
//!
//! All densities are evaluated in log space; there is no raw-density code
//! path. The three built-in families implement the [`Model`] contract, so
//! further families can be plugged into the probabilistic relabelling and
//! pivot-selection machinery without touching the method implementations.

use crate::chains::Dataset;
use crate::error::{Error, Result};
use crate::perm::Permutation;
use ndarray::{Array2, ArrayView2};

const LN_2PI: f64 = 1.8378770664093453;

/// Contract every likelihood family satisfies: enough to compute
/// classification probabilities, complete log-likelihoods, and the
/// correct permutation action on a parameter matrix.
pub trait Model: Sync {
    /// Number of components / hidden states.
    fn k(&self) -> usize;

    /// Number of parameter types (columns of the `K x J` matrix).
    fn j(&self) -> usize;

    /// Expected data dimension.
    fn data_dim(&self) -> usize;

    fn validate_params(&self, params: ArrayView2<'_, f64>) -> Result<()>;

    /// `p[i][k] = w_k f(x_i | theta_k) / sum_l w_l f(x_i | theta_l)`,
    /// computed in log space with log-sum-exp normalization. For the
    /// hidden Markov family the weights are the stationary probabilities
    /// of the transition matrix.
    fn classification_probabilities(
        &self,
        params: ArrayView2<'_, f64>,
        x: &Dataset,
    ) -> Result<Array2<f64>>;

    /// Joint log-likelihood of data and allocations. A zero weight or
    /// transition probability on a used label yields `-inf`, not an error.
    fn complete_log_likelihood(
        &self,
        params: ArrayView2<'_, f64>,
        x: &Dataset,
        z: &[usize],
    ) -> Result<f64>;

    /// The group action of a label permutation on the parameter matrix.
    /// For mixtures this is plain row reindexing; the hidden Markov family
    /// additionally reindexes the transition columns so that the complete
    /// likelihood stays invariant.
    fn permute_params(&self, params: ArrayView2<'_, f64>, perm: &Permutation) -> Array2<f64> {
        let mut out = Array2::zeros(params.raw_dim());
        for (k, &l) in perm.as_slice().iter().enumerate() {
            out.row_mut(k).assign(&params.row(l));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// J = 3 columns: mean, variance, weight.
    UnivariateNormal,
    /// J = 6 columns: mu1, mu2, Sigma11, Sigma22, Sigma12, weight.
    BivariateNormal,
    /// J = K + 1 columns: Poisson intensity, then the K transition
    /// probabilities out of the state. The stationary distribution is
    /// computed on demand rather than stored as an extra column.
    PoissonHmm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::UnivariateNormal => "normal",
            ModelKind::BivariateNormal => "bivariate-normal",
            ModelKind::PoissonHmm => "poisson-hmm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(ModelKind::UnivariateNormal),
            "bivariate-normal" => Ok(ModelKind::BivariateNormal),
            "poisson-hmm" => Ok(ModelKind::PoissonHmm),
            other => Err(Error::Usage(format!(
                "unknown model `{other}` (expected normal, bivariate-normal or poisson-hmm)"
            ))),
        }
    }
}

/// One of the built-in likelihood families together with its label count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelFamily {
    pub kind: ModelKind,
    pub k: usize,
}

impl ModelFamily {
    pub fn univariate_normal(k: usize) -> Self {
        ModelFamily {
            kind: ModelKind::UnivariateNormal,
            k,
        }
    }

    pub fn bivariate_normal(k: usize) -> Self {
        ModelFamily {
            kind: ModelKind::BivariateNormal,
            k,
        }
    }

    pub fn poisson_hmm(k: usize) -> Self {
        ModelFamily {
            kind: ModelKind::PoissonHmm,
            k,
        }
    }
}

fn check_shape(family: &ModelFamily, params: ArrayView2<'_, f64>) -> Result<()> {
    if params.nrows() != family.k || params.ncols() != family.j() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters must be {} x {}, got {} x {}",
            family.kind.name(),
            family.k,
            family.j(),
            params.nrows(),
            params.ncols()
        )));
    }
    Ok(())
}

fn check_simplex(row: &[f64], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &v in row {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameters(format!("{what} entry {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameters(format!(
            "{what} sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

fn log_normal(x: f64, mean: f64, variance: f64) -> f64 {
    -0.5 * (LN_2PI + variance.ln() + (x - mean) * (x - mean) / variance)
}

/// Log-density of a bivariate normal given (s11, s22, s12).
fn log_bivariate_normal(x0: f64, x1: f64, m0: f64, m1: f64, s11: f64, s22: f64, s12: f64) -> f64 {
    let det = s11 * s22 - s12 * s12;
    let d0 = x0 - m0;
    let d1 = x1 - m1;
    let quad = (s22 * d0 * d0 - 2.0 * s12 * d0 * d1 + s11 * d1 * d1) / det;
    -LN_2PI - 0.5 * det.ln() - 0.5 * quad
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|v| (v as f64).ln()).sum()
}

fn log_poisson(x: f64, lambda: f64) -> f64 {
    // counts were validated as non-negative integers
    x * lambda.ln() - lambda - ln_factorial(x as u64)
}

fn check_counts(x: &Dataset) -> Result<()> {
    for (i, row) in x.x().rows().into_iter().enumerate() {
        let v = row[0];
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "count data must be non-negative integers, got {v} at i={}",
                i + 1
            )));
        }
    }
    Ok(())
}

fn check_data_dim(family: &ModelFamily, x: &Dataset) -> Result<()> {
    if x.d() != family.data_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} expects {}-dimensional data, got d={}",
            family.kind.name(),
            family.data_dim(),
            x.d()
        )));
    }
    Ok(())
}

/// Per-observation log of `w_k f(x_i | theta_k)` for each component.
fn log_kernel(family: &ModelFamily, params: ArrayView2<'_, f64>, x: &Dataset) -> Result<Array2<f64>> {
    let n = x.n();
    let k = family.k;
    let mut out = Array2::zeros((n, k));
    match family.kind {
        ModelKind::UnivariateNormal => {
            for i in 0..n {
                let xi = x.x()[[i, 0]];
                for c in 0..k {
                    out[[i, c]] = params[[c, 2]].ln() + log_normal(xi, params[[c, 0]], params[[c, 1]]);
                }
            }
        }
        ModelKind::BivariateNormal => {
            for i in 0..n {
                let (x0, x1) = (x.x()[[i, 0]], x.x()[[i, 1]]);
                for c in 0..k {
                    out[[i, c]] = params[[c, 5]].ln()
                        + log_bivariate_normal(
                            x0,
                            x1,
                            params[[c, 0]],
                            params[[c, 1]],
                            params[[c, 2]],
                            params[[c, 3]],
                            params[[c, 4]],
                        );
                }
            }
        }
        ModelKind::PoissonHmm => {
            let pi = stationary_distribution(params.slice(ndarray::s![.., 1..]))?;
            for i in 0..n {
                let xi = x.x()[[i, 0]];
                for c in 0..k {
                    out[[i, c]] = pi[c].ln() + log_poisson(xi, params[[c, 0]]);
                }
            }
        }
    }
    Ok(out)
}

impl Model for ModelFamily {
    fn k(&self) -> usize {
        self.k
    }

    fn j(&self) -> usize {
        match self.kind {
            ModelKind::UnivariateNormal => 3,
            ModelKind::BivariateNormal => 6,
            ModelKind::PoissonHmm => self.k + 1,
        }
    }

    fn data_dim(&self) -> usize {
        match self.kind {
            ModelKind::BivariateNormal => 2,
            _ => 1,
        }
    }

    fn validate_params(&self, params: ArrayView2<'_, f64>) -> Result<()> {
        check_shape(self, params)?;
        match self.kind {
            ModelKind::UnivariateNormal => {
                for (c, row) in params.rows().into_iter().enumerate() {
                    if !(row[1] > 0.0) {
                        return Err(Error::InvalidParameters(format!(
                            "variance of component {} is {}",
                            c + 1,
                            row[1]
                        )));
                    }
                }
                let weights: Vec<f64> = params.column(2).to_vec();
                check_simplex(&weights, "mixture weights")?;
            }
            ModelKind::BivariateNormal => {
                for (c, row) in params.rows().into_iter().enumerate() {
                    let det = row[2] * row[3] - row[4] * row[4];
                    if !(row[2] > 0.0 && det > 0.0) {
                        return Err(Error::InvalidParameters(format!(
                            "covariance of component {} is not positive definite",
                            c + 1
                        )));
                    }
                }
                let weights: Vec<f64> = params.column(5).to_vec();
                check_simplex(&weights, "mixture weights")?;
            }
            ModelKind::PoissonHmm => {
                for (c, row) in params.rows().into_iter().enumerate() {
                    if !(row[0] > 0.0) {
                        return Err(Error::InvalidParameters(format!(
                            "intensity of state {} is {}",
                            c + 1,
                            row[0]
                        )));
                    }
                    check_simplex(&row.as_slice().unwrap()[1..], "transition row")?;
                }
            }
        }
        Ok(())
    }

    fn classification_probabilities(
        &self,
        params: ArrayView2<'_, f64>,
        x: &Dataset,
    ) -> Result<Array2<f64>> {
        self.validate_params(params)?;
        check_data_dim(self, x)?;
        if self.kind == ModelKind::PoissonHmm {
            check_counts(x)?;
        }
        let mut lk = log_kernel(self, params, x)?;
        for mut row in lk.rows_mut() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !max.is_finite() {
                return Err(Error::NonFinite(
                    "classification probabilities: all components have zero density".into(),
                ));
            }
            let log_sum = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            row.mapv_inplace(|v| (v - log_sum).exp());
        }
        Ok(lk)
    }

    fn complete_log_likelihood(
        &self,
        params: ArrayView2<'_, f64>,
        x: &Dataset,
        z: &[usize],
    ) -> Result<f64> {
        self.validate_params(params)?;
        check_data_dim(self, x)?;
        if z.len() != x.n() {
            return Err(Error::DimensionMismatch(format!(
                "allocations have length {}, data has n={}",
                z.len(),
                x.n()
            )));
        }
        if let Some(&bad) = z.iter().find(|&&l| l >= self.k) {
            return Err(Error::LabelOutOfRange {
                label: bad + 1,
                k: self.k,
            });
        }
        let total = match self.kind {
            ModelKind::UnivariateNormal => z
                .iter()
                .enumerate()
                .map(|(i, &zi)| {
                    params[[zi, 2]].ln() + log_normal(x.x()[[i, 0]], params[[zi, 0]], params[[zi, 1]])
                })
                .sum(),
            ModelKind::BivariateNormal => z
                .iter()
                .enumerate()
                .map(|(i, &zi)| {
                    params[[zi, 5]].ln()
                        + log_bivariate_normal(
                            x.x()[[i, 0]],
                            x.x()[[i, 1]],
                            params[[zi, 0]],
                            params[[zi, 1]],
                            params[[zi, 2]],
                            params[[zi, 3]],
                            params[[zi, 4]],
                        )
                })
                .sum(),
            ModelKind::PoissonHmm => {
                check_counts(x)?;
                let pi = stationary_distribution(params.slice(ndarray::s![.., 1..]))?;
                let mut total = pi[z[0]].ln() + log_poisson(x.x()[[0, 0]], params[[z[0], 0]]);
                for i in 1..z.len() {
                    total += params[[z[i - 1], 1 + z[i]]].ln()
                        + log_poisson(x.x()[[i, 0]], params[[z[i], 0]]);
                }
                total
            }
        };
        if total.is_nan() {
            return Err(Error::NonFinite("complete log-likelihood is NaN".into()));
        }
        Ok(total)
    }

    fn permute_params(&self, params: ArrayView2<'_, f64>, perm: &Permutation) -> Array2<f64> {
        match self.kind {
            ModelKind::PoissonHmm => {
                // reindex states on both axes of the transition block
                let mut out = Array2::zeros(params.raw_dim());
                let map = perm.as_slice();
                for (k, &l) in map.iter().enumerate() {
                    out[[k, 0]] = params[[l, 0]];
                    for (c, &lc) in map.iter().enumerate() {
                        out[[k, 1 + c]] = params[[l, 1 + lc]];
                    }
                }
                out
            }
            _ => {
                let mut out = Array2::zeros(params.raw_dim());
                for (k, &l) in perm.as_slice().iter().enumerate() {
                    out.row_mut(k).assign(&params.row(l));
                }
                out
            }
        }
    }
}

/// Stationary distribution of a row-stochastic matrix: the probability
/// vector with `pi^T w = pi^T`, found by iterating from the uniform start
/// until the max change drops below 1e-12 (capped at 1e6 sweeps).
pub fn stationary_distribution(w: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let k = w.nrows();
    if k == 0 || w.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "transition matrix must be square, got {} x {}",
            w.nrows(),
            w.ncols()
        )));
    }
    for row in w.rows() {
        check_simplex(row.as_slice().unwrap(), "transition row")?;
    }
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..1_000_000u64 {
        for c in 0..k {
            next[c] = (0..k).map(|r| pi[r] * w[[r, c]]).sum();
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        pi.copy_from_slice(&next);
        if change < 1e-12 {
            return Ok(pi);
        }
    }
    Err(Error::NonConvergent(
        "power iteration on the transition matrix exceeded 1e6 sweeps; \
         the chain may be reducible or periodic"
            .into(),
    ))
}
