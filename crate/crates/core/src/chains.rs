//! Array containers for MCMC output, validated on construction.

use crate::error::{Error, Result};
use ndarray::{Array2, Array3, ArrayView1, ArrayView2};

/// `m x K x J` array of simulated component parameters across MCMC iterations.
///
/// Row `k` of iteration `t` holds all `J` parameter types of component `k`
/// (for a univariate normal mixture: mean, variance, weight).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterChain {
    data: Array3<f64>,
}

impl ParameterChain {
    pub fn new(data: Array3<f64>) -> Result<Self> {
        if data.shape()[1] < 1 || data.shape()[2] < 1 {
            return Err(Error::DimensionMismatch(format!(
                "parameter chain must be m x K x J with K, J >= 1, got {:?}",
                data.shape()
            )));
        }
        if let Some((idx, _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "parameter chain entry at (t={}, k={}, j={})",
                idx.0 + 1,
                idx.1 + 1,
                idx.2 + 1
            )));
        }
        Ok(ParameterChain { data })
    }

    pub fn m(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn k(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn j(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    /// The `K x J` parameter matrix of iteration `t`.
    pub fn iteration(&self, t: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(ndarray::Axis(0), t)
    }
}

/// `m x n` array of simulated latent allocations with labels in `0..K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationChain {
    data: Array2<usize>,
    k: usize,
}

impl AllocationChain {
    pub fn new(data: Array2<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("K must be at least 1".into()));
        }
        for (idx, &z) in data.indexed_iter() {
            if z >= k {
                return Err(Error::LabelOutOfRange { label: z + 1, k });
            }
            let _ = idx;
        }
        Ok(AllocationChain { data, k })
    }

    /// Infers `K` as the largest label present.
    pub fn infer_k(data: Array2<usize>) -> Result<Self> {
        let k = data.iter().copied().max().map_or(0, |z| z + 1);
        if k == 0 {
            return Err(Error::InvalidInput("empty allocation chain".into()));
        }
        Ok(AllocationChain { data, k })
    }

    pub fn m(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn data(&self) -> &Array2<usize> {
        &self.data
    }

    pub fn iteration(&self, t: usize) -> ArrayView1<'_, usize> {
        self.data.row(t)
    }
}

/// `m x n x K` array of classification probabilities; every `(t, i)` row
/// lies on the simplex within 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationChain {
    data: Array3<f64>,
}

impl ClassificationChain {
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (m, n, _k) = (data.shape()[0], data.shape()[1], data.shape()[2]);
        for t in 0..m {
            for i in 0..n {
                let row = data.slice(ndarray::s![t, i, ..]);
                let mut sum = 0.0;
                for &v in row {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidInput(format!(
                            "classification probability {v} at (t={}, i={}) outside [0, 1]",
                            t + 1,
                            i + 1
                        )));
                    }
                    sum += v;
                }
                if (sum - 1.0).abs() > 1e-8 {
                    return Err(Error::InvalidInput(format!(
                        "classification row (t={}, i={}) sums to {sum}, expected 1",
                        t + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(ClassificationChain { data })
    }

    pub fn m(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn n(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn k(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    /// The `n x K` classification matrix of iteration `t`.
    pub fn iteration(&self, t: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(ndarray::Axis(0), t)
    }
}

/// Observed data, `n x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(Error::DimensionMismatch(
                "dataset must have d >= 1 columns".into(),
            ));
        }
        if let Some((idx, _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "data entry at (i={}, r={})",
                idx.0 + 1,
                idx.1 + 1
            )));
        }
        Ok(Dataset { x })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        let x = Array2::from_shape_vec((n, 1), values)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Dataset::new(x)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    #[test]
    fn parameter_chain_rejects_non_finite() {
        let mut data = Array3::zeros((2, 2, 3));
        data[[1, 0, 2]] = f64::NAN;
        let err = ParameterChain::new(data).unwrap_err();
        assert!(err.to_string().contains("t=2"));
    }

    #[test]
    fn allocation_chain_bounds_and_inference() {
        let data = array![[0usize, 1], [2, 0]];
        assert!(AllocationChain::new(data.clone(), 2).is_err());
        let chain = AllocationChain::infer_k(data).unwrap();
        assert_eq!(chain.k(), 3);
    }

    #[test]
    fn classification_chain_requires_simplex_rows() {
        let mut data = Array3::zeros((1, 2, 2));
        data[[0, 0, 0]] = 0.5;
        data[[0, 0, 1]] = 0.5;
        data[[0, 1, 0]] = 0.9;
        data[[0, 1, 1]] = 0.2;
        assert!(ClassificationChain::new(data).is_err());
    }

    #[test]
    fn dataset_rejects_nan() {
        assert!(Dataset::univariate(vec![0.0, f64::NAN]).is_err());
    }
}
