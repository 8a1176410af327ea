//! RBF kernel and dense Gram matrices.

use crate::error::{Result, WlossError};

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `exp(-gamma * ||a - b||^2)` without argument checks.
#[inline]
pub(crate) fn rbf_unchecked(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

pub(crate) fn check_gamma(gamma: f64, name: &str) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(WlossError::InvalidParameter(format!(
            "{name} must be a positive finite number, got {gamma}"
        )))
    }
}

/// Gaussian RBF similarity `exp(-gamma * ||a - b||^2)`.
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(WlossError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    check_gamma(gamma, "gamma")?;
    Ok(rbf_unchecked(a, b, gamma))
}

/// Dense symmetric RBF Gram matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCache {
    n: usize,
    gamma: f64,
    values: Vec<f64>,
}

impl GramCache {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

pub(crate) fn check_uniform_dim<S: AsRef<[f64]>>(x: &[S]) -> Result<usize> {
    let d = x.first().ok_or(WlossError::NoSamples)?.as_ref().len();
    for row in x {
        if row.as_ref().len() != d {
            return Err(WlossError::DimensionMismatch {
                expected: d,
                found: row.as_ref().len(),
            });
        }
    }
    Ok(d)
}

/// Gram matrix of `x` under the RBF kernel. Each unordered pair is evaluated
/// once and mirrored; the diagonal is exactly 1.
pub fn gram<S: AsRef<[f64]>>(x: &[S], gamma: f64) -> Result<GramCache> {
    check_uniform_dim(x)?;
    check_gamma(gamma, "gamma")?;
    let n = x.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let k = rbf_unchecked(x[i].as_ref(), x[j].as_ref(), gamma);
            values[i * n + j] = k;
            values[j * n + i] = k;
        }
    }
    Ok(GramCache { n, gamma, values })
}
