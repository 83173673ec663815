//! Streaming sample-covariance accumulation.
//!
//! Accumulates sum(v) and the upper triangle of sum(v v^H); finalizing yields
//! the mean and the centered Hermitian covariance (1/M) sum (v-m)(v-m)^H,
//! identical to the batch computation up to floating-point roundoff.

use nalgebra::{DMatrix, DVector};

use crate::{Cf64, Error, Result};

pub struct CovarianceAccumulator {
    dim: usize,
    count: usize,
    sum: Vec<Cf64>,
    /// Row-major packed upper triangle of sum(v v^H).
    upper: Vec<Cf64>,
}

#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub dim: usize,
    pub count: usize,
    pub mean: DVector<Cf64>,
    /// Centered Hermitian covariance.
    pub cov: DMatrix<Cf64>,
}

impl CovarianceAccumulator {
    pub fn new(dim: usize) -> Self {
        CovarianceAccumulator {
            dim,
            count: 0,
            sum: vec![Cf64::new(0.0, 0.0); dim],
            upper: vec![Cf64::new(0.0, 0.0); dim * (dim + 1) / 2],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, v: &[Cf64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector length {} != accumulator dimension {}",
                v.len(),
                self.dim
            )));
        }
        let mut idx = 0;
        for i in 0..self.dim {
            self.sum[i] += v[i];
            let vi = v[i];
            for &vj in &v[i..] {
                self.upper[idx] += vi * vj.conj();
                idx += 1;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn finalize(&self) -> Result<CovarianceEstimate> {
        if self.count == 0 {
            return Err(Error::Estimator("no vectors accumulated".into()));
        }
        let m = self.count as f64;
        let mean = DVector::from_iterator(self.dim, self.sum.iter().map(|&s| s / m));
        let mut cov = DMatrix::zeros(self.dim, self.dim);
        let mut idx = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let mut c = self.upper[idx] / m - mean[i] * mean[j].conj();
                if i == j {
                    c = Cf64::new(c.re, 0.0);
                }
                cov[(i, j)] = c;
                cov[(j, i)] = c.conj();
                idx += 1;
            }
        }
        Ok(CovarianceEstimate {
            dim: self.dim,
            count: self.count,
            mean,
            cov,
        })
    }
}

/// One-shot batch covariance, used as the streaming oracle in tests.
pub fn batch_covariance(vectors: &[Vec<Cf64>]) -> Result<CovarianceEstimate> {
    let dim = vectors
        .first()
        .ok_or_else(|| Error::Estimator("no vectors".into()))?
        .len();
    let m = vectors.len() as f64;
    let mut mean = DVector::from_element(dim, Cf64::new(0.0, 0.0));
    for v in vectors {
        for i in 0..dim {
            mean[i] += v[i];
        }
    }
    mean /= Cf64::new(m, 0.0);
    let mut cov = DMatrix::zeros(dim, dim);
    for v in vectors {
        for i in 0..dim {
            for j in 0..dim {
                cov[(i, j)] += (v[i] - mean[i]) * (v[j] - mean[j]).conj();
            }
        }
    }
    cov /= Cf64::new(m, 0.0);
    Ok(CovarianceEstimate {
        dim,
        count: vectors.len(),
        mean,
        cov,
    })
}
