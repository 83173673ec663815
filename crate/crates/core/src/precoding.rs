//! Non-redundant linear precoder W = P^{1/2}.
//!
//! P has unit diagonal and constant off-diagonal p, so it is a rank-one update
//! of the identity: P = (1-p) I + p 11^T with eigenvalues 1-p (multiplicity
//! N-1) and 1+(N-1)p on the all-ones direction. The square root shares the
//! eigenvectors, giving the closed form W = a I + b 11^T which is applied in
//! O(N) without ever materializing the dense matrix.

use crate::{Cf64, Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PrecoderMatrix {
    pub n: usize,
    pub p: f64,
    /// W = a I + b 11^T
    pub a: f64,
    pub b: f64,
    /// W^{-1} = a_inv I + b_inv 11^T
    pub a_inv: f64,
    pub b_inv: f64,
}

pub fn build_precoder(n: usize, p: f64) -> Result<PrecoderMatrix> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("precoding constant {p} outside [0, 1)")));
    }
    let lo = (1.0 - p).sqrt();
    let hi = (1.0 + (n as f64 - 1.0) * p).sqrt();
    Ok(PrecoderMatrix {
        n,
        p,
        a: lo,
        b: (hi - lo) / n as f64,
        a_inv: 1.0 / lo,
        b_inv: (1.0 / hi - 1.0 / lo) / n as f64,
    })
}

impl PrecoderMatrix {
    fn apply(&self, v: &[Cf64], diag: f64, ones: f64) -> Result<Vec<Cf64>> {
        if v.len() != self.n {
            return Err(Error::Dimension(format!(
                "vector length {} != precoder size {}",
                v.len(),
                self.n
            )));
        }
        let sum: Cf64 = v.iter().sum();
        Ok(v.iter().map(|&x| x * diag + sum * ones).collect())
    }

    /// x = W d
    pub fn precode(&self, d: &[Cf64]) -> Result<Vec<Cf64>> {
        self.apply(d, self.a, self.b)
    }

    /// d = W^{-1} z
    pub fn deprecode(&self, z: &[Cf64]) -> Result<Vec<Cf64>> {
        self.apply(z, self.a_inv, self.b_inv)
    }

    /// Entry (k, l) of the dense W, for tests and small-scale checks.
    pub fn entry(&self, k: usize, l: usize) -> f64 {
        if k == l {
            self.a + self.b
        } else {
            self.b
        }
    }
}
