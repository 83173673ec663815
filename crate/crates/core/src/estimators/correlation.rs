//! Precoding-induced correlation-averaging channel estimator.
//!
//! With x = W d and centered symbol variance sigma_c^2, the centered
//! frequency-domain covariance is C(k,l) = sigma_c^2 p H_k conj(H_l) for
//! k != l and sigma_c^2 |H_k|^2 + sigma_n^2 on the diagonal. Undoing the
//! known factors gives a rank-one matrix G = H H^H whose principal eigenpair
//! recovers the response up to a common phase.

use nalgebra::{DMatrix, DVector};

use crate::estimators::{Ambiguity, ChannelEstimate, CovarianceEstimate, Diagnostics};
use crate::precoding::PrecoderMatrix;
use crate::{Cf64, Error, Result};

const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 10_000;

/// Principal eigenpair by power iteration with a deterministic start vector.
fn principal_eigenpair(g: &DMatrix<Cf64>) -> (f64, DVector<Cf64>, usize) {
    let n = g.nrows();
    // Deterministic, unlikely to be orthogonal to the principal direction.
    let mut v = DVector::from_iterator(
        n,
        (0..n).map(|k| Cf64::new(1.0 + 1e-3 * k as f64, 0.0)),
    );
    v /= Cf64::new(v.norm(), 0.0);
    let mut lambda = 0.0f64;
    let mut iters = 0;
    for it in 1..=POWER_ITER_MAX {
        iters = it;
        let gv = g * &v;
        let norm = gv.norm();
        if norm == 0.0 {
            return (0.0, v, iters);
        }
        let next = gv / Cf64::new(norm, 0.0);
        let new_lambda = (next.adjoint() * g * &next)[(0, 0)].re;
        v = next;
        if (new_lambda - lambda).abs() <= POWER_ITER_TOL * new_lambda.abs().max(1.0) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    (lambda, v, iters)
}

/// Estimate the frequency response (up to a common phase) from the centered
/// covariance of demodulated frequency blocks.
pub fn precoding_estimate(
    cov: &CovarianceEstimate,
    w: &PrecoderMatrix,
    channel_order: usize,
    sigma_n2: f64,
    sigma_c2: f64,
) -> Result<ChannelEstimate> {
    if w.p <= 0.0 {
        return Err(Error::Config(
            "precoding estimator requires p > 0 (no induced correlation at p = 0)".into(),
        ));
    }
    if cov.dim != w.n {
        return Err(Error::Dimension(format!(
            "covariance dimension {} != N = {}",
            cov.dim, w.n
        )));
    }
    if sigma_c2 <= 0.0 {
        return Err(Error::Config("centered symbol variance must be positive".into()));
    }
    let n = cov.dim;
    let mut g = DMatrix::<Cf64>::zeros(n, n);
    let off_scale = 1.0 / (sigma_c2 * w.p);
    for k in 0..n {
        for l in 0..n {
            if k == l {
                let d = (cov.cov[(k, k)].re - sigma_n2).max(0.0) / sigma_c2;
                g[(k, k)] = Cf64::new(d, 0.0);
            } else {
                g[(k, l)] = cov.cov[(k, l)] * off_scale;
            }
        }
    }
    if channel_order + 1 > n {
        return Err(Error::Config("channel order exceeds subcarrier count".into()));
    }
    // The response has only L+1 free parameters: H = F h with F the first
    // L+1 (orthogonal) DFT columns. Compress G both sides onto that manifold
    // — with exact statistics F^H G F / N^2 = h h^H — and solve the tiny
    // rank-1 problem. Averaging the N^2 noisy entries down to (L+1)^2 before
    // the eigenstep discards the sampling noise outside the tap subspace.
    let nt = channel_order + 1;
    let f = DMatrix::<Cf64>::from_fn(n, nt, |k, l| {
        let ang = -2.0 * std::f64::consts::PI * (k * l) as f64 / n as f64;
        Cf64::new(ang.cos(), ang.sin())
    });
    let b = (f.adjoint() * &g * &f) / Cf64::new((n * n) as f64, 0.0);
    let (lambda, v, iters) = principal_eigenpair(&b);
    if lambda <= 0.0 {
        return Err(Error::Estimator("no positive signal power in G".into()));
    }
    // Scale from the diagonal power sum(|H_k|^2) rather than the eigenvalue:
    // the sample fluctuation of the strong common precoder component inflates
    // the off-diagonal block (and hence lambda) by delta/p but the diagonal
    // only by delta, so the diagonal is the lower-variance amplitude
    // reference. ||F h||^2 = N ||h||^2 for the orthogonal DFT columns.
    let power: f64 = (0..n).map(|k| g[(k, k)].re).sum();
    if power <= 0.0 {
        return Err(Error::Estimator("no positive signal power in G".into()));
    }
    let scale = (power / n as f64).sqrt();
    let mut h_taps: Vec<Cf64> = v.iter().map(|&x| x * scale).collect();
    let mut h_freq = crate::ofdm::channel_freq_response(&h_taps, n);
    // Fix the free phase convention: arg(H_0) = 0.
    if h_freq[0].norm() > 0.0 {
        let rot = (h_freq[0] / h_freq[0].norm()).conj();
        for x in &mut h_freq {
            *x *= rot;
        }
        for x in &mut h_taps {
            *x *= rot;
        }
    }
    Ok(ChannelEstimate {
        h_freq,
        h_taps: Some(h_taps),
        ambiguity: Ambiguity::PhaseOnly,
        diagnostics: Diagnostics {
            residual_eigenvalue: None,
            iterations: Some(iters),
        },
    })
}

/// Per-bin squared magnitudes |H_k|^2 from uncentered second moments:
/// E|y_k|^2 = |H_k|^2 (sigma_c^2 + |(W mu)_k|^2) + sigma_n^2.
pub fn estimate_bin_magnitudes(
    cov: &CovarianceEstimate,
    w: &PrecoderMatrix,
    mu: &[Cf64],
    sigma_n2: f64,
    sigma_c2: f64,
) -> Result<Vec<f64>> {
    if cov.dim != w.n || mu.len() != w.n {
        return Err(Error::Dimension("bin magnitude inputs mismatched".into()));
    }
    let wmu = w.precode(mu)?;
    Ok((0..cov.dim)
        .map(|k| {
            let second_moment = cov.cov[(k, k)].re + cov.mean[k].norm_sqr();
            (second_moment - sigma_n2).max(0.0) / (sigma_c2 + wmu[k].norm_sqr())
        })
        .collect())
}
