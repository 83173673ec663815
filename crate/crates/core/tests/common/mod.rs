//! Exact-statistics covariance constructions shared by the integration tests:
//! analytic (infinite-M) second moments of the composite and frequency-domain
//! blocks for a known channel, plus a balanced symbol design whose empirical
//! phase statistics match the ensemble exactly.

use blind_ofdm::constellation::region_of_subcarrier;
use blind_ofdm::estimators::{build_conv_matrix, CovarianceEstimate};
use blind_ofdm::system::TxChain;
use blind_ofdm::Cf64;
use nalgebra::{DMatrix, DVector};

/// E[(r - r̄)(r - r̄)^H] of composite blocks for taps `h`: the conv map applied
/// to the (two-block) time-domain symbol covariance, plus white noise.
pub fn exact_composite_cov(h: &[Cf64], chain: &TxChain, sigma_n2: f64) -> CovarianceEstimate {
    let n = chain.cfg.n_subcarriers;
    let l = chain.cfg.channel_order;
    let hm = build_conv_matrix(h, &chain.cfg).unwrap();
    // Unitary IDFT matrix.
    let q = DMatrix::<Cf64>::from_fn(n, n, |t, k| {
        let ang = 2.0 * std::f64::consts::PI * (t * k) as f64 / n as f64;
        Cf64::new(ang.cos(), ang.sin()) / (n as f64).sqrt()
    });
    // Centered Cov(x) = sigma_c^2 * P.
    let p = chain.precoder.p;
    let pm = DMatrix::<Cf64>::from_fn(n, n, |k, j| {
        Cf64::new(if k == j { 1.0 } else { p } * chain.sigma_c2, 0.0)
    });
    let covu = &q * pm * q.adjoint();
    let mut big = DMatrix::<Cf64>::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(&covu);
    big.view_mut((n, n), (n, n)).copy_from(&covu);
    let dim = 2 * n + l;
    let cov = &hm * big * hm.adjoint() + DMatrix::<Cf64>::identity(dim, dim) * Cf64::new(sigma_n2, 0.0);
    CovarianceEstimate {
        dim,
        count: 1_000_000,
        mean: DVector::from_element(dim, Cf64::new(0.0, 0.0)),
        cov,
    }
}

/// Exact centered covariance and mean of demodulated frequency blocks for a
/// known response `h_freq`.
pub fn exact_y_cov(h_freq: &[Cf64], chain: &TxChain, sigma_n2: f64) -> CovarianceEstimate {
    let n = h_freq.len();
    let p = chain.precoder.p;
    let sc2 = chain.sigma_c2;
    let wmu = chain.precoder.precode(&chain.mean_per_bin).unwrap();
    let mean = DVector::from_iterator(n, (0..n).map(|k| h_freq[k] * wmu[k]));
    let cov = DMatrix::<Cf64>::from_fn(n, n, |k, l| {
        if k == l {
            Cf64::new(sc2 * h_freq[k].norm_sqr() + sigma_n2, 0.0)
        } else {
            h_freq[k] * h_freq[l].conj() * (sc2 * p)
        }
    });
    CovarianceEstimate {
        dim: n,
        count: 1_000_000,
        mean,
        cov,
    }
}

/// Noiseless received frequency blocks in which every region point appears
/// exactly once per subcarrier: the within-region phase offsets then cancel
/// exactly in the circular mean, making the phase resolver exact.
pub fn balanced_y_blocks(h_freq: &[Cf64], chain: &TxChain) -> Vec<Vec<Cf64>> {
    let n = h_freq.len();
    let per_region = chain.partition.regions[0].len();
    (0..per_region)
        .map(|i| {
            let d: Vec<Cf64> = (0..n)
                .map(|k| {
                    let q = region_of_subcarrier(k, &chain.partition);
                    chain.constellation.points[chain.partition.regions[q][i]]
                })
                .collect();
            let x = chain.precoder.precode(&d).unwrap();
            (0..n).map(|k| h_freq[k] * x[k]).collect()
        })
        .collect()
}
