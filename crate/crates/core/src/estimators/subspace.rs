//! CP-induced subspace channel estimator on composite time-domain blocks.
//!
//! Two consecutive received OFDM symbols, with the first L samples discarded,
//! form a (2N+L)-sample composite vector that depends only on the two IFFT
//! bodies: r = H(h) s + noise with H(h) of size (2N+L) x 2N. The L
//! eigenvectors of the composite covariance with smallest eigenvalues span the
//! noise subspace; each is orthogonal to the range of H(h), which is linear in
//! the taps, so the taps fall out of a small (L+1)x(L+1) eigenproblem. The
//! estimate carries a complex-scalar ambiguity.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::estimators::{Ambiguity, ChannelEstimate, CovarianceEstimate, Diagnostics};
use crate::ofdm::{self, OfdmConfig};
use crate::{Cf64, Error, Result};

fn require_cp_eq_order(cfg: &OfdmConfig) -> Result<()> {
    if cfg.cp_len != cfg.channel_order {
        return Err(Error::Config(format!(
            "subspace method requires cp_len == channel_order (got {} and {})",
            cfg.cp_len, cfg.channel_order
        )));
    }
    Ok(())
}

/// Length of one composite vector: 2N + L.
pub fn composite_len(cfg: &OfdmConfig) -> usize {
    2 * cfg.n_subcarriers + cfg.channel_order
}

/// Borrowed sliding composite windows over a received stream of whole
/// (N+L)-sample symbols: symbols n-1 and n with the leading L samples dropped.
pub fn composite_slices<'a>(stream: &'a [Cf64], cfg: &OfdmConfig) -> Result<Vec<&'a [Cf64]>> {
    require_cp_eq_order(cfg)?;
    let step = cfg.symbol_len();
    if stream.len() % step != 0 {
        return Err(Error::Dimension(format!(
            "stream length {} not a multiple of N+P = {step}",
            stream.len()
        )));
    }
    let blocks = stream.len() / step;
    if blocks < 2 {
        return Err(Error::Estimator("need at least 2 blocks for composites".into()));
    }
    let len = composite_len(cfg);
    Ok((1..blocks)
        .map(|n| {
            let start = (n - 1) * step + cfg.channel_order;
            &stream[start..start + len]
        })
        .collect())
}

/// Owned composite vectors (see [`composite_slices`]).
pub fn composite_blocks(stream: &[Cf64], cfg: &OfdmConfig) -> Result<Vec<Vec<Cf64>>> {
    Ok(composite_slices(stream, cfg)?
        .into_iter()
        .map(|s| s.to_vec())
        .collect())
}

/// The (2N+L) x 2N map from two stacked IFFT bodies to one composite vector:
/// CP re-insertion followed by the banded linear-convolution rows.
pub fn build_conv_matrix(h: &[Cf64], cfg: &OfdmConfig) -> Result<DMatrix<Cf64>> {
    require_cp_eq_order(cfg)?;
    let n = cfg.n_subcarriers;
    let l = cfg.channel_order;
    if h.len() != l + 1 {
        return Err(Error::Dimension(format!(
            "expected {} taps, got {}",
            l + 1,
            h.len()
        )));
    }
    // T: re-insert both CPs.
    let mut t = DMatrix::<Cf64>::zeros(2 * (n + l), 2 * n);
    for b in 0..2 {
        for j in 0..l {
            t[(b * (n + l) + j, b * n + n - l + j)] = Cf64::new(1.0, 0.0);
        }
        for i in 0..n {
            t[(b * (n + l) + l + i, b * n + i)] = Cf64::new(1.0, 0.0);
        }
    }
    // C_h: convolution onto output positions L .. 2(N+L)-1.
    let mut ch = DMatrix::<Cf64>::zeros(2 * n + l, 2 * (n + l));
    for m in 0..2 * n + l {
        for (shift, &tap) in h.iter().enumerate() {
            ch[(m, m + l - shift)] = tap;
        }
    }
    Ok(ch * t)
}

/// (L+1) x 2N rearrangement of the orthogonality constraint g^H H(h) = 0 so it
/// is linear in the taps: g^H H(h) = h^T A(g).
fn constraint_matrix(g: &[Cf64], n: usize, l: usize) -> DMatrix<Cf64> {
    let dim = 2 * n + l;
    let mut a = DMatrix::<Cf64>::zeros(l + 1, 2 * n);
    let mut add = |row: usize, col: usize, gidx: isize| {
        if gidx >= 0 && (gidx as usize) < dim {
            a[(row, col)] += g[gidx as usize].conj();
        }
    };
    for b in 0..2usize {
        for i in 0..n {
            let col = b * n + i;
            for row in 0..=l {
                // Body row of the CP map.
                let j_body = (b * (n + l) + l + i) as isize;
                add(row, col, j_body - l as isize + row as isize);
                // Tail copy, when this body sample also feeds the CP.
                if i >= n - l {
                    let j_tail = (b * (n + l) + i - (n - l)) as isize;
                    add(row, col, j_tail - l as isize + row as isize);
                }
            }
        }
    }
    a
}

/// Mean of the L smallest eigenvalues of the composite covariance; used as the
/// noise-variance estimate in `noise_knowledge = estimated` mode.
pub fn estimate_noise_variance(cov: &CovarianceEstimate, l: usize) -> Result<f64> {
    if l == 0 || l >= cov.dim {
        return Err(Error::Config(format!("invalid noise subspace size {l}")));
    }
    let eig = SymmetricEigen::new(cov.cov.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals[..l].iter().sum::<f64>() / l as f64)
}

/// Estimate the channel taps from the covariance of composite blocks.
pub fn subspace_estimate(cov: &CovarianceEstimate, cfg: &OfdmConfig) -> Result<ChannelEstimate> {
    require_cp_eq_order(cfg)?;
    let n = cfg.n_subcarriers;
    let l = cfg.channel_order;
    let dim = 2 * n + l;
    if cov.dim != dim {
        return Err(Error::Dimension(format!(
            "covariance dimension {} != 2N+L = {dim}",
            cov.dim
        )));
    }
    if cov.count < 2 {
        return Err(Error::Estimator(format!(
            "only {} composite vectors accumulated",
            cov.count
        )));
    }
    if cov.cov.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Estimator("covariance has non-finite entries".into()));
    }

    let eig = SymmetricEigen::new(cov.cov.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut q = DMatrix::<Cf64>::zeros(l + 1, l + 1);
    for &i in &order[..l] {
        let g = eig.eigenvectors.column(i).clone_owned();
        let a = constraint_matrix(g.as_slice(), n, l);
        q += &a * a.adjoint();
    }

    let qe = SymmetricEigen::new(q);
    let mut best = 0;
    for j in 1..=l {
        if qe.eigenvalues[j] < qe.eigenvalues[best] {
            best = j;
        }
    }
    // The quadratic form is in conj(h); undo the conjugation.
    let h: Vec<Cf64> = qe.eigenvectors.column(best).iter().map(|v| v.conj()).collect();
    let h_freq = ofdm::channel_freq_response(&h, n);
    Ok(ChannelEstimate {
        h_freq,
        h_taps: Some(h),
        ambiguity: Ambiguity::ComplexScalar,
        diagnostics: Diagnostics {
            residual_eigenvalue: Some(qe.eigenvalues[best]),
            iterations: None,
        },
    })
}
