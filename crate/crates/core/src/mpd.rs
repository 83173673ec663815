//! Completely blind hybrid estimation: modified phase-directed (MPD)
//! ambiguity resolution over known constellation regions.
//!
//! A first channel approximation (subspace by default) fixes the response up
//! to a complex scalar; precoding statistics fix the amplitude; the residual
//! common phase is read off the equalized symbols, whose phase sectors per
//! subcarrier are known from the region assignment. Unlike plain
//! phase-directed search this resolves the phase uniquely over (-pi, pi],
//! because region identity pins each symbol to one sector. An optional
//! decision-directed refinement projects symbols onto their assigned region
//! (decisions cannot leave the sector) and re-fits the channel per bin.

use serde::{Deserialize, Serialize};

use crate::constellation::{hard_decide_in_region, region_of_subcarrier, SplitMode};
use crate::estimators::{
    estimate_bin_magnitudes, precoding_estimate, subspace_estimate, Ambiguity, ChannelEstimate,
    CovarianceEstimate, Diagnostics,
};
use crate::system::TxChain;
use crate::{Cf64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FirstApprox {
    Subspace,
    Precoding,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpdConfig {
    pub first_approx: FirstApprox,
    pub max_iters: usize,
    /// Stop refinement when the common-phase increment falls below this (rad).
    pub phase_tol: f64,
    /// Bins with |H_k| below this fraction of the peak are excluded from
    /// phase statistics.
    pub equalization_floor: f64,
    pub refinement: bool,
}

impl Default for MpdConfig {
    fn default() -> Self {
        MpdConfig {
            first_approx: FirstApprox::Subspace,
            max_iters: 10,
            phase_tol: 1e-4,
            equalization_floor: 1e-3,
            refinement: false,
        }
    }
}

impl MpdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("mpd.max_iters must be >= 1".into()));
        }
        if self.equalization_floor <= 0.0 {
            return Err(Error::Config("mpd.equalization_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// Equalized, deprecoded symbol blocks plus the per-bin reliability mask.
pub struct EqualizedBlocks {
    pub d_blocks: Vec<Vec<Cf64>>,
    pub reliable: Vec<bool>,
}

/// d_hat(n) = W^{-1} (y(n) ./ H_hat). Bins below the floor are zeroed before
/// deprecoding so a near-null bin cannot contaminate the whole block, and are
/// marked unreliable.
pub fn equalize_and_deprecode(
    y_blocks: &[Vec<Cf64>],
    h_freq: &[Cf64],
    chain: &TxChain,
    floor: f64,
) -> Result<EqualizedBlocks> {
    let n = h_freq.len();
    let peak = h_freq.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let reliable: Vec<bool> = h_freq.iter().map(|v| v.norm() >= floor * peak).collect();
    if reliable.iter().all(|&r| !r) {
        return Err(Error::Estimator("all bins below the equalization floor".into()));
    }
    let mut d_blocks = Vec::with_capacity(y_blocks.len());
    for y in y_blocks {
        if y.len() != n {
            return Err(Error::Dimension("block length != estimate length".into()));
        }
        let z: Vec<Cf64> = (0..n)
            .map(|k| {
                if reliable[k] {
                    y[k] / h_freq[k]
                } else {
                    Cf64::new(0.0, 0.0)
                }
            })
            .collect();
        d_blocks.push(chain.precoder.deprecode(&z)?);
    }
    Ok(EqualizedBlocks { d_blocks, reliable })
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * std::f64::consts::PI);
    if x > std::f64::consts::PI {
        x -= 2.0 * std::f64::consts::PI;
    } else if x <= -std::f64::consts::PI {
        x += 2.0 * std::f64::consts::PI;
    }
    x
}

/// Circular-mean estimate of the common phase offset theta, where the
/// equalized symbols satisfy d_hat = e^{-j theta} d. Returns theta; the
/// corrected response is H_hat * e^{-j theta}.
pub fn estimate_common_phase(eq: &EqualizedBlocks, chain: &TxChain) -> Result<f64> {
    if chain.cfg.splitting == SplitMode::None {
        return Err(Error::Config(
            "common-phase estimation requires active constellation splitting".into(),
        ));
    }
    let mut acc = Cf64::new(0.0, 0.0);
    let mut count = 0usize;
    for d in &eq.d_blocks {
        for (k, &v) in d.iter().enumerate() {
            if !eq.reliable[k] || v.norm_sqr() == 0.0 {
                continue;
            }
            let center = chain.partition.centers[region_of_subcarrier(k, &chain.partition)];
            let phi = wrap_angle(v.arg() - center);
            acc += Cf64::new(phi.cos(), phi.sin());
            count += 1;
        }
    }
    if count == 0 || acc.norm() == 0.0 {
        return Err(Error::Estimator("empty phase residual set".into()));
    }
    Ok(-acc.arg())
}

/// Decision-relative common phase: residuals are taken against the hard
/// decision within the assigned region rather than the region center. Unbiased
/// once decisions are mostly correct (zero at the true channel), so it is the
/// right statistic inside the refinement loop; the center-based estimate above
/// is the robust coarse one.
fn estimate_decision_phase(eq: &EqualizedBlocks, chain: &TxChain) -> Result<f64> {
    let mut acc = Cf64::new(0.0, 0.0);
    let mut count = 0usize;
    for d in &eq.d_blocks {
        for (k, &v) in d.iter().enumerate() {
            if !eq.reliable[k] || v.norm_sqr() == 0.0 {
                continue;
            }
            let r = region_of_subcarrier(k, &chain.partition);
            let dec = hard_decide_in_region(v, r, &chain.constellation, &chain.partition);
            let phi = wrap_angle(v.arg() - dec.arg());
            acc += Cf64::new(phi.cos(), phi.sin());
            count += 1;
        }
    }
    if count == 0 || acc.norm() == 0.0 {
        return Err(Error::Estimator("empty phase residual set".into()));
    }
    Ok(-acc.arg())
}

fn rotate(h: &mut [Cf64], theta: f64) {
    let rot = Cf64::new(theta.cos(), theta.sin());
    for v in h {
        *v *= rot;
    }
}

/// Region-constrained decision-directed refinement.
///
/// Iterates: equalize, project each reliable symbol onto its assigned region,
/// rebuild x, per-bin least-squares re-estimate, re-correct the common phase.
/// Stops on a small phase increment or `max_iters`; if the model-fit proxy
/// worsens twice in a row the best iterate is returned.
pub fn mpd_refine(
    y_blocks: &[Vec<Cf64>],
    h0: &[Cf64],
    chain: &TxChain,
    cfg: &MpdConfig,
) -> Result<(Vec<Cf64>, usize)> {
    cfg.validate()?;
    let n = chain.cfg.n_subcarriers;
    let mut h = h0.to_vec();
    let mut best = h0.to_vec();
    let mut best_proxy = f64::INFINITY;
    let mut prev_proxy = f64::INFINITY;
    let mut worse_streak = 0usize;
    let mut iters = 0usize;

    for it in 1..=cfg.max_iters {
        iters = it;
        let eq = equalize_and_deprecode(y_blocks, &h, chain, cfg.equalization_floor)?;
        // Project onto the assigned regions.
        let projected: Vec<Vec<Cf64>> = eq
            .d_blocks
            .iter()
            .map(|d| {
                d.iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        if eq.reliable[k] {
                            let r = region_of_subcarrier(k, &chain.partition);
                            hard_decide_in_region(v, r, &chain.constellation, &chain.partition)
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        // Rebuild x and per-bin least squares.
        let x_blocks: Vec<Vec<Cf64>> = projected
            .iter()
            .map(|d| chain.precoder.precode(d))
            .collect::<Result<_>>()?;
        let mut next = h.clone();
        for k in 0..n {
            let mut num = Cf64::new(0.0, 0.0);
            let mut den = 0.0f64;
            for (y, x) in y_blocks.iter().zip(&x_blocks) {
                num += y[k] * x[k].conj();
                den += x[k].norm_sqr();
            }
            if den > 0.0 {
                next[k] = num / den;
            }
        }
        // Residual common phase of the refreshed estimate.
        let eq2 = equalize_and_deprecode(y_blocks, &next, chain, cfg.equalization_floor)?;
        let theta = estimate_decision_phase(&eq2, chain)?;
        rotate(&mut next, -theta);

        // Model-fit proxy for the divergence guard.
        let mut proxy = 0.0f64;
        let mut terms = 0usize;
        for (y, x) in y_blocks.iter().zip(&x_blocks) {
            for k in 0..n {
                proxy += (y[k] - next[k] * x[k]).norm_sqr();
                terms += 1;
            }
        }
        proxy /= terms as f64;
        if proxy < best_proxy {
            best_proxy = proxy;
            best = next.clone();
        }
        if proxy > prev_proxy {
            worse_streak += 1;
            if worse_streak >= 2 {
                return Ok((best, iters));
            }
        } else {
            worse_streak = 0;
        }
        prev_proxy = proxy;
        h = next;
        if theta.abs() < cfg.phase_tol {
            break;
        }
    }
    Ok((best, iters))
}

/// Inputs assembled by the harness for one completely blind estimate.
pub struct HybridInputs<'a> {
    /// Composite-block covariance; required when `first_approx = subspace`.
    pub composite_cov: Option<&'a CovarianceEstimate>,
    /// Centered covariance (with mean) of the demodulated frequency blocks.
    pub y_cov: &'a CovarianceEstimate,
    pub y_blocks: &'a [Vec<Cf64>],
    pub sigma_n2: f64,
}

/// The full blind pipeline: first approximation, amplitude fix from precoding
/// statistics, common-phase fix from region residuals, optional refinement.
/// The returned estimate is fully resolved; no oracle correction is legal.
pub fn hybrid_blind_estimate(
    inputs: &HybridInputs,
    chain: &TxChain,
    cfg: &MpdConfig,
) -> Result<ChannelEstimate> {
    cfg.validate()?;
    if chain.cfg.splitting == SplitMode::None {
        return Err(Error::Config(
            "hybrid estimator requires active constellation splitting".into(),
        ));
    }
    let mags = estimate_bin_magnitudes(
        inputs.y_cov,
        &chain.precoder,
        &chain.mean_per_bin,
        inputs.sigma_n2,
        chain.sigma_c2,
    )?;

    let mut h_freq = match cfg.first_approx {
        FirstApprox::Subspace => {
            let cov = inputs.composite_cov.ok_or_else(|| {
                Error::Config("subspace first approximation needs the composite covariance".into())
            })?;
            let est = subspace_estimate(cov, &chain.cfg)?;
            let mut h = est.h_freq;
            // Unit-norm direction from the subspace step; set the total power
            // from the precoding magnitudes.
            let own: f64 = h.iter().map(|v| v.norm_sqr()).sum();
            let target: f64 = mags.iter().sum();
            if own <= 0.0 || target <= 0.0 {
                return Err(Error::Estimator("empty first approximation".into()));
            }
            let s = (target / own).sqrt();
            for v in &mut h {
                *v *= s;
            }
            h
        }
        FirstApprox::Precoding => {
            precoding_estimate(
                inputs.y_cov,
                &chain.precoder,
                chain.cfg.channel_order,
                inputs.sigma_n2,
                chain.sigma_c2,
            )?
            .h_freq
        }
    };

    let eq = equalize_and_deprecode(inputs.y_blocks, &h_freq, chain, cfg.equalization_floor)?;
    let theta = estimate_common_phase(&eq, chain)?;
    rotate(&mut h_freq, -theta);

    let mut iterations = 0usize;
    if cfg.refinement {
        let (refined, iters) = mpd_refine(inputs.y_blocks, &h_freq, chain, cfg)?;
        h_freq = refined;
        iterations = iters;
    }
    Ok(ChannelEstimate {
        h_freq,
        h_taps: None,
        ambiguity: Ambiguity::Resolved,
        diagnostics: Diagnostics {
            residual_eigenvalue: None,
            iterations: Some(iterations),
        },
    })
}
