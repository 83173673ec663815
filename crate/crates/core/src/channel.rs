//! Random frequency-selective channels, streaming FIR convolution and AWGN.
//!
//! Channel taps are independent circularly-symmetric complex Gaussians with
//! per-tap variance set by the power delay profile; a realization is held
//! static over the whole estimation window. Convolution runs over the
//! concatenated sample stream so channel memory is carried across OFDM block
//! boundaries.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ofdm::{self, Dft, OfdmConfig};
use crate::{Cf64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdpKind {
    Exponential,
    Uniform,
}

/// Power delay profile: per-tap variance of the L+1 channel taps.
#[derive(Debug, Clone, Copy)]
pub struct ChannelPdp {
    pub kind: PdpKind,
    pub order: usize,
}

impl ChannelPdp {
    pub fn tap_variance(&self, l: usize) -> f64 {
        match self.kind {
            PdpKind::Exponential => (-(l as f64) / 10.0).exp(),
            PdpKind::Uniform => 1.0,
        }
    }
}

/// One static channel draw: time-domain taps and derived frequency response.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: Vec<Cf64>,
    pub h_freq: Vec<Cf64>,
}

impl ChannelRealization {
    pub fn from_taps(h: Vec<Cf64>, n: usize) -> Self {
        let h_freq = ofdm::channel_freq_response(&h, n);
        ChannelRealization { h, h_freq }
    }

    /// A realization with a near-null frequency response would blow up the
    /// division-based receiver steps; such draws are rejected and redrawn.
    pub fn is_degenerate(&self) -> bool {
        let norm: f64 = self.h_freq.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let min = self
            .h_freq
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min);
        min < 1e-6 * norm
    }
}

/// Zero-mean circularly symmetric complex Gaussian with total variance `var`.
pub fn complex_gaussian<R: Rng>(rng: &mut R, var: f64) -> Cf64 {
    let std = (var / 2.0).sqrt();
    let dist = Normal::new(0.0, std).unwrap();
    Cf64::new(dist.sample(rng), dist.sample(rng))
}

pub fn draw_channel<R: Rng>(pdp: &ChannelPdp, n: usize, rng: &mut R) -> ChannelRealization {
    let h: Vec<Cf64> = (0..=pdp.order)
        .map(|l| complex_gaussian(rng, pdp.tap_variance(l)))
        .collect();
    ChannelRealization::from_taps(h, n)
}

/// Per-sample noise calibration: sigma_n2 = E_tx / 10^{snr_db/10} with unit
/// average transmitted energy per sample.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub snr_db: f64,
    pub sigma_n2: f64,
}

impl NoiseModel {
    pub fn from_snr_db(snr_db: f64) -> Self {
        NoiseModel {
            snr_db,
            sigma_n2: 10f64.powf(-snr_db / 10.0),
        }
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            snr_db: f64::INFINITY,
            sigma_n2: 0.0,
        }
    }
}

/// Convolve the concatenated time-domain blocks with the channel taps and add
/// AWGN. Samples before t = 0 are zero.
pub fn transmit_stream<R: Rng>(
    blocks: &[Vec<Cf64>],
    h: &[Cf64],
    noise: &NoiseModel,
    rng: &mut R,
) -> Vec<Cf64> {
    let total: usize = blocks.iter().map(|b| b.len()).sum();
    let mut s = Vec::with_capacity(total);
    for b in blocks {
        s.extend_from_slice(b);
    }
    let mut r = vec![Cf64::new(0.0, 0.0); total];
    for (l, &tap) in h.iter().enumerate() {
        if tap.norm_sqr() == 0.0 {
            continue;
        }
        for t in l..total {
            r[t] += tap * s[t - l];
        }
    }
    if noise.sigma_n2 > 0.0 {
        for v in &mut r {
            *v += complex_gaussian(rng, noise.sigma_n2);
        }
    }
    r
}

/// Slice the received stream into (N+P)-sample blocks and demodulate each.
pub fn received_stream_to_freq_blocks(
    r: &[Cf64],
    cfg: &OfdmConfig,
    dft: &Dft,
) -> Result<Vec<Vec<Cf64>>> {
    let step = cfg.symbol_len();
    if r.len() % step != 0 {
        return Err(Error::Dimension(format!(
            "stream length {} not a multiple of N+P = {step}",
            r.len()
        )));
    }
    r.chunks(step)
        .map(|chunk| ofdm::demodulate_frame(chunk, cfg, dft))
        .collect()
}
