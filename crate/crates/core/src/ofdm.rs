//! OFDM modulation and demodulation.
//!
//! Unitary DFT/IDFT pair (energy preserving on both sides) with cyclic-prefix
//! insertion and removal. The channel frequency response uses the plain
//! non-unitary DFT of the zero-padded taps; with unitary transforms on both
//! ends this makes `y(k) = H_k x(k) + noise(k)` hold exactly for CP length >=
//! channel order.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::constellation::{Modulation, SplitMode};
use crate::{Cf64, Error, Result};

/// Top-level physical-layer configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// Number of subcarriers N (power of two).
    pub n_subcarriers: usize,
    /// Cyclic-prefix length P in samples.
    pub cp_len: usize,
    /// Channel order L; the channel has L+1 taps.
    pub channel_order: usize,
    /// Precoding constant p in [0, 1).
    pub precoding_p: f64,
    pub modulation: Modulation,
    pub splitting: SplitMode,
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_subcarriers;
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Config(format!("n_subcarriers {n} not a power of two")));
        }
        if self.cp_len < self.channel_order {
            return Err(Error::Config(format!(
                "cp_len {} < channel_order {}: CP cannot absorb the channel memory",
                self.cp_len, self.channel_order
            )));
        }
        if n <= 2 * (self.channel_order + 1) {
            return Err(Error::Config(format!(
                "n_subcarriers {n} too small for channel order {}",
                self.channel_order
            )));
        }
        if !(0.0..1.0).contains(&self.precoding_p) {
            return Err(Error::Config(format!(
                "precoding_p {} outside [0, 1)",
                self.precoding_p
            )));
        }
        Ok(())
    }

    /// Samples per OFDM symbol including CP.
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }
}

/// Cached unitary transform pair for a fixed size.
pub struct Dft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dft {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    fn check(&self, x: &[Cf64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "vector length {} != transform size {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// u[m] = (1/sqrt(N)) sum_k x[k] e^{+j 2 pi k m / N}
    pub fn unitary_idft(&self, x: &[Cf64]) -> Result<Vec<Cf64>> {
        self.check(x)?;
        let mut buf = x.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / (self.n as f64).sqrt();
        for v in &mut buf {
            *v *= s;
        }
        Ok(buf)
    }

    /// v[k] = (1/sqrt(N)) sum_m u[m] e^{-j 2 pi k m / N}
    pub fn unitary_dft(&self, u: &[Cf64]) -> Result<Vec<Cf64>> {
        self.check(u)?;
        let mut buf = u.to_vec();
        self.fwd.process(&mut buf);
        let s = 1.0 / (self.n as f64).sqrt();
        for v in &mut buf {
            *v *= s;
        }
        Ok(buf)
    }
}

/// Prepend a copy of the last `p` samples of `body`.
pub fn add_cp(body: &[Cf64], p: usize) -> Result<Vec<Cf64>> {
    let n = body.len();
    if p > n {
        return Err(Error::Dimension(format!("cp_len {p} > body length {n}")));
    }
    let mut out = Vec::with_capacity(n + p);
    out.extend_from_slice(&body[n - p..]);
    out.extend_from_slice(body);
    Ok(out)
}

/// Drop the first `p` samples of a CP-prefixed block.
pub fn remove_cp(block: &[Cf64], p: usize) -> Result<Vec<Cf64>> {
    if p > block.len() {
        return Err(Error::Dimension(format!(
            "cp_len {p} > block length {}",
            block.len()
        )));
    }
    Ok(block[p..].to_vec())
}

/// IFFT of the precoded frequency block followed by CP insertion.
pub fn modulate_frame(x: &[Cf64], cfg: &OfdmConfig, dft: &Dft) -> Result<Vec<Cf64>> {
    add_cp(&dft.unitary_idft(x)?, cfg.cp_len)
}

/// CP removal followed by the forward unitary DFT.
pub fn demodulate_frame(received: &[Cf64], cfg: &OfdmConfig, dft: &Dft) -> Result<Vec<Cf64>> {
    if received.len() != cfg.symbol_len() {
        return Err(Error::Dimension(format!(
            "received block length {} != N+P = {}",
            received.len(),
            cfg.symbol_len()
        )));
    }
    dft.unitary_dft(&remove_cp(received, cfg.cp_len)?)
}

/// H_k = sum_l h_l e^{-j 2 pi k l / N} (non-unitary DFT of the zero-padded taps).
pub fn channel_freq_response(h: &[Cf64], n: usize) -> Vec<Cf64> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Cf64::new(0.0, 0.0);
        for (l, &tap) in h.iter().enumerate() {
            let phi = -2.0 * std::f64::consts::PI * (k * l) as f64 / n as f64;
            acc += tap * Cf64::new(phi.cos(), phi.sin());
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{Modulation, SplitMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, cp: usize, l: usize) -> OfdmConfig {
        OfdmConfig {
            n_subcarriers: n,
            cp_len: cp,
            channel_order: l,
            precoding_p: 0.0,
            modulation: Modulation::Qam16,
            splitting: SplitMode::None,
        }
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Cf64> {
        (0..n)
            .map(|_| Cf64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn idft_of_impulse_is_constant() {
        let dft = Dft::new(8);
        let mut x = vec![Cf64::new(0.0, 0.0); 8];
        x[0] = Cf64::new(1.0, 0.0);
        let u = dft.unitary_idft(&x).unwrap();
        let c = Cf64::new(1.0 / 8f64.sqrt(), 0.0);
        for v in u {
            assert!((v - c).norm() < 1e-12);
        }
    }

    #[test]
    fn idft_shifted_impulse_n4() {
        let dft = Dft::new(4);
        let x = vec![
            Cf64::new(0.0, 0.0),
            Cf64::new(1.0, 0.0),
            Cf64::new(0.0, 0.0),
            Cf64::new(0.0, 0.0),
        ];
        let u = dft.unitary_idft(&x).unwrap();
        let expect = [
            Cf64::new(0.5, 0.0),
            Cf64::new(0.0, 0.5),
            Cf64::new(-0.5, 0.0),
            Cf64::new(0.0, -0.5),
        ];
        for (a, b) in u.iter().zip(expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transform_pair_inverse_and_unitary() {
        let dft = Dft::new(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = random_vec(64, &mut rng);
            let u = dft.unitary_idft(&x).unwrap();
            let back = dft.unitary_dft(&u).unwrap();
            let err: f64 = x.iter().zip(&back).map(|(a, b)| (a - b).norm()).sum();
            assert!(err < 1e-10);
            let nx: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let nu: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!((nx - nu).abs() < 1e-10);
        }
    }

    #[test]
    fn transform_length_mismatch() {
        let dft = Dft::new(8);
        assert!(dft.unitary_dft(&vec![Cf64::new(0.0, 0.0); 7]).is_err());
    }

    #[test]
    fn cp_insert_remove() {
        let body: Vec<Cf64> = (0..4).map(|i| Cf64::new(i as f64, 0.0)).collect();
        let blk = add_cp(&body, 2).unwrap();
        let want = [2.0, 3.0, 0.0, 1.0, 2.0, 3.0];
        for (a, &b) in blk.iter().zip(want.iter()) {
            assert!((a.re - b).abs() < 1e-15 && a.im == 0.0);
        }
        assert_eq!(remove_cp(&blk, 2).unwrap(), body);
        // P = 0 degenerate.
        assert_eq!(add_cp(&body, 0).unwrap(), body);
        assert!(add_cp(&body, 5).is_err());
    }

    #[test]
    fn cp_property_on_modulated_frames() {
        let cfg = cfg(16, 3, 2);
        let dft = Dft::new(16);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_vec(16, &mut rng);
        let s = modulate_frame(&x, &cfg, &dft).unwrap();
        assert_eq!(s.len(), 19);
        for i in 0..3 {
            assert!((s[i] - s[16 + i]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_input_zero_output() {
        let cfg = cfg(16, 2, 2);
        let dft = Dft::new(16);
        let s = modulate_frame(&vec![Cf64::new(0.0, 0.0); 16], &cfg, &dft).unwrap();
        assert!(s.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn identity_channel_roundtrip() {
        let cfg = cfg(32, 2, 2);
        let dft = Dft::new(32);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_vec(32, &mut rng);
        let s = modulate_frame(&x, &cfg, &dft).unwrap();
        let y = demodulate_frame(&s, &cfg, &dft).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn pure_delay_phase_ramp() {
        // h = [0, 1]: circular shift inside the CP window gives a phase ramp.
        let cfg = cfg(4, 1, 1);
        let dft = Dft::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_vec(4, &mut rng);
        let s = modulate_frame(&x, &cfg, &dft).unwrap();
        // Convolve with [0,1] assuming the previous sample before the block is
        // irrelevant after CP removal.
        let mut r = vec![Cf64::new(0.0, 0.0); s.len()];
        for t in 1..s.len() {
            r[t] = s[t - 1];
        }
        let y = demodulate_frame(&r, &cfg, &dft).unwrap();
        for (k, v) in y.iter().enumerate() {
            let phi = -2.0 * std::f64::consts::PI * k as f64 / 4.0;
            let expect = x[k] * Cf64::new(phi.cos(), phi.sin());
            assert!((v - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn freq_response_cases() {
        let h = [Cf64::new(1.0, 0.0), Cf64::new(0.0, 0.0), Cf64::new(0.0, 0.0)];
        for v in channel_freq_response(&h, 8) {
            assert!((v - Cf64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let h = [Cf64::new(0.0, 0.0), Cf64::new(1.0, 0.0)];
        let resp = channel_freq_response(&h, 4);
        let want = [
            Cf64::new(1.0, 0.0),
            Cf64::new(0.0, -1.0),
            Cf64::new(-1.0, 0.0),
            Cf64::new(0.0, 1.0),
        ];
        for (a, b) in resp.iter().zip(want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn freq_response_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_vec(3, &mut rng);
        let resp = channel_freq_response(&h, 16);
        let lhs: f64 = resp.iter().map(|v| v.norm_sqr()).sum();
        let rhs: f64 = 16.0 * h.iter().map(|v| v.norm_sqr()).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(64, 2, 2).validate().is_ok());
        assert!(cfg(63, 2, 2).validate().is_err());
        assert!(cfg(64, 1, 2).validate().is_err());
        assert!(cfg(4, 2, 2).validate().is_err());
        let mut c = cfg(64, 2, 2);
        c.precoding_p = 1.0;
        assert!(c.validate().is_err());
    }
}
