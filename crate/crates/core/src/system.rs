//! Shared transmit-chain state: constellation, region partition, precoder and
//! the per-subcarrier symbol means they induce. Immutable after construction
//! and shared read-only by transmitter, receiver and estimators.

use rand::Rng;

use crate::constellation::{
    build_constellation, map_bits, region_of_subcarrier, split_constellation, ConstellationSpec,
    RegionPartition, SplitMode,
};
use crate::ofdm::{modulate_frame, Dft, OfdmConfig};
use crate::precoding::{build_precoder, PrecoderMatrix};
use crate::{Cf64, Result};

pub struct TxChain {
    pub cfg: OfdmConfig,
    pub constellation: ConstellationSpec,
    pub partition: RegionPartition,
    pub precoder: PrecoderMatrix,
    /// E[d(n,k)] per subcarrier: the centroid of the region assigned to k
    /// (zero everywhere when splitting is off).
    pub mean_per_bin: Vec<Cf64>,
    /// Centered per-symbol variance sigma_c^2.
    pub sigma_c2: f64,
}

impl TxChain {
    pub fn build(cfg: &OfdmConfig) -> Result<TxChain> {
        cfg.validate()?;
        let constellation = build_constellation(cfg.modulation.kind(), cfg.modulation.order())?;
        let partition = split_constellation(&constellation, cfg.splitting)?;
        let precoder = build_precoder(cfg.n_subcarriers, cfg.precoding_p)?;
        let mean_per_bin: Vec<Cf64> = (0..cfg.n_subcarriers)
            .map(|k| partition.centroids[region_of_subcarrier(k, &partition)])
            .collect();
        let sigma_c2 = if cfg.splitting == SplitMode::None {
            1.0
        } else {
            partition.centered_variance
        };
        Ok(TxChain {
            cfg: *cfg,
            constellation,
            partition,
            precoder,
            mean_per_bin,
            sigma_c2,
        })
    }

    pub fn bits_per_symbol(&self) -> usize {
        if self.cfg.splitting == SplitMode::None {
            self.constellation.bits_per_symbol()
        } else {
            self.partition.bits_per_symbol()
        }
    }

    /// One frequency-domain data block of random symbols.
    pub fn random_symbols<R: Rng>(&self, rng: &mut R) -> Result<Vec<Cf64>> {
        let nb = self.bits_per_symbol();
        let mut bits = vec![0u8; nb];
        (0..self.cfg.n_subcarriers)
            .map(|k| {
                for b in &mut bits {
                    *b = rng.gen_range(0..2);
                }
                map_bits(&bits, k, &self.constellation, &self.partition)
            })
            .collect()
    }

    /// Generate `count` random data blocks and the matching time-domain
    /// symbols (precoded, IFFT'd, CP-prefixed).
    pub fn random_tx_blocks<R: Rng>(
        &self,
        count: usize,
        dft: &Dft,
        rng: &mut R,
    ) -> Result<Vec<Vec<Cf64>>> {
        (0..count)
            .map(|_| {
                let d = self.random_symbols(rng)?;
                let x = self.precoder.precode(&d)?;
                modulate_frame(&x, &self.cfg, dft)
            })
            .collect()
    }
}
