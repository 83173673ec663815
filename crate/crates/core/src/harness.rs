//! Monte-Carlo experiment driver: seeded trials, sweeps over block count or
//! SNR, NMSE aggregation with per-estimator scoring rules, CSV and gnuplot
//! output.
//!
//! Determinism contract: (config, seed) fully determines every output byte.
//! Trials derive independent RNG streams from the master seed and their
//! indices, so results are identical for any worker count.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    draw_channel, received_stream_to_freq_blocks, transmit_stream, ChannelPdp, ChannelRealization,
    NoiseModel, PdpKind,
};
use crate::constellation::{Modulation, SplitMode};
use crate::estimators::{
    composite_slices, estimate_noise_variance, nmse, oracle_align_phase, oracle_align_scalar,
    precoding_estimate, subspace_estimate, Ambiguity, ChannelEstimate, CovarianceAccumulator,
    CovarianceEstimate,
};
use crate::mpd::{hybrid_blind_estimate, HybridInputs, MpdConfig};
use crate::ofdm::{Dft, OfdmConfig};
use crate::system::TxChain;
use crate::{Cf64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Subspace,
    Precoding,
    Hybrid,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EstimatorKind::Subspace => "subspace",
            EstimatorKind::Precoding => "precoding",
            EstimatorKind::Hybrid => "hybrid",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKnowledge {
    Known,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MseNormalization {
    /// ||H_hat - H||^2 / ||H||^2 (default).
    Normalized,
    /// ||H_hat - H||^2 / N.
    Absolute,
}

/// Flat simulation configuration; unknown keys in a config file are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub modulation: Modulation,
    pub splitting: SplitMode,
    pub n_subcarriers: usize,
    /// Defaults to `channel_order` when absent.
    pub cp_len: Option<usize>,
    pub channel_order: usize,
    pub precoding_p: f64,
    pub pdp: PdpKind,
    pub snr_db: f64,
    /// Number of OFDM blocks M used for covariance averaging.
    pub n_blocks: usize,
    pub n_trials: usize,
    pub estimator: EstimatorKind,
    pub noise_knowledge: NoiseKnowledge,
    pub mse_normalization: MseNormalization,
    pub seed: u64,
    pub mpd: MpdConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            modulation: Modulation::Qam16,
            splitting: SplitMode::Quadrant,
            n_subcarriers: 64,
            cp_len: None,
            channel_order: 2,
            precoding_p: 0.5,
            pdp: PdpKind::Exponential,
            snr_db: 30.0,
            n_blocks: 1000,
            n_trials: 250,
            estimator: EstimatorKind::Precoding,
            noise_knowledge: NoiseKnowledge::Known,
            mse_normalization: MseNormalization::Normalized,
            seed: 1,
            mpd: MpdConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 1 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        if self.n_blocks < 2 {
            return Err(Error::Config("n_blocks must be >= 2".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<SimConfig> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn cp_len(&self) -> usize {
        self.cp_len.unwrap_or(self.channel_order)
    }

    /// Physical-layer chain for one estimator. The baseline comparison runs
    /// the semi-blind estimators on the plain (unsplit) constellation, the
    /// subspace method with an identity precoder; the hybrid needs splitting
    /// and the precoder.
    fn ofdm_config_for(&self, kind: EstimatorKind) -> OfdmConfig {
        let (p, splitting) = match kind {
            EstimatorKind::Subspace => (0.0, SplitMode::None),
            EstimatorKind::Precoding => (self.precoding_p, SplitMode::None),
            EstimatorKind::Hybrid => {
                let s = if self.splitting == SplitMode::None {
                    SplitMode::Quadrant
                } else {
                    self.splitting
                };
                (self.precoding_p, s)
            }
        };
        OfdmConfig {
            n_subcarriers: self.n_subcarriers,
            cp_len: self.cp_len(),
            channel_order: self.channel_order,
            precoding_p: p,
            modulation: self.modulation,
            splitting,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Blocks,
    Snr,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Blocks => "blocks",
            SweepAxis::Snr => "snr",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Result<SweepSpec> {
        if values.is_empty() {
            return Err(Error::Config("sweep values must be non-empty".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sweep values must be strictly increasing".into()));
        }
        Ok(SweepSpec { axis, values })
    }

    /// Default grids mirroring the standard experiment figures.
    pub fn default_for(axis: SweepAxis) -> SweepSpec {
        let values = match axis {
            SweepAxis::Blocks => vec![25.0, 50.0, 100.0, 250.0, 500.0, 1000.0],
            SweepAxis::Snr => (0..=7).map(|i| 5.0 * i as f64).collect(),
        };
        SweepSpec { axis, values }
    }
}

/// Aggregated NMSE statistics for one (sweep point, estimator) pair.
#[derive(Debug, Clone)]
pub struct PointReport {
    pub axis_value: f64,
    pub estimator: EstimatorKind,
    pub nmse_mean: f64,
    pub nmse_db: f64,
    pub stderr: f64,
    pub trials: usize,
    pub failures: usize,
    pub redraws: usize,
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub axis: SweepAxis,
    pub points: Vec<PointReport>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn derive_seed(master: u64, point: usize, trial: usize, stream: u64) -> u64 {
    let a = splitmix64(master ^ 0xd6e8feb86659fd93);
    let b = splitmix64(a ^ (point as u64).wrapping_mul(0xa24baed4963ee407));
    let c = splitmix64(b ^ (trial as u64).wrapping_mul(0x9fb21c651e98df25));
    splitmix64(c ^ stream)
}

/// Apply the oracle correction that the estimate's ambiguity tag permits and
/// score against the true response. A resolved (completely blind) estimate is
/// never corrected.
pub fn score_estimate(
    est: &ChannelEstimate,
    truth: &[Cf64],
    norm: MseNormalization,
) -> Result<f64> {
    let corrected = match est.ambiguity {
        Ambiguity::ComplexScalar => oracle_align_scalar(&est.h_freq, truth)?.0,
        Ambiguity::PhaseOnly => oracle_align_phase(&est.h_freq, truth)?.0,
        Ambiguity::Resolved => est.h_freq.clone(),
    };
    Ok(match norm {
        MseNormalization::Normalized => nmse(&corrected, truth),
        MseNormalization::Absolute => {
            corrected
                .iter()
                .zip(truth)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                / truth.len() as f64
        }
    })
}

struct TrialResult {
    /// Per selected estimator: Ok(score) or a recorded estimator failure.
    scores: Vec<Option<f64>>,
    redraws: usize,
}

const MAX_REDRAWS: usize = 1000;

fn accumulate_composites(stream: &[Cf64], cfg: &OfdmConfig) -> Result<CovarianceEstimate> {
    let slices = composite_slices(stream, cfg)?;
    let mut acc = CovarianceAccumulator::new(slices[0].len());
    for s in slices {
        acc.push(s)?;
    }
    acc.finalize()
}

fn accumulate_freq_blocks(blocks: &[Vec<Cf64>]) -> Result<CovarianceEstimate> {
    let mut acc = CovarianceAccumulator::new(blocks[0].len());
    for b in blocks {
        acc.push(b)?;
    }
    acc.finalize()
}

/// One Monte-Carlo trial: a single static channel draw shared by all selected
/// estimators, an independent transmission per estimator chain (plus one
/// warm-up symbol so the first composite window has a valid predecessor), and
/// the ambiguity-legal score for each.
fn run_trial(
    cfg: &SimConfig,
    chains: &[(EstimatorKind, TxChain)],
    dft: &Dft,
    point: usize,
    trial: usize,
) -> Result<TrialResult> {
    let pdp = ChannelPdp {
        kind: cfg.pdp,
        order: cfg.channel_order,
    };
    let mut chan_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, point, trial, 0));
    let mut redraws = 0usize;
    let chan: ChannelRealization = loop {
        let c = draw_channel(&pdp, cfg.n_subcarriers, &mut chan_rng);
        if !c.is_degenerate() {
            break c;
        }
        redraws += 1;
        if redraws > MAX_REDRAWS {
            return Err(Error::Estimator("could not draw a non-degenerate channel".into()));
        }
    };
    let noise = NoiseModel::from_snr_db(cfg.snr_db);

    let mut scores = Vec::with_capacity(chains.len());
    for (i, (kind, chain)) in chains.iter().enumerate() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, point, trial, 1 + i as u64));
        let tx = chain.random_tx_blocks(cfg.n_blocks + 1, dft, &mut rng)?;
        let stream = transmit_stream(&tx, &chan.h, &noise, &mut rng);

        let outcome: Result<f64> = (|| {
            let estimate = match kind {
                EstimatorKind::Subspace => {
                    let cov = accumulate_composites(&stream, &chain.cfg)?;
                    subspace_estimate(&cov, &chain.cfg)?
                }
                EstimatorKind::Precoding => {
                    let ys =
                        &received_stream_to_freq_blocks(&stream, &chain.cfg, dft)?[1..];
                    let cov = accumulate_freq_blocks(ys)?;
                    let sigma_n2 = match cfg.noise_knowledge {
                        NoiseKnowledge::Known => noise.sigma_n2,
                        NoiseKnowledge::Estimated => {
                            let comp = accumulate_composites(&stream, &chain.cfg)?;
                            estimate_noise_variance(&comp, cfg.channel_order)?
                        }
                    };
                    precoding_estimate(
                        &cov,
                        &chain.precoder,
                        cfg.channel_order,
                        sigma_n2,
                        chain.sigma_c2,
                    )?
                }
                EstimatorKind::Hybrid => {
                    let comp = accumulate_composites(&stream, &chain.cfg)?;
                    let ys =
                        received_stream_to_freq_blocks(&stream, &chain.cfg, dft)?[1..].to_vec();
                    let y_cov = accumulate_freq_blocks(&ys)?;
                    let sigma_n2 = match cfg.noise_knowledge {
                        NoiseKnowledge::Known => noise.sigma_n2,
                        NoiseKnowledge::Estimated => {
                            estimate_noise_variance(&comp, cfg.channel_order)?
                        }
                    };
                    hybrid_blind_estimate(
                        &HybridInputs {
                            composite_cov: Some(&comp),
                            y_cov: &y_cov,
                            y_blocks: &ys,
                            sigma_n2,
                        },
                        chain,
                        &cfg.mpd,
                    )?
                }
            };
            score_estimate(&estimate, &chan.h_freq, cfg.mse_normalization)
        })();

        match outcome {
            Ok(score) => scores.push(Some(score)),
            // p.o.e. violations and similar estimator breakdowns are recorded
            // as failed trials; anything else is a real error.
            Err(Error::Estimator(_)) => scores.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(TrialResult { scores, redraws })
}

/// Run all trials of one sweep point, parallel over `workers` threads.
/// Aggregation is a deterministic reduction in trial order.
pub fn run_point(
    cfg: &SimConfig,
    estimators: &[EstimatorKind],
    axis_value: f64,
    point: usize,
    workers: usize,
) -> Result<Vec<PointReport>> {
    cfg.validate()?;
    let workers = workers.max(1);
    let chains: Vec<(EstimatorKind, TxChain)> = estimators
        .iter()
        .map(|&k| TxChain::build(&cfg.ofdm_config_for(k)).map(|c| (k, c)))
        .collect::<Result<_>>()?;
    let dft = Dft::new(cfg.n_subcarriers);

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TrialResult>>>> =
        Mutex::new((0..cfg.n_trials).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= cfg.n_trials {
                    break;
                }
                let res = run_trial(cfg, &chains, &dft, point, t);
                results.lock().unwrap()[t] = Some(res);
            });
        }
    });

    let collected = results.into_inner().unwrap();
    let mut per_est: Vec<Vec<f64>> = vec![Vec::new(); estimators.len()];
    let mut failures = vec![0usize; estimators.len()];
    let mut redraws = 0usize;
    for slot in collected {
        let trial = slot.expect("trial not executed")?;
        redraws += trial.redraws;
        for (i, s) in trial.scores.iter().enumerate() {
            match s {
                Some(v) => per_est[i].push(*v),
                None => failures[i] += 1,
            }
        }
    }

    Ok(estimators
        .iter()
        .enumerate()
        .map(|(i, &est)| {
            let samples = &per_est[i];
            let n = samples.len();
            let mean = if n > 0 {
                samples.iter().sum::<f64>() / n as f64
            } else {
                f64::NAN
            };
            let stderr = if n > 1 {
                let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (n as f64 - 1.0);
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            PointReport {
                axis_value,
                estimator: est,
                nmse_mean: mean,
                nmse_db: 10.0 * mean.log10(),
                stderr,
                trials: cfg.n_trials,
                failures: failures[i],
                redraws,
            }
        })
        .collect())
}

/// Sweep over block count or SNR; aggregates per point and per estimator.
pub fn run_sweep(
    cfg: &SimConfig,
    sweep: &SweepSpec,
    estimators: &[EstimatorKind],
    workers: usize,
) -> Result<SimReport> {
    if sweep.values.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    let mut points = Vec::new();
    for (idx, &value) in sweep.values.iter().enumerate() {
        let mut point_cfg = cfg.clone();
        match sweep.axis {
            SweepAxis::Blocks => point_cfg.n_blocks = value as usize,
            SweepAxis::Snr => point_cfg.snr_db = value,
        }
        points.extend(run_point(&point_cfg, estimators, value, idx, workers)?);
    }
    Ok(SimReport {
        axis: sweep.axis,
        points,
    })
}

/// Render the report as CSV text (bit-exact, deterministic row order).
pub fn report_to_csv(report: &SimReport) -> String {
    let mut out = String::from("axis,axis_value,estimator,nmse,nmse_db,stderr,trials,failures\n");
    for p in &report.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            report.axis,
            p.axis_value,
            p.estimator,
            p.nmse_mean,
            p.nmse_db,
            p.stderr,
            p.trials,
            p.failures
        ));
    }
    out
}

fn plot_script(report: &SimReport, csv_name: &str) -> String {
    let mut ests: Vec<EstimatorKind> = Vec::new();
    for p in &report.points {
        if !ests.contains(&p.estimator) {
            ests.push(p.estimator);
        }
    }
    let xlabel = match report.axis {
        SweepAxis::Blocks => "Length of OFDM blocks (M)",
        SweepAxis::Snr => "SNR (dB)",
    };
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale y\n");
    s.push_str(&format!("set xlabel '{xlabel}'\n"));
    s.push_str("set ylabel 'NMSE'\n");
    s.push_str("set key top right\n");
    s.push_str("set grid\n");
    let parts: Vec<String> = ests
        .iter()
        .map(|e| {
            format!(
                "'{csv_name}' using 2:(strcol(3) eq '{e}' ? column(4) : 1/0) \
                 with linespoints title '{e}'"
            )
        })
        .collect();
    s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    s
}

/// Write `results.csv` and `plot.gp` into `dir`; returns the CSV path.
pub fn emit_outputs(report: &SimReport, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("results.csv");
    let mut f = std::fs::File::create(&csv_path)?;
    f.write_all(report_to_csv(report).as_bytes())?;
    let mut g = std::fs::File::create(dir.join("plot.gp"))?;
    g.write_all(plot_script(report, "results.csv").as_bytes())?;
    Ok(csv_path)
}
