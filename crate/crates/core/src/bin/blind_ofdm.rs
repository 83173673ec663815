use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use blind_ofdm::harness::{
    emit_outputs, run_sweep, EstimatorKind, SimConfig, SweepAxis, SweepSpec,
};

#[derive(Parser)]
#[command(name = "blind-ofdm", about = "Blind OFDM channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML configuration file; defaults apply for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for results.csv and plot.gp.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Blocks,
    Snr,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> SweepAxis {
        match a {
            AxisArg::Blocks => SweepAxis::Blocks,
            AxisArg::Snr => SweepAxis::Snr,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured estimator at a single operating point.
    Run {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sweep the configured estimator over block count or SNR.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated grid values (strictly increasing); defaults to the
        /// standard grid for the axis.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Run subspace, precoding and hybrid estimators on one grid.
    Compare {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_enum, default_value = "blocks")]
        axis: AxisArg,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
}

fn load_config(common: &CommonOpts) -> blind_ofdm::Result<SimConfig> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn make_sweep(axis: SweepAxis, values: Option<Vec<f64>>) -> blind_ofdm::Result<SweepSpec> {
    match values {
        Some(v) => SweepSpec::new(axis, v),
        None => Ok(SweepSpec::default_for(axis)),
    }
}

fn execute(cli: Cli) -> blind_ofdm::Result<()> {
    let (common, sweep, estimators) = match cli.command {
        Command::Run { common } => {
            let cfg = load_config(&common)?;
            let sweep = SweepSpec::new(SweepAxis::Blocks, vec![cfg.n_blocks as f64])?;
            let ests = vec![cfg.estimator];
            (common, sweep, ests)
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let cfg = load_config(&common)?;
            (common, make_sweep(axis.into(), values)?, vec![cfg.estimator])
        }
        Command::Compare {
            common,
            axis,
            values,
        } => {
            let ests = vec![
                EstimatorKind::Subspace,
                EstimatorKind::Precoding,
                EstimatorKind::Hybrid,
            ];
            (common, make_sweep(axis.into(), values)?, ests)
        }
    };
    let cfg = load_config(&common)?;
    let report = run_sweep(&cfg, &sweep, &estimators, common.workers)?;
    let csv = emit_outputs(&report, &common.out)?;
    for p in &report.points {
        println!(
            "{}={} {}: nmse={:.6e} ({:.2} dB), stderr={:.2e}, failures={}/{}",
            report.axis, p.axis_value, p.estimator, p.nmse_mean, p.nmse_db, p.stderr,
            p.failures, p.trials
        );
    }
    println!("wrote {}", csv.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
