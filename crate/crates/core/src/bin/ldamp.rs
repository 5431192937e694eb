use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ldamp::bench::{
    estimate_once, run_se_compare, run_sweep, se_once, to_db, DenoiserChoice, ExperimentConfig, NmseDenominator,
    SweepResult,
};
use ldamp::channel::generate_dataset;
use ldamp::denoise::DEFAULT_SOFT_LAMBDA;
use ldamp::Error;

#[derive(Parser)]
#[command(name = "ldamp", version, about = "Beamspace mmWave channel estimation with denoising AMP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a channel dataset file.
    Generate {
        #[arg(long, default_value_t = 16640)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate one channel and print per-layer NMSE.
    Estimate(Common),
    /// Print the state-evolution trajectory for one channel.
    Se(Common),
    /// Simulated NMSE over the delta/SNR/denoiser grid, as CSV.
    Sweep(Common),
    /// Paired state-evolution and simulated NMSE, as CSV.
    SeCompare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    paths: usize,
    /// Measurement ratios K/MN, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1", allow_negative_numbers = true)]
    delta: Vec<f64>,
    /// SNRs in dB, comma separated.
    #[arg(long = "snr-db", value_delimiter = ',', default_value = "10", allow_negative_numbers = true)]
    snr_db: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    layers: usize,
    /// Denoisers: wiener, soft, dncnn, oracle (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "soft")]
    denoiser: Vec<String>,
    /// DnCNN weight file, required for `dncnn`.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Soft-threshold multiplier.
    #[arg(long, default_value_t = DEFAULT_SOFT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Monte-Carlo draws per state-evolution update.
    #[arg(long = "mc-trials", default_value_t = 50)]
    mc_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `estimate` (‖ĥ‖²) or `truth` (‖h‖²).
    #[arg(long = "nmse-denominator", default_value = "estimate")]
    nmse_denominator: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, short)]
    verbose: bool,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let denoisers = self
            .denoiser
            .iter()
            .map(|d| DenoiserChoice::parse(d, self.lambda, self.weights.as_deref()))
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = ExperimentConfig {
            m: self.m,
            n: self.n,
            num_paths: self.paths,
            deltas: self.delta.clone(),
            snrs_db: self.snr_db.clone(),
            denoisers,
            layers: self.layers,
            trials: self.trials,
            seed: self.seed,
            mc_trials: self.mc_trials,
            nmse_denominator: self.nmse_denominator.parse::<NmseDenominator>()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, result: &SweepResult) -> Result<(), Error> {
        match &self.out {
            Some(path) => result.write_csv(path)?,
            None => print!("{}", result.to_csv()),
        }
        if result.excluded > 0 {
            eprintln!("{} trial ratios excluded (zero NMSE denominator)", result.excluded);
        }
        Ok(())
    }
}

fn fmt_db(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{:.6}", to_db(v)))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate {
            count,
            m,
            n,
            paths,
            seed,
            out,
        } => {
            let ds = generate_dataset(count, paths, m, n, seed)?;
            ds.save(&out)?;
            eprintln!("wrote {count} {m}x{n} channels to {}", out.display());
        }
        Command::Estimate(args) => {
            let cfg = args.config()?;
            let report = estimate_once(&cfg)?;
            let mode = cfg.nmse_denominator;
            println!("# K = {}, denoiser = {}", report.k, cfg.denoisers[0].name());
            if args.verbose {
                println!("layer,sigma_hat,nmse_db_estimate,nmse_db_truth");
            } else {
                println!("layer,sigma_hat,nmse_db");
            }
            for (l, s) in report.sigma_hats.iter().enumerate() {
                if args.verbose {
                    println!(
                        "{l},{s:.6},{},{}",
                        fmt_db(report.nmse_estimate[l]),
                        fmt_db(report.nmse_truth[l])
                    );
                } else {
                    let v = match mode {
                        NmseDenominator::Estimate => report.nmse_estimate[l],
                        NmseDenominator::Truth => report.nmse_truth[l],
                    };
                    println!("{l},{s:.6},{}", fmt_db(v));
                }
            }
        }
        Command::Se(args) => {
            let cfg = args.config()?;
            let traj = se_once(&cfg)?;
            println!("layer,theta,sigma_e_sq,nmse_db");
            for (l, (theta, nmse)) in traj.theta.iter().zip(traj.nmse()).enumerate() {
                let s = traj.sigma_e_sq.get(l).map_or(String::new(), |v| format!("{v:.6}"));
                println!("{l},{theta:.6},{s},{:.6}", to_db(nmse));
            }
        }
        Command::Sweep(args) => {
            let cfg = args.config()?;
            args.emit(&run_sweep(&cfg)?)?;
        }
        Command::SeCompare(args) => {
            let cfg = args.config()?;
            args.emit(&run_se_compare(&cfg)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
