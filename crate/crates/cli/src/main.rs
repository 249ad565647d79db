//! `squarecb` command line: run experiments, check the minimax certificate,
//! compare summaries.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use squarecb::harness::{compare_report, configure_threads, run_experiment_in, ExperimentConfig, RunSummary};
use squarecb::minimax::{verify_certificate, CertificateConfig};
use squarecb::{Error, Result};

#[derive(Parser)]
#[command(name = "squarecb", version, about = "Contextual bandits via online regression oracles")]
struct Cli {
    /// Worker threads for seed and trial parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the per-round 2K/γ certificate on random instances.
    VerifyMinimax {
        /// TOML file with sampler settings; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        gamma_min: Option<f64>,
        #[arg(long)]
        gamma_max: Option<f64>,
        #[arg(long)]
        mu_factor: Option<f64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare run summaries side by side.
    Report {
        /// `summary.json` files.
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn write_file(path: &PathBuf, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        configure_threads(n)?;
    }
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let summary = run_experiment_in(&cfg, &dir)?;
            println!("{}", summary.to_json()?);
        }
        Command::VerifyMinimax {
            config,
            trials,
            seed,
            k_min,
            k_max,
            gamma_min,
            gamma_max,
            mu_factor,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => CertificateConfig::load(p)?,
                None => CertificateConfig::default(),
            };
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.k_min = k_min.unwrap_or(cfg.k_min);
            cfg.k_max = k_max.unwrap_or(cfg.k_max);
            cfg.gamma_min = gamma_min.unwrap_or(cfg.gamma_min);
            cfg.gamma_max = gamma_max.unwrap_or(cfg.gamma_max);
            cfg.mu_factor = mu_factor.unwrap_or(cfg.mu_factor);
            let report = verify_certificate(&cfg)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
            match out {
                Some(p) => write_file(&p, &json)?,
                None => println!("{json}"),
            }
            if !report.certificate.holds {
                return Err(Error::Validation(format!(
                    "{} certificate violations",
                    report.certificate.violation_count
                )));
            }
        }
        Command::Report { summaries, csv } => {
            let loaded = summaries.iter().map(RunSummary::load).collect::<Result<Vec<_>>>()?;
            let table = compare_report(&loaded)?;
            print!("{}", table.to_text());
            if let Some(p) = csv {
                write_file(&p, &table.to_csv()?)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("squarecb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
