use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use wptopt::experiments::{
    emit_results, run_cell, run_sweep, run_sweep_with_jobs, write_csv, ExperimentConfig, OutputFormat,
    Strategy, SweepOutput, SweepRecord,
};
use wptopt::selfcheck;

#[derive(Parser, Debug)]
#[command(name = "wptopt", version, about = "Multisine WPT waveform optimization through an SSPA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte-Carlo sweep described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; defaults to the config's output_path, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to the --out extension, then csv.
        #[arg(long)]
        format: Option<OutputFormat>,
        /// Comma-separated subset of opt,decoupling,ideal,smf.
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<Strategy>>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check analytic values and gradients against reference computations.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every strategy on a single channel realization and print the records.
    Single {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
        ptr_dbw: f64,
        #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
        pin_dbw: f64,
        #[arg(long, default_value_t = -35.0, allow_negative_numbers = true)]
        as_dbv: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        gain: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        channel: u64,
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<Strategy>>,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
    },
}

fn format_for(path: Option<&Path>, explicit: Option<OutputFormat>) -> OutputFormat {
    explicit.unwrap_or_else(|| match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => OutputFormat::Json,
        _ => OutputFormat::Csv,
    })
}

fn print_records(records: &[SweepRecord], output: Option<&SweepOutput>, format: OutputFormat) -> Result<()> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match format {
        OutputFormat::Csv => write_csv(records, &mut lock)?,
        OutputFormat::Json => {
            match output {
                Some(o) => serde_json::to_writer_pretty(&mut lock, o)?,
                None => serde_json::to_writer_pretty(&mut lock, records)?,
            }
            writeln!(lock)?;
        }
    }
    Ok(())
}

fn run(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    strategies: Option<Vec<Strategy>>,
    jobs: Option<usize>,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(strategies) = strategies {
        cfg.strategies = strategies;
    }
    if let Some(out) = out {
        cfg.output_path = Some(out);
    }
    let output = match jobs {
        Some(0) => bail!("--jobs must be at least 1"),
        Some(k) => run_sweep_with_jobs(&cfg, k)?,
        None => run_sweep(&cfg)?,
    };
    let failures = output.records.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("warning: {failures} of {} records failed", output.records.len());
    }
    let format = format_for(cfg.output_path.as_deref(), format);
    match &cfg.output_path {
        Some(path) => {
            emit_results(&output, path, format)?;
            eprintln!("wrote {} records to {}", output.records.len(), path.display());
        }
        None => print_records(&output.records, Some(&output), format)?,
    }
    Ok(())
}

fn check(seed: u64) -> Result<bool> {
    let reports = selfcheck::run_all(seed)?;
    for r in &reports {
        println!("{r}");
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            format,
            strategies,
            jobs,
        } => run(&config, seed, out, format, strategies, jobs).map(|()| true),
        Command::Check { seed } => check(seed),
        Command::Single {
            n,
            m,
            ptr_dbw,
            pin_dbw,
            as_dbv,
            beta,
            gain,
            seed,
            channel,
            strategies,
            format,
        } => (|| {
            let mut cfg = ExperimentConfig {
                seed,
                num_channels: 1,
                ..Default::default()
            };
            cfg.tones.n = vec![n];
            cfg.tones.m = m;
            cfg.budgets.p_in_max_dbw = pin_dbw;
            cfg.budgets.p_tr_max_dbw = vec![ptr_dbw];
            cfg.sspa.as_dbv = as_dbv;
            cfg.sspa.beta = beta;
            cfg.sspa.gain = gain;
            if let Some(s) = strategies {
                cfg.strategies = s;
            }
            cfg.validate().context("invalid parameters")?;
            let records = run_cell(&cfg, n, ptr_dbw, channel)?;
            print_records(&records, None, format)?;
            Ok(records.iter().all(|r| r.error.is_none()))
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
