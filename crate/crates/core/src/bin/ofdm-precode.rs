use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use ofdm_precode::leakage::MASK_PRESETS;
use ofdm_precode::runner::{benchmark_with, run_scenario, with_threads, BenchOptions, RunOptions};
use ofdm_precode::scenario::{load_scenario, preset_text, scenario_presets};
use ofdm_precode::Error;

#[derive(Parser)]
#[command(name = "ofdm-precode", version, about = "Mask-compliant spectral precoding experiments for OFDM")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a built-in preset.
    config: String,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Precode a batch of symbols and write metrics.
    Run(Common),
    /// Time POCS, ADMM and SSP iterations over problem sizes.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated NxM sizes.
        #[arg(long, default_value = "128x8,256x8,512x8,1024x8", value_parser = parse_sizes)]
        sizes: Sizes,
        /// Repetitions per size; the median is reported.
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Built-in scenarios and masks.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names.
    List,
    /// Print a scenario preset.
    Show { name: String },
}

#[derive(Clone)]
struct Sizes(Vec<(usize, usize)>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    s.split(',')
        .map(|item| {
            let (n, m) = item
                .trim()
                .split_once('x')
                .ok_or_else(|| format!("`{item}` is not of the form NxM"))?;
            let n = n.parse().map_err(|e| format!("`{item}`: {e}"))?;
            let m = m.parse().map_err(|e| format!("`{item}`: {e}"))?;
            Ok((n, m))
        })
        .collect::<Result<_, _>>()
        .map(Sizes)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(c) => {
            let scenario = load_scenario(&c.config)?;
            let opts = RunOptions {
                seed: c.seed,
                threads: c.threads,
                out_dir: c.out,
            };
            let (o, dir) = run_scenario(&scenario, &opts)?;
            let s = &o.summary;
            println!("scenario      {} ({}, mask {})", s.scenario, s.algorithm, s.mask);
            println!("symbols       {} (seed {})", s.n_symbols, s.seed);
            println!("ACLR          {:.2} dB (unprecoded {:.2} dB)", s.aclr_db, s.aclr_unprecoded_db);
            println!("EVM           {:.3} %", s.evm_pct);
            println!("max margin    {:.3} dB (worst symbol {:.3} dB)", s.max_sem_margin_db, s.max_symbol_violation_db);
            println!("iterations    mean {:.1}, max {}", s.iterations_mean, s.iterations_max);
            println!("outputs       {}", dir.display());
        }
        Command::Bench { mut common, sizes, reps } => {
            let mut scenario = load_scenario(&common.config)?;
            if let Some(seed) = common.seed.take() {
                scenario.seed = seed;
            }
            let opts = BenchOptions { sizes: sizes.0, reps };
            let report = with_threads(common.threads, || benchmark_with(&scenario, &opts))?;
            println!("{:>7} {:>4} {:>14} {:>14} {:>14}", "N", "M", "POCS s/iter", "ADMM s/iter", "SSP s/sweep");
            for r in &report.rows {
                println!(
                    "{:>7} {:>4} {:>14.3e} {:>14.3e} {:>14.3e}",
                    r.n_alloc, r.m, r.pocs_s, r.admm_s, r.ssp_sweep_s
                );
            }
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.2}"));
            println!(
                "log-log slope vs N: POCS {}, ADMM {}, SSP {}",
                fmt(report.slopes.pocs),
                fmt(report.slopes.admm),
                fmt(report.slopes.ssp)
            );
            if let Some(dir) = common.out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("bench.csv"), report.to_csv())?;
                std::fs::write(dir.join("bench.json"), serde_json::to_string_pretty(&report)? + "\n")?;
                info!("wrote {}", dir.display());
            }
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for name in scenario_presets() {
                    println!("{name}");
                }
                for name in MASK_PRESETS {
                    println!("mask:{name}");
                }
            }
            PresetAction::Show { name } => {
                let text = preset_text(&name).ok_or_else(|| Error::UnknownPreset(name.clone()))?;
                print!("{text}");
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
