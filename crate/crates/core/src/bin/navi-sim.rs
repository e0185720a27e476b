use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use navi::config::{parse_area, ScenarioConfig};
use navi::trace::{Rect, SyntheticTraceSpec};
use navi::Strategy;

#[derive(Parser)]
#[command(name = "navi-sim", version, about = "Vehicular virtual-infrastructure dissemination simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configuration listed in a scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the cartesian product of k values, tx powers and strategies.
    Sweep(SweepArgs),
    /// Write a random-waypoint trace in NS-2 format.
    GenTrace {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 45)]
        vehicles: usize,
        #[arg(long, default_value_t = 180.0)]
        duration: f64,
        #[arg(long, default_value = "600x730", value_parser = parse_area)]
        area: (f64, f64),
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Range `A..B` (inclusive) or comma list.
    #[arg(long, value_parser = parse_k_list)]
    k: Option<KList>,
    #[arg(long, value_delimiter = ',')]
    tx: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<Strategy>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone)]
struct KList(Vec<usize>);

fn parse_k_list(s: &str) -> Result<KList, String> {
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|e| format!("{b:?}: {e}"))?;
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(format!("k list {s:?} must be non-empty with every k >= 1"));
    }
    Ok(KList(out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ScenarioConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = navi::run_scenario(&cfg)?;
            report.write(&out)?;
            report.write_event_logs(&out)?;
            summarize(&report, &out);
            Ok(report.is_success())
        }
        Command::Sweep(args) => {
            let mut cfg = ScenarioConfig::from_path(&args.config)?;
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            let k = args.k.map_or_else(|| cfg.k_values.clone(), |k| k.0);
            let tx = args.tx.unwrap_or_else(|| cfg.tx_powers_dbm.clone());
            let strategies = args.strategy.unwrap_or_else(|| cfg.strategies.clone());
            let report = navi::run_sweep(&cfg, &k, &tx, &strategies)?;
            report.write(&args.out)?;
            summarize(&report, &args.out);
            Ok(report.is_success())
        }
        Command::GenTrace {
            seed,
            vehicles,
            duration,
            area: (w, h),
            out,
        } => {
            let spec = SyntheticTraceSpec {
                seed,
                vehicles,
                duration,
                area: Rect::with_size(w, h)?,
                ..SyntheticTraceSpec::default()
            };
            std::fs::write(&out, spec.generate()?.to_ns2())?;
            println!("wrote {} vehicles to {}", vehicles, out.display());
            Ok(true)
        }
    }
}

fn summarize(report: &navi::SweepReport, out: &std::path::Path) {
    println!(
        "{} runs, {} failed, results in {}",
        report.runs.len() + report.failures.len(),
        report.failures.len(),
        out.display()
    );
    for f in &report.failures {
        eprintln!("failed {}: {}", f.config.id(), f.error);
    }
    for r in report.runs.iter().filter(|r| !r.violations.is_empty()) {
        eprintln!("{}: {} self-check violation(s)", r.report.config.id(), r.violations.len());
    }
}
