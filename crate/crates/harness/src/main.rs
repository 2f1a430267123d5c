use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spukf_core::diagnostics::ApproxMethod;
use spukf_core::FilterKind;
use spukf_bench::campaign::{monte_carlo, timing_report, CampaignConfig, ScenarioId};
use spukf_bench::grid::complexity_grid;
use spukf_bench::output::{write_campaign, write_grid_csv};
use spukf_bench::probe::{default_scales, probe_order};
use spukf_bench::Error;

#[derive(Parser)]
#[command(name = "spukf-bench", about = "Sigma-point filter benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo accuracy and timing campaign.
    Run {
        #[arg(long)]
        scenario: ScenarioId,
        #[arg(long, value_delimiter = ',', default_value = "ekf,ukf,ssukf,spukf,espukf")]
        filters: Vec<FilterKind>,
        /// Number of seeds, numbered from 0.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sequential_timing: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Cost-model grid.
    Complexity {
        #[arg(long)]
        n_max: u32,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        j: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        h: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Observed order of the propagation approximation error.
    ProbeOrder {
        #[arg(long)]
        scenario: ScenarioId,
        #[arg(long)]
        method: ApproxMethod,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Json(_) => ExitCode::from(EXIT_CONFIG),
        Error::Scenario(spukf_scenarios::Error::Config(_) | spukf_scenarios::Error::Json(_)) => {
            ExitCode::from(EXIT_CONFIG)
        }
        Error::Filter(spukf_core::Error::InvalidParameter(_)) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::FAILURE,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run {
            scenario,
            filters,
            seeds,
            steps,
            out,
            sequential_timing,
            config,
        } => {
            let sc = scenario.build(config.as_deref())?;
            let mut cfg = CampaignConfig::new(filters, (0..seeds).collect());
            cfg.steps = steps;
            cfg.sequential_timing = sequential_timing;
            let camp = monte_carlo(sc.as_ref(), &cfg)?;
            write_campaign(&out, &camp, &sc.component_names())?;

            println!("{:<8} {:>14} {:>12} {:>14} {:>10}", "filter", "mean_err", "std_err", "mean_step_ns", "reduction");
            for r in &camp.summary {
                let red = r.reduction_pct.map_or("-".to_string(), |v| format!("{v:.1}%"));
                println!(
                    "{:<8} {:>14.4} {:>12.4} {:>14.0} {:>10}",
                    r.filter.name(),
                    r.mean_err,
                    r.std_err,
                    r.mean_step_ns,
                    red
                );
            }
            if let Ok(t) = timing_report(&camp.summary) {
                for row in t {
                    println!(
                        "median {:<8} {:>12.0} ns  reduction {:>6.1}%",
                        row.filter.name(),
                        row.median_step_ns,
                        row.reduction_pct_median
                    );
                }
            }
            if camp.any_diverged() {
                for r in camp.runs.iter().filter(|r| r.diverged) {
                    eprintln!("diverged: {} seed {}: {}", r.filter, r.seed, r.failure.as_deref().unwrap_or(""));
                }
                for f in &camp.seed_failures {
                    eprintln!("seed {} failed: {}", f.seed, f.message);
                }
                return Ok(ExitCode::from(EXIT_DIVERGED));
            }
        }
        Command::Complexity { n_max, j, h, out } => {
            if n_max == 0 || j.contains(&0) || h.contains(&0) {
                return Err(Error::Config("n-max, j and h must be at least 1".into()));
            }
            let (rows, limits) = complexity_grid(n_max, &j, &h)?;
            let limits_path = write_grid_csv(&out, &rows, &limits)?;
            println!("{} rows -> {}", rows.len(), out.display());
            println!("{} limits -> {}", limits.len(), limits_path.display());
        }
        Command::ProbeOrder { scenario, method } => {
            let probe = probe_order(scenario, method, &default_scales())?;
            for (s, e) in &probe.samples {
                println!("scale {s:.6e}  max error {e:.6e}");
            }
            println!("{scenario} {method} slope {:.4}", probe.slope);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => exit_for(&e),
    }
}
