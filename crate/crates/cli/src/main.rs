use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use radio_stripe::experiment::{fronthaul_dims, run_experiment, Sweep};
use radio_stripe::metrics::FronthaulComparison;
use radio_stripe::output::{self, SweepPoint};
use radio_stripe::selftest::{run_selftest, Fault};
use radio_stripe::{Scheme, SimulationConfig};

#[derive(Parser)]
#[command(
    name = "radio-stripe",
    version,
    about = "Cell-free radio stripe uplink simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo SE simulation of the selected schemes.
    Run {
        /// TOML configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated subset of stripe_nlmmse, mr_l2, lmmse_l4.
        #[arg(long, value_delimiter = ',', default_values_t = Scheme::ALL.to_vec())]
        schemes: Vec<Scheme>,
        /// One-parameter sweep, e.g. `k=5,10,15,20` or `correlation_model=uncorrelated,gaussian_local_scattering`.
        #[arg(long)]
        sweep: Option<Sweep>,
        /// Overrides the configured RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Front-haul scalars per coherence block, stripe vs. centralized.
    Fronthaul {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write fronthaul.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Internal consistency checks on a small instance.
    Selftest {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        blocks: usize,
        /// Corrupt one error covariance to show the checks fail.
        #[arg(long)]
        inject_fault: bool,
    },
}

fn load_config(path: Option<&Path>) -> Result<SimulationConfig> {
    match path {
        Some(p) => SimulationConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SimulationConfig::default()),
    }
}

fn print_summary(summary: &output::Summary) {
    println!(
        "  {:<14} {:>10} {:>10} {:>10}",
        "scheme", "median", "p05", "mean"
    );
    for (scheme, s) in &summary.schemes {
        println!(
            "  {:<14} {:>10.4} {:>10.4} {:>10.4}",
            scheme.label(),
            s.median_se,
            s.p05_se,
            s.mean_se
        );
    }
}

fn print_fronthaul(f: &FronthaulComparison) {
    println!("centralized (L4): {} real scalars / block", f.l4);
    println!(
        "radio stripe:     {} real scalars / block / segment",
        f.stripe
    );
    println!("reduction:        {:.4}%", 100.0 * f.reduction);
}

fn run(
    config: Option<PathBuf>,
    schemes: Vec<Scheme>,
    sweep: Option<Sweep>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: PathBuf,
) -> Result<()> {
    let mut base = load_config(config.as_deref())?;
    if let Some(s) = seed {
        base.rng_seed = s;
    }
    if let Some(t) = threads {
        base.threads = t;
    }
    let points = match &sweep {
        Some(sw) => sw.expand(&base)?,
        None => vec![(String::new(), base.clone())],
    };

    let mut index = Vec::new();
    for (label, cfg) in &points {
        let dir = if label.is_empty() {
            out.clone()
        } else {
            out.join(label)
        };
        let started = Instant::now();
        let outcome = run_experiment(cfg, &schemes)?;
        let summary = output::write_run(&dir, cfg, &outcome)?;
        println!(
            "{} ({} setups x {} blocks, {:.1}s) -> {}",
            if label.is_empty() { "run" } else { label },
            cfg.num_setups,
            cfg.realizations_per_setup,
            started.elapsed().as_secs_f64(),
            dir.display()
        );
        print_summary(&summary);
        index.push(SweepPoint {
            label: label.clone(),
            directory: label.clone(),
            schemes: summary.schemes,
        });
    }
    if let Some(sw) = &sweep {
        output::write_sweep_index(&out, sw.parameter(), &index)?;
    }
    Ok(())
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            schemes,
            sweep,
            seed,
            threads,
            out,
        } => run(config, schemes, sweep, seed, threads, out)?,
        Command::Fronthaul { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let report = FronthaulComparison::new(fronthaul_dims(&cfg));
            print_fronthaul(&report);
            if let Some(dir) = out {
                let path = output::write_fronthaul(&dir, &report)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Selftest {
            config,
            blocks,
            inject_fault,
        } => {
            let cfg = match config {
                Some(p) => load_config(Some(&p))?,
                None => SimulationConfig::tiny(),
            };
            let fault = inject_fault.then_some(Fault::SkewedErrorCovariance);
            let report = run_selftest(&cfg, blocks, fault)?;
            for c in &report.checks {
                println!("{c}");
            }
            if !report.passed() {
                println!("selftest FAILED");
                return Ok(ExitCode::FAILURE);
            }
            println!("selftest passed");
        }
    }
    Ok(ExitCode::SUCCESS)
}
