use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use clinicsim_core::population::{builtin_cluster_specs, write_cluster_csv};
use clinicsim_core::experiment::{
    regenerate_reports, run_experiment, summary, verify_bundle, ExperimentConfig,
};
use std::path::PathBuf;
use std::time::Instant;

/// Run clinic screening experiments and validate them against pilot results.
#[derive(Parser)]
#[command(name = "clinicsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its output bundle.
    Run {
        /// Experiment TOML file, or the manifest.json of an earlier bundle.
        config: PathBuf,
        /// Desk-scale profile: 25 runs per cell and 500 patients per facility.
        #[arg(long)]
        quick: bool,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 uses every core).
        #[arg(long)]
        parallelism: Option<usize>,
        /// Cluster archetypes CSV replacing the built-in clusters.
        #[arg(long)]
        clusters_csv: Option<PathBuf>,
        /// Override the output directory.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Recompute effects, validation and plot data from a bundle's runs.
    Report {
        bundle: PathBuf,
    },
    /// Re-run a bundle from its manifest and check every output byte.
    Validate {
        bundle: PathBuf,
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Print the default experiment configuration as TOML.
    DefaultConfig,
    /// Print the built-in cluster archetypes as CSV.
    DefaultClusters,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, quick, seed, parallelism, clusters_csv, output } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if quick {
                cfg = cfg.quick();
            }
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            if let Some(csv) = clusters_csv {
                cfg.clusters_csv = Some(csv);
                cfg.cluster_specs.clear();
            }
            if let Some(out) = output {
                cfg.output_dir = out;
            }
            let started = Instant::now();
            let bundle = run_experiment(&cfg).context("running experiment")?;
            println!(
                "{} runs written to {} in {:.1}s",
                bundle.runs.len(),
                bundle.dir.display(),
                started.elapsed().as_secs_f64()
            );
            print!("{}", summary(&bundle.reports));
        }
        Command::Report { bundle } => {
            let reports = regenerate_reports(&bundle)
                .with_context(|| format!("reporting on {}", bundle.display()))?;
            print!("{}", summary(&reports));
        }
        Command::Validate { bundle, parallelism } => {
            let v = verify_bundle(&bundle, parallelism)
                .with_context(|| format!("re-running {}", bundle.display()))?;
            if !v.ok() {
                bail!("outputs differ from the recorded bundle: {}", v.mismatched.join(", "));
            }
            println!("reproduced {} files exactly", v.checked.len());
        }
        Command::DefaultConfig => {
            print!("{}", ExperimentConfig::default().to_toml_string()?);
        }
        Command::DefaultClusters => {
            write_cluster_csv(std::io::stdout().lock(), &builtin_cluster_specs())?;
        }
    }
    Ok(())
}
