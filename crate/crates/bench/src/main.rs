use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use pdanm_bench::summary::SummaryRow;
use pdanm_bench::{
    any_cell_failed, emit, read_rows_csv, run_experiment, summarize, ExperimentSpec, OutputFormat, Scenario,
};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "PDANM_BENCH_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "results";

#[derive(Debug, Parser)]
#[command(name = "pdanm-bench", version, about = "Monte-Carlo sweeps of the RIS channel estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a sweep and write its rows, summary and optional chart.
    Run {
        /// Experiment spec (JSON); without it the preset of --scenario is used.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<Scenario>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: spec field, then $PDANM_BENCH_OUT_DIR, then ./results]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        /// Worker threads (0: one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Aggregate a rows CSV into per-cell statistics on stdout.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the preset spec of a scenario as JSON.
    Preset { scenario: Scenario },
}

fn load_spec(path: Option<&PathBuf>, scenario: Option<Scenario>) -> Result<ExperimentSpec> {
    let mut spec = match (path, scenario) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentSpec::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Some(s)) => ExperimentSpec::preset(s),
        (None, None) => anyhow::bail!("either --spec or --scenario is required"),
    };
    if let (Some(_), Some(s)) = (path, scenario) {
        spec.scenario = s;
    }
    Ok(spec)
}

fn print_summary(summary: &[SummaryRow]) -> Result<()> {
    pdanm_bench::emit::write_summary_csv(io::stdout().lock(), summary)?;
    Ok(())
}

/// Exit code 2 when some cell has no usable row.
fn outcome(summary: &[SummaryRow]) -> ExitCode {
    if any_cell_failed(summary) {
        for s in summary.iter().filter(|s| s.empty) {
            log::error!(
                "cell {} n_b={} n_u={} n_r={} snr_db={} failed in all {} trials",
                s.method,
                s.n_b,
                s.n_u,
                s.n_r,
                s.snr_db,
                s.rows
            );
        }
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            spec,
            scenario,
            trials,
            seed,
            out,
            format,
            jobs,
        } => {
            let mut spec = load_spec(spec.as_ref(), scenario)?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec.validate()?;
            let dir = out
                .or_else(|| spec.out_dir.clone())
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
            log::info!(
                "running {} with {} grid points x {} trials",
                spec.scenario,
                spec.grid.len(),
                spec.trials
            );
            let rows = run_experiment(&spec, jobs)?;
            let summary = summarize(&rows);
            let files = emit(&rows, &summary, spec.scenario, format, &dir)
                .with_context(|| format!("writing to {}", dir.display()))?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(outcome(&summary))
        }
        Command::Summarize { input } => {
            let file = fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let rows = read_rows_csv(file).with_context(|| format!("reading {}", input.display()))?;
            anyhow::ensure!(!rows.is_empty(), "{} has no rows", input.display());
            let summary = summarize(&rows);
            print_summary(&summary)?;
            Ok(outcome(&summary))
        }
        Command::Preset { scenario } => {
            println!("{}", ExperimentSpec::preset(scenario).to_json());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
