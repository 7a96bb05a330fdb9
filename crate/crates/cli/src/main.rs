use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use wsnopt_core::bench::FunctionId;
use wsnopt_core::experiment::{self, read_trace_dir, ConfigErrors, ExperimentConfig};

/// Exit status for a configuration that fails validation.
const EXIT_CONFIG: u8 = 2;
const EXIT_RUN: u8 = 1;

#[derive(Parser)]
#[command(name = "wsnopt", version, about = "Island-model optimization on simulated sensor networks")]
struct Cli {
    /// Root for relative output directories.
    #[arg(long, global = true, env = "WSNOPT_OUTPUT_ROOT", default_value = ".")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured simulation and write traces and tables.
    Run {
        config: PathBuf,
        /// Output directory; defaults to the config's `output` or name.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<u32>,
        /// Comma-separated problem ids, e.g. `f1,f3`.
        #[arg(long, value_delimiter = ',')]
        problems: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Worker threads; all cores by default.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Average fitness against evaluations, from a trace directory.
    Trend {
        trace_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        stride: u64,
        /// Where to write the CSVs; defaults to the trace directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary tables with rank-sum marks, from a trace directory.
    Tables {
        trace_dir: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn config_error(path: &Path, e: &ConfigErrors) -> Failure {
    let lines: Vec<String> =
        e.0.iter()
            .map(|d| match d.line {
                0 => format!("{}: {}", path.display(), d.message),
                l => format!("{}:{l}: {}", path.display(), d.message),
            })
            .collect();
    Failure::Config(lines.join("\n"))
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let src = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&src).map_err(|e| config_error(path, &e))
}

fn write_all(dir: &Path, files: Vec<(String, String)>) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, text) in files {
        let p = dir.join(&name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        println!("{}", p.display());
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), Failure> {
    let root = cli.output_root;
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("{}: ok ({} runs)", config.display(), experiment::plan(&cfg).len());
        }
        Command::Run {
            config,
            out,
            seed,
            repetitions,
            problems,
            dims,
            jobs,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = repetitions {
                cfg.repetitions = r;
            }
            if let Some(ps) = problems {
                cfg.problems = ps
                    .iter()
                    .map(|p| p.parse::<FunctionId>().map_err(|e| Failure::Config(format!("--problems: {e}"))))
                    .collect::<Result<_, _>>()?;
            }
            if let Some(d) = dims {
                cfg.dims = d;
            }
            cfg.validate().map_err(|e| config_error(&config, &e))?;
            let dir = root.join(out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from(&cfg.name)));
            if let Some(j) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(j)
                    .build_global()
                    .context("configuring worker threads")?;
            }
            let results = experiment::run_experiment(&cfg, &dir).with_context(|| format!("experiment `{}`", cfg.name))?;
            println!("{} runs written to {}", results.runs.len(), dir.display());
        }
        Command::Trend { trace_dir, stride, out } => {
            if stride == 0 {
                return Err(Failure::Config("--stride must be at least 1".into()));
            }
            let set = read_trace_dir(&trace_dir).map_err(anyhow::Error::from)?;
            write_all(&root.join(out.unwrap_or(trace_dir)), set.trends(stride))?;
        }
        Command::Tables { trace_dir, alpha, out } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Failure::Config(format!("--alpha {alpha} must lie in (0, 1)")));
            }
            let set = read_trace_dir(&trace_dir).map_err(anyhow::Error::from)?;
            write_all(&root.join(out.unwrap_or(trace_dir)), set.tables(alpha))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUN)
        }
    }
}
