//! Experiment sweeps: every (problem, dimension, repetition, variant)
//! becomes one seeded simulation run; results are written as traces,
//! energy and summary CSVs and trend series.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::algos::{adb_select, Mode};
use crate::bench::{FunctionId, Problem};
use crate::energy::{self, EnergyLedger};
use crate::fxp::{derive_seed, RngState};
use crate::island::NodeConfig;
use crate::netsim::{self, gen_topology, SimConfig, SimError, Trace};

mod config;
mod report;

pub use config::{ConfigErrors, Diagnostic, ExperimentConfig, NetworkConfig, Variant};
pub use report::{read_trace_dir, summary_csv, trend, trend_csv, RunKey, TraceDirError, TraceSet};

const STREAM_TOPOLOGY: u64 = 0x7090;
const STREAM_ADB: u64 = 0xADB;

/// Marker file present while an output directory is being written.
pub const INCOMPLETE: &str = "INCOMPLETE";

/// Seed of one repetition; shared by all variants so they are paired.
/// `derive_seed` is a fixed SplitMix64 chain, so seeds are stable.
pub fn run_seed(master: u64, problem: FunctionId, dim: usize, rep: u32) -> u64 {
    derive_seed(&[master, problem.index() as u64, dim as u64, rep as u64])
}

/// FNV-1a over the config's debug rendering; identifies outputs.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in format!("{cfg:?}").bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("{key}: {source}")]
    Run { key: String, source: SimError },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Node configurations and simulator input for one run.
pub fn sim_config(cfg: &ExperimentConfig, key: &RunKey) -> Result<SimConfig, SimError> {
    let v = &cfg.variants[key.variant];
    let net = &cfg.network;
    let seed = run_seed(cfg.seed, key.problem, key.dim, key.rep);
    let mut adb = RngState::new(derive_seed(&[seed, STREAM_ADB]));
    let nodes = (0..net.nodes)
        .map(|_| NodeConfig {
            algorithm: match v.mode {
                Mode::Homogeneous => v.algorithm,
                Mode::Heterogeneous => adb_select(Mode::Heterogeneous, &mut adb),
            },
            q: v.q.unwrap_or(net.q),
            comm_period: v.comm_period.unwrap_or(net.comm_period),
            eval_budget: net.eval_budget,
            time_budget: net.time_budget,
            communicating: v.communicating,
        })
        .collect();
    let mut trng = RngState::new(derive_seed(&[seed, STREAM_TOPOLOGY]));
    let topology = gen_topology(net.topology, net.nodes, &mut trng)?;
    Ok(SimConfig {
        problem: Problem::new(key.problem, key.dim).map_err(|e| SimError::Model(e.to_string()))?,
        params: cfg.params.clone(),
        seed,
        channel: cfg.channel,
        radio: cfg.radio,
        cost: cfg.cost.clone(),
        nodes,
        topology,
        header: key.header(cfg, seed),
    })
}

/// All runs in output order.
pub fn plan(cfg: &ExperimentConfig) -> Vec<RunKey> {
    let mut keys = Vec::new();
    for &dim in &cfg.dims {
        for &problem in &cfg.problems {
            for variant in 0..cfg.variants.len() {
                for rep in 0..cfg.repetitions {
                    keys.push(RunKey {
                        variant,
                        problem,
                        dim,
                        rep,
                    });
                }
            }
        }
    }
    keys
}

#[derive(Debug, Clone)]
pub struct Run {
    pub key: RunKey,
    pub trace: Trace,
}

#[derive(Debug, Clone)]
pub struct Results {
    pub config: ExperimentConfig,
    pub runs: Vec<Run>,
}

impl Results {
    /// Network fitness (average of node bests) per repetition.
    pub fn values(&self, variant: &str, problem: FunctionId, dim: usize) -> Vec<f64> {
        self.select(variant, problem, dim).map(Trace::network_fitness).collect()
    }

    pub fn select<'a>(&'a self, variant: &str, problem: FunctionId, dim: usize) -> impl Iterator<Item = &'a Trace> + 'a {
        let vi = self.config.variants.iter().position(|v| v.name == variant);
        self.runs
            .iter()
            .filter(move |r| Some(r.key.variant) == vi && r.key.problem == problem && r.key.dim == dim)
            .map(|r| &r.trace)
    }
}

/// Runs every repetition, in parallel, without touching the disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<Results, ExperimentError> {
    cfg.validate()?;
    let runs = plan(cfg)
        .into_par_iter()
        .map(|key| {
            let trace = sim_config(cfg, &key).and_then(netsim::run).map_err(|source| ExperimentError::Run {
                key: key.label(cfg),
                source,
            })?;
            Ok(Run { key, trace })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(Results { config: cfg.clone(), runs })
}

fn write(path: &Path, text: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| ExperimentError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Runs the experiment and writes its artifacts under `out`:
/// `traces/`, `energy.csv`, `summary_d<n>.csv` and `trend_<f>_d<n>.csv`.
/// An `INCOMPLETE` marker is left behind if anything fails.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Results, ExperimentError> {
    cfg.validate()?;
    let marker = out.join(INCOMPLETE);
    write(&marker, "run in progress or failed\n")?;
    let results = execute(cfg)?;
    let hash = config_hash(cfg);
    for r in &results.runs {
        write(&out.join(r.key.trace_path(cfg)), &r.trace.to_text())?;
    }
    let mut csv = format!("# config_hash={hash}\n{}\n", energy::CSV_HEADER);
    for r in &results.runs {
        let label = r.key.label(cfg);
        let mut all = EnergyLedger::default();
        for n in &r.trace.nodes {
            csv.push_str(&energy::csv_row(&label, &n.id.to_string(), &n.ledger, &cfg.currents));
            csv.push('\n');
            all.merge(&n.ledger);
        }
        csv.push_str(&energy::csv_row(&label, "all", &all, &cfg.currents));
        csv.push('\n');
    }
    write(&out.join("energy.csv"), &csv)?;
    let keyed: Vec<(RunKey, &Trace)> = results.runs.iter().map(|r| (r.key, &r.trace)).collect();
    let names: Vec<String> = cfg.variants.iter().map(|v| v.name.clone()).collect();
    for (file, text) in report::tables(&keyed, &names, cfg.alpha, &hash) {
        write(&out.join(file), &text)?;
    }
    for (file, text) in report::trends(&keyed, &names, cfg.network.eval_budget, cfg.trend_stride, &hash) {
        write(&out.join(file), &text)?;
    }
    fs::remove_file(&marker).map_err(|source| ExperimentError::Io { path: marker, source })?;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            problems: vec![FunctionId::new(1).unwrap()],
            dims: vec![3],
            repetitions: 2,
            network: NetworkConfig {
                nodes: 3,
                eval_budget: 50,
                ..NetworkConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn plan_size() {
        let c = ExperimentConfig::default();
        assert_eq!(plan(&c).len(), 15 * 3 * 16 * 4);
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        let f = FunctionId::new(3).unwrap();
        assert_eq!(run_seed(1, f, 5, 0), run_seed(1, f, 5, 0));
        assert_ne!(run_seed(1, f, 5, 0), run_seed(1, f, 5, 1));
        assert_ne!(run_seed(1, f, 5, 0), run_seed(1, f, 15, 0));
        assert_ne!(run_seed(1, f, 5, 0), run_seed(2, f, 5, 0));
    }

    #[test]
    fn heterogeneous_nodes_vary() {
        let mut c = small();
        c.network.nodes = 40;
        let key = RunKey {
            variant: 2,
            problem: c.problems[0],
            dim: 3,
            rep: 0,
        };
        let sc = sim_config(&c, &key).unwrap();
        let distinct: std::collections::BTreeSet<_> = sc.nodes.iter().map(|n| n.algorithm).collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn execute_runs_everything() {
        let c = small();
        let r = execute(&c).unwrap();
        assert_eq!(r.runs.len(), 8);
        assert_eq!(r.values("sa", c.problems[0], 3).len(), 2);
        assert!(r.runs.iter().all(|run| run.trace.nodes.iter().all(|n| n.evals == 50)));
    }
}
