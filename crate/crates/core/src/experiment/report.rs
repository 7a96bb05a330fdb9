use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::bench::FunctionId;
use crate::netsim::Trace;
use crate::stats::{aggregate, wilcoxon};

use super::ExperimentConfig;

/// Position of a run inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub dim: usize,
    pub problem: FunctionId,
    /// Index into the experiment's variants; 0 is the reference.
    pub variant: usize,
    pub rep: u32,
}

impl RunKey {
    pub fn label(&self, cfg: &ExperimentConfig) -> String {
        format!("{}/{}/d{}/r{}", cfg.variants[self.variant].name, self.problem, self.dim, self.rep)
    }

    pub fn trace_path(&self, cfg: &ExperimentConfig) -> PathBuf {
        PathBuf::from("traces")
            .join(&cfg.variants[self.variant].name)
            .join(format!("{}_d{}_r{}.trace", self.problem, self.dim, self.rep))
    }

    pub(super) fn header(&self, cfg: &ExperimentConfig, seed: u64) -> Vec<(String, String)> {
        let kv = |k: &str, v: String| (k.to_owned(), v);
        vec![
            kv("experiment", cfg.name.clone()),
            kv("config_hash", super::config_hash(cfg)),
            kv("variant", cfg.variants[self.variant].name.clone()),
            kv("variant_index", self.variant.to_string()),
            kv("problem", self.problem.to_string()),
            kv("dim", self.dim.to_string()),
            kv("rep", self.rep.to_string()),
            kv("seed", seed.to_string()),
            kv("eval_budget", cfg.network.eval_budget.to_string()),
        ]
    }
}

/// Traces of one experiment, read back from disk or kept in memory.
#[derive(Debug, Clone, Default)]
pub struct TraceSet {
    /// Variant names by index.
    pub names: Vec<String>,
    pub runs: Vec<(RunKey, Trace)>,
    pub eval_budget: u64,
    pub config_hash: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceDirError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    Bad { path: PathBuf, reason: String },
    #[error("no traces found under {0}")]
    Empty(PathBuf),
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "trace") {
            out.push(p);
        }
    }
    Ok(())
}

/// Reads every `*.trace` file below `dir`.
pub fn read_trace_dir(dir: &Path) -> Result<TraceSet, TraceDirError> {
    let mut files = Vec::new();
    collect_files(dir, &mut files).map_err(|source| TraceDirError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut set = TraceSet::default();
    for path in files {
        let text = fs::read_to_string(&path).map_err(|source| TraceDirError::Io {
            path: path.clone(),
            source,
        })?;
        let bad = |reason: String| TraceDirError::Bad {
            path: path.clone(),
            reason,
        };
        let trace = Trace::parse(&text).map_err(|e| bad(e.to_string()))?;
        let field = |k: &str| trace.header_value(k).ok_or_else(|| bad(format!("missing header `{k}`")));
        let num = |k: &str| -> Result<u64, TraceDirError> { field(k)?.parse().map_err(|_| bad(format!("bad header `{k}`"))) };
        let key = RunKey {
            dim: num("dim")? as usize,
            problem: field("problem")?.parse().map_err(|_| bad("bad header `problem`".into()))?,
            variant: num("variant_index")? as usize,
            rep: num("rep")? as u32,
        };
        let name = field("variant")?.to_owned();
        if set.names.len() <= key.variant {
            set.names.resize(key.variant + 1, String::new());
        }
        if set.names[key.variant].is_empty() {
            set.names[key.variant] = name;
        } else if set.names[key.variant] != name {
            return Err(bad(format!(
                "variant index {} names both `{}` and `{name}`",
                key.variant, set.names[key.variant]
            )));
        }
        set.eval_budget = set.eval_budget.max(num("eval_budget")?);
        set.config_hash = field("config_hash")?.to_owned();
        set.runs.push((key, trace));
    }
    if set.runs.is_empty() {
        return Err(TraceDirError::Empty(dir.to_owned()));
    }
    set.runs.sort_by_key(|(k, _)| *k);
    Ok(set)
}

impl TraceSet {
    fn keyed(&self) -> Vec<(RunKey, &Trace)> {
        self.runs.iter().map(|(k, t)| (*k, t)).collect()
    }

    pub fn tables(&self, alpha: f64) -> Vec<(String, String)> {
        tables(&self.keyed(), &self.names, alpha, &self.config_hash)
    }

    pub fn trends(&self, stride: u64) -> Vec<(String, String)> {
        trends(&self.keyed(), &self.names, self.eval_budget, stride, &self.config_hash)
    }
}

type Groups<'a> = BTreeMap<usize, BTreeMap<FunctionId, BTreeMap<usize, Vec<&'a Trace>>>>;

fn group<'a>(runs: &[(RunKey, &'a Trace)]) -> Groups<'a> {
    let mut g: Groups = BTreeMap::new();
    for (k, t) in runs {
        g.entry(k.dim)
            .or_default()
            .entry(k.problem)
            .or_default()
            .entry(k.variant)
            .or_default()
            .push(t);
    }
    g
}

fn stat_cols(row: &mut String, values: &[f64]) {
    match aggregate(values) {
        Some(s) => write!(row, ",{:.6e},{:.6e}", s.mean, s.std).expect("string write"),
        None => row.push_str(",,"),
    }
}

/// One summary table for a dimension: mean and standard deviation of the
/// average-of-bests and min-of-bests per variant, and the rank-sum mark of
/// the reference (variant 0) against each other variant.
pub fn summary_csv(
    dim: usize,
    by_problem: &BTreeMap<FunctionId, BTreeMap<usize, Vec<&Trace>>>,
    names: &[String],
    alpha: f64,
    hash: &str,
) -> String {
    let mut out = format!("# config_hash={hash}\n# dim={dim} alpha={alpha} reference={}\nproblem", names[0]);
    for (i, n) in names.iter().enumerate() {
        write!(out, ",{n}_mean,{n}_std,{n}_min_mean,{n}_min_std").expect("string write");
        if i > 0 {
            write!(out, ",{n}_mark").expect("string write");
        }
    }
    out.push('\n');
    for (problem, variants) in by_problem {
        let avg = |v: usize| -> Vec<f64> {
            variants
                .get(&v)
                .map_or(Vec::new(), |ts| ts.iter().map(|t| t.network_fitness()).collect())
        };
        let min = |v: usize| -> Vec<f64> {
            variants
                .get(&v)
                .map_or(Vec::new(), |ts| ts.iter().map(|t| t.network_min()).collect())
        };
        let reference = avg(0);
        let mut row = problem.to_string();
        for v in 0..names.len() {
            let a = avg(v);
            stat_cols(&mut row, &a);
            stat_cols(&mut row, &min(v));
            if v > 0 {
                row.push(',');
                if !a.is_empty() && !reference.is_empty() {
                    row.push(wilcoxon(&reference, &a, alpha).symbol());
                }
            }
        }
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub(super) fn tables(runs: &[(RunKey, &Trace)], names: &[String], alpha: f64, hash: &str) -> Vec<(String, String)> {
    group(runs)
        .iter()
        .map(|(dim, by_problem)| (format!("summary_d{dim}.csv"), summary_csv(*dim, by_problem, names, alpha, hash)))
        .collect()
}

/// Evaluation counts sampled by a trend: every `stride`, ending at
/// `budget`.
fn checkpoints(budget: u64, stride: u64) -> Vec<u64> {
    let mut c: Vec<u64> = (1..=budget / stride).map(|i| i * stride).collect();
    if c.last() != Some(&budget) && budget > 0 {
        c.push(budget);
    }
    c
}

/// Average network fitness against node evaluation count, across
/// `traces`. A node's value at `e` is its best after `e` of its own
/// evaluations, including solutions it adopted by then.
pub fn trend(traces: &[&Trace], budget: u64, stride: u64) -> Vec<(u64, f64)> {
    let points = checkpoints(budget, stride.max(1));
    let mut sums = vec![0.0; points.len()];
    for t in traces {
        let ids: Vec<u32> = t.nodes.iter().map(|n| n.id).collect();
        let mut per = vec![0.0; points.len()];
        for &id in &ids {
            let series = t.node_series(id);
            let Some(first) = series.first() else { continue };
            let mut best = first.1;
            let mut j = 0;
            for (i, &e) in points.iter().enumerate() {
                while j < series.len() && series[j].0 <= e {
                    best = best.min(series[j].1);
                    j += 1;
                }
                per[i] += best.to_real();
            }
        }
        for (s, p) in sums.iter_mut().zip(per) {
            *s += p / ids.len().max(1) as f64;
        }
    }
    let k = traces.len().max(1) as f64;
    points.into_iter().zip(sums).map(|(e, s)| (e, s / k)).collect()
}

pub fn trend_csv(variants: &BTreeMap<usize, Vec<&Trace>>, names: &[String], budget: u64, stride: u64, hash: &str) -> String {
    let series: Vec<(usize, Vec<(u64, f64)>)> = variants.iter().map(|(v, ts)| (*v, trend(ts, budget, stride))).collect();
    let mut out = format!("# config_hash={hash}\nevals");
    for (v, _) in &series {
        write!(out, ",{}", names[*v]).expect("string write");
    }
    out.push('\n');
    for (i, e) in checkpoints(budget, stride.max(1)).into_iter().enumerate() {
        write!(out, "{e}").expect("string write");
        for (_, s) in &series {
            write!(out, ",{:.6e}", s[i].1).expect("string write");
        }
        out.push('\n');
    }
    out
}

pub(super) fn trends(runs: &[(RunKey, &Trace)], names: &[String], budget: u64, stride: u64, hash: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (dim, by_problem) in group(runs) {
        for (problem, variants) in by_problem {
            out.push((
                format!("trend_{problem}_d{dim}.csv"),
                trend_csv(&variants, names, budget, stride, hash),
            ));
        }
    }
    out
}
