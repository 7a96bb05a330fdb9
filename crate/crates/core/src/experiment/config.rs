//! Declarative experiment files (TOML) and their validation.
//!
//! ```toml
//! name = "comm-benefit"
//! problems = ["f3", "f6"]        # default: all 15
//! dims = [5, 15]                 # default: 5, 15, 25
//! repetitions = 16
//! seed = 1
//!
//! [network]
//! nodes = 5
//! topology = { kind = "complete" }
//! comm_period = 0.25
//! q = 0.9
//!
//! [[variants]]                   # first variant is the reference
//! name = "sa"
//! mode = "homogeneous"
//! ```

use std::ops::Range;
use std::path::PathBuf;

use serde::Deserialize;
use toml::Spanned;

use crate::algos::{AlgoParams, AlgorithmId, Mode};
use crate::bench::{FunctionId, MAX_DIM};
use crate::energy::CurrentModel;
use crate::fxp::Fx;
use crate::netsim::{payload_len, ChannelModel, CostModel, RadioModel, TopologyKind, MAX_PAYLOAD};

/// One problem found while reading or validating a config.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct Diagnostic {
    /// 1-based; 0 when the problem has no location (a missing key).
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
pub struct ConfigErrors(pub Vec<Diagnostic>);

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub nodes: usize,
    pub topology: TopologyKind,
    pub comm_period: f64,
    pub q: Fx,
    pub eval_budget: u64,
    pub time_budget: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            nodes: 5,
            topology: TopologyKind::Complete,
            comm_period: 0.25,
            q: Fx::lit(0.9),
            eval_budget: 1000,
            time_budget: 60.0,
        }
    }
}

/// A network configuration compared within the experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub mode: Mode,
    /// Algorithm of every node in homogeneous mode.
    pub algorithm: AlgorithmId,
    pub communicating: bool,
    /// Overrides of the network defaults.
    pub q: Option<Fx>,
    pub comm_period: Option<f64>,
}

impl Variant {
    pub fn new(name: &str, mode: Mode, communicating: bool) -> Self {
        Variant {
            name: name.to_owned(),
            mode,
            algorithm: AlgorithmId::Tsome,
            communicating,
            q: None,
            comm_period: None,
        }
    }

    /// Homogeneous and heterogeneous networks, each with and without
    /// communication.
    pub fn defaults() -> Vec<Variant> {
        vec![
            Variant::new("sa", Mode::Homogeneous, true),
            Variant::new("sa-standalone", Mode::Homogeneous, false),
            Variant::new("ma", Mode::Heterogeneous, true),
            Variant::new("ma-standalone", Mode::Heterogeneous, false),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problems: Vec<FunctionId>,
    pub dims: Vec<usize>,
    pub repetitions: u32,
    pub seed: u64,
    /// Relative paths are resolved against the output root.
    pub output: Option<PathBuf>,
    pub alpha: f64,
    pub trend_stride: u64,
    pub network: NetworkConfig,
    pub variants: Vec<Variant>,
    pub channel: ChannelModel,
    pub radio: RadioModel,
    pub cost: CostModel,
    pub currents: CurrentModel,
    pub params: AlgoParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            problems: FunctionId::all().collect(),
            dims: vec![5, 15, 25],
            repetitions: 16,
            seed: 1,
            output: None,
            alpha: 0.05,
            trend_stride: 10,
            network: NetworkConfig::default(),
            variants: Variant::defaults(),
            channel: ChannelModel::default(),
            radio: RadioModel::default(),
            cost: CostModel::default(),
            currents: CurrentModel::default(),
            params: AlgoParams::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    name: Option<String>,
    problems: Option<Vec<Spanned<String>>>,
    dims: Option<Vec<Spanned<i64>>>,
    repetitions: Option<Spanned<i64>>,
    seed: Option<Spanned<i64>>,
    output: Option<String>,
    alpha: Option<Spanned<f64>>,
    trend_stride: Option<Spanned<i64>>,
    network: Option<RawNetwork>,
    variants: Option<Spanned<Vec<Spanned<RawVariant>>>>,
    channel: Option<Spanned<ChannelModel>>,
    radio: Option<Spanned<RadioModel>>,
    cost: Option<Spanned<CostModel>>,
    currents: Option<Spanned<CurrentModel>>,
    params: Option<Spanned<AlgoParams>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    nodes: Option<Spanned<i64>>,
    topology: Option<Spanned<TopologyKind>>,
    comm_period: Option<Spanned<f64>>,
    q: Option<Spanned<f64>>,
    eval_budget: Option<Spanned<i64>>,
    time_budget: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    name: Spanned<String>,
    mode: Option<Mode>,
    algorithm: Option<AlgorithmId>,
    communicating: Option<bool>,
    q: Option<Spanned<f64>>,
    comm_period: Option<Spanned<f64>>,
}

struct Checker<'a> {
    src: &'a str,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.src[..span.start.min(self.src.len())].matches('\n').count() + 1
    }

    fn at(&mut self, span: Range<usize>, message: impl Into<String>) {
        let line = self.line(span);
        self.out.push(Diagnostic {
            line,
            message: message.into(),
        });
    }

    fn int(&mut self, v: &Spanned<i64>, key: &str, min: i64, max: i64) -> i64 {
        let x = *v.get_ref();
        if x < min || x > max {
            self.at(v.span(), format!("{key} = {x} is out of range [{min}, {max}]"));
            return min;
        }
        x
    }

    fn positive(&mut self, v: &Spanned<f64>, key: &str) -> f64 {
        let x = *v.get_ref();
        if !(x.is_finite() && x > 0.0) {
            self.at(v.span(), format!("{key} = {x} must be positive"));
        }
        x
    }

    fn rate(&mut self, v: &Spanned<f64>, key: &str) -> Fx {
        let x = *v.get_ref();
        if !(0.0..=1.0).contains(&x) {
            self.at(v.span(), format!("{key} = {x} is out of range [0, 1]"));
            return Fx::ZERO;
        }
        Fx::from_real(x).expect("value in [0, 1]")
    }

    fn model<T>(&mut self, v: &Spanned<T>, what: &str, r: Result<(), impl std::fmt::Display>) {
        if let Err(e) = r {
            self.at(v.span(), format!("[{what}] {e}"));
        }
    }
}

impl ExperimentConfig {
    /// Parses and fully validates a config file's text.
    pub fn parse(src: &str) -> Result<Self, ConfigErrors> {
        let raw: Raw = toml::from_str(src).map_err(|e| {
            let line = e.span().map_or(0, |s| src[..s.start.min(src.len())].matches('\n').count() + 1);
            ConfigErrors(vec![Diagnostic {
                line,
                message: e.message().trim().to_owned(),
            }])
        })?;
        let mut c = Checker { src, out: Vec::new() };
        let mut cfg = ExperimentConfig::default();
        if let Some(n) = raw.name {
            cfg.name = n;
        }
        if let Some(ps) = raw.problems {
            cfg.problems.clear();
            for p in ps {
                match p.get_ref().parse::<FunctionId>() {
                    Ok(id) if !cfg.problems.contains(&id) => cfg.problems.push(id),
                    Ok(id) => c.at(p.span(), format!("problem {id} listed twice")),
                    Err(_) => c.at(p.span(), format!("unknown problem id `{}` (expected f1..f15)", p.get_ref())),
                }
            }
        }
        if let Some(ds) = raw.dims {
            cfg.dims.clear();
            for d in ds {
                let n = *d.get_ref();
                if n < 1 || n > MAX_DIM as i64 {
                    let bytes = if n > 0 { payload_len(n as usize) } else { 0 };
                    let why = if n > MAX_DIM as i64 {
                        format!(": a solution packet would carry {bytes} bytes, over the {MAX_PAYLOAD}-byte payload limit")
                    } else {
                        String::new()
                    };
                    c.at(d.span(), format!("dimension {n} is out of range [1, {MAX_DIM}]{why}"));
                } else if cfg.dims.contains(&(n as usize)) {
                    c.at(d.span(), format!("dimension {n} listed twice"));
                } else {
                    cfg.dims.push(n as usize);
                }
            }
        }
        if let Some(r) = &raw.repetitions {
            cfg.repetitions = c.int(r, "repetitions", 1, u32::MAX as i64) as u32;
        }
        if let Some(s) = &raw.seed {
            cfg.seed = c.int(s, "seed", 0, i64::MAX) as u64;
        }
        cfg.output = raw.output.map(PathBuf::from);
        if let Some(a) = &raw.alpha {
            let x = *a.get_ref();
            if !(x > 0.0 && x < 1.0) {
                c.at(a.span(), format!("alpha = {x} must lie in (0, 1)"));
            }
            cfg.alpha = x;
        }
        if let Some(s) = &raw.trend_stride {
            cfg.trend_stride = c.int(s, "trend_stride", 1, i64::MAX) as u64;
        }
        if let Some(n) = raw.network {
            let net = &mut cfg.network;
            if let Some(v) = &n.nodes {
                net.nodes = c.int(v, "network.nodes", 1, u32::MAX as i64) as usize;
            }
            if let Some(t) = &n.topology {
                if let TopologyKind::RandomGeometric { range } = *t.get_ref() {
                    if !(range.is_finite() && range > 0.0) {
                        c.at(t.span(), format!("radio range {range} must be positive"));
                    }
                }
                net.topology = *t.get_ref();
            }
            if let Some(v) = &n.comm_period {
                net.comm_period = c.positive(v, "network.comm_period");
            }
            if let Some(v) = &n.q {
                net.q = c.rate(v, "network.q");
            }
            if let Some(v) = &n.eval_budget {
                net.eval_budget = c.int(v, "network.eval_budget", 1, i64::MAX) as u64;
            }
            if let Some(v) = &n.time_budget {
                net.time_budget = c.positive(v, "network.time_budget");
            }
        }
        if let Some(vs) = raw.variants {
            if vs.get_ref().is_empty() {
                c.at(vs.span(), "at least one variant is required");
            }
            cfg.variants.clear();
            for v in vs.into_inner() {
                let rv = v.get_ref();
                let name = rv.name.get_ref().clone();
                if name.is_empty() || name.contains(|ch: char| ch == ',' || ch == '/' || ch.is_whitespace()) {
                    c.at(
                        rv.name.span(),
                        format!("variant name `{name}` must be non-empty without commas, slashes or spaces"),
                    );
                } else if cfg.variants.iter().any(|o| o.name == name) {
                    c.at(rv.name.span(), format!("variant `{name}` defined twice"));
                }
                let mut var = Variant::new(&name, rv.mode.unwrap_or(Mode::Homogeneous), rv.communicating.unwrap_or(true));
                if let Some(a) = rv.algorithm {
                    var.algorithm = a;
                }
                if let Some(q) = &rv.q {
                    var.q = Some(c.rate(q, "variant q"));
                }
                if let Some(p) = &rv.comm_period {
                    var.comm_period = Some(c.positive(p, "variant comm_period"));
                }
                cfg.variants.push(var);
            }
        }
        if let Some(m) = raw.channel {
            c.model(&m, "channel", m.get_ref().validate());
            cfg.channel = m.into_inner();
        }
        if let Some(m) = raw.radio {
            c.model(&m, "radio", m.get_ref().validate());
            cfg.radio = m.into_inner();
        }
        if let Some(m) = raw.cost {
            c.model(&m, "cost", m.get_ref().validate());
            cfg.cost = m.into_inner();
        }
        if let Some(m) = raw.currents {
            c.model(&m, "currents", m.get_ref().validate());
            cfg.currents = m.into_inner();
        }
        if let Some(m) = raw.params {
            c.model(&m, "params", m.get_ref().validate());
            cfg.params = m.into_inner();
        }
        if cfg.problems.is_empty() && c.out.is_empty() {
            c.out.push(Diagnostic {
                line: 0,
                message: "no problems selected".into(),
            });
        }
        if cfg.dims.is_empty() && c.out.is_empty() {
            c.out.push(Diagnostic {
                line: 0,
                message: "no dimensions selected".into(),
            });
        }
        if c.out.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(c.out))
        }
    }

    /// Validation of a config built in code; same rules as [`parse`].
    ///
    /// [`parse`]: ExperimentConfig::parse
    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let mut out = Vec::new();
        let mut err = |m: String| out.push(Diagnostic { line: 0, message: m });
        if self.problems.is_empty() {
            err("no problems selected".into());
        }
        if self.dims.is_empty() {
            err("no dimensions selected".into());
        }
        for &d in &self.dims {
            if d == 0 || d > MAX_DIM {
                err(format!(
                    "dimension {d} is out of range [1, {MAX_DIM}]: payload limit is {MAX_PAYLOAD} bytes"
                ));
            }
        }
        if self.repetitions == 0 {
            err("repetitions must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            err(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if self.trend_stride == 0 {
            err("trend_stride must be at least 1".into());
        }
        if self.network.nodes == 0 {
            err("network.nodes must be at least 1".into());
        }
        if self.variants.is_empty() {
            err("at least one variant is required".into());
        }
        for v in &self.variants {
            let nc = crate::island::NodeConfig {
                algorithm: v.algorithm,
                q: v.q.unwrap_or(self.network.q),
                comm_period: v.comm_period.unwrap_or(self.network.comm_period),
                eval_budget: self.network.eval_budget,
                time_budget: self.network.time_budget,
                communicating: v.communicating,
            };
            if let Err(e) = nc.validate() {
                err(format!("variant `{}`: {e}", v.name));
            }
        }
        let models: [(&str, Result<(), String>); 5] = [
            ("channel", self.channel.validate().map_err(Into::into)),
            ("radio", self.radio.validate().map_err(Into::into)),
            ("cost", self.cost.validate()),
            ("currents", self.currents.validate().map_err(Into::into)),
            ("params", self.params.validate().map_err(|e| e.to_string())),
        ];
        for (what, r) in models {
            if let Err(e) = r {
                err(format!("[{what}] {e}"));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.problems.len(), 15);
        assert_eq!(c.variants.len(), 4);
    }

    #[test]
    fn errors_point_at_lines() {
        let src = "name = \"x\"\ndims = [5,\n  32]\n[network]\nq = 1.5\n";
        let e = ExperimentConfig::parse(src).unwrap_err().0;
        assert_eq!(e.len(), 2, "{e:?}");
        assert_eq!(e[0].line, 3);
        assert!(e[0].message.contains("payload"), "{}", e[0].message);
        assert_eq!(e[1].line, 5);
        assert!(e[1].message.contains("q = 1.5"));
    }

    #[test]
    fn unknown_problem_and_key() {
        let e = ExperimentConfig::parse("problems = [\"f1\", \"f16\"]\n").unwrap_err().0;
        assert_eq!(e[0].line, 1);
        assert!(e[0].message.contains("f16"));
        let e = ExperimentConfig::parse("\n\nbogus = 1\n").unwrap_err().0;
        assert_eq!(e[0].line, 3);
    }

    #[test]
    fn variants_and_models() {
        let src = r#"
[[variants]]
name = "q09"
q = 0.9

[[variants]]
name = "q01"
q = 0.1
mode = "heterogeneous"

[channel]
loss_prob = 0.2
"#;
        let c = ExperimentConfig::parse(src).unwrap();
        assert_eq!(c.variants.len(), 2);
        assert_eq!(c.variants[1].q, Some(Fx::lit(0.1)));
        assert_eq!(c.variants[1].mode, Mode::Heterogeneous);
        assert_eq!(c.channel.loss_prob, 0.2);
        let e = ExperimentConfig::parse("[channel]\nloss_prob = 2.0\n").unwrap_err().0;
        assert_eq!(e[0].line, 1);
    }
}
