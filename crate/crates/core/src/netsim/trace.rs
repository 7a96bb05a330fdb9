//! Line-oriented run traces.
//!
//! ```text
//! # key=value                                  header
//! IMP,<time>,<node>,<evals>,<fitness>,<x...>   node-local best changed
//! NET,<time>,<src>,<dst>,SEND|RECV|ACCEPT      packet event
//! BEST,<node>,<algorithm>,<evals>,<fitness>,<x...>   final state
//! ```
//!
//! Times are seconds with nanosecond digits; values use six fractional
//! digits, which round-trip every Q16.16 number.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::algos::AlgorithmId;
use crate::bench::Solution;
use crate::energy::{EnergyLedger, NANOS_PER_SEC};
use crate::fxp::Fx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetKind {
    Send,
    Recv,
    Accept,
}

impl NetKind {
    fn as_str(self) -> &'static str {
        match self {
            NetKind::Send => "SEND",
            NetKind::Recv => "RECV",
            NetKind::Accept => "ACCEPT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Imp {
        time: u64,
        node: u32,
        evals: u64,
        fitness: Fx,
        x: Vec<Fx>,
    },
    Net {
        time: u64,
        src: u32,
        dst: u32,
        kind: NetKind,
    },
}

impl Record {
    pub fn time(&self) -> u64 {
        match self {
            Record::Imp { time, .. } | Record::Net { time, .. } => *time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSummary {
    pub id: u32,
    pub algorithm: AlgorithmId,
    pub evals: u64,
    pub best: Solution,
    pub boot: u64,
    pub ledger: EnergyLedger,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub header: Vec<(String, String)>,
    pub records: Vec<Record>,
    pub nodes: Vec<NodeSummary>,
}

pub fn fmt_time(ns: u64) -> String {
    format!("{}.{:09}", ns / NANOS_PER_SEC, ns % NANOS_PER_SEC)
}

fn parse_time(s: &str) -> Option<u64> {
    let (whole, frac) = s.split_once('.').unwrap_or((s, "0"));
    if frac.len() > 9 {
        return None;
    }
    let frac: u64 = format!("{frac:0<9}").parse().ok()?;
    Some(whole.parse::<u64>().ok()? * NANOS_PER_SEC + frac)
}

fn join_fx(out: &mut String, xs: &[Fx]) {
    for v in xs {
        write!(out, ",{v}").expect("string write");
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Record::Imp {
                time,
                node,
                evals,
                fitness,
                x,
            } => {
                let mut s = format!("IMP,{},{node},{evals},{fitness}", fmt_time(*time));
                join_fx(&mut s, x);
                f.write_str(&s)
            }
            Record::Net { time, src, dst, kind } => {
                write!(f, "NET,{},{src},{dst},{}", fmt_time(*time), kind.as_str())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace line {line}: {reason}")]
pub struct TraceParseError {
    pub line: usize,
    pub reason: String,
}

impl Trace {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            writeln!(out, "# {k}={v}").expect("string write");
        }
        for r in &self.records {
            writeln!(out, "{r}").expect("string write");
        }
        for n in &self.nodes {
            let mut line = format!("BEST,{},{},{},{}", n.id, n.algorithm, n.evals, n.best.f());
            join_fx(&mut line, &n.best.x);
            writeln!(out, "{line}").expect("string write");
        }
        out
    }

    /// Average of the final node-local bests.
    pub fn network_fitness(&self) -> f64 {
        let sum: f64 = self.nodes.iter().map(|n| n.best.f().to_real()).sum();
        sum / self.nodes.len().max(1) as f64
    }

    /// Minimum of the final node-local bests.
    pub fn network_min(&self) -> f64 {
        self.nodes.iter().map(|n| n.best.f().to_real()).fold(f64::INFINITY, f64::min)
    }

    pub fn imps(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| matches!(r, Record::Imp { .. }))
    }

    pub fn count_net(&self, kind: NetKind) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r, Record::Net { kind: k, .. } if *k == kind))
            .count()
    }

    /// Node-local best over the node's evaluation count: one
    /// `(evals, fitness)` point per change, in trace order.
    pub fn node_series(&self, node: u32) -> Vec<(u64, Fx)> {
        self.records
            .iter()
            .filter_map(|r| match r {
                Record::Imp {
                    node: n, evals, fitness, ..
                } if *n == node => Some((*evals, *fitness)),
                _ => None,
            })
            .collect()
    }

    /// Parses [`Trace::to_text`] output. Energy ledgers and boot times are
    /// not part of the text and come back empty.
    pub fn parse(text: &str) -> Result<Trace, TraceParseError> {
        let mut t = Trace::default();
        for (i, line) in text.lines().enumerate() {
            let err = |reason: &str| TraceParseError {
                line: i + 1,
                reason: reason.to_owned(),
            };
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let (k, v) = h.trim().split_once('=').ok_or_else(|| err("header without `=`"))?;
                t.header.push((k.to_owned(), v.to_owned()));
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let num = |j: usize| -> Result<u64, TraceParseError> {
                fields.get(j).and_then(|s| s.parse().ok()).ok_or_else(|| err("bad integer field"))
            };
            let fx = |s: &str| Fx::from_str(s).map_err(|_| err("bad value"));
            match fields[0] {
                "IMP" if fields.len() >= 5 => t.records.push(Record::Imp {
                    time: parse_time(fields[1]).ok_or_else(|| err("bad time"))?,
                    node: num(2)? as u32,
                    evals: num(3)?,
                    fitness: fx(fields[4])?,
                    x: fields[5..].iter().map(|s| fx(s)).collect::<Result<_, _>>()?,
                }),
                "NET" if fields.len() == 5 => t.records.push(Record::Net {
                    time: parse_time(fields[1]).ok_or_else(|| err("bad time"))?,
                    src: num(2)? as u32,
                    dst: num(3)? as u32,
                    kind: match fields[4] {
                        "SEND" => NetKind::Send,
                        "RECV" => NetKind::Recv,
                        "ACCEPT" => NetKind::Accept,
                        _ => return Err(err("unknown NET kind")),
                    },
                }),
                "BEST" if fields.len() >= 5 => t.nodes.push(NodeSummary {
                    id: num(1)? as u32,
                    algorithm: fields[2].parse().map_err(|_| err("unknown algorithm"))?,
                    evals: num(3)?,
                    best: Solution::evaluated(fields[5..].iter().map(|s| fx(s)).collect::<Result<_, _>>()?, fx(fields[4])?),
                    boot: 0,
                    ledger: EnergyLedger::default(),
                }),
                _ => return Err(err("unrecognised record")),
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_format_round_trips() {
        for ns in [0, 1, 999_999_999, 1_000_000_000, 60_123_456_789] {
            assert_eq!(parse_time(&fmt_time(ns)), Some(ns));
        }
        assert_eq!(parse_time("1.5"), Some(1_500_000_000));
    }

    #[test]
    fn text_round_trips() {
        let t = Trace {
            header: vec![("seed".into(), "7".into())],
            records: vec![
                Record::Imp {
                    time: 30_000_000,
                    node: 1,
                    evals: 1,
                    fitness: Fx::lit(3.25),
                    x: vec![Fx::ONE, Fx::lit(-1.5)],
                },
                Record::Net {
                    time: 250_000_000,
                    src: 1,
                    dst: 0,
                    kind: NetKind::Send,
                },
            ],
            nodes: vec![NodeSummary {
                id: 1,
                algorithm: AlgorithmId::Tsome,
                evals: 1000,
                best: Solution::evaluated(vec![Fx::ULP, Fx::MIN], Fx::MAX),
                boot: 0,
                ledger: EnergyLedger::default(),
            }],
        };
        let text = t.to_text();
        assert!(text.contains("IMP,0.030000000,1,1,3.250000,1.000000,-1.500000\n"));
        assert!(text.contains("NET,0.250000000,1,0,SEND\n"));
        assert_eq!(Trace::parse(&text).unwrap(), t);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = Trace::parse("# a=b\nIMP,x,1,1,0\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
