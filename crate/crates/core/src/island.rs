//! One island: an optimizer and a network process sharing the node-local
//! best. The simulator serialises all events of a node, so each method
//! here runs atomically.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::algos::{AlgoParams, AlgorithmId, Evaluator, OptimizerState};
use crate::bench::{Problem, Solution};
use crate::energy::{nanos, EnergyLedger, PowerState};
use crate::fxp::{derive_seed, Fx, RngState};

/// Stream tags for per-node random streams.
pub(crate) const STREAM_OPT: u64 = 1;
pub(crate) const STREAM_NET: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub algorithm: AlgorithmId,
    /// Imitation rate.
    #[serde(default = "default_q")]
    pub q: Fx,
    /// Seconds between network events.
    #[serde(default = "default_period")]
    pub comm_period: f64,
    #[serde(default = "default_eval_budget")]
    pub eval_budget: u64,
    /// Seconds after boot.
    #[serde(default = "default_time_budget")]
    pub time_budget: f64,
    #[serde(default = "default_true")]
    pub communicating: bool,
}

fn default_q() -> Fx {
    Fx::lit(0.9)
}
fn default_period() -> f64 {
    0.25
}
fn default_eval_budget() -> u64 {
    1000
}
fn default_time_budget() -> f64 {
    60.0
}
fn default_true() -> bool {
    true
}

impl NodeConfig {
    pub fn new(algorithm: AlgorithmId) -> Self {
        NodeConfig {
            algorithm,
            q: default_q(),
            comm_period: default_period(),
            eval_budget: default_eval_budget(),
            time_budget: default_time_budget(),
            communicating: true,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.q < Fx::ZERO || self.q > Fx::ONE {
            return Err("imitation rate q must lie in [0, 1]");
        }
        if !(self.comm_period.is_finite() && self.comm_period > 0.0) {
            return Err("comm_period must be positive");
        }
        if self.eval_budget == 0 {
            return Err("eval_budget must be positive");
        }
        if !(self.time_budget.is_finite() && self.time_budget > 0.0) {
            return Err("time_budget must be positive");
        }
        Ok(())
    }

    pub fn period_ns(&self) -> u64 {
        nanos(self.comm_period).max(1)
    }

    pub fn time_budget_ns(&self) -> u64 {
        nanos(self.time_budget)
    }
}

/// A change of the node-local best made by the optimizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Improvement {
    pub time: u64,
    /// Node evaluation count after the improving evaluation.
    pub evals: u64,
    pub solution: Solution,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: u32,
    pub cfg: NodeConfig,
    pub opt: OptimizerState,
    pub local_best: Solution,
    pub evals: u64,
    pub flag: bool,
    pub inbox: VecDeque<(u32, Solution)>,
    pub ledger: EnergyLedger,
    pub boot: u64,
    /// The node's processor is occupied until this time.
    pub busy_until: u64,
    rng_opt: RngState,
    rng_net: RngState,
}

impl Node {
    /// Boots a node at `boot` (ns). Random streams derive from the run
    /// seed and the node id only.
    pub fn new(id: u32, cfg: NodeConfig, p: &Problem, params: &AlgoParams, run_seed: u64, boot: u64) -> Self {
        let mut rng_opt = RngState::new(derive_seed(&[run_seed, id as u64, STREAM_OPT]));
        let rng_net = RngState::new(derive_seed(&[run_seed, id as u64, STREAM_NET]));
        let opt = OptimizerState::new(cfg.algorithm, p, params, cfg.eval_budget, &mut rng_opt);
        Node {
            id,
            cfg,
            opt,
            local_best: Solution::new(Vec::new()),
            evals: 0,
            flag: false,
            inbox: VecDeque::new(),
            ledger: EnergyLedger::default(),
            boot,
            busy_until: boot,
            rng_opt,
            rng_net,
        }
    }

    pub fn deadline(&self) -> u64 {
        self.boot + self.cfg.time_budget_ns()
    }

    fn update_flag(&mut self, now: u64) {
        if self.evals >= self.cfg.eval_budget || now >= self.deadline() {
            self.flag = true;
        }
    }

    /// One optimizer iteration starting at `now`, each evaluation costing
    /// `cost` ns of processor time. Returns the improvements it made.
    pub fn opt_event(&mut self, p: &Problem, now: u64, cost: u64) -> Vec<Improvement> {
        debug_assert!(!self.flag);
        self.update_flag(now);
        if self.flag {
            return Vec::new();
        }
        let cap = self.cfg.eval_budget - self.evals;
        let mut ev = Evaluator::new(p, &mut self.local_best, cap);
        let used = self.opt.step(&mut ev, &mut self.rng_opt);
        let base = self.evals;
        let imps = ev
            .into_improvements()
            .into_iter()
            .map(|i| Improvement {
                time: now + i.offset * cost,
                evals: base + i.offset,
                solution: i.solution,
            })
            .collect();
        self.evals += used;
        self.ledger.record_ns(PowerState::Cpu, used * cost);
        self.busy_until = now + used * cost;
        self.update_flag(self.busy_until);
        imps
    }

    /// The imitation rule: adopt a strictly better solution with
    /// probability `q`.
    pub fn consider_incoming(&mut self, incoming: &Solution) -> bool {
        if incoming.f() >= self.local_best.f() || !self.rng_net.chance(self.cfg.q) {
            return false;
        }
        self.local_best = incoming.clone();
        self.opt.adopt(incoming);
        true
    }

    /// Drains the inbox through the imitation rule and returns the
    /// accepted `(sender, solution)` pairs plus the solution to broadcast.
    pub fn net_event(&mut self, now: u64) -> (Vec<(u32, Solution)>, Option<Solution>) {
        debug_assert!(self.cfg.communicating);
        self.update_flag(now);
        if self.flag {
            self.inbox.clear();
            return (Vec::new(), None);
        }
        let mut accepted = Vec::new();
        while let Some((src, s)) = self.inbox.pop_front() {
            if self.consider_incoming(&s) {
                accepted.push((src, s));
            }
        }
        let out = self.local_best.is_evaluated().then(|| self.local_best.clone());
        (accepted, out)
    }

    /// Closes the ledger: time not spent in cpu, tx or rx over the node's
    /// lifetime is low-power mode.
    pub fn finish(&mut self) {
        let end = self.deadline().max(self.busy_until);
        let active = self.ledger.cpu + self.ledger.tx + self.ledger.rx;
        self.ledger.lpm = (end - self.boot).saturating_sub(active);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::FunctionId;

    fn node(alg: AlgorithmId, q: f64, budget: u64) -> (Node, Problem) {
        let p = Problem::new(FunctionId::new(1).unwrap(), 5).unwrap();
        let cfg = NodeConfig {
            q: Fx::lit(q),
            eval_budget: budget,
            ..NodeConfig::new(alg)
        };
        (Node::new(0, cfg, &p, &AlgoParams::default(), 42, 0), p)
    }

    #[test]
    fn rs_counts_and_stops_at_budget() {
        let (mut n, p) = node(AlgorithmId::Rs, 0.9, 10);
        let mut t = 0;
        let mut prev = Fx::MAX;
        for _ in 0..10 {
            assert!(!n.flag);
            for imp in n.opt_event(&p, t, 1000) {
                assert!(imp.solution.f() < prev);
                prev = imp.solution.f();
            }
            t = n.busy_until;
        }
        assert_eq!(n.evals, 10);
        assert!(n.flag);
        assert_eq!(n.ledger.cpu, 10_000);
    }

    #[test]
    fn worse_incoming_never_accepted() {
        let (mut n, p) = node(AlgorithmId::Tsome, 1.0, 100);
        n.opt_event(&p, 0, 1);
        let worse = Solution::evaluated(vec![Fx::TWO; 5], Fx::MAX);
        assert!((0..100).all(|_| !n.consider_incoming(&worse)));
    }

    #[test]
    fn better_incoming_with_q_one_is_adopted() {
        let (mut n, p) = node(AlgorithmId::Nusa, 1.0, 100);
        n.opt_event(&p, 0, 1);
        let better = Solution::evaluated(vec![Fx::ZERO; 5], Fx::ZERO);
        assert!(n.consider_incoming(&better));
        assert_eq!(n.local_best, better);
        assert_eq!(n.opt.slots()[0], &better);
    }

    #[test]
    fn acceptance_frequency_matches_q() {
        let (mut n, p) = node(AlgorithmId::Rs, 0.9, 100);
        n.opt_event(&p, 0, 1);
        let start = n.local_best.clone();
        let better = Solution::evaluated(vec![Fx::ZERO; 5], Fx::ZERO);
        let trials = 10_000;
        let mut hits = 0;
        for _ in 0..trials {
            n.local_best = start.clone();
            hits += n.consider_incoming(&better) as usize;
        }
        assert!((hits as f64 / trials as f64 - 0.9).abs() <= 0.01, "{hits}");
    }

    #[test]
    fn time_budget_sets_flag() {
        let (mut n, p) = node(AlgorithmId::Rs, 0.9, 1000);
        n.opt_event(&p, n.deadline(), 1);
        assert!(n.flag);
        assert_eq!(n.evals, 0);
    }

    #[test]
    fn net_event_sends_even_with_empty_inbox() {
        let (mut n, p) = node(AlgorithmId::Rs, 0.9, 1000);
        n.opt_event(&p, 0, 1);
        let (acc, out) = n.net_event(10);
        assert!(acc.is_empty());
        assert_eq!(out.as_ref(), Some(&n.local_best));
        n.flag = true;
        assert_eq!(n.net_event(20).1, None);
    }
}
