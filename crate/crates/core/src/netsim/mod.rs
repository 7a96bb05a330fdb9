//! Discrete-event simulation of a sensor network running one island per
//! node.
//!
//! Time is an integer number of nanoseconds. Each node has a single
//! processor: an event that finds its node busy is deferred to the moment
//! the node becomes free, which is how optimization and communication are
//! kept from interleaving.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::algos::AlgoParams;
use crate::bench::Problem;
use crate::energy::{nanos, PowerState};
use crate::fxp::{derive_seed, RngState};
use crate::island::{Node, NodeConfig};

mod packet;
mod topology;
mod trace;

pub use packet::{decode, encode, payload_len, PacketError, MAX_PAYLOAD};
pub use topology::{gen_topology, Topology, TopologyError, TopologyKind};
pub use trace::{fmt_time, NetKind, NodeSummary, Record, Trace, TraceParseError};

const STREAM_CHANNEL: u64 = 0xC4A2_2E11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    /// Independent per-delivery loss probability.
    pub loss_prob: f64,
    /// Seconds; transmissions from two neighbours of a receiver starting
    /// closer than this destroy each other. Zero disables collisions.
    pub collision_window: f64,
    /// Delivery delay in seconds.
    pub latency: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            loss_prob: 0.0,
            collision_window: 0.0,
            latency: 0.001,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err("loss_prob must lie in [0, 1]");
        }
        if !(self.collision_window >= 0.0 && self.collision_window.is_finite()) {
            return Err("collision_window must be non-negative");
        }
        if !(self.latency >= 0.0 && self.latency.is_finite()) {
            return Err("latency must be non-negative");
        }
        Ok(())
    }

    /// Delivery delay; at least the collision window so that every
    /// competing transmission is known when a delivery is resolved.
    pub fn delay_ns(&self) -> u64 {
        nanos(self.latency).max(nanos(self.collision_window))
    }
}

/// Radio timing used for energy attribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioModel {
    /// Bits per second.
    pub bitrate: f64,
    /// Seconds of listening per network event.
    pub listen_window: f64,
}

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel {
            bitrate: 250_000.0,
            listen_window: 0.005,
        }
    }
}

impl RadioModel {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.bitrate > 0.0 && self.bitrate.is_finite()) {
            return Err("bitrate must be positive");
        }
        if !(self.listen_window >= 0.0 && self.listen_window.is_finite()) {
            return Err("listen_window must be non-negative");
        }
        Ok(())
    }

    pub fn tx_ns(&self, bytes: usize) -> u64 {
        nanos(bytes as f64 * 8.0 / self.bitrate)
    }
}

/// Processor time per fitness evaluation, `c0 + c1 * n` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub c0: f64,
    pub c1: f64,
    /// Per-function `[c0, c1]`, keyed by id (`"f3"`).
    pub overrides: BTreeMap<String, [f64; 2]>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            c0: 0.030,
            c1: 0.001,
            overrides: BTreeMap::new(),
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), String> {
        let ok = |c0: f64, c1: f64| c0 >= 0.0 && c1 >= 0.0 && c0.is_finite() && c1.is_finite() && c0 + c1 > 0.0;
        if !ok(self.c0, self.c1) {
            return Err("cost coefficients must be non-negative and not both zero".into());
        }
        for (k, [c0, c1]) in &self.overrides {
            if k.parse::<crate::bench::FunctionId>().is_err() {
                return Err(format!("cost override for unknown problem `{k}`"));
            }
            if !ok(*c0, *c1) {
                return Err(format!("cost override for `{k}` must be non-negative and not both zero"));
            }
        }
        Ok(())
    }

    pub fn eval_ns(&self, p: &Problem) -> u64 {
        let [c0, c1] = self.overrides.get(&p.id().to_string()).copied().unwrap_or([self.c0, self.c1]);
        nanos(c0 + c1 * p.dim() as f64).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub problem: Problem,
    pub params: AlgoParams,
    /// Run seed; every random stream of the run derives from it.
    pub seed: u64,
    pub channel: ChannelModel,
    pub radio: RadioModel,
    pub cost: CostModel,
    /// Node `i` gets id `i` and boots at time zero.
    pub nodes: Vec<NodeConfig>,
    pub topology: Topology,
    /// Extra `key=value` lines for the trace header.
    pub header: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("topology has {topology} nodes but {configs} node configurations were given")]
    NodeCount { topology: usize, configs: usize },
    #[error("node {0}: {1}")]
    Node(u32, &'static str),
    #[error("{0}")]
    Model(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error("join time {0} s is in the simulated past")]
    JoinInPast(String),
}

/// Same-time ordering: joins, then deliveries, then network, then
/// optimization events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Priority {
    Join = 0,
    Deliver = 1,
    Net = 2,
    Opt = 3,
}

#[derive(Debug)]
enum Action {
    Join { cfg: NodeConfig, neighbors: Vec<u32> },
    Deliver { src: u32, sent: u64, payload: Vec<u8> },
    Net,
    Opt,
}

#[derive(Debug)]
struct Event {
    time: u64,
    prio: Priority,
    node: u32,
    seq: u64,
    action: Action,
}

impl Event {
    fn key(&self) -> (u64, Priority, u32, u64) {
        (self.time, self.prio, self.node, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.key() == o.key()
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Event {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key().cmp(&o.key())
    }
}

/// Delivery attempts of one broadcast: `(neighbour, delivery time)` for
/// every neighbour whose copy survives the loss draw.
pub fn broadcast(topology: &Topology, channel: &ChannelModel, src: u32, clock: u64, rng: &mut RngState) -> Vec<(u32, u64)> {
    let at = clock + channel.delay_ns();
    topology
        .neighbors(src)
        .iter()
        .filter(|_| channel.loss_prob <= 0.0 || rng.real() >= channel.loss_prob)
        .map(|&dst| (dst, at))
        .collect()
}

pub struct Simulation {
    problem: Problem,
    params: AlgoParams,
    seed: u64,
    channel: ChannelModel,
    radio: RadioModel,
    eval_ns: u64,
    topology: Topology,
    nodes: Vec<Option<Node>>,
    queue: BinaryHeap<Reverse<Event>>,
    seq: u64,
    clock: u64,
    chan_rng: RngState,
    /// Recent transmissions `(sender, start)`, for collision checks.
    airtime: Vec<(u32, u64)>,
    trace: Trace,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        let SimConfig {
            problem,
            params,
            seed,
            channel,
            radio,
            cost,
            nodes,
            topology,
            header,
        } = cfg;
        if topology.len() != nodes.len() || topology.nodes().any(|u| u as usize >= nodes.len()) {
            return Err(SimError::NodeCount {
                topology: topology.len(),
                configs: nodes.len(),
            });
        }
        channel.validate().map_err(|e| SimError::Model(e.into()))?;
        radio.validate().map_err(|e| SimError::Model(e.into()))?;
        cost.validate().map_err(SimError::Model)?;
        params.validate().map_err(|e| SimError::Model(e.to_string()))?;
        payload_len(problem.dim())
            .le(&MAX_PAYLOAD)
            .then_some(())
            .ok_or(PacketError::PayloadTooLarge(payload_len(problem.dim())))?;
        let mut sim = Simulation {
            eval_ns: cost.eval_ns(&problem),
            chan_rng: RngState::new(derive_seed(&[seed, STREAM_CHANNEL])),
            problem,
            params,
            seed,
            channel,
            radio,
            topology,
            nodes: Vec::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            clock: 0,
            airtime: Vec::new(),
            trace: Trace {
                header,
                ..Trace::default()
            },
        };
        for (id, nc) in nodes.into_iter().enumerate() {
            nc.validate().map_err(|e| SimError::Node(id as u32, e))?;
            sim.boot(id as u32, nc, 0);
        }
        Ok(sim)
    }

    fn push(&mut self, time: u64, node: u32, action: Action) {
        let prio = match action {
            Action::Join { .. } => Priority::Join,
            Action::Deliver { .. } => Priority::Deliver,
            Action::Net => Priority::Net,
            Action::Opt => Priority::Opt,
        };
        self.seq += 1;
        self.queue.push(Reverse(Event {
            time,
            prio,
            node,
            seq: self.seq,
            action,
        }));
    }

    fn boot(&mut self, id: u32, cfg: NodeConfig, time: u64) {
        let node = Node::new(id, cfg, &self.problem, &self.params, self.seed, time);
        if node.cfg.communicating {
            self.push(time + node.cfg.period_ns(), id, Action::Net);
        }
        self.push(time, id, Action::Opt);
        if self.nodes.len() <= id as usize {
            self.nodes.resize_with(id as usize + 1, || None);
        }
        self.nodes[id as usize] = Some(node);
    }

    /// Schedules a node to boot at `time` seconds, linked to `neighbors`.
    pub fn join_node(&mut self, time: f64, id: u32, cfg: NodeConfig, neighbors: Vec<u32>) -> Result<(), SimError> {
        let t = nanos(time);
        if t < self.clock {
            return Err(SimError::JoinInPast(time.to_string()));
        }
        cfg.validate().map_err(|e| SimError::Node(id, e))?;
        let pending = self
            .queue
            .iter()
            .any(|Reverse(e)| matches!(e.action, Action::Join { .. }) && e.node == id);
        if self.topology.contains(id) || pending {
            return Err(TopologyError::Duplicate(id).into());
        }
        self.push(t, id, Action::Join { cfg, neighbors });
        Ok(())
    }

    fn node(&mut self, id: u32) -> Option<&mut Node> {
        self.nodes.get_mut(id as usize).and_then(Option::as_mut)
    }

    /// Runs until no events remain.
    pub fn run(mut self) -> Result<Trace, SimError> {
        while let Some(Reverse(ev)) = self.queue.pop() {
            debug_assert!(ev.time >= self.clock, "clock went backwards");
            self.clock = ev.time;
            let (t, id) = (ev.time, ev.node);
            match ev.action {
                Action::Join { cfg, neighbors } => {
                    self.topology.add_node(id)?;
                    for v in neighbors {
                        self.topology.link(id, v)?;
                    }
                    self.boot(id, cfg, t);
                }
                Action::Opt => self.on_opt(t, id),
                Action::Net => self.on_net(t, id)?,
                Action::Deliver { src, sent, payload } => self.on_deliver(t, id, src, sent, payload),
            }
        }
        let mut nodes: Vec<Node> = self.nodes.into_iter().flatten().collect();
        for n in &mut nodes {
            n.finish();
        }
        self.trace.nodes = nodes
            .into_iter()
            .map(|n| NodeSummary {
                id: n.id,
                algorithm: n.cfg.algorithm,
                evals: n.evals,
                best: n.local_best,
                boot: n.boot,
                ledger: n.ledger,
            })
            .collect();
        Ok(self.trace)
    }

    fn on_opt(&mut self, t: u64, id: u32) {
        let cost = self.eval_ns;
        let problem = self.problem.clone();
        let node = self.node(id).expect("scheduled node exists");
        if node.flag {
            return;
        }
        if t < node.busy_until {
            let at = node.busy_until;
            self.push(at, id, Action::Opt);
            return;
        }
        let imps = node.opt_event(&problem, t, cost);
        let (flag, next) = (node.flag, node.busy_until);
        for imp in imps {
            self.trace.records.push(Record::Imp {
                time: imp.time,
                node: id,
                evals: imp.evals,
                fitness: imp.solution.f(),
                x: imp.solution.x,
            });
        }
        if !flag {
            self.push(next, id, Action::Opt);
        }
    }

    fn on_net(&mut self, t: u64, id: u32) -> Result<(), SimError> {
        let radio = self.radio;
        let node = self.node(id).expect("scheduled node exists");
        if node.flag {
            return Ok(());
        }
        if t < node.busy_until {
            let at = node.busy_until;
            self.push(at, id, Action::Net);
            return Ok(());
        }
        let (accepted, out) = node.net_event(t);
        let evals = node.evals;
        if node.flag {
            return Ok(());
        }
        let rx = nanos(radio.listen_window);
        let tx = match &out {
            Some(s) => radio.tx_ns(encode(s)?.len()),
            None => 0,
        };
        node.ledger.record_ns(PowerState::Tx, tx);
        node.ledger.record_ns(PowerState::Rx, rx);
        node.busy_until = t + tx + rx;
        let period = node.cfg.period_ns();
        let next = node.boot + ((t - node.boot) / period + 1) * period;
        for (src, s) in accepted {
            self.trace.records.push(Record::Net {
                time: t,
                src,
                dst: id,
                kind: NetKind::Accept,
            });
            self.trace.records.push(Record::Imp {
                time: t,
                node: id,
                evals,
                fitness: s.f(),
                x: s.x,
            });
        }
        if let Some(s) = out {
            let payload = encode(&s)?;
            for &dst in self.topology.neighbors(id) {
                self.trace.records.push(Record::Net {
                    time: t,
                    src: id,
                    dst,
                    kind: NetKind::Send,
                });
            }
            for (dst, at) in broadcast(&self.topology, &self.channel, id, t, &mut self.chan_rng) {
                self.push(
                    at,
                    dst,
                    Action::Deliver {
                        src: id,
                        sent: t,
                        payload: payload.clone(),
                    },
                );
            }
            if self.channel.collision_window > 0.0 {
                let horizon = 2 * nanos(self.channel.collision_window);
                self.airtime.retain(|&(_, s)| s + horizon >= t);
                self.airtime.push((id, t));
            }
        }
        self.push(next, id, Action::Net);
        Ok(())
    }

    fn collided(&self, dst: u32, src: u32, sent: u64) -> bool {
        let window = nanos(self.channel.collision_window);
        if window == 0 {
            return false;
        }
        let nbrs = self.topology.neighbors(dst);
        self.airtime
            .iter()
            .any(|&(s, start)| s != src && start.abs_diff(sent) < window && nbrs.binary_search(&s).is_ok())
    }

    fn on_deliver(&mut self, t: u64, dst: u32, src: u32, sent: u64, payload: Vec<u8>) {
        if self.collided(dst, src, sent) {
            return;
        }
        let n = self.problem.dim();
        let problem = self.problem.clone();
        let Some(node) = self.node(dst) else { return };
        if node.flag {
            return;
        }
        let Ok(sol) = decode(&payload, n) else { return };
        if !problem.in_bounds(&sol.x) {
            return;
        }
        node.inbox.push_back((src, sol));
        self.trace.records.push(Record::Net {
            time: t,
            src,
            dst,
            kind: NetKind::Recv,
        });
    }
}

pub fn run(cfg: SimConfig) -> Result<Trace, SimError> {
    Simulation::new(cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algos::AlgorithmId;
    use crate::bench::FunctionId;

    fn config(n_nodes: usize, communicating: bool) -> SimConfig {
        let mut rng = RngState::new(1);
        SimConfig {
            problem: Problem::new(FunctionId::new(3).unwrap(), 5).unwrap(),
            params: AlgoParams::default(),
            seed: 99,
            channel: ChannelModel::default(),
            radio: RadioModel::default(),
            cost: CostModel::default(),
            nodes: (0..n_nodes)
                .map(|_| NodeConfig {
                    communicating,
                    ..NodeConfig::new(AlgorithmId::Tsome)
                })
                .collect(),
            topology: gen_topology(TopologyKind::Complete, n_nodes, &mut rng).unwrap(),
            header: Vec::new(),
        }
    }

    #[test]
    fn standalone_has_no_traffic() {
        let t = run(config(3, false)).unwrap();
        assert_eq!(t.count_net(NetKind::Recv), 0);
        assert_eq!(t.count_net(NetKind::Send), 0);
        assert!(t.nodes.iter().all(|n| n.evals == 1000));
    }

    #[test]
    fn deterministic() {
        let a = run(config(4, true)).unwrap();
        let b = run(config(4, true)).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert!(a.count_net(NetKind::Recv) > 0);
    }

    #[test]
    fn loss_rate_per_neighbour() {
        let topo = Topology::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let ch = ChannelModel {
            loss_prob: 0.3,
            ..ChannelModel::default()
        };
        let mut rng = RngState::new(5);
        let mut hits = [0usize; 3];
        let n = 10_000;
        for _ in 0..n {
            for (d, at) in broadcast(&topo, &ch, 0, 0, &mut rng) {
                assert_eq!(at, 1_000_000);
                hits[d as usize] += 1;
            }
        }
        for h in &hits[1..] {
            assert!((*h as f64 / n as f64 - 0.7).abs() <= 0.01, "{hits:?}");
        }
        let all = ChannelModel { loss_prob: 1.0, ..ch };
        assert!(broadcast(&topo, &all, 0, 0, &mut rng).is_empty());
        let none = ChannelModel::default();
        assert_eq!(broadcast(&topo, &none, 0, 0, &mut rng).len(), 2);
    }

    #[test]
    fn cost_model_defaults() {
        let p = Problem::new(FunctionId::new(1).unwrap(), 15).unwrap();
        let mut c = CostModel::default();
        assert_eq!(c.eval_ns(&p), 45_000_000);
        c.overrides.insert("f1".into(), [0.01, 0.0]);
        assert_eq!(c.eval_ns(&p), 10_000_000);
    }

    #[test]
    fn tx_time() {
        assert_eq!(RadioModel::default().tx_ns(64), 2_048_000);
    }
}
