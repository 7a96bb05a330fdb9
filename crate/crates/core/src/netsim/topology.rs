use serde::{Deserialize, Serialize};

use crate::fxp::RngState;

/// Attempts before a geometric placement that never connects is reported.
const MAX_PLACEMENTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyKind {
    /// Uniform placement in the unit square, links within `range`.
    RandomGeometric {
        range: f64,
    },
    Complete,
    Ring,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("a topology needs at least one node")]
    Empty,
    #[error("no connected placement with radio range {0} after {MAX_PLACEMENTS} attempts")]
    Disconnected(String),
    #[error("node {0} is not in the topology")]
    UnknownNode(u32),
    #[error("node {0} already exists")]
    Duplicate(u32),
}

/// Symmetric adjacency without self-loops. Neighbour lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    adj: Vec<Option<Vec<u32>>>,
}

impl Topology {
    pub fn empty() -> Self {
        Topology::default()
    }

    /// Graph over nodes `0..n` from an edge list.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, TopologyError> {
        let mut t = Topology {
            adj: vec![Some(Vec::new()); n],
        };
        for &(a, b) in edges {
            t.link(a, b)?;
        }
        Ok(t)
    }

    pub fn contains(&self, id: u32) -> bool {
        matches!(self.adj.get(id as usize), Some(Some(_)))
    }

    pub fn nodes(&self) -> impl Iterator<Item = u32> + '_ {
        self.adj.iter().enumerate().filter(|(_, a)| a.is_some()).map(|(i, _)| i as u32)
    }

    pub fn len(&self) -> usize {
        self.nodes().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, id: u32) -> &[u32] {
        self.adj.get(id as usize).and_then(|a| a.as_deref()).unwrap_or(&[])
    }

    pub fn add_node(&mut self, id: u32) -> Result<(), TopologyError> {
        if self.contains(id) {
            return Err(TopologyError::Duplicate(id));
        }
        if self.adj.len() <= id as usize {
            self.adj.resize(id as usize + 1, None);
        }
        self.adj[id as usize] = Some(Vec::new());
        Ok(())
    }

    /// Adds the undirected edge `a - b`. Self-loops are ignored.
    pub fn link(&mut self, a: u32, b: u32) -> Result<(), TopologyError> {
        for id in [a, b] {
            if !self.contains(id) {
                return Err(TopologyError::UnknownNode(id));
            }
        }
        if a == b {
            return Ok(());
        }
        for (u, v) in [(a, b), (b, a)] {
            let list = self.adj[u as usize].as_mut().expect("checked above");
            if let Err(pos) = list.binary_search(&v) {
                list.insert(pos, v);
            }
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.nodes().next() else {
            return true;
        };
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![start];
        seen[start as usize] = true;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
        self.nodes().all(|u| seen[u as usize])
    }
}

pub fn gen_topology(kind: TopologyKind, n_nodes: usize, rng: &mut RngState) -> Result<Topology, TopologyError> {
    if n_nodes == 0 {
        return Err(TopologyError::Empty);
    }
    let n = n_nodes as u32;
    match kind {
        TopologyKind::Complete => {
            let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            Topology::from_edges(n_nodes, &edges)
        }
        TopologyKind::Ring => {
            let edges: Vec<_> = (0..n).map(|a| (a, (a + 1) % n)).collect();
            Topology::from_edges(n_nodes, &edges)
        }
        TopologyKind::RandomGeometric { range } => {
            for _ in 0..MAX_PLACEMENTS {
                let pos: Vec<(f64, f64)> = (0..n_nodes).map(|_| (rng.real(), rng.real())).collect();
                let mut edges = Vec::new();
                for a in 0..n_nodes {
                    for b in a + 1..n_nodes {
                        let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
                        if dx.hypot(dy) <= range {
                            edges.push((a as u32, b as u32));
                        }
                    }
                }
                let t = Topology::from_edges(n_nodes, &edges)?;
                if t.is_connected() {
                    return Ok(t);
                }
            }
            Err(TopologyError::Disconnected(range.to_string()))
        }
    }
}
