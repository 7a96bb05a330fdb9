//! The algorithm database: four single-solution optimizers that can be
//! stepped one iteration at a time.
//!
//! All fitness evaluations go through an [`Evaluator`], which counts them,
//! applies the overflow policy and keeps the node-local best up to date.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::{evaluate_or_worst, random_solution, Problem, Solution};
use crate::fxp::{Fx, RngState};

mod ispo;
mod nusa;
mod tsome;

pub use ispo::{ispo_learn, ispo_velocity, ispo_velocity_with, IspoParams, IspoState};
pub use nusa::{nusa_delta, nusa_delta_with, nusa_perturb, NusaParams, NusaState};
pub use tsome::{ShortExit, Stage, TsomeParams, TsomeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmId {
    #[serde(rename = "rs")]
    Rs,
    #[serde(rename = "ispo")]
    Ispo,
    #[serde(rename = "nusa")]
    Nusa,
    #[serde(rename = "3some")]
    Tsome,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 4] = [AlgorithmId::Rs, AlgorithmId::Ispo, AlgorithmId::Nusa, AlgorithmId::Tsome];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Rs => "rs",
            AlgorithmId::Ispo => "ispo",
            AlgorithmId::Nusa => "nusa",
            AlgorithmId::Tsome => "3some",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm `{0}` (expected rs, ispo, nusa or 3some)")]
pub struct UnknownAlgorithm(String);

impl FromStr for AlgorithmId {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_owned()))
    }
}

/// Network composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every node runs 3SOME.
    Homogeneous,
    /// Each node draws its algorithm uniformly at boot.
    Heterogeneous,
}

pub fn adb_select(mode: Mode, rng: &mut RngState) -> AlgorithmId {
    match mode {
        Mode::Homogeneous => AlgorithmId::Tsome,
        Mode::Heterogeneous => AlgorithmId::ALL[rng.index(4)],
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoParams {
    pub ispo: IspoParams,
    pub nusa: NusaParams,
    #[serde(rename = "3some")]
    pub tsome: TsomeParams,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid {algorithm} parameter `{field}`: {reason}")]
pub struct ParamError {
    pub algorithm: &'static str,
    pub field: &'static str,
    pub reason: &'static str,
}

impl AlgoParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.ispo.validate()?;
        self.nusa.validate()?;
        self.tsome.validate()
    }
}

/// One improvement of the node-local best inside a step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Improvement {
    /// 1-based position of the evaluation within the step.
    pub offset: u64,
    pub solution: Solution,
}

/// The single place where fitness is computed.
///
/// Holds the node-local best for the duration of one step and stops
/// handing out evaluations once `cap` is reached.
pub struct Evaluator<'a> {
    problem: &'a Problem,
    best: &'a mut Solution,
    cap: u64,
    used: u64,
    out_of_bounds: u64,
    improvements: Vec<Improvement>,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a Problem, best: &'a mut Solution, cap: u64) -> Self {
        Evaluator {
            problem,
            best,
            cap,
            used: 0,
            out_of_bounds: 0,
            improvements: Vec::new(),
        }
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.cap
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    /// Trial points that were outside the box when submitted. Always zero
    /// unless an operator is broken.
    pub fn out_of_bounds(&self) -> u64 {
        self.out_of_bounds
    }

    pub fn improvements(&self) -> &[Improvement] {
        &self.improvements
    }

    pub fn into_improvements(self) -> Vec<Improvement> {
        self.improvements
    }

    /// Evaluates `x`, counting one evaluation. Callers check
    /// [`Evaluator::exhausted`] first.
    pub fn eval(&mut self, x: &[Fx]) -> Fx {
        debug_assert!(!self.exhausted(), "evaluation past the step cap");
        if !self.problem.in_bounds(x) {
            self.out_of_bounds += 1;
        }
        let f = evaluate_or_worst(self.problem, x);
        self.used += 1;
        if f < self.best.f() {
            self.best.x.clear();
            self.best.x.extend_from_slice(x);
            self.best.fitness = Some(f);
            self.improvements.push(Improvement {
                offset: self.used,
                solution: self.best.clone(),
            });
        }
        f
    }

    /// Evaluates `s` in place.
    pub fn eval_solution(&mut self, s: &mut Solution) -> Fx {
        let f = self.eval(&s.x);
        s.fitness = Some(f);
        f
    }
}

/// Random search: keep the better of the current point and a fresh sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsState {
    pub current: Solution,
    pub trial: Solution,
}

impl RsState {
    pub fn new(p: &Problem, rng: &mut RngState) -> Self {
        let current = random_solution(rng, p);
        RsState {
            trial: current.clone(),
            current,
        }
    }

    fn step(&mut self, ev: &mut Evaluator, rng: &mut RngState) {
        if !self.current.is_evaluated() {
            ev.eval_solution(&mut self.current);
            return;
        }
        let (lo, hi) = (ev.problem().lower(), ev.problem().upper());
        for t in self.trial.x.iter_mut() {
            *t = rng.uniform(lo, hi);
        }
        let f = ev.eval(&self.trial.x);
        self.trial.fitness = Some(f);
        if f < self.current.f() {
            std::mem::swap(&mut self.current, &mut self.trial);
        }
    }
}

/// Per-node optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Rs(RsState),
    Ispo(IspoState),
    Nusa(NusaState),
    Tsome(TsomeState),
}

impl OptimizerState {
    /// Fresh state around a random initial point. `budget` is the node's
    /// evaluation budget, which fixes the nuSA horizon.
    pub fn new(id: AlgorithmId, p: &Problem, params: &AlgoParams, budget: u64, rng: &mut RngState) -> Self {
        match id {
            AlgorithmId::Rs => OptimizerState::Rs(RsState::new(p, rng)),
            AlgorithmId::Ispo => OptimizerState::Ispo(IspoState::new(p, params.ispo.clone(), rng)),
            AlgorithmId::Nusa => OptimizerState::Nusa(NusaState::new(p, params.nusa.clone(), budget, rng)),
            AlgorithmId::Tsome => OptimizerState::Tsome(TsomeState::new(p, params.tsome.clone(), rng)),
        }
    }

    pub fn id(&self) -> AlgorithmId {
        match self {
            OptimizerState::Rs(_) => AlgorithmId::Rs,
            OptimizerState::Ispo(_) => AlgorithmId::Ispo,
            OptimizerState::Nusa(_) => AlgorithmId::Nusa,
            OptimizerState::Tsome(_) => AlgorithmId::Tsome,
        }
    }

    /// One iteration. The first call on a fresh state only evaluates the
    /// initial point. Returns the number of evaluations consumed, which is
    /// below the usual count only when the evaluator's cap cuts it short.
    pub fn step(&mut self, ev: &mut Evaluator, rng: &mut RngState) -> u64 {
        if ev.exhausted() {
            return 0;
        }
        let before = ev.used();
        match self {
            OptimizerState::Rs(s) => s.step(ev, rng),
            OptimizerState::Ispo(s) => s.step(ev, rng),
            OptimizerState::Nusa(s) => s.step(ev, rng),
            OptimizerState::Tsome(s) => s.step(ev, rng),
        }
        ev.used() - before
    }

    /// Continues from an accepted incoming solution.
    pub fn adopt(&mut self, s: &Solution) {
        debug_assert!(s.is_evaluated());
        match self {
            OptimizerState::Rs(st) => st.current = s.clone(),
            OptimizerState::Ispo(st) => st.adopt(s),
            OptimizerState::Nusa(st) => st.current = s.clone(),
            OptimizerState::Tsome(st) => st.adopt(s),
        }
    }

    /// Solution arrays held by the state.
    pub fn slots(&self) -> Vec<&Solution> {
        match self {
            OptimizerState::Rs(s) => vec![&s.current, &s.trial],
            OptimizerState::Ispo(s) => vec![&s.particle, &s.trial],
            OptimizerState::Nusa(s) => vec![&s.current, &s.trial],
            OptimizerState::Tsome(s) => vec![&s.elite, &s.trial, &s.saved_elite],
        }
    }
}
