//! Island-model distributed optimization on simulated sensor-network
//! nodes: Q16.16 arithmetic, the benchmark suite, four memory-light
//! optimizers, the node state machine, a discrete-event network simulator,
//! energy accounting and the statistics used to compare configurations.

pub mod algos;
pub mod bench;
pub mod energy;
pub mod experiment;
pub mod fxp;
pub mod island;
pub mod netsim;
pub mod stats;

pub use algos::{AlgorithmId, OptimizerState};
pub use bench::{FunctionId, Problem, Solution};
pub use fxp::{Fx, FxError, RngState};
