use criterion::{criterion_group, criterion_main, Criterion};
use wsnopt_core::algos::{AlgoParams, AlgorithmId};
use wsnopt_core::bench::{FunctionId, Problem};
use wsnopt_core::island::NodeConfig;
use wsnopt_core::netsim::{self, gen_topology, SimConfig, TopologyKind};
use wsnopt_core::RngState;

fn config(alg: Option<AlgorithmId>, n: usize) -> SimConfig {
    SimConfig {
        problem: Problem::new(FunctionId::new(3).unwrap(), n).unwrap(),
        params: AlgoParams::default(),
        seed: 1,
        channel: Default::default(),
        radio: Default::default(),
        cost: Default::default(),
        nodes: (0..5).map(|i| NodeConfig::new(alg.unwrap_or(AlgorithmId::ALL[i % 4]))).collect(),
        topology: gen_topology(TopologyKind::Complete, 5, &mut RngState::new(0)).unwrap(),
        header: vec![],
    }
}

fn runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("run");
    g.sample_size(20);
    g.bench_function("sa_5d", |b| b.iter(|| netsim::run(config(Some(AlgorithmId::Tsome), 5)).unwrap()));
    g.bench_function("sa_15d", |b| b.iter(|| netsim::run(config(Some(AlgorithmId::Tsome), 15)).unwrap()));
    g.bench_function("ma_15d", |b| b.iter(|| netsim::run(config(None, 15)).unwrap()));
    g.finish();
}

criterion_group!(benches, runs);
criterion_main!(benches);
