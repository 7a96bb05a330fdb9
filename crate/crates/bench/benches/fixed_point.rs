use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wsnopt_core::bench::{evaluate, FunctionId, Problem};
use wsnopt_core::{Fx, RngState};

fn arithmetic(c: &mut Criterion) {
    let mut rng = RngState::new(1);
    let xs: Vec<Fx> = (0..1024).map(|_| rng.uniform(Fx::lit(-50.0), Fx::lit(50.0))).collect();
    let mut g = c.benchmark_group("fx");
    g.bench_function("mul", |b| {
        b.iter(|| xs.windows(2).map(|w| w[0].mul(w[1]).unwrap_or(Fx::MAX).raw() as i64).sum::<i64>())
    });
    g.bench_function("div", |b| {
        b.iter(|| xs.windows(2).map(|w| w[0].div(w[1]).unwrap_or(Fx::MAX).raw() as i64).sum::<i64>())
    });
    g.bench_function("sin", |b| b.iter(|| xs.iter().map(|x| x.sin().raw() as i64).sum::<i64>()));
    g.bench_function("sqrt", |b| {
        b.iter(|| xs.iter().map(|x| x.abs().unwrap().sqrt().unwrap().raw() as i64).sum::<i64>())
    });
    g.bench_function("exp", |b| {
        b.iter(|| {
            xs.iter()
                .map(|x| x.div_int(8).unwrap().exp().map_or(0, |v| v.raw() as i64))
                .sum::<i64>()
        })
    });
    g.finish();
}

fn functions(c: &mut Criterion) {
    let mut g = c.benchmark_group("evaluate");
    for id in [1, 3, 6, 14] {
        let p = Problem::new(FunctionId::new(id).unwrap(), 15).unwrap();
        let mut rng = RngState::new(id as u64);
        let x: Vec<Fx> = (0..15).map(|_| rng.uniform(p.lower(), p.upper())).collect();
        g.bench_with_input(BenchmarkId::from_parameter(format!("f{id}")), &x, |b, x| {
            b.iter(|| evaluate(&p, black_box(x)))
        });
    }
    g.finish();
}

criterion_group!(benches, arithmetic, functions);
criterion_main!(benches);
