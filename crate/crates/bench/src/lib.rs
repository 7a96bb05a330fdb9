//! Criterion benchmarks for the fixed-point kernels and whole simulation runs; see `benches/`.
