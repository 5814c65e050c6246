//! Criterion benchmarks for the calculus and the solver; see `benches/`.
