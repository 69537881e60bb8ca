//! Criterion benchmarks for the solver and initialization; see `benches/`.
