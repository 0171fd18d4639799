//! Criterion benchmarks for the matcher and the filters; see `benches/`.
