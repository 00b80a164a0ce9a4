//! Criterion benchmarks for `rescal-core` live in `benches/`.
