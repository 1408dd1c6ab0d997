//! Criterion benchmarks for the hot kernels of `msie-core`. See `benches/`.
