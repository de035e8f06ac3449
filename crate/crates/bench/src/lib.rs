//! Criterion benchmarks for the simulator, policy, trainer and advisor; see `benches/hot_paths.rs`.
