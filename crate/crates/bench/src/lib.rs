//! Benchmark crate; see `benches/benchmarks.rs`.
