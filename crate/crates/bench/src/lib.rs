//! Benchmark-only crate; see `benches/orbits.rs`.
