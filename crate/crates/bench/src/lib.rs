//! Benchmark-only crate; see `benches/transport.rs`.
