//! Benchmark-only crate; see `benches/kernel.rs` for the criterion suite.
