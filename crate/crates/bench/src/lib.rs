//! Placeholder library target; the package exists for its Criterion
//! benchmarks (see `benches/pipeline.rs`).
