//! Benchmark-only package; see benches/guidance.rs.
