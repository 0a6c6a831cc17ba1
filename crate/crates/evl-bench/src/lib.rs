//! Criterion benchmarks for the solver; see benches/solver.rs.
