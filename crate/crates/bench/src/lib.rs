//! Criterion benchmarks for the railtherm toolkit; see benches/control.rs.
