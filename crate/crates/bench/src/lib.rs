//! Benchmark harness for copula-based EDAs: test functions, critical
//! population search, experiment tables and their CSV output.

pub mod bisection;
pub mod cli;
pub mod experiment;
pub mod functions;
