//! Command-line front end: run orchestration with a strict exit-code
//! contract, synthetic testbed generation, and the benchmark matrix.

pub mod bench;
pub mod matrix;
pub mod run;
