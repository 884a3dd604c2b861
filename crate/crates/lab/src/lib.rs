//! Experiment harness for the square-function laboratory: configuration,
//! a fixed test-field corpus, experiment implementations, and reproducible
//! JSON/CSV reporting.

// negated comparisons like `!(x > 0.0)` are deliberate: NaN must fail
// validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod report;
pub mod runner;
