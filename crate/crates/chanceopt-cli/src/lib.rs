//! Problem files, the end-to-end pipeline and run reports for `chanceopt`.

// `!(a <= b)` is how validation rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod examples;
pub mod pipeline;
pub mod problem_file;
