//! Chance optimization through moment relaxations.
//!
//! Given a decision vector `x` in a box and random parameters `q` with a known
//! product distribution, find `x` maximizing the probability that `q` lands in
//! a union of sets `{q : P_j(x, q) >= 0 for all j}`. The problem is relaxed into
//! a hierarchy of semidefinite programs over moment sequences, which are solved
//! with a first-order augmented Lagrangian method.

// `!(a <= b)` is how validation rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alcc;
pub mod conic;
pub mod error;
pub mod mc;
pub mod measure;
pub mod moments;
pub mod poly;
pub mod relax;

pub use error::{Error, Result};
