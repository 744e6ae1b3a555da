//! Simulation of single-machine dispatching under lagged observations, with
//! and without an execution layer between the policy and the plant.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod exec;
pub mod harness;
pub mod metrics;
pub mod policy;
pub mod sim;
