#![no_std]
// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod dataset;
pub mod ddpg;
pub mod emotion;
pub mod env;
pub mod experiment;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod task;
