//! Reduced-gradient safe flow for constrained MDPs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod certify;
pub mod config;
pub mod envs;
pub mod error;
pub mod estimate;
pub mod flow;
pub mod linalg;
pub mod mdp;
pub mod par;
pub mod policy;
pub mod qcqp;
pub mod rng;
pub mod train;
pub mod validate;

pub use error::{Error, Result};
