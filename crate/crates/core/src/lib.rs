// negated float comparisons are deliberate: NaN must fail range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clifford;
pub mod error;
pub mod executors;
pub mod f2linalg;
pub mod geometry;
pub mod numerics;
pub mod rng;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};
