#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coach_sim;
pub mod data;
pub mod ddpc;
pub mod error;
pub mod harness;
pub mod hvac;
pub mod predictor;
pub mod qp;

pub use error::{Error, Result};
