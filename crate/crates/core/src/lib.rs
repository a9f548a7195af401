#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
mod par;
pub mod graph_model;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod mase;
pub mod pipeline;
pub mod regression;
pub mod seed;
pub mod special;
pub mod synthetic;

pub use error::{Error, Result};
