// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod constants;
pub mod cooling;
pub mod error;
pub mod io;
pub mod linalg;
pub mod qls;
pub mod reorder;
pub mod trap;

pub use error::{Error, Result};
