// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditioning;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod pipeline;
pub mod tomography;

pub use error::{Error, Result};
