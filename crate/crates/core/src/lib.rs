//! Correlation dynamics of qutrit and qubit Bell-diagonal states under
//! one-sided dephasing: trace-norm and mutual-information discord,
//! negativity, freezing analysis and simulated tomography.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod correlations;
pub mod density;
pub mod error;
pub mod freezing;
pub mod linalg;
pub mod optimize;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
