//! Rate-distortion functions of Gaussian autoregressive sources.
//!
//! Three routes to the rate at water level `theta` are provided: water-filling
//! over the spectrum ([`rdfun::rate_kolmogorov`]), the autoregressive formula
//! ([`rdfun::rate_autoregressive`]) and the root-corrected formula
//! ([`rdfun::rate_hashimoto_arimoto`]). The [`toeplitz`] module checks the same
//! quantities against finite `n x n` matrices.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod armodel;
pub mod cli;
pub mod error;
mod linalg;
pub mod quad;
pub mod rdfun;
pub mod rootfind;
pub mod toeplitz;

pub use armodel::ArModel;
pub use error::{Error, Result};
pub use quad::{QuadResult, QuadSpec};
pub use rdfun::RdPoint;
pub use rootfind::RootSet;
