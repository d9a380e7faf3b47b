//! Coupled-cavity arrays with tunable transmon emitters: band structure,
//! atom-photon bound states, exact spectra, transmission and pulse dynamics.

// `!(a < b)` is used on purpose so that NaN lands in the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod boundstate;
pub mod circuit;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod roots;
pub mod scenario;
pub mod spectra;
pub mod transport;

pub use error::{Error, Result};
