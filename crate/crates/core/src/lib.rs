//! Isoform abundance estimation from read-compatibility data, with
//! Dirichlet priors derived from a transcript interaction network.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod driver;
pub mod em;
pub mod error;
pub mod io;
pub mod model;
pub mod netbuild;
pub mod regalt;
pub mod sim;

pub use error::{Error, Result};
