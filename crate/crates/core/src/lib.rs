//! Positivity certificates and norm brackets for archimedean quadratic
//! modules over free and group *-algebras.

pub mod certify;
pub mod cli;
pub mod error;
pub mod freealg;
pub mod heisenberg;
pub mod linalg;
pub mod qmodule;
pub mod repsearch;
pub mod sdp;

pub use error::{Error, Result};
