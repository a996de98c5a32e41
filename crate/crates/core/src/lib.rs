//! Exact RIP thresholds for spurious critical points of low-rank matrix
//! recovery.

pub mod closedform;
pub mod counterexample;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lmi;
pub mod objective;
pub mod sdp;

pub use error::{Error, Result};
