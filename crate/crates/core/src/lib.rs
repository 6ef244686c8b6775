//! Implicit and explicit robust controlled invariant sets for discrete-time
//! linear systems, built in closed form from eventually periodic input
//! sequences, with runtime safety filters and a classical maximal-set oracle.

pub mod bench;
pub mod error;
pub mod instances;
pub mod invariance;
pub mod io;
pub mod numlin;
pub mod oracle;
pub mod polytope;
pub mod runtime;
pub mod system;
pub mod tol;

pub use error::{Error, Result};
pub use tol::Tolerances;
