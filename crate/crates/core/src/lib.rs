//! Electric-field entanglement witnesses for ensembles of two-level emitters.
//!
//! Natural units throughout: lengths in `1/k`, times in `1/Γ`.

// `!(x > 0.0)` checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concurrence;
pub mod cumulant;
pub mod dicke;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod ode;
pub mod oracle;
pub mod qstate;
pub mod witness;

pub use error::{Error, Result};
