//! Signed scaled graphs (SSGs) of input/output operators.
//!
//! The crate estimates scaled graphs and signed scaled graphs of LTI and
//! static-nonlinear systems from sampled input/output pairs, and checks
//! feedback stability by separating graphs in the complex plane.

pub mod error;
pub mod signals;
pub mod spectral;
pub mod systems;
pub mod geometry;
pub mod ssg;
pub mod closed_loop;
pub mod certify;
mod exec;

pub use error::{Result, SsgError};
