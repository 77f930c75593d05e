//! Exact combinatorics of the log minimal model program for horospherical
//! pairs, driven by moment polytopes.

pub mod error;
pub mod exact;
pub mod family;
pub mod io;
pub mod mmp;
pub mod model;
pub mod polytope;

pub use error::{Error, Result};
