//! One-dimensional global minimizers of the sharp-interface ternary
//! Ohta-Kawasaki free energy on a periodic cell.

pub mod error;
pub mod numeric;
pub mod interaction;
pub mod pattern;
pub mod energy;
pub mod optimizer;
pub mod analytic;
pub mod search;
pub mod phasediag;
pub mod balls;

pub use error::{Error, Result};
