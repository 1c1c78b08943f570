//! Exact machinery for sampling lower bounds: isolators and robust
//! extractors for restricted source classes, the `addr` gadget, the direct
//! product hard distribution and exhaustive certification of its distance
//! from every member of a class.
//!
//! Everything on a certification path is exact rational arithmetic.

pub mod dist;
pub mod error;
pub mod f2;
pub mod hardness;
pub mod isolators;
pub mod rational;
pub mod sources;
pub mod sweep;

pub use error::{Error, Result};
pub use rational::{Exponent, Q};
