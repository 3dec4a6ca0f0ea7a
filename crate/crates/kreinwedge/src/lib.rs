//! Krein-space GNS representations of quasi-free Wightman functionals in
//! two-dimensional Minkowski space, with numerical checks of the modular
//! structure of the right wedge.

pub mod borchers;
pub mod error;
pub mod gns;
pub mod modular;
pub mod mollifier;
pub mod quadrature;
pub mod states;
pub mod testfunctions;

pub use error::{Error, Result};
