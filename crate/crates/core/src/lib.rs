//! Numerical thermodynamic formalism for the entire maps
//! f(z) = c − (ℓ−1)·Log c + ℓz − e^z and their quotient F on ℂ/2πiℤ.

pub mod branches;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod ifs;
pub mod measures;
pub mod pressure;
pub mod quad;
pub mod render;
pub mod transfer;

pub use error::{Error, Result};
