pub mod catalog;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linear;
pub mod netlang;
pub mod reduction;
pub mod slh;
pub mod tol;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
