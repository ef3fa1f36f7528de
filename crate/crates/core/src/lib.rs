pub mod decay;
pub mod error;
pub mod exponents;
pub mod grid;
pub mod harness;
pub mod linear_solver;
pub mod multipliers;
pub mod ode;
pub mod semilinear_solver;
pub mod special_functions;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/exponents.md")]
mod book_exponents {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/special_functions.md")]
mod book_special_functions {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/multipliers.md")]
mod book_multipliers {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/linear_solver.md")]
mod book_linear_solver {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/semilinear_solver.md")]
mod book_semilinear_solver {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/harness.md")]
mod book_harness {}
