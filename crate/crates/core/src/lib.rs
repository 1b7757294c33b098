//! Estimation and lack-of-fit testing for heteroscedastic regression with
//! long-memory Gaussian design and long-memory moving-average errors.
//!
//! Model: `Y_t = β'r(X_t) + σ(X_t) u_t`, where `X_t` is fractional Gaussian
//! noise with memory `h` and `u_t` is FARIMA(0, H−1/2, 0) with memory `H`.

pub mod error;
pub mod gof;
pub mod harness;
pub mod kernel;
pub mod limits;
pub mod optimize;
pub mod par;
pub mod quad;
pub mod regress;
pub mod rng;
pub mod sim;
pub mod whittle;

pub use error::{Error, Result};
pub use par::Execution;
