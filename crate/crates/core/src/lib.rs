//! Projection-free constrained optimization with conditional-gradient methods.
//!
//! The crate provides linear minimization oracles ([`lmo`]), step-size rules
//! ([`stepsize`]), convex-decomposition containers ([`activeset`]), the solver
//! family ([`algorithms`]) and seeded benchmark instances ([`problems`]).

pub mod activeset;
pub mod algorithms;
pub mod error;
pub mod linalg;
pub mod lmo;
pub mod objective;
pub mod problems;
pub mod state;
pub mod stepsize;

pub use error::{Error, Result};
