//! Adaptive multiquadric explicit Runge-Kutta methods.
//!
//! Stage arguments of a classical explicit RK tableau are scaled by
//! `1 + ε_j² (c_j h)² / 2`, with the shape parameters `ε_j` chosen each step
//! from local derivatives of the right-hand side so that the leading local
//! error term vanishes.

pub mod error;
pub mod exec;
pub mod harness;
pub mod jet;
pub mod methods;
pub mod problem;
pub mod shape;
pub mod stability;
pub mod stepper;

pub use error::{DomainError, Error, Result};
pub use methods::{catalog, find_method, verify_order_conditions, MethodSpec};
pub use problem::{DerivativeProvider, OdeProblem, PartialTable};
