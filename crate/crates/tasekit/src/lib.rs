//! TASE-preconditioned explicit Runge-Kutta time integration.
//!
//! TASE (Time-Accurate and highly-Stable Explicit) operators are linear
//! preconditioners `T = 1 + O(dt^p)` applied to the stiff terms of an ODE or
//! semi-discretized PDE right-hand side. Wrapping the stiff operator this way
//! turns a standard explicit Runge-Kutta scheme into a (nearly)
//! unconditionally stable method while preserving its order of accuracy up
//! to `p` — each stage costs one banded or dense linear solve per operator
//! order instead of a Newton iteration.
//!
//! Crate layout:
//! - [`numkit`]: dense/banded LU and the matrix exponential.
//! - [`schemes`]: Butcher tableaux (explicit RK1-4, SDIRK and
//!   Crank-Nicolson baselines), Shu-Osher forms, stability intercepts.
//! - [`tase`]: the operators themselves — coefficients, shifted-system
//!   factorizations, scalar symbol.
//! - [`stability`]: amplification factor `sigma(z)`, complex-plane and
//!   imaginary-axis scans.
//! - [`integrators`]: time steppers (plain ERK, ERK+TASE in combined /
//!   split / frozen-Jacobian modes, SDIRK with Newton).
//! - [`problems`]: benchmark catalog of stiff ODE/PDE cases with exact or
//!   reference solutions.
//! - [`cli`]: the `tasekit` command-line driver.

pub mod cli;
pub mod error;
pub mod integrators;
pub mod numkit;
pub mod problems;
pub mod schemes;
pub mod stability;
pub mod tase;

pub use error::{Result, TaseError};
