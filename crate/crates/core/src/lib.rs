//! Discrete fractional calculus of order `2 < alpha < 3` with finite delay.
//!
//! The crate builds the machinery around the delay difference equation
//!
//! ```text
//! Delta^alpha u(n) = A u(n) + gamma u(n - lambda) + f(n),   n in N_0,
//! u(i) = 0 for i = -lambda ..= 2,
//! ```
//!
//! where `Delta^alpha` is the Riemann-Liouville fractional difference
//! (third forward difference composed with a fractional sum), `A` is a
//! complex `d x d` matrix, `gamma` is real and `lambda` a positive integer
//! delay.
//!
//! Modules:
//!
//! - [`kernels`]: the scalar sequences `k^beta` and `h_alpha` and their
//!   algebraic identities.
//! - [`calculus`]: finite convolution, forward differences, fractional sums
//!   and differences on finite-horizon sequences.
//! - [`resolvent`]: the alpha-resolvent operator sequence, its delayed
//!   variant, defining-identity residuals, a boundedness probe, the
//!   contour-integral cross-check, and the solution kernel `h_alpha * S`.
//! - [`solver`]: the closed-form convolution solver and an independent
//!   time-stepping solver, residual and uniqueness checks.
//! - [`symbol`]: circle symbols `g`, `f`, resolvent symbols and their
//!   derivatives, boundedness scans, `omega_f`, smallness and
//!   norm-boundedness checks, and truncated-transform verification.
//! - [`mr`]: truncated forcing-to-regular-part operators and empirical
//!   `l^p` operator-norm estimates.

pub mod calculus;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod mr;
pub mod resolvent;
pub mod solver;
pub mod symbol;

pub use error::{Error, Result};

pub use calculus::{OperatorSeq, Signal};
pub use resolvent::{ResolventParams, ResolventSeq};
pub use solver::{Method, ProblemSpec, Solution};
pub use symbol::CircleGrid;
