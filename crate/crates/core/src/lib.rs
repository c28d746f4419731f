//! Finite-element discretization of the integral fractional Laplacian on
//! two-dimensional domains, and the bilinear optimal control problem
//!
//! ```text
//! min ½‖u − u_Ω‖² + (λ/2)‖q‖²   subject to   (−Δ)^s u + q u = f in Ω,  u = 0 in Ωᶜ,  a ≤ q ≤ b,
//! ```
//!
//! solved with piecewise-constant controls or by variational discretization.

// `!(x > 0.0)` is used on purpose so that NaN fails the checks; small
// element loops index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fracfem;
pub mod mesh;
pub mod optctl;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
