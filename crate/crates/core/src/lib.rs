//! Two-fluid flow with an added-mass coupling between the phases.
//!
//! Each phase carries a density, a velocity and a specific entropy. The
//! phases interact through a volume potential `W(ρ₁, ρ₂, s₁, s₂, w)` that
//! depends on the relative velocity `w = u₂ − u₁`, and through dissipative
//! drag and heat exchange.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod closures;
pub mod error;
pub mod hyperbolicity;
pub mod potential;
pub mod roots;
pub mod solver;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
