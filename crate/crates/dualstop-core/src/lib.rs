//! Dual martingale upper bounds for discrete-time optimal stopping.
//!
//! A reward process `Z_0, ..., Z_J` adapted to a filtration admits the dual
//! representation
//!
//! ```text
//! Y*_0 = inf_M E[ max_j (Z_j - M_j) ],
//! ```
//!
//! where `M` runs over martingales started at zero and `Y*_0` is the value of
//! the optimal stopping problem (the Snell envelope at time zero). The
//! infimum is attained by the Doob martingale `M*` of the Snell envelope, and
//! for `M*` the pathwise maximum is almost surely constant. This crate
//! provides:
//!
//! * reward models (a two-period uniform example, a two-exercise Bermudan
//!   call, and arbitrary finite trees) with seeded, reproducible simulation;
//! * Snell envelopes, Doob decompositions and optimal stopping families,
//!   both in closed form and by backward induction on trees;
//! * linearly parameterized martingale families and a linear-program solver
//!   for the resulting sample minimization problem;
//! * randomized (pseudo-)martingale duals that steer the minimizer to the
//!   Doob martingale, with exact grid evaluation on trees;
//! * predicates characterizing weakly and surely optimal martingales,
//!   together with brute-force cross checks used by the verification sweeps.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion CLI
//! crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dual;
pub mod error;
pub mod expr;
pub mod families;
pub mod lp;
pub mod math;
pub mod models;
pub mod optimality;
pub mod quad;
pub mod randomize;
pub mod rng;
pub mod snell;

pub use error::{Error, Result};
