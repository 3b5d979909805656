//! Last-iterate Rényi-DP accounting for cyclically sampled, gradient-clipped
//! DP-SGD on weakly convex composite losses.
//!
//! The crate is `no_std` (with `alloc`) and contains only the numerical core:
//!
//! - [`divergence`]: the amplification factor `theta`, the prox-linear Lipschitz
//!   constant, optimal residual schedules and the symbolic shift ledger.
//! - [`accountant`]: every bound regime, best-bound selection, the PABI
//!   comparison line and RDP to (ε, δ)-DP conversion.
//! - [`planner`]: noise calibration for a target (α, ε) and stepsize rules.
//! - [`sim`]: a reference implementation of cyclic last-iterate DP-SGD on
//!   synthetic quadratic losses, with coupled neighboring runs.
//!
//! IO, configuration and the verification oracles live in the `lastiter` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod accountant;
pub mod divergence;
mod error;
pub mod planner;
pub mod sim;

pub use accountant::{BoundReport, CurvatureSpec, Precondition, PrivacyParams, Regime};
pub use divergence::{
    lipschitz_constant, residual_schedule, single_pass_cost, theta, ResidualSchedule, ShiftLedger,
};
pub use error::{Error, Result};
pub use planner::PlanResult;
