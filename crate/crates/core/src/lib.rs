//! Autodeleveraging (ADL) policy model.
//!
//! An ADL round socializes part of an exchange deficit onto winning accounts.
//! Each round a policy picks a budget and splits it over winners inside the
//! capped simplex `{x : 0 <= x_i <= u_i, sum x_i = B}`. This crate holds the
//! allocation policies, severity controllers, execution-price benchmarks, the
//! loss/regret/failure metric stack and queue-instability diagnostics.
//!
//! The crate is `no_std` with `alloc`; file formats and orchestration live in
//! `adl-lab`.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(a >= b)` is used deliberately so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod instability;
pub mod metrics;
pub mod model;
pub mod num;
pub mod policies;
pub mod scenario;
pub mod severity;

pub use error::{AdlError, Result};
pub use model::{Action, FeasibleSet, RoundState, Tolerances, Violation, WinnerAccount, WinnerId};
