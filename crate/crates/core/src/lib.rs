//! Feature importance for trained neural networks by exploring the set of
//! equally good models around them (the Rashomon set).
//!
//! A trained *base* model is frozen and a trainable elementwise mask is
//! prepended to its inputs. Retraining that mask many times from small
//! random starts, each time until the loss matches the base model, yields a
//! matrix of mask weights. From it this crate derives:
//!
//! - variance tolerance factors ([`vtf::vtf_scores`]) and the linear-time
//!   unimportant-feature selection ([`vtf::select_unimportant`]),
//! - recursive variance tolerance weights ([`vtf::rvtw_scores`]),
//! - contribution factors ([`cf::cf_profile`]) from an overdetermined
//!   linear system solved by Gauss-Jordan elimination or least squares.
//!
//! Baseline rankings (permutation importance, connection weights, Fisher
//! score) and a drop-and-refit evaluation harness are included. See the
//! crate's `examples/` directory for one runnable program per capability.

// `!(x > 0.0)` also rejects NaN, which is the point of those checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cf;
pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod mask;
pub mod nn;
pub mod plot;
pub mod rashomon;
pub mod vtf;

mod util;

pub use error::{Error, Result};
