//! Quasi-Monte Carlo estimation of Gerber-Shiu discounted penalty functions
//! in a renewal risk model whose dividend barrier is approximated by a
//! smoothly vanishing premium rate.
//!
//! The value function is approximated by the truncated sum of iterated
//! one-claim operators. Level `k` (ruin exactly at the `k`-th claim) is an
//! integral over `[0,1]^{2k}` after mapping inter-claim times and claim sizes
//! to the unit cube; [`integrand`] evaluates that integrand, [`estimator`]
//! averages it over point sets from [`lowdisc`] and assembles error budgets.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod integrand;
pub mod lowdisc;
pub mod premium_flow;
pub mod quad;
pub mod reference;
pub mod risk_model;

pub use error::{Error, Result};
