//! Payoff allocation for cooperative games over measured coalition values.
//!
//! The pipeline: a [`oracle::ValueOracle`] produces coalition values (from a
//! stored table, a synthetic family, or an external command run once per
//! coalition), [`pruner::prune_enumerate`] walks the coalition tree and skips
//! branches whose marginal gain or remaining headroom falls below thresholds,
//! and [`allocator`] turns the evaluated fragment into payoff vectors:
//! the least core via a linear program, plus exact Shapley, leave-one-out,
//! and weight-proportional baselines for comparison.

// index-parallel loops over flat matrices and paired arrays stay as loops;
// the iterator rewrites clippy suggests bury the arithmetic
#![allow(clippy::needless_range_loop)]

pub mod allocator;
pub mod cli;
pub mod game;
pub mod lp;
pub mod oracle;
pub mod pruner;
pub mod report;

pub use game::{Coalition, Game, PlayerId};
