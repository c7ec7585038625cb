//! Streaming estimation of Spearman's rank correlation for bivariate data.
//!
//! The estimator maintains a small, fixed-size set of Hermite series
//! coefficients (two marginal CDF coefficient vectors and one bivariate
//! density coefficient matrix) that are updated in O(1) time and memory per
//! observation. A precomputed table of Hermite basis integrals then turns the
//! coefficient state into a Spearman's rank correlation estimate with a few
//! small matrix-vector products, so the per-estimate cost depends only on the
//! truncation order, never on how much data has been seen.
//!
//! Two update rules are provided: a running-mean rule for stationary streams
//! and an exponentially weighted rule (weight `lambda`) that tracks a
//! time-varying correlation. Supporting modules supply exact batch and
//! moving-window Spearman baselines, an exponentially weighted Pearson
//! baseline, a seeded Monte Carlo harness for accuracy and variance studies,
//! and a previous-tick resampler that turns quote streams into aligned
//! basis-point log returns.

pub mod baselines;
pub mod basis;
pub mod bench;
pub mod correlation;
pub mod fmt;
pub mod matrix;
pub mod simulation;
pub mod state;
pub mod ticks;

mod quad;
