//! Numerical engine for the functional equation `f(x+1) = g(x) f(x)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`] parses and evaluates the closed-form expressions used for `g`
//!   and `f` (with an overflow-safe logarithmic evaluation path).
//! * [`seqlim`] computes limits of real sequences with an increment-based
//!   stopping rule and optional Aitken Δ² acceleration.
//! * [`summability`] implements remainders, partial summands and the limit
//!   summand of a function.
//! * [`gammatype`] evaluates gamma-type solutions via the product limit, the
//!   `l`-corrected transform and the summand form, and grades the asymptotic
//!   conditions on `g`.
//! * [`convexity`] provides divided differences, n-convexity scans and the
//!   reference log-gamma used as an oracle across the crate.
//! * [`experiments`] packages the uniqueness / non-uniqueness studies.
//! * [`report`] holds the JSON and CSV serialization helpers.

pub mod convexity;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod gammatype;
pub mod report;
pub mod seqlim;
pub mod summability;

pub use error::{Error, Result};
pub use expr::{Expression, FunctionSpec};
pub use seqlim::{Acceleration, LimitResult, RunConfig};
