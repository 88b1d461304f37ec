//! Portfolio analytics for rebalanced and buy-and-hold strategies.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`stats`] — scalar statistics on simple-return series (arithmetic and
//!   geometric means, population variance/covariance/correlation, and the
//!   variance-drag approximations relating the two means).
//! * [`engine`] — wealth and weight-trajectory simulation of a portfolio
//!   under four policies: periodically rebalanced, buy-and-hold, and two
//!   equally-weighted index-evolution variants, plus the buy-and-hold
//!   closed form.
//! * [`decomposition`] — splits a rebalanced portfolio's geometric return
//!   into a strategic part (weighted asset geometric means) and a
//!   diversification return, computed exactly and by several approximation
//!   formulas side by side.
//! * [`montecarlo`] — seeded synthetic return generation and repeated-trial
//!   experiments comparing rebalanced against buy-and-hold outcomes.
//! * [`input`] / [`report`] / [`cli`] — CSV ingestion, report documents
//!   (aligned text tables or JSON), and the `rebal` command-line front end.
//!
//! All rates are decimal fractions internally (`0.25` = +25%); percent
//! appears only at the I/O boundary.

pub mod cli;
pub mod decomposition;
pub mod engine;
pub mod input;
pub mod montecarlo;
pub mod report;
pub mod stats;

#[cfg(test)]
pub(crate) mod fixtures;

pub use engine::{PolicyMode, PortfolioPolicy, ReturnMatrix, SimulationResult};
pub use stats::SeriesStats;
