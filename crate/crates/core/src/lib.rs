//! Hardness benchmarking for MAX 2-SAT under continuous-time quantum walks,
//! adiabatic evolution and an exact branch-and-bound solver.
//!
//! Modules, bottom up:
//!
//! * [`instance`]: formulas, random generation, exhaustive oracles, file format.
//! * [`encoding`]: energy tables, Ising coefficients and the transverse-field driver.
//! * [`dynamics`]: Schrödinger evolution, window-averaged and infinite-time
//!   success probabilities, and the 99% anneal-duration search.
//! * [`classical`]: 2-SAT decision and the mixing-method branch and bound.
//! * [`analytics`]: rank statistics, deciles, scaling fits and portfolios.
//! * [`pipeline`]: configuration, dataset/result files and the batch commands.

pub mod analytics;
pub mod classical;
pub mod dynamics;
pub mod encoding;
pub mod instance;
pub mod pipeline;

/// Version string embedded in result records.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
