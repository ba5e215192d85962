//! Multi-element flow-driven spectral chaos (ME-FSC).
//!
//! Propagates parametric uncertainty through systems of random ODEs. The
//! random domain is split into equal-size elements; on each element the
//! solution is expanded in an orthogonal basis that is regenerated at every
//! time step from the current state and its time derivatives, the random
//! modes are carried over exactly, and the Galerkin system is advanced with
//! RK4. Local moments are combined with the laws of total expectation and
//! total variance.
//!
//! Module map:
//!
//! - [`measures`]: distributions, partitions, per-element quadrature.
//! - [`basis`]: Gram-Schmidt bases, projection and evaluation.
//! - [`flowmap`]: the [`Model`] trait, enriched germs and Taylor flow maps.
//! - [`element`]: the single-element solver.
//! - [`aggregate`]: element loop and global moments.
//! - [`reference`]: closed-form, quasi-exact and Monte Carlo oracles, error metrics.
//! - [`problems`]: the four benchmark models and their parameter presets.
//! - [`bench`]: run configuration, orchestration and CSV output.

pub mod aggregate;
pub mod basis;
pub mod bench;
pub mod element;
mod error;
pub mod flowmap;
pub mod measures;
pub mod problems;
pub mod reference;

pub use error::{Error, Result};
pub use flowmap::{Model, StateLayout};
