//! Simulation and compression of shared-randomness communication networks.
//!
//! The crate models finite networks of parties connected by sources of shared
//! randomness, evaluates their exact outcome distributions, compresses those
//! sources by empirical resampling with a certified infinity-norm error, and
//! computes the associated cardinality bounds. A brute-force feasibility
//! search reproduces the exact-realization lower bounds for the two reference
//! scenarios.

pub mod bounds;
pub mod compress;
pub mod netmodel;
pub mod pmf;
pub mod rng;
pub mod scenarios;
pub mod witness;

pub use netmodel::{ConditionalDistribution, NetworkSpec, PartySpec, SourceSpec, ValidatedNetwork};
pub use pmf::FinitePmf;
