//! Exact symbolic algebra on phase space, moment-hierarchy synthesis, and
//! independent numerical oracles for continuous-variable quantum dynamics.
//!
//! The crate is organized in three layers:
//!
//! * an exact layer ([`poly`], [`diffop`], [`hierarchy`], [`lindblad`],
//!   [`symplectic::algebra_closure_check`]) where every coefficient is a
//!   Gaussian rational and zero tests are decidable;
//! * a dense numerical layer ([`symplectic`], [`quantize`]) propagating
//!   Gaussian states by mean/covariance flow and arbitrary states on a
//!   cutoff Fock space;
//! * a statistical layer ([`sampling`]) drawing heterodyne samples and
//!   estimating cumulants with k-statistics.
//!
//! The exact and numerical layers deliberately overlap: everything the
//! symbolic side claims about moment dynamics can be replayed against the
//! Fock-space oracle, and the test suite does exactly that.

pub mod context;
pub mod diffop;
pub mod expr;
pub mod hierarchy;
pub mod lindblad;
pub mod linalg;
pub mod poly;
pub mod quantize;
pub mod rational;
pub mod sampling;
pub mod symplectic;

mod error;

pub use context::AlgebraContext;
pub use diffop::DiffOperator;
pub use error::PhaseError;
pub use poly::{PhasePolynomial, Var};
pub use rational::{GaussRat, Rat};

/// Version tag embedded in every JSON document the crate emits.
pub const SCHEMA_VERSION: &str = "phasespace/1";

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, PhaseError>;
