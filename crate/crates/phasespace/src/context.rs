//! Algebra context: mode count and the exact value of hbar.

use crate::rational::{rat_to_f64, Rat};
use crate::{PhaseError, Result};
use num::traits::Signed;
use num::Zero;
use std::fmt;
use std::sync::Arc;

/// Shared parameters of one phase-space algebra: the number of modes `N`
/// and the exact rational value of hbar.
///
/// All values built in one context agree on both; mixing contexts is an
/// error surfaced by every binary operation. Contexts are cheap to clone
/// (the rational is behind an `Arc`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraContext {
    modes: usize,
    hbar: Arc<Rat>,
}

impl AlgebraContext {
    /// Standard context with hbar = 1.
    pub fn new(modes: usize) -> Result<Self> {
        Self::with_hbar(modes, Rat::from_integer(1.into()))
    }

    /// Context with an explicit positive rational hbar.
    pub fn with_hbar(modes: usize, hbar: Rat) -> Result<Self> {
        if modes == 0 {
            return Err(PhaseError::InvalidContext("need at least one mode".into()));
        }
        if !hbar.is_positive() {
            return Err(PhaseError::InvalidContext(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        Ok(AlgebraContext {
            modes,
            hbar: Arc::new(hbar),
        })
    }

    /// Degenerate context with hbar = 0, for classical-limit checks only.
    /// Fock-space operations reject it.
    pub fn classical(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(PhaseError::InvalidContext("need at least one mode".into()));
        }
        Ok(AlgebraContext {
            modes,
            hbar: Arc::new(Rat::zero()),
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of canonical variables, 2N.
    pub fn vars(&self) -> usize {
        2 * self.modes
    }

    pub fn hbar(&self) -> &Rat {
        &self.hbar
    }

    pub fn hbar_f64(&self) -> f64 {
        rat_to_f64(&self.hbar)
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(PhaseError::ContextMismatch(format!(
                "{self} vs {other}"
            )))
        }
    }

    pub fn ensure_quantum(&self) -> Result<()> {
        if self.hbar.is_zero() {
            Err(PhaseError::InvalidContext(
                "operation requires hbar > 0".into(),
            ))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for AlgebraContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(modes={}, hbar={})", self.modes, self.hbar)
    }
}
