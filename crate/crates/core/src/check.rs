//! `{measured, bound, ok}` records for inequality checks.

use serde::{Deserialize, Serialize};

/// Absolute allowance for floating-point rounding in bound comparisons.
pub const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub measured: f64,
    pub bound: f64,
    pub ok: bool,
}

impl BoundCheck {
    /// `measured ≤ bound`.
    pub fn at_most(measured: f64, bound: f64) -> Self {
        Self {
            measured,
            bound,
            ok: measured <= bound + ROUNDING,
        }
    }

    /// `measured ≥ bound`.
    pub fn at_least(measured: f64, bound: f64) -> Self {
        Self {
            measured,
            bound,
            ok: measured >= bound - ROUNDING,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions() {
        assert!(BoundCheck::at_most(0.1, 0.2).ok);
        assert!(!BoundCheck::at_most(0.3, 0.2).ok);
        assert!(BoundCheck::at_least(0.3, 0.2).ok);
        assert!(!BoundCheck::at_least(0.1, 0.2).ok);
    }
}
