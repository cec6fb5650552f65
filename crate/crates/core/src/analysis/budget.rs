//! Error budgets attached to every numerical inequality check.

use serde::{Deserialize, Serialize};

use crate::Real;

/// Components of the tolerance an inequality is certified against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Mesh discretization estimate from one refinement.
    pub richardson: f64,
    /// Rearrangement or differencing grid resolution.
    pub grid: f64,
    pub quadrature: f64,
}

/// Assumed convergence order when turning a refinement difference into an
/// error estimate; order 1 is the conservative choice for `p != 2`.
pub const RICHARDSON_ORDER: i32 = 1;

/// Strict passes need a margin of at least this many budgets.
pub const STRICT_FACTOR: f64 = 3.0;

impl ErrorBudget {
    pub fn new(richardson: f64, grid: f64, quadrature: f64) -> Self {
        Self { richardson, grid, quadrature }
    }

    pub fn total(&self) -> f64 {
        self.richardson + self.grid + self.quadrature
    }

    /// `|Q_h - Q_{h/2}| 2^k / (2^k - 1)` for the primary value `Q_h`.
    pub fn richardson_term<T: Real>(coarse: T, fine: T) -> f64 {
        let r = 2f64.powi(RICHARDSON_ORDER);
        (coarse - fine).abs().as_f64() * r / (r - 1.0)
    }

    pub fn with_richardson(mut self, coarse: f64, fine: f64) -> Self {
        self.richardson = Self::richardson_term(coarse, fine);
        self
    }

    /// Componentwise maximum.
    pub fn max(self, other: Self) -> Self {
        Self {
            richardson: self.richardson.max(other.richardson),
            grid: self.grid.max(other.grid),
            quadrature: self.quadrature.max(other.quadrature),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Fail,
    Pass,
    /// Margin at least `STRICT_FACTOR` budgets.
    StrictPass,
}

impl Verdict {
    /// Classifies a signed margin (positive when the inequality holds).
    pub fn of(margin: f64, budget: f64) -> Self {
        if margin >= STRICT_FACTOR * budget && margin > 0.0 {
            Verdict::StrictPass
        } else if margin >= -budget {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }
}

/// `|value| <= budget`, the equality-case test.
pub fn within(value: f64, budget: f64) -> bool {
    value.abs() <= budget
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert_eq!(Verdict::of(-0.1, 0.05), Verdict::Fail);
        assert_eq!(Verdict::of(-0.01, 0.05), Verdict::Pass);
        assert_eq!(Verdict::of(0.1, 0.05), Verdict::Pass);
        assert_eq!(Verdict::of(0.16, 0.05), Verdict::StrictPass);
        assert_eq!(Verdict::of(0.0, 0.0), Verdict::Pass);
    }

    #[test]
    fn richardson_doubles_the_difference() {
        let b = ErrorBudget::default().with_richardson(1.0, 0.75);
        assert_eq!(b.richardson, 0.5);
        assert_eq!(b.total(), 0.5);
    }
}
