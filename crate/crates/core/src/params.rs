//! Problem parameters and the dimensional constants derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::Real;

/// Dimension, exponent and Robin parameter of a p-Laplace problem, together
/// with the constants every comparison formula needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeParameters<T> {
    pub n: usize,
    pub p: T,
    pub beta: T,
    /// Measure of the unit ball in `R^n`.
    pub omega_n: T,
    /// `(n omega_n^{1/n})^{p/(p-1)}`.
    pub gamma_n: T,
    /// Conjugate exponent `p/(p-1)`.
    pub p_conj: T,
}

/// Measure of the unit ball in `R^n`, `pi^{n/2} / Gamma(n/2 + 1)`, evaluated
/// through the recursion `omega_n = 2 pi / n * omega_{n-2}`.
pub fn unit_ball_volume<T: Real>(n: usize) -> T {
    let two_pi = T::PI() + T::PI();
    let mut omega = if n.is_multiple_of(2) { T::one() } else { T::of(2.0) };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        omega = omega * two_pi / T::of_usize(k);
        k += 2;
    }
    omega
}

impl<T: Real> PdeParameters<T> {
    /// Validates `n >= 2`, `p > 1`, `beta > 0` and derives `omega_n`, `gamma_n`, `p'`.
    pub fn new(n: usize, p: T, beta: T) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!("dimension n must be at least 2 (got {n})")));
        }
        if !(p > T::one()) || !p.is_finite() {
            return Err(domain(format!("p must exceed 1 (got {p})")));
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(domain(format!("beta must be positive (got {beta})")));
        }
        let omega_n = unit_ball_volume::<T>(n);
        let p_conj = p / (p - T::one());
        let n_t = T::of_usize(n);
        let gamma_n = (n_t * omega_n.powf(T::one() / n_t)).powf(p_conj);
        Ok(Self { n, p, beta, omega_n, gamma_n, p_conj })
    }

    /// Same parameters with another Robin coefficient.
    pub fn with_beta(&self, beta: T) -> Result<Self> {
        Self::new(self.n, self.p, beta)
    }

    #[inline]
    pub fn dim(&self) -> T {
        T::of_usize(self.n)
    }

    /// Radius of the ball of the given measure.
    pub fn ball_radius(&self, volume: T) -> T {
        (volume / self.omega_n).powf(T::one() / self.dim())
    }

    /// Perimeter of the ball of the given measure, `n omega_n^{1/n} V^{(n-1)/n}`.
    pub fn ball_perimeter(&self, volume: T) -> T {
        let n = self.dim();
        n * self.omega_n.powf(T::one() / n) * volume.powf((n - T::one()) / n)
    }

    /// Exponent `(1 - 1/n) p/(p-1)` that appears on the measure in Talenti-type inequalities.
    pub fn measure_exponent(&self) -> T {
        (T::one() - T::one() / self.dim()) * self.p_conj
    }
}

/// Free-function form of [`PdeParameters::new`].
pub fn make_parameters<T: Real>(n: usize, p: T, beta: T) -> Result<PdeParameters<T>> {
    PdeParameters::new(n, p, beta)
}
