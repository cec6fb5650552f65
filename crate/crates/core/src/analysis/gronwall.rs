//! Gronwall-type bounds for `tau xi' <= (q-1) xi + C` on sampled functions.

use serde::Serialize;

use crate::error::{usage, Result};
use crate::radial::derivative_with_bound;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GronwallPoint<T> {
    pub tau: T,
    pub xi: T,
    pub derivative: T,
    /// Difference between the two stencils used for `xi'`.
    pub derivative_error: T,
    /// `(q-1) xi + C - tau xi'`.
    pub hypothesis_margin: T,
    pub hypothesis_tol: T,
    pub hypothesis_holds: bool,
    /// `(xi0 + C/(q-1)) (tau/tau0)^{q-1} - C/(q-1)`.
    pub value_bound: T,
    /// `((q-1) xi0 + C)/tau0 (tau/tau0)^{q-2}`.
    pub derivative_bound: T,
    /// `None` where the hypothesis fails at or before `tau`.
    pub value_bound_holds: Option<bool>,
    pub derivative_bound_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallReport<T> {
    pub q: T,
    pub c: T,
    pub tau0: T,
    pub points: Vec<GronwallPoint<T>>,
    /// Sample points where the hypothesis fails.
    pub violations: Vec<T>,
}

impl<T: Real> GronwallReport<T> {
    pub fn hypothesis_holds(&self) -> bool {
        self.violations.is_empty()
    }

    /// Both bounds hold wherever they are asserted.
    pub fn bounds_hold(&self) -> bool {
        self.points.iter().all(|p| p.value_bound_holds != Some(false) && p.derivative_bound_holds != Some(false))
    }

    /// Largest `|xi - bound|` over the asserted points.
    pub fn max_value_slack(&self) -> T {
        self.points.iter().filter(|p| p.value_bound_holds.is_some()).fold(T::zero(), |m, p| m.max((p.value_bound - p.xi).abs()))
    }
}

/// Checks the hypothesis at every sample, then both bounds on the prefix of
/// samples where it holds. `taus` must be increasing and start at `tau0`.
pub fn gronwall_bounds<T: Real>(taus: &[T], xis: &[T], tau0: T, q: T, c: T) -> Result<GronwallReport<T>> {
    if !(tau0 > T::zero()) || !(q > T::one()) || !(c >= T::zero()) {
        return Err(usage("gronwall bounds need tau0 > 0, q > 1 and C >= 0"));
    }
    if taus.len() != xis.len() || taus.len() < 3 {
        return Err(usage("need at least three (tau, xi) samples of equal count"));
    }
    if taus.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(usage("tau samples must be increasing"));
    }
    if (taus[0] - tau0).abs() > T::of(4.0) * T::epsilon() * tau0 {
        return Err(usage(format!("the first sample must sit at tau0 = {tau0}")));
    }
    let qm = q - T::one();
    let xi0 = xis[0];
    let shift = c / qm;
    let round = T::of(64.0) * T::epsilon();
    let mut points = Vec::with_capacity(taus.len());
    let mut violations = Vec::new();
    let mut valid = true;
    for i in 0..taus.len() {
        let (tau, xi) = (taus[i], xis[i]);
        let (d, d_err) = derivative_with_bound(taus, xis, i);
        let margin = qm * xi + c - tau * d;
        let scale = (qm * xi).abs() + c + (tau * d).abs();
        let hyp_tol = tau * d_err + round * scale;
        let holds = margin >= -hyp_tol;
        if !holds {
            violations.push(tau);
            valid = false;
        }
        let ratio = tau / tau0;
        let value_bound = (xi0 + shift) * ratio.powf(qm) - shift;
        let derivative_bound = (qm * xi0 + c) / tau0 * ratio.powf(q - T::of(2.0));
        let value_tol = round * ((xi0 + shift).abs() * ratio.powf(qm) + shift + xi.abs());
        let der_tol = d_err + round * (derivative_bound.abs() + d.abs());
        points.push(GronwallPoint {
            tau,
            xi,
            derivative: d,
            derivative_error: d_err,
            hypothesis_margin: margin,
            hypothesis_tol: hyp_tol,
            hypothesis_holds: holds,
            value_bound,
            derivative_bound,
            value_bound_holds: valid.then_some(xi <= value_bound + value_tol),
            derivative_bound_holds: valid.then_some(d <= derivative_bound + der_tol),
        });
    }
    Ok(GronwallReport { q, c, tau0, points, violations })
}
