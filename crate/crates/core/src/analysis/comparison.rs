//! Lorentz-norm and pointwise comparison of a solution with its symmetrized
//! counterpart.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::budget::{ErrorBudget, Verdict};
use super::talenti::{admissible_k, rearranged_datum};
use crate::error::{usage, Result};
use crate::fem::SolveResult;
use crate::field::MeshField;
use crate::params::PdeParameters;
use crate::quadrature::Estimate;
use crate::radial::{radial_lorentz_norm, robin_min_value, RadialProblem};
use crate::rearrangement::{lorentz_norm_quadrature, measure_grid, LorentzIndex, SuperlevelMeasure, DEFAULT_GRID};
use crate::Real;

/// Relative accuracy requested from the Lorentz quadratures.
pub const LORENTZ_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LorentzEntry<T> {
    pub k: T,
    pub norm_u: Estimate<T>,
    pub norm_v: Estimate<T>,
}

impl<T: Real> LorentzEntry<T> {
    /// `||v|| - ||u||`.
    pub fn margin(&self) -> T {
        self.norm_v.value - self.norm_u.value
    }

    pub fn relative_difference(&self) -> T {
        (self.norm_u.value - self.norm_v.value).abs() / self.norm_v.value
    }

    pub fn quadrature_error(&self) -> T {
        self.norm_u.error + self.norm_v.error
    }
}

/// Radial problem on the ball of the domain's measure with datum `f*`, and
/// the bound on `|int_0^s f*|` errors from the rearrangement grid.
pub fn symmetrized_problem<T: Real>(f: &MeshField<T>, params: &PdeParameters<T>) -> Result<(RadialProblem<T>, T)> {
    let (f_star, err) = rearranged_datum(f)?;
    let volume = f.mesh().measure();
    let scale = volume / f_star.total_measure();
    Ok((RadialProblem::with_volume(*params, &f_star, volume)?, err * scale))
}

pub(crate) fn check_k<T: Real>(params: &PdeParameters<T>, k: T, f_is_one: bool) -> Result<()> {
    let bound = admissible_k(params, f_is_one);
    if !(k > T::zero()) || k > bound {
        return Err(usage(format!("k = {k} lies outside the admissible range (0, {bound}]")));
    }
    Ok(())
}

/// `||u||_{L^{pk,p}}` from the exact distribution function of the P1 solution
/// and `||v||_{L^{pk,p}}` of the symmetrized Robin solution, per `k`.
pub fn lorentz_comparison<T: Real>(
    u: &SolveResult<T>,
    problem: &RadialProblem<T>,
    params: &PdeParameters<T>,
    k_list: &[T],
    f_is_one: bool,
) -> Result<Vec<LorentzEntry<T>>> {
    for &k in k_list {
        check_k(params, k, f_is_one)?;
    }
    let mu = SuperlevelMeasure::from_field(&u.field);
    let vm = robin_min_value(problem);
    let tol = T::of(LORENTZ_TOL);
    k_list
        .iter()
        .map(|&k| {
            let idx = LorentzIndex::comparison(params.p, k)?;
            Ok(LorentzEntry { k, norm_u: lorentz_norm_quadrature(&mu, idx, tol)?, norm_v: radial_lorentz_norm(problem, vm, idx, tol)? })
        })
        .collect()
}

/// Sup-distance statistics between `u*` (exact, from a distribution
/// function) and a decreasing comparison function `w*` on `[0, |Omega|]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RearrangementGap<T> {
    /// Upper bound of `sup_s (u*(s) - w*(s))`, from cellwise monotonicity.
    pub max_excess: T,
    /// Upper bound of `sup_s (w*(s) - u*(s))`.
    pub max_deficit: T,
    /// `max_s |u* - w*|` over the grid nodes.
    pub node_max_abs: T,
    /// Location of the largest nodal excess.
    pub argmax: T,
    /// `max(max_excess, max_deficit) - node_max_abs`.
    pub grid_bound: T,
    /// `int_0^{|Omega|} (w* - u*)_+ ds` by the midpoint rule.
    pub deficit_integral: T,
}

pub(crate) fn rearrangement_gap<T: Real, W: Fn(T) -> T + Sync>(
    mu: &SuperlevelMeasure<T>,
    w_star: W,
    grid_size: usize,
) -> RearrangementGap<T> {
    let s = measure_grid(mu, None, grid_size);
    let end = mu.total_measure();
    let u_at = |x: T| if x >= end { mu.inverse_left(end) } else { mu.inverse(x) };
    let u_nodes: Vec<T> = s.par_iter().map(|&x| u_at(x)).collect();
    let w_nodes: Vec<T> = s.par_iter().map(|&x| w_star(x)).collect();
    let mut g = RearrangementGap {
        max_excess: -T::infinity(),
        max_deficit: -T::infinity(),
        node_max_abs: T::zero(),
        argmax: T::zero(),
        grid_bound: T::zero(),
        deficit_integral: T::zero(),
    };
    let mut node_excess = -T::infinity();
    for i in 0..s.len() {
        let d = u_nodes[i] - w_nodes[i];
        g.node_max_abs = g.node_max_abs.max(d.abs());
        if d > node_excess {
            node_excess = d;
            g.argmax = s[i];
        }
        if i + 1 < s.len() {
            g.max_excess = g.max_excess.max(u_nodes[i] - w_nodes[i + 1]);
            g.max_deficit = g.max_deficit.max(w_nodes[i] - u_nodes[i + 1]);
            let mid = T::of(0.5) * (s[i] + s[i + 1]);
            let dm = (w_star(mid) - mu.inverse(mid)).max(T::zero());
            g.deficit_integral = g.deficit_integral + dm * (s[i + 1] - s[i]);
        }
    }
    g.grid_bound = (g.max_excess.max(g.max_deficit) - g.node_max_abs).max(T::zero());
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointwiseCheck<T> {
    pub gap: RearrangementGap<T>,
    /// Interpolation and quadrature error of the radial profile.
    pub profile_error: T,
}

impl<T: Real> PointwiseCheck<T> {
    /// Upper bound of `max_s (u*(s) - v*(s))`.
    pub fn max_violation(&self) -> T {
        self.gap.max_excess
    }
}

/// `max_s (u*(s) - v*(s))` on the measure grid, for `f = 1` and
/// `p <= n/(n-1)` where the pointwise comparison holds.
pub fn pointwise_comparison<T: Real>(
    u: &SolveResult<T>,
    v: &crate::profile::RadialProfile<T>,
    params: &PdeParameters<T>,
    f_is_one: bool,
) -> Result<PointwiseCheck<T>> {
    let n = params.dim();
    let upper = n / (n - T::one());
    if !f_is_one {
        return Err(usage("the pointwise comparison is stated for f = 1 only"));
    }
    if params.p > upper {
        return Err(usage(format!("the pointwise comparison needs 1 < p <= n/(n-1) = {upper} (got p = {})", params.p)));
    }
    let mu = SuperlevelMeasure::from_field(&u.field);
    let inv_n = T::one() / n;
    let omega = params.omega_n;
    let v_star = |s: T| v.eval((s / omega).powf(inv_n));
    Ok(PointwiseCheck { gap: rearrangement_gap(&mu, v_star, DEFAULT_GRID), profile_error: v.quadrature_error })
}

/// One named pass/fail entry of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckFlag {
    pub check: String,
    pub passed: bool,
    pub verdict: Verdict,
    /// Signed margin; positive when the inequality holds.
    pub margin: f64,
    pub budget: f64,
    pub detail: String,
}

impl CheckFlag {
    pub fn inequality(check: &str, margin: f64, budget: f64, detail: impl Into<String>) -> Self {
        let verdict = Verdict::of(margin, budget);
        Self { check: check.into(), passed: verdict.passed(), verdict, margin, budget, detail: detail.into() }
    }

    /// Passing iff `passed`; `margin` and `budget` are informational.
    pub fn custom(check: &str, passed: bool, margin: f64, budget: f64, detail: impl Into<String>) -> Self {
        let verdict = if passed { Verdict::of(margin, budget).max_pass() } else { Verdict::Fail };
        Self { check: check.into(), passed, verdict, margin, budget, detail: detail.into() }
    }
}

impl Verdict {
    fn max_pass(self) -> Self {
        if self == Verdict::Fail {
            Verdict::Pass
        } else {
            self
        }
    }
}

/// Outcome of one scenario: Lorentz norms per `k`, their margins and
/// budgets, and every requested check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub k_values: Vec<f64>,
    pub norm_u: Vec<f64>,
    pub norm_v: Vec<f64>,
    /// `||v|| - ||u||` per `k`.
    pub margins: Vec<f64>,
    pub budgets: Vec<ErrorBudget>,
    pub flags: Vec<CheckFlag>,
}

impl ComparisonReport {
    pub fn new(scenario: &str, params: &PdeParameters<f64>) -> Self {
        Self {
            scenario: scenario.into(),
            n: params.n,
            p: params.p,
            beta: params.beta,
            k_values: Vec::new(),
            norm_u: Vec::new(),
            norm_v: Vec::new(),
            margins: Vec::new(),
            budgets: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.flags.iter().all(|f| f.passed)
    }
}
