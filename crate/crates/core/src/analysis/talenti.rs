//! The differential inequality for the distribution function and the
//! boundary integral identity.

use rayon::prelude::*;
use serde::Serialize;

use super::budget::ErrorBudget;
use crate::error::{domain, usage, Result};
use crate::fem::{exterior_reciprocal_integral, SolveResult};
use crate::field::MeshField;
use crate::params::PdeParameters;
use crate::radial::derivative_with_bound;
use crate::rearrangement::{rearrangement_from_measure, SuperlevelMeasure, DEFAULT_GRID};
use crate::step::StepFunction;
use crate::Real;

/// Upper end of the admissible range of `k` in the Lorentz comparison;
/// `+inf` when the range is unbounded.
pub fn admissible_k<T: Real>(params: &PdeParameters<T>, f_is_one: bool) -> T {
    let n = params.dim();
    let p = params.p;
    if f_is_one {
        let d = n * (p - T::one()) - p;
        if d > T::zero() {
            n * (p - T::one()) / d
        } else {
            T::infinity()
        }
    } else {
        n * (p - T::one()) / ((n - T::of(2.0)) * p + n)
    }
}

/// `f*` of a P1 datum on the measure grid, with a bound on
/// `|int_0^s f* - F_grid(s)|` over all `s`.
pub fn rearranged_datum<T: Real>(f: &MeshField<T>) -> Result<(StepFunction<T>, T)> {
    let mu = SuperlevelMeasure::from_field(f);
    let f_star = rearrangement_from_measure(&mu, DEFAULT_GRID)?;
    let cell = mu.total_measure() / T::of_usize(DEFAULT_GRID);
    Ok((f_star, (f.max() - f.min()) * cell))
}

/// Levels `i max / (count + 1)`, `i = 1..=count`.
pub fn level_grid<T: Real>(max: T, count: usize) -> Vec<T> {
    (1..=count).map(|i| max * T::of_usize(i) / T::of_usize(count + 1)).collect()
}

/// Number of levels of the default t-grid.
pub const LEVELS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TalentiPoint<T> {
    pub t: T,
    pub mu: T,
    /// `gamma_n mu^{(1-1/n) p/(p-1)}`.
    pub lhs: T,
    /// `F(mu)^{1/(p-1)} (-mu' + beta^{-1/(p-1)} int_ext 1/u)`.
    pub rhs: T,
    /// `rhs - lhs`.
    pub margin: T,
    pub budget: ErrorBudget,
    /// False where `mu` is constant on part of the differencing stencil.
    pub determinate: bool,
}

pub fn talenti_margin<T: Real>(
    u: &SolveResult<T>,
    f: &MeshField<T>,
    params: &PdeParameters<T>,
    t_grid: &[T],
) -> Result<Vec<TalentiPoint<T>>> {
    if !u.converged {
        return Err(usage("talenti margins need a converged solve"));
    }
    u.field.require_same_mesh(f)?;
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) || t_grid.iter().any(|&t| !(t >= T::zero())) {
        return Err(domain("the level grid must be non-negative and increasing"));
    }
    let mu = SuperlevelMeasure::from_field(&u.field);
    let (f_star, f_err) = rearranged_datum(f)?;
    let total = mu.total_measure();
    let top = mu.max_value();
    let mus: Vec<T> = t_grid.par_iter().map(|&t| mu.eval(t)).collect();
    let ext: Vec<T> = t_grid
        .par_iter()
        .map(|&t| if t >= top { Ok(T::zero()) } else { exterior_reciprocal_integral(&u.field, t) })
        .collect::<Result<_>>()?;
    let inv = T::one() / (params.p - T::one());
    let beta_term = params.beta.powf(-inv);
    let e = params.measure_exponent();
    let flat_tol = T::of(64.0) * T::epsilon() * total;
    let n = t_grid.len();
    Ok((0..n)
        .map(|i| {
            let t = t_grid[i];
            let m = mus[i];
            if t >= top {
                let zero = T::zero();
                return TalentiPoint { t, mu: zero, lhs: zero, rhs: zero, margin: zero, budget: ErrorBudget::default(), determinate: true };
            }
            let (lo, hi) = (i.saturating_sub(2), (i + 2).min(n - 1));
            // mu is flat left of any level where it equals |Omega| and right of any where it vanishes
            let determinate = (lo..hi).all(|j| (mus[j] - mus[j + 1]).abs() > flat_tol) && mus[lo] < total - flat_tol && mus[hi] > flat_tol;
            let (d, d_err) = derivative_with_bound(t_grid, &mus, i);
            let cum = f_star.integral_to(m.min(f_star.total_measure()));
            let f_pow = cum.powf(inv);
            let bracket = -d + beta_term * ext[i];
            let lhs = params.gamma_n * m.powf(e);
            let rhs = f_pow * bracket;
            let quad = if cum > T::zero() { inv * f_pow / cum * f_err * bracket.abs() } else { T::zero() };
            TalentiPoint {
                t,
                mu: m,
                lhs,
                rhs,
                margin: rhs - lhs,
                budget: ErrorBudget::new(0.0, (f_pow * d_err).as_f64(), quad.as_f64()),
                determinate,
            }
        })
        .collect())
}

/// Summary of a margin profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginSummary {
    pub determinate: usize,
    /// Determinate points with `margin >= -budget`.
    pub passing: usize,
    /// Determinate points with `|margin| <= budget`.
    pub equal: usize,
    pub min_margin: f64,
}

impl MarginSummary {
    pub fn of<T: Real>(points: &[TalentiPoint<T>]) -> Self {
        let mut s = MarginSummary { determinate: 0, passing: 0, equal: 0, min_margin: f64::INFINITY };
        for p in points.iter().filter(|p| p.determinate) {
            let m = p.margin.as_f64();
            let b = p.budget.total();
            s.determinate += 1;
            s.passing += usize::from(m >= -b);
            s.equal += usize::from(m.abs() <= b);
            s.min_margin = s.min_margin.min(m);
        }
        s
    }

    pub fn pass_fraction(&self) -> f64 {
        if self.determinate == 0 {
            1.0
        } else {
            self.passing as f64 / self.determinate as f64
        }
    }

    pub fn equal_fraction(&self) -> f64 {
        if self.determinate == 0 {
            1.0
        } else {
            self.equal as f64 / self.determinate as f64
        }
    }
}

/// Adds the refinement difference of each margin to its budget. The grids of
/// both profiles must agree.
pub fn refine_margins<T: Real>(coarse: &mut [TalentiPoint<T>], fine: &[TalentiPoint<T>]) -> Result<()> {
    if coarse.len() != fine.len() || coarse.iter().zip(fine).any(|(a, b)| a.t != b.t) {
        return Err(usage("refined margins must use the same level grid"));
    }
    for (c, f) in coarse.iter_mut().zip(fine) {
        c.budget = c.budget.with_richardson(c.margin.as_f64(), f.margin.as_f64());
        c.determinate &= f.determinate;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityCheck<T> {
    pub tau: T,
    /// `int_0^tau t^{p-1} int_ext 1/u dt`.
    pub lhs: T,
    /// `(1/(p beta)) int f`.
    pub rhs: T,
}

/// `int_a^b t^{p-1} dt` and `int t^{p-1} ln(c/t) dt` over `[a, b]`.
fn power_moments<T: Real>(p: T, a: T, b: T, c: T) -> (T, T) {
    let plain = (b.powf(p) - a.powf(p)) / p;
    let prim = |t: T| {
        if t <= T::zero() {
            T::zero()
        } else {
            t.powf(p) / p * (c / t).ln() + t.powf(p) / (p * p)
        }
    };
    (plain, prim(b) - prim(a))
}

/// Both sides of the boundary integral inequality at level `tau`. The level
/// integral is evaluated in closed form edge by edge: on an edge of length
/// `L` with trace values `a <= b`, `int_ext 1/u` is `L ln(b/a)/(b-a)` for
/// `t < a` and `L ln(b/t)/(b-a)` for `a <= t < b`.
pub fn integral_identity_check<T: Real>(
    u: &SolveResult<T>,
    f: &MeshField<T>,
    params: &PdeParameters<T>,
    tau: T,
) -> Result<IdentityCheck<T>> {
    u.field.require_same_mesh(f)?;
    if !(tau >= T::zero()) {
        return Err(domain("tau must be non-negative"));
    }
    let mesh = u.field.mesh();
    let vals = u.field.values();
    let p = params.p;
    let mut acc = crate::real::CompensatedSum::new();
    for &[i, j] in &mesh.boundary_edges {
        let (a, b) = (vals[i].min(vals[j]), vals[i].max(vals[j]));
        if !(a > T::zero()) {
            return Err(domain(format!("boundary value {a} is not positive")));
        }
        let len = mesh.edge_length([i, j]);
        let below = tau.min(a);
        if b - a <= T::epsilon() * b {
            acc.add(len / a * below.powf(p) / p);
            continue;
        }
        let slope = len / (b - a);
        acc.add(slope * (b / a).ln() * below.powf(p) / p);
        if tau > a {
            let (_, log_part) = power_moments(p, a, tau.min(b), b);
            acc.add(slope * log_part);
        }
    }
    Ok(IdentityCheck { tau, lhs: acc.value(), rhs: f.integral() / (p * params.beta) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_ranges() {
        let p2 = PdeParameters::new(2, 2.0f64, 1.0).unwrap();
        assert_eq!(admissible_k(&p2, false), 1.0);
        assert!(admissible_k(&p2, true).is_infinite());
        let p3 = PdeParameters::new(3, 2.0f64, 1.0).unwrap();
        assert!((admissible_k(&p3, false) - 0.6).abs() < 1e-15);
        assert_eq!(admissible_k(&p3, true), 3.0);
        let q = PdeParameters::new(2, 3.0f64, 1.0).unwrap();
        assert_eq!(admissible_k(&q, true), 4.0);
    }

    #[test]
    fn log_moment_primitive() {
        // int_1^2 t ln(2/t) dt = 2 ln 2 - 3/4 ... by parts: [t^2/2 ln(2/t) + t^2/4]_1^2
        let (plain, log) = power_moments(2.0f64, 1.0, 2.0, 2.0);
        assert!((plain - 1.5).abs() < 1e-15);
        let exact = (0.0 + 1.0) - (0.5 * 2f64.ln() + 0.25);
        assert!((log - exact).abs() < 1e-15);
    }
}
