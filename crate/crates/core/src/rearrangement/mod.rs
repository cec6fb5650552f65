//! Distribution functions, rearrangements, Lorentz norms and the classical
//! rearrangement inequalities for piecewise-linear fields.

mod clip;
mod superlevel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use superlevel::SuperlevelMeasure;

use crate::error::{domain, usage, Error, Result};
use crate::field::MeshField;
use crate::params::PdeParameters;
use crate::profile::{Interpolation, RadialProfile};
use crate::quadrature::Estimate;
use crate::real::CompensatedSum;
use crate::step::StepFunction;
use crate::Real;

pub(crate) use clip::intersection_area;

/// Default number of uniform cells in measure and level grids.
pub const DEFAULT_GRID: usize = 4096;

/// Indices `(P, q)` of the Lorentz space `L^{P,q}`, both finite and positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzIndex<T> {
    pub p_lorentz: T,
    pub q_lorentz: T,
}

impl<T: Real> LorentzIndex<T> {
    pub fn new(p_lorentz: T, q_lorentz: T) -> Result<Self> {
        if !(p_lorentz > T::zero()) || !p_lorentz.is_finite() || !(q_lorentz > T::zero()) || !q_lorentz.is_finite() {
            return Err(domain(format!("Lorentz indices must be positive and finite (got {p_lorentz}, {q_lorentz})")));
        }
        Ok(Self { p_lorentz, q_lorentz })
    }

    /// The comparison index `(p k, p)`.
    pub fn comparison(p: T, k: T) -> Result<Self> {
        Self::new(p * k, p)
    }
}

fn cummin<T: Real>(values: &mut [T]) {
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            values[i] = values[i - 1];
        }
    }
}

/// Distribution function of `|u|` sampled at the knots of the exact
/// piecewise-quadratic `mu` together with [`DEFAULT_GRID`] uniform levels.
pub fn distribution_function<T: Real>(field: &MeshField<T>) -> StepFunction<T> {
    distribution_from_measure(&SuperlevelMeasure::from_field(field), DEFAULT_GRID)
}

/// Samples an exact distribution function at its knots and `refinement`
/// uniform levels on `[0, max |u|)`.
pub fn distribution_from_measure<T: Real>(mu: &SuperlevelMeasure<T>, refinement: usize) -> StepFunction<T> {
    let top = mu.max_value();
    if !(top > T::zero()) {
        return StepFunction::zero(T::zero());
    }
    let mut b: Vec<T> = mu.knots().iter().copied().filter(|&k| k < top).collect();
    let n = refinement.max(1);
    b.extend((0..n).map(|i| top * T::of_usize(i) / T::of_usize(n)));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    b.dedup();
    let mut values: Vec<T> = b.iter().map(|&t| mu.eval(t)).collect();
    cummin(&mut values);
    StepFunction::new(b, values, top).expect("sampled distribution is a valid step function")
}

/// `u*` on `[0, |Omega|]`: generalized inverse of the exact distribution
/// function, sampled at cell midpoints of a uniform measure grid refined by
/// every plateau breakpoint, with equal neighbouring cells merged.
pub fn decreasing_rearrangement<T: Real>(field: &MeshField<T>, grid_size: usize) -> Result<StepFunction<T>> {
    rearrangement_from_measure(&SuperlevelMeasure::from_field(field), grid_size)
}

/// [`decreasing_rearrangement`] for a precomputed distribution function.
pub fn rearrangement_from_measure<T: Real>(mu: &SuperlevelMeasure<T>, grid_size: usize) -> Result<StepFunction<T>> {
    if grid_size < 2 {
        return Err(usage(format!("grid_size must be at least 2 (got {grid_size})")));
    }
    let cells = measure_grid(mu, None, grid_size);
    let mids: Vec<T> = cells.windows(2).map(|w| T::of(0.5) * (w[0] + w[1])).collect();
    let mut vals: Vec<T> = mids.par_iter().map(|&s| mu.inverse(s)).collect();
    cummin(&mut vals);
    let mut breakpoints = Vec::new();
    let mut values: Vec<T> = Vec::new();
    for (i, v) in vals.into_iter().enumerate() {
        if values.last() != Some(&v) {
            breakpoints.push(cells[i]);
            values.push(v);
        }
    }
    StepFunction::new(breakpoints, values, mu.total_measure())
}

/// Ratio of the geometric node spacing towards the ends in
/// [`rearrangement_nodes`], and the number of uniform cells it spans.
const END_RATIO: f64 = 0.9;
const END_CELLS: f64 = 16.0;

/// Exact values of `u*` at the nodes of a uniform measure grid of
/// `grid_size` cells refined by the plateau breakpoints, so that the linear
/// interpolant is exact on plateaus. Near both ends the nodes are graded
/// geometrically: at a vertex extremum `mu'` vanishes and `u*` has a
/// square-root endpoint.
pub fn rearrangement_nodes<T: Real>(mu: &SuperlevelMeasure<T>, grid_size: usize) -> Result<(Vec<T>, Vec<T>)> {
    if grid_size < 2 {
        return Err(usage(format!("grid_size must be at least 2 (got {grid_size})")));
    }
    let mut s = measure_grid(mu, None, grid_size);
    let total = mu.total_measure();
    let floor = total * T::of(1e-14);
    let mut d = (total * T::of(END_CELLS) / T::of_usize(grid_size)).min(T::of(0.5) * total);
    while d > floor {
        s.push(d);
        s.push(total - d);
        d = d * T::of(END_RATIO);
    }
    s.retain(|&x| x > T::zero() && x < total);
    s.push(T::zero());
    s.push(total);
    s.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    s.dedup();
    let end = mu.total_measure();
    let vals = s.iter().map(|&x| if x >= end { mu.inverse_left(end) } else { mu.inverse(x) }).collect();
    Ok((s, vals))
}

/// `|{s : w(s) > t}|` for the linear interpolant `w` of non-increasing nodes.
pub fn interpolant_measure<T: Real>(s: &[T], values: &[T], t: T) -> T {
    let mut acc = CompensatedSum::new();
    for (w, v) in s.windows(2).zip(values.windows(2)) {
        let (a, b) = (v[0], v[1]);
        if t < b {
            acc.add(w[1] - w[0]);
        } else if t < a {
            acc.add((a - t) / (a - b) * (w[1] - w[0]));
        }
    }
    acc.value()
}

/// Uniform grid of `grid_size` cells on `[0, |Omega|]` plus the plateau
/// breakpoints of one or two distribution functions.
pub(crate) fn measure_grid<T: Real>(a: &SuperlevelMeasure<T>, b: Option<&SuperlevelMeasure<T>>, grid_size: usize) -> Vec<T> {
    let total = a.total_measure();
    let mut s: Vec<T> = (0..=grid_size).map(|i| total * T::of_usize(i) / T::of_usize(grid_size)).collect();
    for mu in std::iter::once(a).chain(b) {
        for (_, lo, hi) in mu.plateaus() {
            s.push(lo);
            s.push(hi);
        }
        s.push(mu.eval(T::zero()));
    }
    s.retain(|&x| x >= T::zero() && x <= total);
    s.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    s.dedup();
    s
}

/// Schwarz symmetrization `r -> u*(omega_n r^n)` on the ball of measure
/// `u_star.total_measure()`, as a step profile.
pub fn schwarz_rearrangement<T: Real>(u_star: &StepFunction<T>, params: &PdeParameters<T>) -> Result<RadialProfile<T>> {
    let m = u_star.total_measure();
    if !(m > T::zero()) || u_star.is_empty() {
        return Err(domain("rearrangement must live on an interval of positive measure"));
    }
    let inv_n = T::one() / params.dim();
    let radius_of = |s: T| (s / params.omega_n).powf(inv_n);
    let mut r: Vec<T> = u_star.breakpoints().iter().map(|&s| radius_of(s)).collect();
    let mut v: Vec<T> = u_star.values().to_vec();
    r.push(params.ball_radius(m));
    v.push(*v.last().expect("non-empty"));
    RadialProfile::new(params.n, r, v, Interpolation::Step)
}

/// Lorentz norm `P^{1/q} (int_0^inf t^q mu(t)^{q/P} dt/t)^{1/q}` of a step
/// distribution function, in closed form plateau by plateau.
pub fn lorentz_norm<T: Real>(mu: &StepFunction<T>, idx: LorentzIndex<T>) -> Result<T> {
    let q = idx.q_lorentz;
    let a = q / idx.p_lorentz;
    let mut acc = CompensatedSum::new();
    for (t0, t1, m) in mu.intervals() {
        if m > T::zero() {
            acc.add(m.powf(a) * (t1.powf(q) - t0.powf(q)) / q);
        }
    }
    let norm = (idx.p_lorentz * acc.value()).powf(T::one() / q);
    if !norm.is_finite() {
        return Err(Error::Overflow("Lorentz integral is not finite".into()));
    }
    Ok(norm)
}

/// Lorentz norm of an exact piecewise-quadratic distribution function by
/// adaptive quadrature, to relative tolerance `rel_tol`.
pub fn lorentz_norm_quadrature<T: Real>(mu: &SuperlevelMeasure<T>, idx: LorentzIndex<T>, rel_tol: T) -> Result<Estimate<T>> {
    let q = idx.q_lorentz;
    let a = q / idx.p_lorentz;
    let scale = mu.max_value().powf(q) / q * mu.total_measure().powf(a);
    if !(scale > T::zero()) {
        return Ok(Estimate::exact(T::zero()));
    }
    let integral = mu.lorentz_integral(idx.p_lorentz, q, rel_tol * scale);
    let norm = (idx.p_lorentz * integral.value).powf(T::one() / q);
    if !norm.is_finite() {
        return Err(Error::Overflow("Lorentz integral is not finite".into()));
    }
    let err = if integral.value > T::zero() { norm / q * integral.error / integral.value } else { T::zero() };
    Ok(Estimate::new(norm, err))
}

/// `(p int_0^inf t^{p-1} mu(t) dt)^{1/p}`, the `L^p` norm by Cavalieri's principle.
pub fn lp_norm_cavalieri<T: Real>(mu: &StepFunction<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(domain(format!("p must be at least 1 (got {p})")));
    }
    let mut acc = CompensatedSum::new();
    for (t0, t1, m) in mu.intervals() {
        acc.add(m * (t1.powf(p) - t0.powf(p)));
    }
    Ok(acc.value().powf(T::one() / p))
}

/// `int |f g|` over the mesh: exact on triangles where neither factor changes
/// sign, subdivided quadrature elsewhere (with its level-difference error).
pub(crate) fn integral_abs_product<T: Real>(f: &MeshField<T>, g: &MeshField<T>) -> Estimate<T> {
    let mesh = f.mesh();
    let mut value = CompensatedSum::new();
    let mut error = CompensatedSum::new();
    for t in 0..mesh.num_triangles() {
        let a = mesh.triangle_area(t);
        let fv = f.triangle_values(t);
        let gv = g.triangle_values(t);
        let constant_sign = |v: [T; 3]| v.iter().all(|&x| x >= T::zero()) || v.iter().all(|&x| x <= T::zero());
        if constant_sign(fv) && constant_sign(gv) {
            let dot = fv[0] * gv[0] + fv[1] * gv[1] + fv[2] * gv[2];
            let sf = fv[0] + fv[1] + fv[2];
            let sg = gv[0] + gv[1] + gv[2];
            value.add((a / T::of(12.0) * (dot + sf * sg)).abs());
        } else {
            let fine = product_mean(fv, gv, 6);
            let coarse = product_mean(fv, gv, 5);
            value.add(a * fine);
            error.add(a * (fine - coarse).abs());
        }
    }
    Estimate::new(value.value(), error.value())
}

fn product_mean<T: Real>(f: [T; 3], g: [T; 3], levels: usize) -> T {
    // f and g are linear in the same barycentric coordinates, so both are
    // subdivided together
    fn rec<T: Real>(f: [T; 3], g: [T; 3], levels: usize) -> T {
        if levels == 0 {
            let mut s = CompensatedSum::new();
            for (bary, w) in crate::quadrature::triangle_rule_degree5() {
                let l = [T::of(bary[0]), T::of(bary[1]), T::of(bary[2])];
                let fv = l[0] * f[0] + l[1] * f[1] + l[2] * f[2];
                let gv = l[0] * g[0] + l[1] * g[1] + l[2] * g[2];
                s.add(T::of(w) * (fv * gv).abs());
            }
            return s.value();
        }
        let h = T::of(0.5);
        let mid = |v: [T; 3]| [h * (v[0] + v[1]), h * (v[1] + v[2]), h * (v[2] + v[0])];
        let (fm, gm) = (mid(f), mid(g));
        T::of(0.25)
            * (rec([f[0], fm[0], fm[2]], [g[0], gm[0], gm[2]], levels - 1)
                + rec([fm[0], f[1], fm[1]], [gm[0], g[1], gm[1]], levels - 1)
                + rec([fm[2], fm[1], f[2]], [gm[2], gm[1], g[2]], levels - 1)
                + rec([fm[0], fm[1], fm[2]], [gm[0], gm[1], gm[2]], levels - 1))
    }
    rec(f, g, levels)
}

/// `int_0^{|Omega|} f* g* ds - int_Omega |f g| dx` with a certified error bound.
///
/// On each cell of the common measure grid `f* g*` is squeezed between its
/// values at the cell ends; the bound is the sum of those brackets plus the
/// error of `int |f g|` on sign-changing triangles.
pub fn hardy_littlewood_gap<T: Real>(f: &MeshField<T>, g: &MeshField<T>, grid_size: usize) -> Result<Estimate<T>> {
    f.require_same_mesh(g)?;
    if grid_size < 2 {
        return Err(usage("grid_size must be at least 2"));
    }
    let mf = SuperlevelMeasure::from_field(f);
    let mg = SuperlevelMeasure::from_field(g);
    let s = measure_grid(&mf, Some(&mg), grid_size);
    let cells: Vec<(T, T)> = s
        .par_windows(2)
        .map(|w| {
            let (s0, s1) = (w[0], w[1]);
            let d = s1 - s0;
            let mid = T::of(0.5) * (s0 + s1);
            let upper = mf.inverse(s0) * mg.inverse(s0);
            let lower = mf.inverse_left(s1) * mg.inverse_left(s1);
            (d * mf.inverse(mid) * mg.inverse(mid), d * (upper - lower).max(T::zero()))
        })
        .collect();
    let mut rearranged = CompensatedSum::new();
    let mut bracket = CompensatedSum::new();
    for (v, e) in cells {
        rearranged.add(v);
        bracket.add(e);
    }
    let direct = integral_abs_product(f, g);
    let rounding = T::of(64.0) * T::epsilon() * (rearranged.value().abs() + direct.value.abs());
    Ok(Estimate::new(rearranged.value() - direct.value, bracket.value() + direct.error + rounding))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestingEntry<T> {
    pub tau: T,
    /// Level of `f` attaining the minimal symmetric difference.
    pub best_t: T,
    pub symmetric_difference: T,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestingReport<T> {
    pub entries: Vec<NestingEntry<T>>,
    pub tolerance: T,
}

impl<T: Real> NestingReport<T> {
    pub fn all_nested(&self) -> bool {
        self.entries.iter().all(|e| !e.flagged)
    }
}

/// Number of uniform candidate levels searched by [`level_set_nesting_check`].
pub const NESTING_CANDIDATES: usize = 512;

/// For each `tau`, the minimum over levels `t` of `|{g > tau} Δ {f > t}|`.
///
/// Candidate levels are the plateau values of `f`, a uniform grid of
/// [`NESTING_CANDIDATES`] levels on `[0, max f]`, and the level of `f` whose
/// superlevel set has the measure of `{g > tau}`. Entries whose minimum
/// exceeds `tolerance` are flagged.
pub fn level_set_nesting_check<T: Real>(f: &MeshField<T>, g: &MeshField<T>, tau_grid: &[T], tolerance: T) -> Result<NestingReport<T>> {
    f.require_same_mesh(g)?;
    f.require_positive("f")?;
    g.require_positive("g")?;
    let mesh = f.mesh();
    let mf = SuperlevelMeasure::from_field(f);
    let mg = SuperlevelMeasure::from_field(g);
    let top = f.max();
    let mut base: Vec<T> = (0..=NESTING_CANDIDATES).map(|i| top * T::of_usize(i) / T::of_usize(NESTING_CANDIDATES)).collect();
    base.extend(mf.plateaus().map(|(t, _, _)| t));

    let entries = tau_grid
        .par_iter()
        .map(|&tau| {
            let measure_g = mg.eval(tau);
            let mut candidates = base.clone();
            candidates.push(mf.inverse(measure_g));
            candidates.push(mf.inverse_left(measure_g));
            let mut best = (T::infinity(), T::zero());
            for &t in &candidates {
                let mut inter = CompensatedSum::new();
                for k in 0..mesh.num_triangles() {
                    let tri = mesh.triangles[k];
                    let pts = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
                    inter.add(intersection_area(pts, f.triangle_values(k), g.triangle_values(k), t, tau));
                }
                let sd = (measure_g + mf.eval(t) - T::of(2.0) * inter.value()).max(T::zero());
                if sd < best.0 {
                    best = (sd, t);
                }
            }
            NestingEntry { tau, best_t: best.1, symmetric_difference: best.0, flagged: best.0 > tolerance }
        })
        .collect();
    Ok(NestingReport { entries, tolerance })
}

/// `int |u|^p` by Cavalieri's principle on the exact distribution function.
pub fn lp_norm_exact<T: Real>(mu: &SuperlevelMeasure<T>, p: T, rel_tol: T) -> Result<Estimate<T>> {
    lorentz_norm_quadrature(mu, LorentzIndex::new(p, p)?, rel_tol)
}
