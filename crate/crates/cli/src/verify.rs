//! The acceptance matrix: every criterion evaluated on fixed scenarios, with
//! solves shared between criteria.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use talenti_core::analysis::{admissible_k, gronwall_bounds, lorentz_comparison, polya_szego_gap, MarginSummary, Verdict};
use talenti_core::fem::p_dirichlet_seminorm;
use talenti_core::radial::radial_boundary_identity;
use talenti_core::rearrangement::{
    decreasing_rearrangement, hardy_littlewood_gap, interpolant_measure, lorentz_norm, lp_norm_cavalieri, lp_norm_exact,
    rearrangement_nodes, LorentzIndex, SuperlevelMeasure,
};
use talenti_core::{ball_mesh, Mesh64, MeshField64, PdeParameters64, RadialProblem, StepFunction64};

use crate::datum::DatumSource;
use crate::runner::{
    evaluate, pointwise_summary, polya_summary, radial_max, refined_margins, solve_pair, SolvedPair, IDENTITY_REL, LORENTZ_EQUALITY_REL,
    TALENTI_FRACTION,
};
use crate::scenario::{Check, Domain, Scenario};
use crate::{check_interrupt, CliError};

/// Supported mesh sizes for the acceptance matrix (exclusive bounds).
pub const MESH_H_RANGE: (f64, f64) = (0.005, 0.1);
/// Wall-clock limits of criteria 1 (per case) and 3.
pub const CASE_SECONDS: f64 = 120.0;
pub const STRICT_SECONDS: f64 = 300.0;
/// Criterion 2 tolerances: relative L2 error and error ratio under halving, for p = 2 and p = 3.
pub const ORACLE_TOL: [(f64, f64, f64); 2] = [(2.0, 1e-2, 1.7), (3.0, 2e-2, 1.2)];
/// Relative tolerance of equimeasurability and L^p preservation at grid 10^4.
pub const REARRANGEMENT_REL: f64 = 1e-6;
pub const REARRANGEMENT_GRID: usize = 10_000;
/// Lorentz and Cavalieri agreement on step functions.
pub const CAVALIERI_REL: f64 = 1e-10;
/// Pólya–Szegő gap of a radial interpolant, relative to its seminorm.
pub const RADIAL_POLYA_REL: f64 = 2e-2;
const RADIAL_POLYA_H: f64 = 0.01;
const PLATEAU_FIELDS: usize = 200;
const HARDY_LITTLEWOOD_PAIRS: usize = 500;
const STEP_CASES: usize = 200;
const POLYA_GRID: usize = 4096;

pub const CRITERIA: [&str; 10] = [
    "disk equality of Lorentz norms",
    "solver against the radial oracle",
    "strict inequality off the ball",
    "pointwise comparison",
    "Talenti differential inequality",
    "boundary integral identities",
    "Polya-Szego inequality",
    "rearrangement suite",
    "Gronwall bounds",
    "flux balance and minimum principle",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub mesh_h: f64,
    pub seed: u64,
}

impl VerifyOptions {
    pub fn new(mesh_h: f64, seed: u64) -> Result<Self, CliError> {
        if !(mesh_h > MESH_H_RANGE.0 && mesh_h < MESH_H_RANGE.1) {
            return Err(CliError::Config(format!(
                "mesh_h = {mesh_h} is outside the supported range ({}, {})",
                MESH_H_RANGE.0, MESH_H_RANGE.1
            )));
        }
        Ok(Self { mesh_h, seed })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    /// One line per case, each prefixed `ok` or `FAIL`.
    pub details: Vec<String>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn summary(&self) -> String {
        format!("criterion {:>2} {} {} ({:.1} s)", self.id, if self.passed { "PASS" } else { "FAIL" }, self.title, self.seconds)
    }
}

/// Collects per-case outcomes of one criterion.
struct Cases {
    lines: Vec<String>,
    passed: bool,
}

impl Cases {
    fn new() -> Self {
        Self { lines: Vec::new(), passed: true }
    }

    fn record(&mut self, ok: bool, line: impl Into<String>) {
        self.passed &= ok;
        self.lines.push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, line.into()));
    }

    /// Records a case that could not be evaluated.
    fn error(&mut self, what: &str, e: &CliError) {
        self.record(false, format!("{what}: {e}"));
    }
}

/// Runs criteria and caches the scenario solves they share.
pub struct Verifier {
    pub options: VerifyOptions,
    cache: Mutex<BTreeMap<String, Arc<SolvedPair>>>,
}

fn scenario(domain: Domain, p: f64, beta: f64, h: f64) -> Scenario {
    Scenario::new(domain, p, beta, h)
}

fn square() -> Domain {
    Domain::Square
}

fn ellipse(ratio: f64) -> Domain {
    Domain::Ellipse { a: ratio, b: 1.0 }
}

impl Verifier {
    pub fn new(options: VerifyOptions) -> Self {
        Self { options, cache: Mutex::new(BTreeMap::new()) }
    }

    fn h(&self) -> f64 {
        self.options.mesh_h
    }

    fn disk_cases(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for beta in [0.5, 1.0, 2.0] {
            for p in [1.5, 2.0, 3.0] {
                out.push(scenario(Domain::Disk, p, beta, self.h()));
            }
        }
        out
    }

    fn strict_cases(&self) -> Vec<Scenario> {
        vec![scenario(square(), 2.0, 1.0, self.h()).with_area(1.0), scenario(ellipse(2.0), 2.0, 1.0, self.h())]
    }

    fn pointwise_cases(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for p in [1.5, 2.0] {
            for d in [Domain::Disk, square(), ellipse(1.5)] {
                out.push(scenario(d, p, 1.0, self.h()));
            }
        }
        out
    }

    /// Every scenario the matrix solves, in a fixed order without repeats.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out: Vec<Scenario> = Vec::new();
        for s in self.disk_cases().into_iter().chain(self.strict_cases()).chain(self.pointwise_cases()) {
            if !out.iter().any(|o| o.label() == s.label()) {
                out.push(s);
            }
        }
        out
    }

    /// The cached solve of `scenario` at `h` and `h/2`.
    pub fn pair(&self, scenario: &Scenario) -> Result<Arc<SolvedPair>, CliError> {
        let key = scenario.label();
        if let Some(p) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        check_interrupt()?;
        let pair = Arc::new(solve_pair(scenario, &DatumSource::One)?);
        self.cache.lock().expect("cache lock").insert(key, pair.clone());
        Ok(pair)
    }

    /// Evaluates criterion `id` (1 to 10).
    pub fn criterion(&self, id: usize) -> Result<CriterionResult, CliError> {
        let title = CRITERIA.get(id.wrapping_sub(1)).ok_or_else(|| CliError::Config(format!("no criterion {id}")))?;
        let start = Instant::now();
        let cases = match id {
            1 => self.disk_equality()?,
            2 => self.solver_oracle()?,
            3 => self.strict_inequality()?,
            4 => self.pointwise()?,
            5 => self.talenti()?,
            6 => self.identities()?,
            7 => self.polya_szego()?,
            8 => rearrangement_suite(self.options.seed, self.h())?,
            9 => gronwall_suite()?,
            _ => self.invariants()?,
        };
        Ok(CriterionResult {
            id,
            title: title.to_string(),
            passed: cases.passed,
            details: cases.lines,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    fn disk_equality(&self) -> Result<Cases, CliError> {
        let mut cases = Cases::new();
        for s in self.disk_cases() {
            let start = Instant::now();
            let result = (|| -> Result<_, CliError> {
                let params = s.params()?;
                let pair = self.pair(&s)?;
                let k_max = admissible_k(&params, false);
                Ok(lorentz_comparison(&pair.coarse.u, &pair.coarse.problem, &params, &[0.5 * k_max, k_max], true)?)
            })();
            let seconds = start.elapsed().as_secs_f64();
            match result {
                Ok(entries) => {
                    for e in entries {
                        let rel = e.relative_difference();
                        cases.record(
                            rel <= LORENTZ_EQUALITY_REL,
                            format!("p={} beta={} k={:.4}: relative difference {rel:.3e} (tol {LORENTZ_EQUALITY_REL:e})", s.p, s.beta, e.k),
                        );
                    }
                    cases.record(seconds <= CASE_SECONDS, format!("p={} beta={}: {seconds:.1} s (limit {CASE_SECONDS} s)", s.p, s.beta));
                }
                Err(CliError::Interrupted) => return Err(CliError::Interrupted),
                Err(e) => cases.error(&s.label(), &e),
            }
        }
        Ok(cases)
    }

    fn solver_oracle(&self) -> Result<Cases, CliError> {
        let mut cases = Cases::new();
        for (p, tol, ratio_min) in ORACLE_TOL {
            let s = scenario(Domain::Disk, p, 1.0, self.h());
            let pair = match self.pair(&s) {
                Ok(pair) => pair,
                Err(CliError::Interrupted) => return Err(CliError::Interrupted),
                Err(e) => {
                    cases.error(&s.label(), &e);
                    continue;
                }
            };
            let exact = |x: [f64; 2]| robin_disk_solution(p, s.beta, x[0].hypot(x[1]).min(1.0));
            let rel = |f: &MeshField64| {
                let (err, norm) = f.l2_error(exact);
                err / norm
            };
            let (ec, ef) = (rel(&pair.coarse.u.field), rel(&pair.fine.u.field));
            cases.record(ec <= tol, format!("p={p}: relative L2 error {ec:.3e} at h={} (tol {tol:e})", s.mesh_h));
            cases.record(ec / ef >= ratio_min, format!("p={p}: error ratio {:.3} under halving (min {ratio_min})", ec / ef));
        }
        Ok(cases)
    }

    fn strict_inequality(&self) -> Result<Cases, CliError> {
        let mut cases = Cases::new();
        let start = Instant::now();
        for s in self.strict_cases() {
            let s = s.with_checks(&[Check::Lorentz]).with_k(&[1.0]);
            match self.pair(&s).and_then(|pair| evaluate(&s, &pair)) {
                Ok(eval) => {
                    let r = &eval.report;
                    for i in 0..r.k_values.len() {
                        let (m, b) = (r.margins[i], r.budgets[i].total());
                        let strict = Verdict::of(m, b) == Verdict::StrictPass;
                        cases.record(strict, format!("{}: ||v|| - ||u|| = {m:.4e}, 3 x budget = {:.4e}", s.label(), 3.0 * b));
                    }
                }
                Err(CliError::Interrupted) => return Err(CliError::Interrupted),
                Err(e) => cases.error(&s.label(), &e),
            }
        }
        let seconds = start.elapsed().as_secs_f64();
        cases.record(seconds <= STRICT_SECONDS, format!("{seconds:.1} s (limit {STRICT_SECONDS} s)"));
        Ok(cases)
    }

    fn pointwise(&self) -> Result<Cases, CliError> {
        let mut cases = Cases::new();
        for s in self.pointwise_cases() {
            match self.pair(&s).and_then(|pair| pointwise_summary(&pair, &s.params()?)) {
                Ok(pw) => {
                    cases.record(
                        pw.excess <= pw.excess_budget,
                        format!("{}: max (u* - v*) = {:.3e}, budget {:.3e}", s.label(), pw.excess, pw.excess_budget),
                    );
                    let equal = pw.symmetric <= pw.symmetric_budget;
                    let expected = s.domain.is_ball();
                    cases.record(
                        equal == expected,
                        format!(
                            "{}: max |u* - v*| = {:.3e}, budget {:.3e} ({} expected)",
                            s.label(),
                            pw.symmetric,
                            pw.symmetric_budget,
                            if expected { "equality" } else { "a gap" }
                        ),
                    );
                }
                Err(CliError::Interrupted) => return Err(CliError::Interrupted),
                Err(e) => cases.error(&s.label(), &e),
            }
        }
        Ok(cases)
    }

    fn talenti(&self) -> Result<Cases, CliError> {
        let mut cases = Cases::new();
        for s in self.scenarios() {
            match self.pair(&s).and_then(|pair| refined_margins(&pair, &s.params()?)) {
                Ok(points) => {
                    let m = MarginSummary::of(&points);
                    cases.record(
                        m.pass_fraction() >= TALENTI_FRACTION,
                        format!("{}: {}/{} determinate points with margin >= -budget", s.label(), m.passing, m.determinate),
                    );
                    if s.domain.is_ball() {
                        cases.record(
                            m.equal_fraction() >= TALENTI_FRACTION,
                            format!("{}: {}/{} determinate points with |margin| <= budget", s.label(), m.equal, m.determinate),
                        );
                    }
                }
                Err(CliError::Interrupted) => return Err(CliError::Interrupted),
                Err(e) => cases.error(&s.label(), &e),
            }
        }
        Ok(cases)
    }

    fn identities(&self) -> Result<Cases, CliError> {
        let mut cases = Cases::new();
        for p in [1.5, 2.0, 3.0] {
            let params = PdeParameters64::new(2, p, 1.0)?;
            let problem = RadialProblem::constant(params, PI, 1.0)?;
            let tau = radial_max(&problem)?;
            let (lhs, rhs) = radial_boundary_identity(&problem, tau);
            let rel = (lhs - rhs).abs() / rhs;
            cases.record(rel <= IDENTITY_REL, format!("radial p={p}: lhs {lhs:.12}, rhs {rhs:.12}, relative {rel:.3e}"));
        }
        for s in [scenario(square(), 2.0, 1.0, self.h()), scenario(square(), 2.0, 1.0, self.h()).with_area(1.0)] {
            let s = s.with_checks(&[Check::IntegralIdentity]);
            match self.pair(&s).and_then(|pair| evaluate(&s, &pair)) {
                Ok(eval) => {
                    for f in eval.report.flags.iter().filter(|f| f.check == "integral-identity") {
                        cases.record(
                            f.passed,
                            format!("{}: rhs - lhs = {:.3e}, budget {:.3e}; {}", s.label(), f.margin, f.budget, f.detail),
                        );
                    }
                }
                Err(CliError::Interrupted) => return Err(CliError::Interrupted),
                Err(e) => cases.error(&s.label(), &e),
            }
        }
        Ok(cases)
    }

    fn polya_szego(&self) -> Result<Cases, CliError> {
        let mut cases = Cases::new();
        let mut rng = ChaCha8Rng::seed_from_u64(self.options.seed);
        let params = PdeParameters64::new(2, 2.0, 1.0)?;
        let mesh = Arc::new(grid_square(8));
        let (mut worst, mut exact_ok) = (f64::INFINITY, true);
        for _ in 0..PLATEAU_FIELDS {
            let levels = random_levels(&mut rng, 8);
            let exact = dirichlet_integral_exact(&levels, 8);
            let field = MeshField64::new(mesh.clone(), levels.iter().map(|&k| k as f64 / 16.0).collect())?;
            exact_ok &= (p_dirichlet_seminorm(&field, 2.0) - exact).abs() <= 1e-12 * exact.max(1.0);
            let gap = polya_szego_gap(&field, &params, POLYA_GRID)?;
            worst = worst.min((exact - (p_dirichlet_seminorm(&field, 2.0) - gap.value)) + gap.error);
        }
        cases.record(exact_ok, format!("{PLATEAU_FIELDS} random plateau fields: P1 seminorm equals the exact integer oracle"));
        cases.record(worst >= 0.0, format!("{PLATEAU_FIELDS} random plateau fields: min (gap + budget) = {worst:.3e}"));
        for s in self.scenarios() {
            match self.pair(&s).and_then(|pair| polya_summary(&pair, &s.params()?)) {
                Ok((gap, budget)) => cases.record(gap >= -budget, format!("{} (u - u_m): gap {gap:.4e}, budget {budget:.3e}", s.label())),
                Err(CliError::Interrupted) => return Err(CliError::Interrupted),
                Err(e) => cases.error(&s.label(), &e),
            }
        }
        let disk = Arc::new(ball_mesh(PI, RADIAL_POLYA_H)?);
        let radial = MeshField64::from_fn(disk, |x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0) / 4.0)?;
        let direct = p_dirichlet_seminorm(&radial, 2.0);
        let gap = polya_szego_gap(&radial, &params, POLYA_GRID)?;
        cases.record(
            gap.value.abs() <= RADIAL_POLYA_REL * direct,
            format!("radial interpolant on the disk (h={RADIAL_POLYA_H}): gap {:.3e} of seminorm {direct:.6}", gap.value),
        );
        Ok(cases)
    }

    fn invariants(&self) -> Result<Cases, CliError> {
        let mut cases = Cases::new();
        for s in self.scenarios() {
            match self.pair(&s).and_then(|pair| evaluate(&s, &pair)) {
                Ok(eval) => {
                    for f in &eval.report.flags {
                        cases.record(f.passed, format!("{}: {} ({})", s.label(), f.check, f.detail));
                    }
                }
                Err(CliError::Interrupted) => return Err(CliError::Interrupted),
                Err(e) => cases.error(&s.label(), &e),
            }
        }
        Ok(cases)
    }
}

/// Robin solution on the unit disk for `f = 1`:
/// `v_m + (p-1)/p 2^{-1/(p-1)} (1 - r^{p/(p-1)})` with `v_m = (2 beta)^{-1/(p-1)}`.
pub fn robin_disk_solution(p: f64, beta: f64, r: f64) -> f64 {
    let e = 1.0 / (p - 1.0);
    (2.0 * beta).powf(-e) + (p - 1.0) / p * 2f64.powf(-e) * (1.0 - r.powf(p * e))
}

/// Structured mesh of `[0,1]^2` with `n x n` cells, each cut along its diagonal.
pub fn grid_square(n: usize) -> Mesh64 {
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh64::from_parts(vertices, triangles, None).expect("grid mesh is valid")
}

/// Integer levels `k` (field value `k/16`) on the grid vertices, zero on the boundary.
fn random_levels(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let boundary = i == 0 || j == 0 || i == n || j == n;
            out.push(if boundary { 0 } else { rng.gen_range(0..=32) });
        }
    }
    out
}

/// `int |grad u|^2` of the P1 field with values `k/16` on [`grid_square`]`(n)`,
/// from an exact integer sum: gradients are `n Δk / 16`, triangles have area `1/(2 n^2)`.
fn dirichlet_integral_exact(levels: &[i64], n: usize) -> f64 {
    let k = |i: usize, j: usize| levels[j * (n + 1) + i];
    let mut sum: i64 = 0;
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (k(i, j), k(i + 1, j), k(i + 1, j + 1), k(i, j + 1));
            sum += (b - a).pow(2) + (c - b).pow(2) + (c - d).pow(2) + (d - a).pow(2);
        }
    }
    sum as f64 / 512.0
}

/// Disjoint right triangles with legs `1` and `2 A_i`, triangle `i` of area `A_i`.
fn plateau_mesh(areas: &[f64]) -> Mesh64 {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, &a) in areas.iter().enumerate() {
        let x0 = 2.0 * i as f64;
        let base = vertices.len();
        vertices.extend([[x0, 0.0], [x0 + 1.0, 0.0], [x0, 2.0 * a]]);
        triangles.push([base, base + 1, base + 2]);
    }
    Mesh64::from_parts(vertices, triangles, None).expect("plateau mesh is valid")
}

/// `int f* g* - int f g` for plateau data `area = A_i/32`, `f = F_i/16`,
/// `g = G_i/16`, in units of `1/8192` so that the sum is an exact integer.
fn hardy_littlewood_exact(areas: &[i64], f: &[i64], g: &[i64]) -> i64 {
    let sorted = |v: &[i64]| {
        let mut items: Vec<(i64, i64)> = v.iter().copied().zip(areas.iter().copied()).collect();
        items.sort_by_key(|b| std::cmp::Reverse(b.0));
        items
    };
    let (fs, gs) = (sorted(f), sorted(g));
    let value_at = |items: &[(i64, i64)], s: i64| {
        let mut end = 0;
        for &(v, a) in items {
            end += a;
            if s < end {
                return v;
            }
        }
        0
    };
    let total: i64 = areas.iter().sum();
    let rearranged: i64 = (0..total).map(|s| value_at(&fs, s) * value_at(&gs, s)).sum();
    let direct: i64 = areas.iter().zip(f.iter().zip(g)).map(|(&a, (&x, &y))| a * x * y).sum();
    rearranged - direct
}

fn rearrangement_suite(seed: u64, h: f64) -> Result<Cases, CliError> {
    let mut cases = Cases::new();
    let disk = Arc::new(ball_mesh(PI, h)?);
    let fields = [
        (
            "smooth non-radial field on the disk",
            MeshField64::from_fn(disk.clone(), |x| (-(x[0] * x[0] + x[1] * x[1])).exp() + 0.3 * x[0] + 0.5)?,
        ),
        ("tilted paraboloid on the disk", MeshField64::from_fn(disk, |x| 1.5 - x[0] * x[0] - 0.5 * x[1] * x[1] + 0.2 * x[1])?),
    ];
    for (name, u) in &fields {
        let mu = SuperlevelMeasure::from_field(u);
        let total = mu.total_measure();
        let (s, w) = rearrangement_nodes(&mu, REARRANGEMENT_GRID)?;
        let worst = (0..200)
            .map(|i| {
                let t = u.min() + (u.max() - u.min()) * (i as f64 + 0.5) / 200.0;
                (interpolant_measure(&s, &w, t) - mu.eval(t)).abs() / total
            })
            .fold(0.0, f64::max);
        cases
            .record(worst <= REARRANGEMENT_REL, format!("{name}: max |mu_u* - mu_u| / |Omega| = {worst:.3e} at grid {REARRANGEMENT_GRID}"));
        let star = decreasing_rearrangement(u, REARRANGEMENT_GRID)?;
        for p in [1.0, 2.0, 3.0] {
            let exact = lp_norm_exact(&mu, p, 1e-12)?.value;
            let sampled = star.intervals().map(|(a, b, v)| v.powf(p) * (b - a)).sum::<f64>().powf(1.0 / p);
            let rel = (sampled - exact).abs() / exact;
            cases.record(rel <= REARRANGEMENT_REL, format!("{name}: L^{p} norm of u* vs u, relative {rel:.3e}"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4841);
    let (mut all_nonneg, mut all_match, mut worst) = (true, true, 0.0f64);
    for _ in 0..HARDY_LITTLEWOOD_PAIRS {
        let n = rng.gen_range(1..8);
        let areas: Vec<i64> = (0..n).map(|_| rng.gen_range(1..64)).collect();
        let fv: Vec<i64> = (0..n).map(|_| rng.gen_range(1..256)).collect();
        let gv: Vec<i64> = (0..n).map(|_| rng.gen_range(1..256)).collect();
        let mesh = Arc::new(plateau_mesh(&areas.iter().map(|&a| a as f64 / 32.0).collect::<Vec<_>>()));
        let field = |v: &[i64]| MeshField64::new(mesh.clone(), v.iter().flat_map(|&k| [k as f64 / 16.0; 3]).collect());
        let gap = hardy_littlewood_gap(&field(&fv)?, &field(&gv)?, 64)?;
        let exact_int = hardy_littlewood_exact(&areas, &fv, &gv);
        let exact = exact_int as f64 / 8192.0;
        all_nonneg &= exact_int >= 0 && gap.value >= -gap.error;
        let dev = (gap.value - exact).abs() - gap.error - 1e-12 * (1.0 + exact.abs());
        all_match &= dev <= 0.0;
        worst = worst.max(dev);
    }
    cases.record(all_nonneg, format!("Hardy-Littlewood gap >= 0 on {HARDY_LITTLEWOOD_PAIRS} random plateau pairs"));
    cases.record(all_match, format!("Hardy-Littlewood gap matches the exact integer oracle (worst excess {worst:.3e})"));

    let mut worst = 0.0f64;
    for _ in 0..STEP_CASES {
        let n = rng.gen_range(1..20);
        let mut plateaus: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.01..10.0), rng.gen_range(0.01..2.0))).collect();
        plateaus.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
        let p = rng.gen_range(1.0..6.0);
        let mu = StepFunction64::from_plateaus(&plateaus)?.distribution()?;
        let l = lorentz_norm(&mu, LorentzIndex::new(p, p)?)?;
        let c = lp_norm_cavalieri(&mu, p)?;
        let direct = plateaus.iter().map(|&(v, w)| v.powf(p) * w).sum::<f64>().powf(1.0 / p);
        worst = worst.max((l - c).abs() / l).max((c - direct).abs() / direct);
    }
    cases.record(
        worst <= CAVALIERI_REL,
        format!("Lorentz L^(p,p) vs Cavalieri vs direct sum on {STEP_CASES} step functions: worst relative {worst:.3e}"),
    );
    Ok(cases)
}

fn gronwall_suite() -> Result<Cases, CliError> {
    let mut cases = Cases::new();
    let taus: Vec<f64> = (0..=200).map(|i| 1.0 + 2.0 * i as f64 / 200.0).collect();
    for q in [1.5, 2.0, 3.0] {
        let xis: Vec<f64> = taus.iter().map(|t| t.powf(q - 1.0)).collect();
        let r = gronwall_bounds(&taus, &xis, 1.0, q, 0.0)?;
        let top = xis.iter().copied().fold(0.0, f64::max);
        let equal = r.max_value_slack() <= 1e-12 * top;
        cases.record(
            r.hypothesis_holds() && r.bounds_hold() && equal,
            format!("xi = tau^(q-1), q={q}, C=0: hypothesis and bounds hold, max slack {:.3e}", r.max_value_slack()),
        );
    }
    for xi0 in [0.0, 1.0, 2.5] {
        let r = gronwall_bounds(&taus, &vec![xi0; taus.len()], 1.0, 2.0, 0.0)?;
        cases.record(r.hypothesis_holds() && r.bounds_hold(), format!("xi = {xi0} constant, q=2, C=0: hypothesis and bounds hold"));
    }
    let xis: Vec<f64> = taus.iter().map(|t| t * t - 1.0).collect();
    let r = gronwall_bounds(&taus, &xis, 1.0, 2.0, 2.0)?;
    let flagged_after_start = r.violations.iter().all(|&t| t > 1.0) && r.violations.len() >= taus.len() - 2;
    let unasserted = r.points.iter().skip_while(|p| p.hypothesis_holds).all(|p| p.value_bound_holds.is_none());
    cases.record(
        flagged_after_start && unasserted,
        format!("xi = tau^2 - 1, q=2, C=2: {} of {} samples flagged, bounds withheld past the first", r.violations.len(), taus.len()),
    );
    Ok(cases)
}

/// Runs criteria 1 to 10 in order, handing each result to `sink` as soon as it
/// is known. Stops with `Interrupted` after flushing the finished criteria.
pub fn verify_all(options: VerifyOptions, mut sink: impl FnMut(&CriterionResult)) -> Result<Vec<CriterionResult>, CliError> {
    let verifier = Verifier::new(options);
    let mut out = Vec::with_capacity(CRITERIA.len());
    for id in 1..=CRITERIA.len() {
        let result = verifier.criterion(id)?;
        sink(&result);
        out.push(result);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_solution_matches_the_closed_forms() {
        for beta in [0.5, 1.0, 2.0] {
            for r in [0.0, 0.3, 1.0] {
                let p2 = (1.0 - r * r) / 4.0 + 1.0 / (2.0 * beta);
                assert!((robin_disk_solution(2.0, beta, r) - p2).abs() < 1e-15);
            }
        }
        let p3 = |r: f64| 2f64.sqrt() / 3.0 * (1.0 - r.powf(1.5)) + 0.5f64.sqrt();
        for r in [0.0, 0.5, 1.0] {
            assert!((robin_disk_solution(3.0, 1.0, r) - p3(r)).abs() < 1e-15);
        }
    }

    #[test]
    fn integer_dirichlet_oracle_agrees_with_the_mesh_seminorm() {
        let n = 8;
        let mesh = Arc::new(grid_square(n));
        let levels: Vec<i64> = (0..(n + 1) * (n + 1)).map(|v| ((v % (n + 1)) * (v / (n + 1)) % 7) as i64).collect();
        let field = MeshField64::new(mesh, levels.iter().map(|&k| k as f64 / 16.0).collect()).unwrap();
        let exact = dirichlet_integral_exact(&levels, n);
        assert!((p_dirichlet_seminorm(&field, 2.0) - exact).abs() <= 1e-13 * exact);
    }

    #[test]
    fn integer_hardy_littlewood_oracle_by_hand() {
        // f* g* = 2*2 + 1*1, f g = 1*2 + 2*1
        assert_eq!(hardy_littlewood_exact(&[1, 1], &[1, 2], &[2, 1]), 1);
        assert_eq!(hardy_littlewood_exact(&[3, 5], &[4, 2], &[7, 1]), 0);
    }

    #[test]
    fn options_enforce_the_mesh_range() {
        assert!(VerifyOptions::new(0.2, 0).is_err());
        assert!(VerifyOptions::new(f64::NAN, 0).is_err());
        assert_eq!(VerifyOptions::new(0.03, 5).unwrap(), VerifyOptions { mesh_h: 0.03, seed: 5 });
    }

    #[test]
    fn scenario_set_has_no_repeats() {
        let v = Verifier::new(VerifyOptions::new(0.03, 0).unwrap());
        let labels: Vec<String> = v.scenarios().iter().map(Scenario::label).collect();
        assert_eq!(labels.len(), 15);
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), labels.len());
    }
}
