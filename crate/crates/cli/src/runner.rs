//! Solve, symmetrize and compare: one scenario from configuration to report files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use talenti_core::analysis::{
    dirichlet_rigidity_check, integral_identity_check, level_grid, lorentz_comparison, pointwise_comparison, polya_szego_gap,
    refine_margins, shift_to_zero_minimum, symmetrized_problem, talenti_margin, CheckFlag, ComparisonReport, ErrorBudget, MarginSummary,
    TalentiPoint, LEVELS, LORENTZ_TOL,
};
use talenti_core::fem::robin_residual;
use talenti_core::radial::{
    chebyshev_radii, radial_boundary_identity, radial_lorentz_norm, robin_min_value, robin_radial, DirichletIntegral, RADIAL_TOL,
};
use talenti_core::rearrangement::DEFAULT_GRID;
use talenti_core::{solve_robin, LorentzIndex, Mesh64, MeshField64, PdeParameters64, RadialProblem, SolveResult64, SolverConfig};

use crate::datum::DatumSource;
use crate::domains::build_mesh;
use crate::scenario::{Check, Scenario};
use crate::{check_interrupt, CliError};

/// Relative tolerance of the Lorentz-norm equality on the ball.
pub const LORENTZ_EQUALITY_REL: f64 = 2e-2;
/// Relative tolerance of the flux balance `beta int_bd u^{p-1} = int f`.
pub const FLUX_TOL: f64 = 1e-8;
/// Relative tolerance of the closed-form boundary identity on the ball.
pub const IDENTITY_REL: f64 = 1e-2;
/// Fraction of determinate t-grid points that must pass.
pub const TALENTI_FRACTION: f64 = 0.95;
/// Radial nodes of the symmetrized solution profile.
const PROFILE_NODES: usize = 200;

/// A converged Robin solve together with its mesh and datum.
#[derive(Clone, Debug)]
pub struct Solved {
    pub mesh: Arc<Mesh64>,
    pub f: MeshField64,
    pub u: SolveResult64,
    pub problem: RadialProblem<f64>,
    /// Rearrangement error of `f*`.
    pub datum_error: f64,
}

/// The scenario solved at `h` and at `h/2`; the coarse solve is reported,
/// the fine one calibrates the discretization budget.
#[derive(Clone, Debug)]
pub struct SolvedPair {
    pub coarse: Solved,
    pub fine: Solved,
}

fn solve_on(mesh: Mesh64, source: &DatumSource, params: &PdeParameters64) -> Result<Solved, CliError> {
    let mesh = Arc::new(mesh);
    let f = source.on(&mesh)?;
    let u = solve_robin(&mesh, &f, params, &SolverConfig::for_exponent(params.p))?;
    if !u.converged {
        return Err(talenti_core::Error::NonConvergence { iterations: u.iterations, residual: u.dual_residual }.into());
    }
    let (problem, datum_error) = symmetrized_problem(&f, params)?;
    Ok(Solved { mesh, f, u, problem, datum_error })
}

/// Meshes and solves the scenario at `h` and `h/2`.
pub fn solve_pair(scenario: &Scenario, source: &DatumSource) -> Result<SolvedPair, CliError> {
    let params = scenario.params()?;
    let coarse = solve_on(build_mesh(&scenario.domain, scenario.area, scenario.mesh_h)?, source, &params)?;
    check_interrupt()?;
    let fine = solve_on(build_mesh(&scenario.domain, scenario.area, 0.5 * scenario.mesh_h)?, source, &params)?;
    check_interrupt()?;
    Ok(SolvedPair { coarse, fine })
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    ErrorBudget::richardson_term(coarse, fine)
}

/// Flux balance, boundary-attained minimum and `u_m <= v_m`, attached to every report.
fn invariant_flags(pair: &SolvedPair, params: &PdeParameters64) -> Result<Vec<CheckFlag>, CliError> {
    let mut flux = 0.0f64;
    for s in [&pair.coarse, &pair.fine] {
        let r = robin_residual(&s.u.field, &s.f, params)?;
        flux = flux.max(r.iter().sum::<f64>().abs() / s.f.integral());
    }
    let scale = pair.coarse.u.field.max_abs();
    let bmin = pair.coarse.u.boundary_minimum_gap().min(pair.fine.u.boundary_minimum_gap());
    let um = pair.coarse.u.min_value();
    let vm = robin_min_value(&pair.coarse.problem);
    let budget = richardson(um, pair.fine.u.min_value()) + 1e-12 * vm;
    Ok(vec![
        CheckFlag::custom("flux-balance", flux <= FLUX_TOL, FLUX_TOL - flux, FLUX_TOL, format!("relative flux defect {flux:.3e}")),
        CheckFlag::custom(
            "boundary-minimum",
            bmin >= -1e-10 * scale,
            bmin,
            1e-10 * scale,
            format!("interior minimum exceeds the boundary minimum by {bmin:.3e}"),
        ),
        CheckFlag::inequality("minimum-comparison", vm - um, budget, format!("u_m = {um:.10}, v_m = {vm:.10}")),
    ])
}

fn lorentz_flags(
    scenario: &Scenario,
    pair: &SolvedPair,
    params: &PdeParameters64,
    report: &mut ComparisonReport,
) -> Result<Vec<CheckFlag>, CliError> {
    let ks = scenario.k_values()?;
    let f_one = scenario.f_is_one();
    let coarse = lorentz_comparison(&pair.coarse.u, &pair.coarse.problem, params, &ks, f_one)?;
    let fine = lorentz_comparison(&pair.fine.u, &pair.fine.problem, params, &ks, f_one)?;
    let mut flags = Vec::new();
    for (c, f) in coarse.iter().zip(&fine) {
        let nv = c.norm_v.value;
        let datum = nv * pair.coarse.datum_error / ((params.p - 1.0) * pair.coarse.f.integral());
        let budget = ErrorBudget::new(richardson(c.norm_u.value, f.norm_u.value), datum, c.quadrature_error());
        report.k_values.push(c.k);
        report.norm_u.push(c.norm_u.value);
        report.norm_v.push(nv);
        report.margins.push(c.margin());
        report.budgets.push(budget);
        let detail = format!("k = {}: ||u|| = {:.10}, ||v|| = {nv:.10}", c.k, c.norm_u.value);
        flags.push(CheckFlag::inequality(&format!("lorentz k={}", c.k), c.margin(), budget.total(), detail));
        if scenario.domain.is_ball() {
            let rel = c.relative_difference();
            flags.push(CheckFlag::custom(
                &format!("lorentz-equality k={}", c.k),
                rel <= LORENTZ_EQUALITY_REL,
                LORENTZ_EQUALITY_REL - rel,
                LORENTZ_EQUALITY_REL,
                format!("relative difference {rel:.3e}"),
            ));
        }
    }
    Ok(flags)
}

/// `max (u* - v*)` and `max |u* - v*|` with their budgets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointwiseSummary {
    pub excess: f64,
    pub excess_budget: f64,
    pub symmetric: f64,
    pub symmetric_budget: f64,
}

pub fn pointwise_summary(pair: &SolvedPair, params: &PdeParameters64) -> Result<PointwiseSummary, CliError> {
    let check = |s: &Solved| -> Result<_, CliError> {
        let v = robin_radial(&s.problem, &chebyshev_radii(s.problem.radius(), PROFILE_NODES))?;
        Ok(pointwise_comparison(&s.u, &v, params, true)?)
    };
    let (c, f) = (check(&pair.coarse)?, check(&pair.fine)?);
    let sym = |g: &talenti_core::analysis::RearrangementGap<f64>| g.max_excess.max(g.max_deficit);
    let base = c.gap.grid_bound + c.profile_error;
    Ok(PointwiseSummary {
        excess: c.gap.max_excess,
        excess_budget: richardson(c.gap.max_excess, f.gap.max_excess) + base,
        symmetric: sym(&c.gap),
        symmetric_budget: richardson(sym(&c.gap), sym(&f.gap)) + base,
    })
}

fn pointwise_flags(scenario: &Scenario, pair: &SolvedPair, params: &PdeParameters64) -> Result<Vec<CheckFlag>, CliError> {
    let s = pointwise_summary(pair, params)?;
    let mut flags = vec![CheckFlag::inequality("pointwise", -s.excess, s.excess_budget, format!("max (u* - v*) = {:.3e}", s.excess))];
    let detail = format!("max |u* - v*| = {:.3e}, budget {:.3e}", s.symmetric, s.symmetric_budget);
    if scenario.domain.is_ball() {
        flags.push(CheckFlag::custom(
            "pointwise-equality",
            s.symmetric <= s.symmetric_budget,
            s.symmetric_budget - s.symmetric,
            s.symmetric_budget,
            detail,
        ));
    } else {
        flags.push(CheckFlag::custom(
            "pointwise-strict",
            s.symmetric > s.symmetric_budget,
            s.symmetric - s.symmetric_budget,
            s.symmetric_budget,
            detail,
        ));
    }
    Ok(flags)
}

/// Talenti margins at `h` on the default level grid, with budgets refined by the `h/2` solve.
pub fn refined_margins(pair: &SolvedPair, params: &PdeParameters64) -> Result<Vec<TalentiPoint<f64>>, CliError> {
    let grid = level_grid(pair.coarse.u.field.max(), LEVELS);
    let mut points = talenti_margin(&pair.coarse.u, &pair.coarse.f, params, &grid)?;
    let fine = talenti_margin(&pair.fine.u, &pair.fine.f, params, &grid)?;
    refine_margins(&mut points, &fine)?;
    Ok(points)
}

fn talenti_flags(scenario: &Scenario, points: &[TalentiPoint<f64>]) -> Vec<CheckFlag> {
    let s = MarginSummary::of(points);
    let detail = format!(
        "{} determinate points, {} pass, {} within budget of zero, min margin {:.3e}",
        s.determinate, s.passing, s.equal, s.min_margin
    );
    let mut flags =
        vec![CheckFlag::custom("talenti", s.pass_fraction() >= TALENTI_FRACTION, s.pass_fraction(), TALENTI_FRACTION, detail.clone())];
    if scenario.domain.is_ball() {
        flags.push(CheckFlag::custom(
            "talenti-equality",
            s.equal_fraction() >= TALENTI_FRACTION,
            s.equal_fraction(),
            TALENTI_FRACTION,
            detail,
        ));
    }
    flags
}

/// Largest value of the symmetrized Robin solution, `v_m + z(0)`.
pub fn radial_max(problem: &RadialProblem<f64>) -> Result<f64, CliError> {
    let table = DirichletIntegral::new(problem, RADIAL_TOL * (1.0 + problem.volume))?;
    Ok(robin_min_value(problem) + table.z_of_measure(0.0))
}

fn radial_identity_flag(problem: &RadialProblem<f64>) -> Result<CheckFlag, CliError> {
    let tau = radial_max(problem)?;
    let (lhs, rhs) = radial_boundary_identity(problem, tau);
    let rel = (lhs - rhs).abs() / rhs;
    Ok(CheckFlag::custom(
        "integral-identity-radial",
        rel <= IDENTITY_REL,
        IDENTITY_REL - rel,
        IDENTITY_REL,
        format!("tau = v_max = {tau:.10}: lhs = {lhs:.12}, rhs = {rhs:.12}"),
    ))
}

fn identity_flags(pair: &SolvedPair, params: &PdeParameters64) -> Result<Vec<CheckFlag>, CliError> {
    let vm = robin_min_value(&pair.coarse.problem);
    let c = integral_identity_check(&pair.coarse.u, &pair.coarse.f, params, vm)?;
    let f = integral_identity_check(&pair.fine.u, &pair.fine.f, params, vm)?;
    let budget = richardson(c.rhs - c.lhs, f.rhs - f.lhs) + 1e-12 * c.rhs;
    Ok(vec![
        CheckFlag::inequality(
            "integral-identity",
            c.rhs - c.lhs,
            budget,
            format!("tau = v_m = {vm:.10}: lhs = {:.12}, rhs = {:.12}", c.lhs, c.rhs),
        ),
        radial_identity_flag(&pair.coarse.problem)?,
    ])
}

/// Pólya–Szegő gap of `u - u_m` and its budget.
pub fn polya_summary(pair: &SolvedPair, params: &PdeParameters64) -> Result<(f64, f64), CliError> {
    let gap = |s: &Solved| -> Result<_, CliError> { Ok(polya_szego_gap(&shift_to_zero_minimum(&s.u.field)?, params, DEFAULT_GRID)?) };
    let (c, f) = (gap(&pair.coarse)?, gap(&pair.fine)?);
    Ok((c.value, richardson(c.value, f.value) + c.error))
}

fn polya_flags(pair: &SolvedPair, params: &PdeParameters64) -> Result<Vec<CheckFlag>, CliError> {
    let (gap, budget) = polya_summary(pair, params)?;
    Ok(vec![CheckFlag::inequality("polya-szego", gap, budget, format!("int |grad w|^p - int |grad w#|^p = {gap:.6e} for w = u - u_m"))])
}

fn dirichlet_flags(scenario: &Scenario, pair: &SolvedPair, params: &PdeParameters64) -> Result<Vec<CheckFlag>, CliError> {
    let config = SolverConfig::for_exponent(params.p);
    let c = dirichlet_rigidity_check(&pair.coarse.mesh, &pair.coarse.f, params, &config)?;
    check_interrupt()?;
    let f = dirichlet_rigidity_check(&pair.fine.mesh, &pair.fine.f, params, &config)?;
    for d in [&c, &f] {
        if !d.converged {
            return Err(talenti_core::Error::NonConvergence { iterations: d.iterations, residual: d.dual_residual }.into());
        }
    }
    let base = c.z_error + c.datum_error + c.gap.grid_bound;
    let budget = richardson(c.max_gap(), f.max_gap()) + base;
    let sym_budget = richardson(c.symmetric_gap(), f.symmetric_gap()) + base;
    let mut flags = vec![CheckFlag::inequality("dirichlet", -c.max_gap(), budget, format!("max (w* - z*) = {:.3e}", c.max_gap()))];
    let detail = format!("max |w* - z*| = {:.3e}, budget {sym_budget:.3e}", c.symmetric_gap());
    if scenario.domain.is_ball() {
        flags.push(CheckFlag::custom(
            "dirichlet-equality",
            c.symmetric_gap() <= sym_budget,
            sym_budget - c.symmetric_gap(),
            sym_budget,
            detail,
        ));
    } else {
        flags.push(CheckFlag::custom(
            "dirichlet-strict",
            c.symmetric_gap() > sym_budget,
            c.symmetric_gap() - sym_budget,
            sym_budget,
            detail,
        ));
    }
    Ok(flags)
}

/// Report of one scenario, with the margin profile when the Talenti check ran.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: ComparisonReport,
    pub margins: Option<Vec<TalentiPoint<f64>>>,
}

/// Evaluates the requested checks on a solved pair.
pub fn evaluate(scenario: &Scenario, pair: &SolvedPair) -> Result<Evaluation, CliError> {
    let params = scenario.params()?;
    let mut report = ComparisonReport::new(&scenario.label(), &params);
    report.flags = invariant_flags(pair, &params)?;
    let mut margins = None;
    let mut checks = scenario.checks.clone();
    checks.sort();
    checks.dedup();
    for check in checks {
        check_interrupt()?;
        let flags = match check {
            Check::Lorentz => lorentz_flags(scenario, pair, &params, &mut report)?,
            Check::Pointwise => pointwise_flags(scenario, pair, &params)?,
            Check::Talenti => {
                let points = refined_margins(pair, &params)?;
                let flags = talenti_flags(scenario, &points);
                margins = Some(points);
                flags
            }
            Check::IntegralIdentity => identity_flags(pair, &params)?,
            Check::PolyaSzego => polya_flags(pair, &params)?,
            Check::Dirichlet => dirichlet_flags(scenario, pair, &params)?,
            Check::RigiditySweep => return Err(CliError::Config("rigidity-sweep runs through the sweep command".into())),
        };
        report.flags.extend(flags);
    }
    Ok(Evaluation { report, margins })
}

/// Closed-form report for `n > 2`: norms of the radial solution on the ball
/// and the boundary identity.
pub fn evaluate_radial(scenario: &Scenario) -> Result<Evaluation, CliError> {
    let params = scenario.params()?;
    let problem = RadialProblem::constant(params, scenario.area, 1.0)?;
    let mut report = ComparisonReport::new(&scenario.label(), &params);
    if scenario.checks.contains(&Check::Lorentz) {
        for k in scenario.k_values()? {
            let idx = LorentzIndex::comparison(params.p, k)?;
            let v = radial_lorentz_norm(&problem, robin_min_value(&problem), idx, LORENTZ_TOL)?;
            report.k_values.push(k);
            report.norm_v.push(v.value);
            report.budgets.push(ErrorBudget::new(0.0, 0.0, v.error));
        }
    }
    if scenario.checks.contains(&Check::IntegralIdentity) {
        report.flags.push(radial_identity_flag(&problem)?);
    }
    Ok(Evaluation { report, margins: None })
}

/// Files written by [`run_scenario`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunFiles {
    pub mesh: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub report: PathBuf,
    pub margins: Option<PathBuf>,
}

/// Outcome of [`run_scenario`]: exit status 0 iff every flag passed.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: ComparisonReport,
    pub files: RunFiles,
}

impl RunOutcome {
    pub fn status(&self) -> u8 {
        if self.report.passed() {
            0
        } else {
            1
        }
    }
}

/// Writes the per-t margins as CSV.
pub fn write_margins_csv<W: Write>(mut w: W, points: &[TalentiPoint<f64>]) -> std::io::Result<()> {
    writeln!(w, "t,mu,lhs,rhs,margin,budget_richardson,budget_grid,budget_quadrature,determinate")?;
    for p in points {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            p.t, p.mu, p.lhs, p.rhs, p.margin, p.budget.richardson, p.budget.grid, p.budget.quadrature, p.determinate
        )?;
    }
    Ok(())
}

pub fn write_report(path: &Path, report: &ComparisonReport) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(talenti_core::Error::from)?;
    std::fs::write(path, text + "\n").map_err(talenti_core::Error::from)?;
    Ok(())
}

/// Validates, solves and evaluates `scenario`, writing the mesh, the
/// solution, `report.json` and `margins.csv` into `out_dir`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome, CliError> {
    scenario.validate()?;
    let io = |e: std::io::Error| CliError::from(talenti_core::Error::from(e));
    std::fs::create_dir_all(out_dir).map_err(io)?;
    let mut files = RunFiles { report: out_dir.join("report.json"), ..RunFiles::default() };
    let eval = if scenario.n == 2 {
        let source = DatumSource::load(&scenario.datum)?;
        let pair = solve_pair(scenario, &source)?;
        let mesh_path = out_dir.join("mesh.txt");
        std::fs::write(&mesh_path, pair.coarse.mesh.to_text()).map_err(io)?;
        let (csv, _) = pair.coarse.u.write_files(out_dir, "solution", "mesh.txt")?;
        files.mesh = Some(mesh_path);
        files.solution = Some(csv);
        evaluate(scenario, &pair)?
    } else {
        evaluate_radial(scenario)?
    };
    if let Some(points) = &eval.margins {
        let path = out_dir.join("margins.csv");
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
        write_margins_csv(&mut w, points).map_err(io)?;
        w.flush().map_err(io)?;
        files.margins = Some(path);
    }
    write_report(&files.report, &eval.report)?;
    Ok(RunOutcome { report: eval.report, files })
}
