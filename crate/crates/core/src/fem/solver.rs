//! Damped Newton continuation for the Robin and Dirichlet p-Laplace problems.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::energy::{Boundary, EnergyForm};
use super::sparse::{pcg, CsrMatrix};
use crate::error::{domain, usage, Result};
use crate::field::MeshField;
use crate::mesh::Mesh;
use crate::params::PdeParameters;
use crate::Real;

/// Values below `-NEGATIVITY_TOL` violate the discrete maximum principle.
pub const NEGATIVITY_TOL: f64 = 1e-10;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
/// Intermediate continuation stages stop at this relative residual.
const STAGE_TOL: f64 = 1e-6;

/// Newton continuation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon_schedule: Vec<f64>,
    /// Bound on `||r|| / ||b||`, the weak-form residual relative to the load.
    pub residual_tol: f64,
    /// Newton steps allowed per continuation stage.
    pub max_newton_iters: usize,
    pub line_search_shrink: f64,
    pub linear_solver_tol: f64,
}

impl SolverConfig {
    /// `eps = 1e-1 .. 1e-4` followed by `0` when `p >= 2` and `1e-6` otherwise.
    pub fn for_exponent(p: f64) -> Self {
        let last = if p >= 2.0 { 0.0 } else { 1e-6 };
        Self {
            epsilon_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4, last],
            residual_tol: 1e-10,
            max_newton_iters: 100,
            line_search_shrink: 0.5,
            linear_solver_tol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.epsilon_schedule;
        if s.is_empty() {
            return Err(domain("epsilon schedule is empty"));
        }
        if !(s[0] <= 1.0) || s.iter().any(|e| !(*e >= 0.0)) {
            return Err(domain("epsilon schedule must lie in [0, 1]"));
        }
        if s.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(domain("epsilon schedule must be strictly decreasing"));
        }
        if !(self.residual_tol > 0.0) {
            return Err(domain("residual tolerance must be positive"));
        }
        if !(self.line_search_shrink > 0.0 && self.line_search_shrink < 1.0) {
            return Err(domain("line search shrink factor must lie in (0, 1)"));
        }
        if !(self.linear_solver_tol > 0.0) || self.max_newton_iters == 0 {
            return Err(domain("linear solver tolerance and iteration count must be positive"));
        }
        Ok(())
    }
}

/// One accepted Newton step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonStep<T> {
    pub epsilon: T,
    /// `J_eps` after the step.
    pub energy: T,
    /// `J_eps(after) - J_eps(before)`.
    pub decrease: T,
    pub step_length: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StageReport<T> {
    pub epsilon: T,
    pub iterations: usize,
    pub residual: T,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SolveResult<T> {
    pub field: MeshField<T>,
    /// Unregularized energy of the final field.
    pub energy: T,
    /// `||r|| / ||b||` of the weak form at the final regularization.
    pub dual_residual: T,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon_final: T,
    /// `||r_0 - r_eps|| / ||b||`: distance between the unregularized and the
    /// final regularized residual (zero when the schedule ends at 0).
    pub regularization_gap: T,
    pub history: Vec<NewtonStep<T>>,
    pub stages: Vec<StageReport<T>>,
}

impl<T: Real> SolveResult<T> {
    pub fn min_value(&self) -> T {
        self.field.min()
    }

    /// Whether some vertex value lies below `-NEGATIVITY_TOL`.
    pub fn violates_positivity(&self) -> bool {
        self.field.min() < -T::of(NEGATIVITY_TOL)
    }

    /// `min over interior vertices - min over boundary vertices`.
    pub fn boundary_minimum_gap(&self) -> T {
        let mesh = self.field.mesh();
        let mut interior = T::infinity();
        let mut boundary = T::infinity();
        for (i, &v) in self.field.values().iter().enumerate() {
            if mesh.is_boundary_vertex(i) {
                boundary = boundary.min(v);
            } else {
                interior = interior.min(v);
            }
        }
        interior - boundary
    }

    /// Writes `<stem>.csv` with the vertex values and the `<stem>.json`
    /// sidecar referencing `mesh_file`. Returns both paths.
    pub fn write_files(&self, dir: &Path, stem: &str, mesh_file: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&csv)?);
        writeln!(w, "vertex,x,y,value")?;
        let mesh = self.field.mesh();
        for (i, (x, v)) in mesh.vertices.iter().zip(self.field.values()).enumerate() {
            writeln!(w, "{i},{:.16e},{:.16e},{:.16e}", x[0].as_f64(), x[1].as_f64(), v.as_f64())?;
        }
        w.flush()?;
        let json = dir.join(format!("{stem}.json"));
        let sidecar = Sidecar {
            mesh: mesh_file.to_string(),
            values: format!("{stem}.csv"),
            energy: self.energy.as_f64(),
            dual_residual: self.dual_residual.as_f64(),
            iterations: self.iterations,
            converged: self.converged,
            epsilon_final: self.epsilon_final.as_f64(),
        };
        std::fs::write(&json, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok((csv, json))
    }
}

/// Metadata written next to a solution's vertex values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub mesh: String,
    pub values: String,
    pub energy: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon_final: f64,
}

fn norm<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |s, &v| s + v * v).sqrt()
}

fn require_planar<T: Real>(params: &PdeParameters<T>) -> Result<()> {
    if params.n != 2 {
        return Err(usage(format!("the finite element solver is planar (got n = {})", params.n)));
    }
    Ok(())
}

/// `J(u) = (1/p) int |grad u|^p + (beta/p) int_bd |u|^p - int f u`.
pub fn robin_energy<T: Real>(field: &MeshField<T>, f: &MeshField<T>, params: &PdeParameters<T>) -> Result<T> {
    field.require_same_mesh(f)?;
    require_planar(params)?;
    let form = EnergyForm::new(field.mesh(), f.values(), params.p, T::zero(), Boundary::Robin(params.beta));
    Ok(form.energy(field.values()))
}

/// Discrete weak-form residual `r_i = dJ/du_i` of the Robin problem, tested
/// against every nodal basis function.
pub fn robin_residual<T: Real>(field: &MeshField<T>, f: &MeshField<T>, params: &PdeParameters<T>) -> Result<Vec<T>> {
    field.require_same_mesh(f)?;
    require_planar(params)?;
    let form = EnergyForm::new(field.mesh(), f.values(), params.p, T::zero(), Boundary::Robin(params.beta));
    Ok(form.gradient(field.values()))
}

/// Residual of the Dirichlet problem; boundary entries are zero.
pub fn dirichlet_residual<T: Real>(field: &MeshField<T>, f: &MeshField<T>, params: &PdeParameters<T>) -> Result<Vec<T>> {
    field.require_same_mesh(f)?;
    require_planar(params)?;
    let form = EnergyForm::new(field.mesh(), f.values(), params.p, T::zero(), Boundary::Dirichlet);
    Ok(form.gradient(field.values()))
}

/// Minimizes the Robin energy over P1 fields on `mesh`.
pub fn solve_robin<T: Real>(
    mesh: &Arc<Mesh<T>>,
    f: &MeshField<T>,
    params: &PdeParameters<T>,
    config: &SolverConfig,
) -> Result<SolveResult<T>> {
    solve(mesh, f, params, config, Boundary::Robin(params.beta))
}

/// Minimizes the Dirichlet energy over P1 fields vanishing on the boundary.
pub fn solve_dirichlet<T: Real>(
    mesh: &Arc<Mesh<T>>,
    f: &MeshField<T>,
    params: &PdeParameters<T>,
    config: &SolverConfig,
) -> Result<SolveResult<T>> {
    solve(mesh, f, params, config, Boundary::Dirichlet)
}

fn solve<T: Real>(
    mesh: &Arc<Mesh<T>>,
    f: &MeshField<T>,
    params: &PdeParameters<T>,
    config: &SolverConfig,
    boundary: Boundary<T>,
) -> Result<SolveResult<T>> {
    config.validate()?;
    require_planar(params)?;
    if !Arc::ptr_eq(f.mesh(), mesh) && **f.mesh() != **mesh {
        return Err(usage("datum lives on a different mesh"));
    }
    if f.values().iter().any(|&v| !(v > T::zero())) {
        return Err(domain("the datum f must be positive at every vertex"));
    }
    let p = params.p;
    let nv = mesh.num_vertices();
    let mut u = match boundary {
        Boundary::Robin(beta) => {
            let c = (f.integral() / (beta * mesh.perimeter)).powf(T::one() / (p - T::one()));
            vec![c; nv]
        }
        Boundary::Dirichlet => vec![T::zero(); nv],
    };
    let mut hess = CsrMatrix::from_mesh(mesh);
    let mut history = Vec::new();
    let mut stages = Vec::new();
    let mut iterations = 0;
    let shrink = T::of(config.line_search_shrink);
    let linear_tol = T::of(config.linear_solver_tol);
    let max_linear = (4 * nv).max(1000);
    let last_stage = config.epsilon_schedule.len() - 1;
    let mut b_norm = T::one();
    let mut residual = T::infinity();
    for (stage, &eps64) in config.epsilon_schedule.iter().enumerate() {
        let eps = T::of(eps64);
        let form = EnergyForm::new(mesh, f.values(), p, eps, boundary);
        b_norm = norm(&form.load);
        let tol = if stage == last_stage { T::of(config.residual_tol) } else { T::of(config.residual_tol.max(STAGE_TOL)) };
        let mut stage_iters = 0;
        let mut stage_ok = false;
        loop {
            let r = form.gradient(&u);
            residual = norm(&r) / b_norm;
            if residual <= tol {
                stage_ok = true;
                break;
            }
            if stage_iters == config.max_newton_iters {
                break;
            }
            form.hessian(&u, &mut hess);
            let shift = T::of(1e-14) * hess.diagonal().into_iter().fold(T::zero(), T::max);
            for i in 0..nv {
                hess.add(i, i, shift);
            }
            let rhs: Vec<T> = r.iter().map(|&x| -x).collect();
            let (mut d, _) = pcg(&hess, &rhs, linear_tol, max_linear);
            let mut slope = r.iter().zip(&d).fold(T::zero(), |s, (&a, &b)| s + a * b);
            if !(slope < T::zero()) {
                // fall back to steepest descent scaled by the diagonal
                let diag = hess.diagonal();
                d = r.iter().zip(&diag).map(|(&ri, &di)| -ri / di.max(T::epsilon())).collect();
                slope = r.iter().zip(&d).fold(T::zero(), |s, (&a, &b)| s + a * b);
            }
            let mut alpha = T::one();
            let mut accepted = None;
            while alpha >= T::of(MIN_STEP) {
                let step: Vec<T> = d.iter().map(|&x| alpha * x).collect();
                let dj = form.change(&u, &step);
                if dj <= T::of(ARMIJO) * alpha * slope {
                    accepted = Some((step, dj));
                    break;
                }
                alpha = alpha * shrink;
            }
            let Some((step, dj)) = accepted else {
                break;
            };
            for (ui, si) in u.iter_mut().zip(&step) {
                *ui = *ui + *si;
            }
            iterations += 1;
            stage_iters += 1;
            history.push(NewtonStep { epsilon: eps, energy: form.energy(&u), decrease: dj, step_length: alpha });
        }
        stages.push(StageReport { epsilon: eps, iterations: stage_iters, residual, converged: stage_ok });
    }
    let eps_final = T::of(*config.epsilon_schedule.last().expect("validated non-empty"));
    let exact_form = EnergyForm::new(mesh, f.values(), p, T::zero(), boundary);
    let regularization_gap = if eps_final > T::zero() {
        let r0 = exact_form.gradient(&u);
        let re = EnergyForm::new(mesh, f.values(), p, eps_final, boundary).gradient(&u);
        let diff: Vec<T> = r0.iter().zip(&re).map(|(&a, &b)| a - b).collect();
        norm(&diff) / b_norm
    } else {
        T::zero()
    };
    let energy = exact_form.energy(&u);
    let converged = stages.last().is_some_and(|s| s.converged);
    Ok(SolveResult {
        field: MeshField::new(mesh.clone(), u)?,
        energy,
        dual_residual: residual,
        iterations,
        converged,
        epsilon_final: eps_final,
        regularization_gap,
        history,
        stages,
    })
}
