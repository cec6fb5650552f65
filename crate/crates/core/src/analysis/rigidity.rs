//! Rigidity diagnostics: norm gaps across a domain family and the Dirichlet
//! comparison of `w*` with the radial `z*`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::comparison::{check_k, rearrangement_gap, symmetrized_problem, RearrangementGap, LORENTZ_TOL};
use crate::error::{usage, Result};
use crate::fem::{solve_dirichlet, solve_robin, SolverConfig};
use crate::field::MeshField;
use crate::mesh::Mesh;
use crate::params::PdeParameters;
use crate::radial::{radial_lorentz_norm, robin_min_value, DirichletIntegral, RADIAL_TOL};
use crate::rearrangement::{lorentz_norm_quadrature, LorentzIndex, SuperlevelMeasure, DEFAULT_GRID};
use crate::Real;

/// Relative tolerance on equal measures within a family.
pub const AREA_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityEntry<T> {
    pub label: String,
    pub area: T,
    pub isoperimetric_defect: T,
    pub norm_u: Option<T>,
    pub norm_v: Option<T>,
    /// `||v|| - ||u||`.
    pub gap: Option<T>,
    pub quadrature_error: Option<T>,
    /// Solver or quadrature failure, the sweep continues past it.
    pub failure: Option<String>,
}

impl<T: Real> RigidityEntry<T> {
    pub fn relative_gap(&self) -> Option<T> {
        Some(self.gap? / self.norm_v?)
    }
}

fn norm_gap<T: Real>(
    mesh: &Arc<Mesh<T>>,
    f: &MeshField<T>,
    params: &PdeParameters<T>,
    idx: LorentzIndex<T>,
    config: &SolverConfig,
) -> Result<(T, T, T)> {
    let u = solve_robin(mesh, f, params, config)?;
    if !u.converged {
        return Err(crate::error::Error::NonConvergence { iterations: u.iterations, residual: u.dual_residual.as_f64() });
    }
    let (problem, _) = symmetrized_problem(f, params)?;
    let tol = T::of(LORENTZ_TOL);
    let nu = lorentz_norm_quadrature(&SuperlevelMeasure::from_field(&u.field), idx, tol)?;
    let nv = radial_lorentz_norm(&problem, robin_min_value(&problem), idx, tol)?;
    Ok((nu.value, nv.value, nu.error + nv.error))
}

/// Solves the Robin problem on each domain and reports `||v|| - ||u||` in
/// `L^{pk,p}`; domains run concurrently, results keep the input order.
pub fn rigidity_gap_sweep<T: Real, D>(
    family: &[(String, Arc<Mesh<T>>)],
    datum: D,
    params: &PdeParameters<T>,
    k: T,
    f_is_one: bool,
    config: &SolverConfig,
) -> Result<Vec<RigidityEntry<T>>>
where
    D: Fn(&Arc<Mesh<T>>) -> Result<MeshField<T>> + Sync,
{
    check_k(params, k, f_is_one)?;
    let Some((_, first)) = family.first() else {
        return Ok(Vec::new());
    };
    let area = first.measure();
    if let Some((label, m)) = family.iter().find(|(_, m)| (m.measure() - area).abs() > T::of(AREA_TOL) * area) {
        return Err(usage(format!("domain {label} has measure {} but the family uses {area}", m.measure())));
    }
    let idx = LorentzIndex::comparison(params.p, k)?;
    Ok(family
        .par_iter()
        .map(|(label, mesh)| {
            let mut entry = RigidityEntry {
                label: label.clone(),
                area: mesh.measure(),
                isoperimetric_defect: mesh.isoperimetric_defect(),
                norm_u: None,
                norm_v: None,
                gap: None,
                quadrature_error: None,
                failure: None,
            };
            match datum(mesh).and_then(|f| norm_gap(mesh, &f, params, idx, config)) {
                Ok((nu, nv, err)) => {
                    entry.norm_u = Some(nu);
                    entry.norm_v = Some(nv);
                    entry.gap = Some(nv - nu);
                    entry.quadrature_error = Some(err);
                }
                Err(e) => entry.failure = Some(e.to_string()),
            }
            entry
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirichletRigidity<T> {
    /// Statistics of `w* - z*` on `[0, |Omega|]`.
    pub gap: RearrangementGap<T>,
    /// Quadrature error of the radial table.
    pub z_error: T,
    /// Error in `z*` caused by the rearrangement grid of `f*`.
    pub datum_error: T,
    pub iterations: usize,
    pub dual_residual: T,
    pub converged: bool,
}

impl<T: Real> DirichletRigidity<T> {
    /// Upper bound of `max_s (w* - z*)`.
    pub fn max_gap(&self) -> T {
        self.gap.max_excess
    }

    /// Upper bound of `max_s |w* - z*|`.
    pub fn symmetric_gap(&self) -> T {
        self.gap.max_excess.max(self.gap.max_deficit)
    }
}

/// `w*` of the Dirichlet solution on `mesh` against the radial `z*` on the
/// ball of equal measure.
pub fn dirichlet_rigidity_check<T: Real>(
    mesh: &Arc<Mesh<T>>,
    f: &MeshField<T>,
    params: &PdeParameters<T>,
    config: &SolverConfig,
) -> Result<DirichletRigidity<T>> {
    let w = solve_dirichlet(mesh, f, params, config)?;
    let (problem, f_err) = symmetrized_problem(f, params)?;
    let table = DirichletIntegral::new(&problem, T::of(RADIAL_TOL) * (T::one() + problem.volume))?;
    let mu = SuperlevelMeasure::from_field(&w.field);
    let gap = rearrangement_gap(&mu, |s| table.z_of_measure(s), DEFAULT_GRID);
    // dz/dF scales like z / ((p-1) F) at the largest cumulative datum
    let total = f.integral().max(T::min_positive_value());
    let datum_error = table.z_of_measure(T::zero()) * f_err / ((params.p - T::one()) * total);
    Ok(DirichletRigidity {
        gap,
        z_error: table.error(),
        datum_error,
        iterations: w.iterations,
        dual_residual: w.dual_residual,
        converged: w.converged,
    })
}
