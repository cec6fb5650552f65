//! Planar P1 finite elements for the p-Laplace energy and the level-set
//! geometry of the resulting fields.

mod energy;
mod level_set;
mod solver;
pub mod sparse;

pub use level_set::{exterior_reciprocal_integral, level_set_geometry, p_dirichlet_seminorm, LevelSetGeometry, TraceSegment, TIE_BREAK};
pub use solver::{
    dirichlet_residual, robin_energy, robin_residual, solve_dirichlet, solve_robin, NewtonStep, Sidecar, SolveResult, SolverConfig,
    StageReport, NEGATIVITY_TOL,
};
