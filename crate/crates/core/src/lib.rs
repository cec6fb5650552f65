//! Numerical laboratory for Talenti-type comparison of p-Laplace problems
//! with Robin boundary conditions against their symmetrized radial
//! counterparts.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the solver
//! pipeline and the command line use.

pub mod analysis;
pub mod error;
pub mod fem;
pub mod field;
pub mod mesh;
pub mod params;
pub mod profile;
pub mod quadrature;
pub mod radial;
pub mod real;
pub mod rearrangement;
pub mod step;

pub use error::{Error, Result};
pub use fem::{solve_dirichlet, solve_robin, SolveResult, SolverConfig};
pub use field::MeshField;
pub use mesh::{ball_mesh, ellipse_mesh, mesh_from_polygon, Mesh};
pub use params::{make_parameters, PdeParameters};
pub use profile::{Interpolation, RadialProfile};
pub use quadrature::Estimate;
pub use radial::RadialProblem;
pub use real::Real;
pub use rearrangement::{LorentzIndex, SuperlevelMeasure};
pub use step::StepFunction;

pub type Mesh64 = Mesh<f64>;
pub type MeshField64 = MeshField<f64>;
pub type PdeParameters64 = PdeParameters<f64>;
pub type StepFunction64 = StepFunction<f64>;
pub type RadialProfile64 = RadialProfile<f64>;
pub type SolveResult64 = SolveResult<f64>;
