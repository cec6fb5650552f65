//! Numerical diagnostics of the comparison inequalities, each carrying an
//! explicit error budget.

pub mod budget;
pub mod comparison;
pub mod gronwall;
pub mod polya;
pub mod rigidity;
pub mod talenti;

pub use budget::{within, ErrorBudget, Verdict, RICHARDSON_ORDER, STRICT_FACTOR};
pub use comparison::{
    lorentz_comparison, pointwise_comparison, symmetrized_problem, CheckFlag, ComparisonReport, LorentzEntry, PointwiseCheck,
    RearrangementGap, LORENTZ_TOL,
};
pub use gronwall::{gronwall_bounds, GronwallPoint, GronwallReport};
pub use polya::{polya_szego_gap, radial_seminorm, shift_to_zero_minimum};
pub use rigidity::{dirichlet_rigidity_check, rigidity_gap_sweep, DirichletRigidity, RigidityEntry, AREA_TOL};
pub use talenti::{
    admissible_k, integral_identity_check, level_grid, rearranged_datum, refine_margins, talenti_margin, IdentityCheck, MarginSummary,
    TalentiPoint, LEVELS,
};
