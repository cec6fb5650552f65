mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use talenti_core::fem::{
    dirichlet_residual, exterior_reciprocal_integral, level_set_geometry, p_dirichlet_seminorm, robin_energy, robin_residual,
    solve_dirichlet, solve_robin, Sidecar, SolverConfig,
};
use talenti_core::{ball_mesh, Mesh, MeshField, PdeParameters, Real};

use common::{grid_square, unit_square};

fn disk(h: f64) -> Arc<Mesh<f64>> {
    Arc::new(ball_mesh(PI, h).unwrap())
}

fn ones(mesh: &Arc<Mesh<f64>>) -> MeshField<f64> {
    MeshField::constant(mesh.clone(), 1.0).unwrap()
}

fn robin_exact(p: f64, r: f64) -> f64 {
    if p == 2.0 {
        (1.0 - r * r) / 4.0 + 0.5
    } else {
        assert_eq!(p, 3.0);
        2f64.sqrt() / 3.0 * (1.0 - r.powf(1.5)) + 0.5f64.sqrt()
    }
}

fn dirichlet_exact(p: f64, r: f64) -> f64 {
    robin_exact(p, r) - robin_exact(p, 1.0)
}

fn radius(x: [f64; 2]) -> f64 {
    x[0].hypot(x[1]).min(1.0)
}

#[test]
fn energy_of_constants() {
    let mesh = disk(0.1);
    let prm = PdeParameters::new(2, 2.0, 1.0).unwrap();
    let f = ones(&mesh);
    let zero = MeshField::constant(mesh.clone(), 0.0).unwrap();
    assert_eq!(robin_energy(&zero, &f, &prm).unwrap(), 0.0);
    for c in [0.25, 0.5, 2.0] {
        let u = MeshField::constant(mesh.clone(), c).unwrap();
        let discrete = 0.5 * c * c * mesh.perimeter - c * mesh.area;
        assert_relative_eq!(robin_energy(&u, &f, &prm).unwrap(), discrete, max_relative = 1e-13);
        // the inscribed polygon is within O(h^2) of the disk
        assert!((discrete - (PI * c * c - PI * c)).abs() < 2e-2 * c.max(c * c));
    }
    let other = ones(&disk(0.2));
    assert!(robin_energy(&zero, &other, &prm).is_err());
}

#[test]
fn energy_of_interpolated_solution_is_close_to_continuum() {
    // J(v) = -(1/p') int f v for the exact solution; p = 2, f = 1, beta = 1:
    // int v = pi/8 + pi/2, so J = -(5/16) pi
    let prm = PdeParameters::new(2, 2.0, 1.0).unwrap();
    let continuum = -5.0 * PI / 16.0;
    let mut errs = Vec::new();
    for h in [0.1, 0.05] {
        let mesh = disk(h);
        let v = MeshField::from_fn(mesh.clone(), |x| robin_exact(2.0, radius(x))).unwrap();
        errs.push((robin_energy(&v, &ones(&mesh), &prm).unwrap() - continuum).abs());
    }
    assert!(errs[1] < 2e-3);
    assert!(errs[0] / errs[1] > 2.5, "{errs:?}");
}

#[test]
fn residual_matches_finite_differences() {
    let mesh = disk(0.15);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [1.5, 2.0, 3.0] {
        let prm = PdeParameters::new(2, p, 0.7).unwrap();
        let f = MeshField::from_fn(mesh.clone(), |x| 1.0 + 0.5 * x[0]).unwrap();
        let u = MeshField::from_fn(mesh.clone(), |x| 1.0 + 0.3 * x[0] - x[1] * x[1] + 0.1 * (3.0 * x[0]).sin()).unwrap();
        let r = robin_residual(&u, &f, &prm).unwrap();
        for _ in 0..10 {
            let d: Vec<f64> = (0..mesh.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let step = 1e-6;
            let shifted = |s: f64| {
                let vals = u.values().iter().zip(&d).map(|(a, b)| a + s * b).collect();
                robin_energy(&MeshField::new(mesh.clone(), vals).unwrap(), &f, &prm).unwrap()
            };
            let fd = (shifted(step) - shifted(-step)) / (2.0 * step);
            let exact: f64 = r.iter().zip(&d).map(|(a, b)| a * b).sum();
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "p={p}: {fd} vs {exact}");
        }
    }
}

fn relative_l2(sol: &MeshField<f64>, exact: impl Fn(f64) -> f64) -> f64 {
    let (err, norm) = sol.l2_error(|x| exact(radius(x)));
    err / norm
}

#[test]
fn robin_disk_matches_radial_solution() {
    let mesh = disk(0.03);
    let f = ones(&mesh);
    for (p, tol) in [(2.0, 1e-2), (3.0, 2e-2)] {
        let prm = PdeParameters::new(2, p, 1.0).unwrap();
        let res = solve_robin(&mesh, &f, &prm, &SolverConfig::for_exponent(p)).unwrap();
        assert!(res.converged, "p={p}: {:?}", res.stages);
        let err = relative_l2(&res.field, |r| robin_exact(p, r));
        assert!(err <= tol, "p={p}: relative L2 error {err}");
        assert!(res.dual_residual <= 1e-10);
        assert!(!res.violates_positivity());
        assert!(res.boundary_minimum_gap() >= -1e-10);
    }
}

#[test]
fn dirichlet_disk_matches_radial_solution() {
    let mesh = disk(0.03);
    let f = ones(&mesh);
    for (p, tol) in [(2.0, 1e-2), (3.0, 2e-2)] {
        let prm = PdeParameters::new(2, p, 1.0).unwrap();
        let res = solve_dirichlet(&mesh, &f, &prm, &SolverConfig::for_exponent(p)).unwrap();
        assert!(res.converged, "p={p}: {:?}", res.stages);
        let err = relative_l2(&res.field, |r| dirichlet_exact(p, r));
        assert!(err <= tol, "p={p}: relative L2 error {err}");
        assert!(res.min_value() >= -1e-10);
    }
}

#[test]
fn robin_flux_balance() {
    for mesh in [disk(0.08), unit_square(0.08)] {
        let f = MeshField::from_fn(mesh.clone(), |x| 1.0 + x[0] * x[0]).unwrap();
        for p in [2.0, 3.0] {
            let prm = PdeParameters::new(2, p, 1.5).unwrap();
            let res = solve_robin(&mesh, &f, &prm, &SolverConfig::for_exponent(p)).unwrap();
            assert!(res.converged);
            let r = robin_residual(&res.field, &f, &prm).unwrap();
            // testing with phi = 1 leaves beta int u^{p-1} - int f
            let flux = r.iter().sum::<f64>();
            assert!(flux.abs() <= 1e-8 * f.integral(), "p={p}: {flux}");
        }
    }
}

#[test]
fn dirichlet_stationary_against_interior_hats() {
    let mesh = unit_square(0.06);
    let f = ones(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in [2.0, 3.0] {
        let prm = PdeParameters::new(2, p, 1.0).unwrap();
        let res = solve_dirichlet(&mesh, &f, &prm, &SolverConfig::for_exponent(p)).unwrap();
        assert!(res.converged, "p={p}: {:?}", res.stages);
        let r = dirichlet_residual(&res.field, &f, &prm).unwrap();
        let interior: Vec<usize> = (0..mesh.num_vertices()).filter(|&i| !mesh.is_boundary_vertex(i)).collect();
        let scale = f.integral() / interior.len() as f64;
        for _ in 0..5 {
            let i = interior[rng.gen_range(0..interior.len())];
            // r_i = int |grad w|^{p-2} grad w . grad phi_i - int f phi_i
            assert!(r[i].abs() <= 1e-8 * scale, "p={p}: {}", r[i]);
        }
    }
}

#[test]
fn newton_steps_decrease_the_energy() {
    let mesh = unit_square(0.08);
    let f = ones(&mesh);
    for p in [1.5, 2.0, 3.0] {
        let prm = PdeParameters::new(2, p, 1.0).unwrap();
        let res = solve_robin(&mesh, &f, &prm, &SolverConfig::for_exponent(p)).unwrap();
        assert!(!res.history.is_empty());
        for step in &res.history {
            assert!(step.decrease < 0.0, "p={p}: {step:?}");
        }
        for w in res.history.windows(2).filter(|w| w[0].epsilon == w[1].epsilon) {
            assert!(w[1].energy <= w[0].energy + 1e-14 * w[0].energy.abs());
        }
    }
}

#[test]
fn refinement_reduces_the_error() {
    for (p, ratio) in [(2.0, 1.7), (3.0, 1.2)] {
        let prm = PdeParameters::new(2, p, 1.0).unwrap();
        let errs: Vec<f64> = [0.08, 0.04]
            .iter()
            .map(|&h| {
                let mesh = disk(h);
                let res = solve_robin(&mesh, &ones(&mesh), &prm, &SolverConfig::for_exponent(p)).unwrap();
                relative_l2(&res.field, |r| robin_exact(p, r))
            })
            .collect();
        assert!(errs[0] / errs[1] >= ratio, "p={p}: {errs:?}");
    }
}

#[test]
fn rejects_bad_inputs() {
    let mesh = unit_square(0.2);
    let prm = PdeParameters::new(2, 2.0, 1.0).unwrap();
    let cfg = SolverConfig::for_exponent(2.0);
    let bad = MeshField::from_fn(mesh.clone(), |x| x[0] - 0.5).unwrap();
    assert!(solve_robin(&mesh, &bad, &prm, &cfg).is_err());
    let prm3 = PdeParameters::new(3, 2.0, 1.0).unwrap();
    assert!(solve_robin(&mesh, &ones(&mesh), &prm3, &cfg).is_err());
    let mut wrong = cfg.clone();
    wrong.epsilon_schedule = vec![1e-2, 1e-1];
    assert!(solve_robin(&mesh, &ones(&mesh), &prm, &wrong).is_err());
    wrong.epsilon_schedule = vec![2.0, 0.0];
    assert!(wrong.validate().is_err());
    let mut tol = cfg.clone();
    tol.residual_tol = 0.0;
    assert!(tol.validate().is_err());
}

#[test]
fn iteration_cap_reports_nonconvergence() {
    let mesh = unit_square(0.1);
    let prm = PdeParameters::new(2, 3.0, 1.0).unwrap();
    let mut cfg = SolverConfig::for_exponent(3.0);
    cfg.max_newton_iters = 1;
    cfg.epsilon_schedule = vec![0.1, 0.0];
    let res = solve_robin(&mesh, &ones(&mesh), &prm, &cfg).unwrap();
    assert!(!res.converged);
    assert!(res.dual_residual > cfg.residual_tol);
    assert!(res.iterations <= 2);
    assert_eq!(res.stages.len(), 2);
}

#[test]
fn linear_field_level_set_on_square() {
    let mesh = unit_square(0.1);
    let u = MeshField::from_fn(mesh.clone(), |x| 1.0 - x[0]).unwrap();
    let geo = level_set_geometry(&u, 0.5).unwrap();
    assert_relative_eq!(geo.perimeter_interior, 1.0, max_relative = 1e-12);
    // bottom and top halves plus the left side
    assert_relative_eq!(geo.exterior_length(), 2.0, max_relative = 1e-12);
    for s in &geo.exterior_trace {
        assert!(s.start[0] <= 0.5 + 1e-12 && s.end[0] <= 0.5 + 1e-12);
    }
    let empty = level_set_geometry(&u, 2.0).unwrap();
    assert_eq!(empty.perimeter(), 0.0);
    assert!(level_set_geometry(&u, -0.1).is_err());
}

#[test]
fn level_sets_of_positive_field_at_zero() {
    let mesh = disk(0.1);
    let u = MeshField::from_fn(mesh.clone(), |x| 2.0 - x[0] * x[0] - x[1] * x[1]).unwrap();
    let geo = level_set_geometry(&u, 0.0).unwrap();
    assert_eq!(geo.perimeter_interior, 0.0);
    assert_relative_eq!(geo.exterior_length(), mesh.perimeter, max_relative = 1e-13);
}

#[test]
fn radial_level_set_perimeters() {
    let mesh = disk(0.03);
    let u = MeshField::from_fn(mesh.clone(), |x| robin_exact(2.0, radius(x))).unwrap();
    for t in [0.52f64, 0.6, 0.65, 0.7] {
        let r: f64 = (1.0 - 4.0 * (t - 0.5f64)).sqrt();
        let geo = level_set_geometry(&u, t).unwrap();
        assert!((geo.perimeter_interior - 2.0 * PI * r).abs() <= 1e-2 * 2.0 * PI * r, "t={t}");
        assert!(geo.exterior_trace.is_empty());
    }
}

#[test]
fn tie_break_moves_the_level_upwards() {
    let mesh = grid_square(4);
    let u = MeshField::from_fn(mesh.clone(), |x| x[0]).unwrap();
    let geo = level_set_geometry(&u, 0.5).unwrap();
    assert!(geo.level > 0.5 && geo.level < 0.5 + 1e-13);
    assert_relative_eq!(geo.perimeter_interior, 1.0, max_relative = 1e-12);
}

#[test]
fn reciprocal_trace_integrals() {
    let mesh = unit_square(0.05);
    let c = MeshField::constant(mesh.clone(), 2.0).unwrap();
    assert_relative_eq!(exterior_reciprocal_integral(&c, 1.0).unwrap(), 4.0 / 2.0, max_relative = 1e-13);
    assert_eq!(exterior_reciprocal_integral(&c, 2.5).unwrap(), 0.0);
    let lin = MeshField::from_fn(mesh.clone(), |x| 1.0 + x[0]).unwrap();
    let exact = 2.0 * 2f64.ln() + 1.5;
    assert_relative_eq!(exterior_reciprocal_integral(&lin, 0.0).unwrap(), exact, max_relative = 1e-13);
    // the trace reaches u = 0 where the boundary crosses x = 1/2
    let thirds = grid_square(3);
    let signed = MeshField::from_fn(thirds, |x| x[0] - 0.5).unwrap();
    assert!(exterior_reciprocal_integral(&signed, 0.0).is_err());
}

#[test]
fn gradient_seminorms() {
    let mesh = unit_square(0.1);
    let c = MeshField::constant(mesh.clone(), 3.0).unwrap();
    assert_eq!(p_dirichlet_seminorm(&c, 2.0), 0.0);
    let x = MeshField::from_fn(mesh.clone(), |x| x[0]).unwrap();
    for p in [1.2, 2.0, 3.5] {
        assert_relative_eq!(p_dirichlet_seminorm(&x, p), 1.0, max_relative = 1e-12);
    }
    let fine = disk(0.02);
    let v = MeshField::from_fn(fine.clone(), |x| (1.0 - x[0] * x[0] - x[1] * x[1]) / 4.0).unwrap();
    // int_0^1 (r/2)^2 2 pi r dr = pi/8
    let semi = p_dirichlet_seminorm(&v, 2.0);
    assert!((semi - PI / 8.0).abs() <= 1e-2 * PI / 8.0, "{semi}");
}

#[test]
fn sidecar_round_trip() {
    let mesh = unit_square(0.2);
    let prm = PdeParameters::new(2, 2.0, 1.0).unwrap();
    let res = solve_robin(&mesh, &ones(&mesh), &prm, &SolverConfig::for_exponent(2.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = res.write_files(dir.path(), "u", "mesh.txt").unwrap();
    let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(side.iterations, res.iterations);
    assert_eq!(side.energy, res.energy);
    assert_eq!(side.epsilon_final, 0.0);
    let lines = std::fs::read_to_string(csv).unwrap().lines().count();
    assert_eq!(lines, mesh.num_vertices() + 1);
}

#[test]
fn single_precision_solve() {
    let sq: Vec<[f32; 2]> = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mesh = Arc::new(talenti_core::mesh_from_polygon(&sq, 0.2f32).unwrap());
    let prm = PdeParameters::new(2, 2.0f32, 1.0).unwrap();
    let mut cfg = SolverConfig::for_exponent(2.0);
    cfg.residual_tol = 1e-5;
    cfg.linear_solver_tol = 1e-6;
    let f = MeshField::constant(mesh.clone(), 1.0f32).unwrap();
    let res = solve_robin(&mesh, &f, &prm, &cfg).unwrap();
    assert!(res.converged);
    assert!(res.field.min().as_f64() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn level_sets_satisfy_isoperimetry(t in 0.0f64..0.99, tilt in 0.0f64..0.5) {
        let mesh = grid_square(32);
        let u = MeshField::from_fn(mesh.clone(), |x| {
            (1.0 - (x[0] - 0.5).powi(2) - 2.0 * (x[1] - 0.5).powi(2)) * (1.0 + tilt * x[0])
        })
        .unwrap();
        let geo = level_set_geometry(&u, t * u.max()).unwrap();
        let mu = talenti_core::SuperlevelMeasure::from_field(&u).eval(geo.level);
        let h = mesh.max_edge_length();
        prop_assert!(geo.perimeter().powi(2) >= 4.0 * PI * mu - 10.0 * h * h);
    }

    #[test]
    fn residual_vanishes_only_at_the_solution(shift in -0.2f64..0.2) {
        let mesh = grid_square(8);
        let prm = PdeParameters::new(2, 2.0, 1.0).unwrap();
        let f = ones(&mesh);
        let res = solve_robin(&mesh, &f, &prm, &SolverConfig::for_exponent(2.0)).unwrap();
        let moved = res.field.map(|v| v + shift).unwrap();
        // convexity: J(u + c) >= J(u)
        prop_assert!(robin_energy(&moved, &f, &prm).unwrap() >= res.energy - 1e-14);
    }
}
