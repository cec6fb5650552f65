mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use common::{plateau_field, plateau_mesh, unit_square};
use talenti_core::rearrangement::{
    decreasing_rearrangement, distribution_function, hardy_littlewood_gap, interpolant_measure, level_set_nesting_check, lorentz_norm,
    lorentz_norm_quadrature, lp_norm_cavalieri, lp_norm_exact, rearrangement_nodes, schwarz_rearrangement, LorentzIndex, SuperlevelMeasure,
};
use talenti_core::{ball_mesh, make_parameters, mesh_from_polygon, MeshField, StepFunction};

#[test]
fn constant_field_distribution() {
    let m = Arc::new(mesh_from_polygon(&[[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [0.0, 1.0]], 0.5).unwrap());
    let u = MeshField::constant(m, 2.0).unwrap();
    let mu = distribution_function(&u);
    assert_eq!(mu.eval(0.0), 3.0);
    assert_eq!(mu.eval(1.999), 3.0);
    assert_eq!(mu.eval(2.0), 0.0);
    let star = decreasing_rearrangement(&u, 64).unwrap();
    assert_eq!(star.values(), &[2.0]);
    assert_eq!(star.total_measure(), 3.0);
}

#[test]
fn two_plateau_distribution() {
    let m = plateau_mesh(&[1.0, 0.5]);
    let u = plateau_field(&m, &[2.0, 5.0]);
    let mu = distribution_function(&u);
    assert_eq!(mu.eval(1.0), 1.5);
    assert_eq!(mu.eval(3.0), 0.5);
    assert_eq!(mu.eval(5.0), 0.0);
}

#[test]
fn linear_field_distribution_and_rearrangement() {
    let u = MeshField::from_fn(unit_square(0.1), |x| 1.0 - x[0]).unwrap();
    let mu = distribution_function(&u);
    for (&t, &m) in mu.breakpoints().iter().zip(mu.values()) {
        assert!((m - (1.0 - t)).abs() < 1e-12);
    }
    let star = decreasing_rearrangement(&u, 1000).unwrap();
    for (a, b, v) in star.intervals() {
        let mid = 0.5 * (a + b);
        assert!((v - (1.0 - mid)).abs() < 1e-12);
    }
}

#[test]
fn plateau_rearrangement_sorts_plateaus() {
    let m = plateau_mesh(&[1.0, 2.0]);
    let u = plateau_field(&m, &[3.0, 1.0]);
    let star = decreasing_rearrangement(&u, 16).unwrap();
    assert_eq!(star.breakpoints(), &[0.0, 1.0]);
    assert_eq!(star.values(), &[3.0, 1.0]);
    assert_eq!(star.total_measure(), 3.0);
}

#[test]
fn schwarz_examples() {
    let prm = make_parameters(2, 2.0, 1.0).unwrap();
    let c = StepFunction::new(vec![0.0], vec![1.5], PI).unwrap();
    let s = schwarz_rearrangement(&c, &prm).unwrap();
    assert_relative_eq!(s.radius(), 1.0, max_relative = 1e-15);
    assert_relative_eq!(s.volume(), PI, max_relative = 1e-12);
    assert_eq!(s.eval(0.3), 1.5);

    let n = 2000;
    let b: Vec<f64> = (0..n).map(|i| PI * i as f64 / n as f64).collect();
    let v: Vec<f64> = b.iter().map(|&s| 1.0 - s / PI).collect();
    let lin = schwarz_rearrangement(&StepFunction::new(b, v, PI).unwrap(), &prm).unwrap();
    for &r in &[0.1, 0.5, 0.9] {
        assert!((lin.eval(r) - (1.0 - r * r)).abs() < 2e-3);
    }

    let steps = StepFunction::new(vec![0.0, 1.0], vec![3.0, 1.0], 3.0).unwrap();
    let sp = schwarz_rearrangement(&steps, &prm).unwrap();
    let r1 = (1.0 / PI).sqrt();
    assert_eq!(sp.eval(r1 - 1e-9), 3.0);
    assert_eq!(sp.eval(r1 + 1e-9), 1.0);
    assert_relative_eq!(sp.radius(), (3.0 / PI).sqrt(), max_relative = 1e-15);
}

#[test]
fn lorentz_norm_of_constant() {
    let (c, area) = (1.7f64, 2.5f64);
    let mu = StepFunction::new(vec![0.0], vec![area], c).unwrap();
    for &(p, q) in &[(2.0f64, 2.0f64), (3.0, 1.5), (0.8, 4.0)] {
        let expected = (p / q).powf(1.0 / q) * c * area.powf(1.0 / p);
        let idx = LorentzIndex::new(p, q).unwrap();
        assert_relative_eq!(lorentz_norm(&mu, idx).unwrap(), expected, max_relative = 1e-14);
    }
    let l2 = lorentz_norm(&mu, LorentzIndex::new(2.0, 2.0).unwrap()).unwrap();
    assert_relative_eq!(l2, c * area.sqrt(), max_relative = 1e-14);
    assert_eq!(lorentz_norm(&StepFunction::zero(1.0), LorentzIndex::new(2.0, 2.0).unwrap()).unwrap(), 0.0);
    assert!(LorentzIndex::new(0.0, 1.0).is_err());
}

#[test]
fn cavalieri_examples() {
    let one = StepFunction::new(vec![0.0], vec![1.0], 1.0).unwrap();
    for &p in &[1.0, 2.0, 3.5] {
        assert_relative_eq!(lp_norm_cavalieri(&one, p).unwrap(), 1.0, max_relative = 1e-15);
    }
    let u = MeshField::from_fn(unit_square(0.1), |x| 1.0 - x[0]).unwrap();
    let exact = lp_norm_exact(&SuperlevelMeasure::from_field(&u), 2.0, 1e-12).unwrap();
    assert_relative_eq!(exact.value, (1.0f64 / 3.0).sqrt(), max_relative = 1e-10);
    assert_eq!(lp_norm_cavalieri(&StepFunction::zero(1.0), 2.0).unwrap(), 0.0);
}

#[test]
fn quadrature_lorentz_matches_closed_form_for_step_fields() {
    let m = plateau_mesh(&[0.5, 0.25, 1.0]);
    let u = plateau_field(&m, &[1.0, 4.0, 2.0]);
    let mu = SuperlevelMeasure::from_field(&u);
    let step = distribution_function(&u);
    for &(p, q) in &[(2.0, 2.0), (3.0, 1.5)] {
        let idx = LorentzIndex::new(p, q).unwrap();
        let a = lorentz_norm(&step, idx).unwrap();
        let b = lorentz_norm_quadrature(&mu, idx, 1e-12).unwrap();
        assert_relative_eq!(a, b.value, max_relative = 1e-10);
    }
}

#[test]
fn hardy_littlewood_two_plateaus() {
    let m = plateau_mesh(&[1.0, 1.0]);
    let f = plateau_field(&m, &[1.0, 2.0]);
    let g = plateau_field(&m, &[2.0, 1.0]);
    let gap = hardy_littlewood_gap(&f, &g, 64).unwrap();
    assert!((gap.value - 1.0).abs() < 1e-14, "{gap:?}");
    let self_gap = hardy_littlewood_gap(&f, &f, 64).unwrap();
    assert!(self_gap.value.abs() < 1e-14);
}

#[test]
fn hardy_littlewood_requires_same_mesh() {
    let f = plateau_field(&plateau_mesh(&[1.0]), &[1.0]);
    let g = plateau_field(&plateau_mesh(&[2.0]), &[1.0]);
    assert!(matches!(hardy_littlewood_gap(&f, &g, 8), Err(talenti_core::Error::Usage(_))));
}

#[test]
fn smooth_field_equal_hardy_littlewood() {
    let u = MeshField::from_fn(unit_square(0.05), |x| 1.0 + x[0] * x[1]).unwrap();
    let gap = hardy_littlewood_gap(&u, &u, 4096).unwrap();
    assert!(gap.value.abs() <= gap.error + 1e-9, "{gap:?}");
    assert!(gap.error < 1e-3);
}

#[test]
fn nesting_identical_and_monotone_transform() {
    let m = unit_square(0.05);
    let f = MeshField::from_fn(m.clone(), |x| 1.0 + x[0] + 0.5 * x[1]).unwrap();
    let taus = [1.2, 1.5, 2.0];
    let same = level_set_nesting_check(&f, &f, &taus, 1e-9).unwrap();
    assert!(same.all_nested());
    for e in &same.entries {
        assert!(e.symmetric_difference < 1e-12);
    }
    let g = f.map(|v| v * v).unwrap();
    let sq = level_set_nesting_check(&f, &g, &[1.5, 2.5, 4.0], 1e-3).unwrap();
    for e in &sq.entries {
        assert!(e.symmetric_difference < 1e-3, "{e:?}");
        assert!((e.best_t - e.tau.sqrt()).abs() < 5e-3);
    }
}

#[test]
fn nesting_detects_crossing_level_sets() {
    let m = unit_square(0.05);
    let f = MeshField::from_fn(m.clone(), |x| 0.1 + x[0]).unwrap();
    let g = MeshField::from_fn(m, |x| 0.1 + x[1]).unwrap();
    let r = level_set_nesting_check(&f, &g, &[0.6], 1e-3).unwrap();
    // {y > 1/2} against {x > t}: the best is t = 1/2 with symmetric difference 1/2
    assert!((r.entries[0].symmetric_difference - 0.5).abs() < 1e-2);
    assert!(!r.all_nested());
}

#[test]
fn fine_grid_rearrangement_is_equimeasurable_and_preserves_lp() {
    let m = Arc::new(ball_mesh(PI, 0.05).unwrap());
    let u = MeshField::from_fn(m, |x| (-(x[0] * x[0] + x[1] * x[1])).exp() + 0.3 * x[0] + 0.5).unwrap();
    let mu = SuperlevelMeasure::from_field(&u);
    let total = mu.total_measure();
    let (s, w) = rearrangement_nodes(&mu, 10_000).unwrap();
    assert!(w.windows(2).all(|v| v[1] <= v[0]));
    for i in 0..200 {
        let t = u.min() + (u.max() - u.min()) * (i as f64 + 0.5) / 200.0;
        let d = (interpolant_measure(&s, &w, t) - mu.eval(t)).abs();
        assert!(d <= 1e-6 * total, "t={t} diff={d}");
    }
    let star = decreasing_rearrangement(&u, 10_000).unwrap();
    for &p in &[1.0, 2.0, 3.0] {
        let exact = lp_norm_exact(&mu, p, 1e-12).unwrap().value;
        let sampled = star.intervals().map(|(a, b, v)| v.powf(p) * (b - a)).sum::<f64>().powf(1.0 / p);
        assert_relative_eq!(sampled, exact, max_relative = 1e-6);
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// `int f* g*` for plateau fields, exactly.
fn rearranged_product_oracle(areas: &[f64], f: &[f64], g: &[f64]) -> BigRational {
    let sorted = |v: &[f64]| {
        let mut items: Vec<(BigRational, BigRational)> = v.iter().zip(areas).map(|(&x, &a)| (rational(x), rational(a))).collect();
        items.sort_by(|a, b| b.0.cmp(&a.0));
        items
    };
    let (fs, gs) = (sorted(f), sorted(g));
    let mut cuts: Vec<BigRational> = vec![BigRational::from_integer(BigInt::from(0))];
    let mut acc = cuts[0].clone();
    for (_, a) in &fs {
        acc += a;
        cuts.push(acc.clone());
    }
    acc = cuts[0].clone();
    for (_, a) in &gs {
        acc += a;
        cuts.push(acc.clone());
    }
    cuts.sort();
    cuts.dedup();
    let value_at = |items: &[(BigRational, BigRational)], s: &BigRational| {
        let mut end = BigRational::from_integer(BigInt::from(0));
        for (v, a) in items {
            end += a;
            if *s < end {
                return v.clone();
            }
        }
        BigRational::from_integer(BigInt::from(0))
    };
    let mut total = BigRational::from_integer(BigInt::from(0));
    for w in cuts.windows(2) {
        let mid = (&w[0] + &w[1]) / BigRational::from_integer(BigInt::from(2));
        total += (&w[1] - &w[0]) * value_at(&fs, &mid) * value_at(&gs, &mid);
    }
    total
}

fn plateau_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|n| {
        (
            proptest::collection::vec((1u32..64).prop_map(|k| k as f64 / 32.0), n),
            proptest::collection::vec((1u32..256).prop_map(|k| k as f64 / 16.0), n),
            proptest::collection::vec((1u32..256).prop_map(|k| k as f64 / 16.0), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn hardy_littlewood_gap_matches_exact_oracle((areas, fv, gv) in plateau_pair()) {
        let m = plateau_mesh(&areas);
        let f = plateau_field(&m, &fv);
        let g = plateau_field(&m, &gv);
        let gap = hardy_littlewood_gap(&f, &g, 64).unwrap();
        let direct: BigRational = areas.iter().zip(fv.iter().zip(&gv)).map(|(&a, (&x, &y))| rational(a) * rational(x) * rational(y)).sum();
        let exact = rearranged_product_oracle(&areas, &fv, &gv) - direct;
        prop_assert!(exact >= BigRational::from_integer(BigInt::from(0)));
        let exact_f = num_traits::ToPrimitive::to_f64(&exact).unwrap();
        prop_assert!(gap.value >= -gap.error);
        prop_assert!((gap.value - exact_f).abs() <= gap.error + 1e-12 * (1.0 + exact_f.abs()));
    }

    #[test]
    fn lorentz_cavalieri_agree_on_steps(vals in proptest::collection::vec(0.01f64..10.0, 1..20), widths in proptest::collection::vec(0.01f64..2.0, 20), p in 1.0f64..6.0) {
        let mut plateaus: Vec<(f64, f64)> = vals.iter().zip(&widths).map(|(&v, &w)| (v, w)).collect();
        plateaus.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let star = StepFunction::from_plateaus(&plateaus).unwrap();
        let mu = star.distribution().unwrap();
        let l = lorentz_norm(&mu, LorentzIndex::new(p, p).unwrap()).unwrap();
        let c = lp_norm_cavalieri(&mu, p).unwrap();
        prop_assert!((l - c).abs() <= 1e-10 * l);
        let direct: f64 = plateaus.iter().map(|&(v, w)| v.powf(p) * w).sum::<f64>().powf(1.0 / p);
        prop_assert!((c - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn lorentz_scaling(vals in proptest::collection::vec(0.01f64..10.0, 1..20), c in 0.1f64..10.0, pl in 0.5f64..5.0, q in 0.5f64..5.0) {
        let plateaus: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, &v)| (v, 0.1 + i as f64 * 0.05)).collect();
        let mu = StepFunction::from_plateaus(&plateaus).unwrap().distribution().unwrap();
        let scaled = StepFunction::new(mu.breakpoints().iter().map(|&b| c * b).collect(), mu.values().to_vec(), c * mu.total_measure()).unwrap();
        let idx = LorentzIndex::new(pl, q).unwrap();
        let a = lorentz_norm(&mu, idx).unwrap();
        let b = lorentz_norm(&scaled, idx).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-12 * c * a);
    }

    #[test]
    fn rearrangement_is_monotone_and_equimeasurable(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = common::grid_square(8);
        let vals: Vec<f64> = (0..m.num_vertices()).map(|_| rng.gen_range(0.0..3.0)).collect();
        let u = MeshField::new(m.clone(), vals).unwrap();
        let star = decreasing_rearrangement(&u, 512).unwrap();
        prop_assert!(star.values().windows(2).all(|w| w[1] <= w[0]));
        let mu = SuperlevelMeasure::from_field(&u);
        let mu_star = star.distribution().unwrap();
        let cell = star.total_measure() / 512.0;
        for i in 0..50 {
            let t = u.max() * i as f64 / 50.0;
            prop_assert!((mu.eval(t) - mu_star.eval(t)).abs() <= cell + 1e-12);
        }
        let prm = make_parameters(2, 2.0, 1.0).unwrap();
        let sharp = schwarz_rearrangement(&star, &prm).unwrap();
        prop_assert!(sharp.values().windows(2).all(|w| w[1] <= w[0]));
    }
}
