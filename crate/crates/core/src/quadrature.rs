//! Quadrature rules with reported error estimates.

use serde::{Deserialize, Serialize};

use crate::real::CompensatedSum;
use crate::Real;

/// A computed value together with an error estimate for it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

impl<T: Real> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self { value, error: T::zero() }
    }

    pub fn new(value: T, error: T) -> Self {
        Self { value, error }
    }
}

impl<T: Real> std::ops::Add for Estimate<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.error + rhs.error)
    }
}

struct Simpson<'a, T, F> {
    f: &'a mut F,
    sum: CompensatedSum<T>,
    err: CompensatedSum<T>,
    evaluations: usize,
    exhausted: bool,
}

impl<T: Real, F: FnMut(T) -> T> Simpson<'_, T, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: usize) {
        let half = T::of(0.5);
        let m = half * (a + b);
        let lm = half * (a + m);
        let rm = half * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evaluations += 2;
        let six = T::of(6.0);
        let left = (m - a) / six * (fa + T::of(4.0) * flm + fm);
        let right = (b - m) / six * (fm + T::of(4.0) * frm + fb);
        let delta = left + right - whole;
        let fifteen = T::of(15.0);
        if depth == 0 || delta.abs() <= fifteen * tol || m <= a || b <= m {
            if depth == 0 && delta.abs() > fifteen * tol {
                self.exhausted = true;
            }
            self.sum.add(left + right + delta / fifteen);
            self.err.add(delta.abs() / fifteen);
            return;
        }
        self.recurse(a, m, fa, flm, fm, left, half * tol, depth - 1);
        self.recurse(m, b, fm, frm, fb, right, half * tol, depth - 1);
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The returned error is the sum of the local `|S_2 - S_1| / 15` estimates;
/// `exhausted` in [`AdaptiveResult`] reports whether the depth limit was hit.
pub fn adaptive_simpson<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T, max_depth: usize) -> AdaptiveResult<T> {
    if a == b {
        return AdaptiveResult { estimate: Estimate::exact(T::zero()), evaluations: 0, exhausted: false };
    }
    let fa = f(a);
    let fb = f(b);
    let m = T::of(0.5) * (a + b);
    let fm = f(m);
    let whole = (b - a) / T::of(6.0) * (fa + T::of(4.0) * fm + fb);
    let mut s = Simpson { f: &mut f, sum: CompensatedSum::new(), err: CompensatedSum::new(), evaluations: 3, exhausted: false };
    s.recurse(a, b, fa, fm, fb, whole, tol, max_depth);
    AdaptiveResult { estimate: Estimate::new(s.sum.value(), s.err.value()), evaluations: s.evaluations, exhausted: s.exhausted }
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveResult<T> {
    pub estimate: Estimate<T>,
    pub evaluations: usize,
    pub exhausted: bool,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` for 1 to 5 points.
pub fn gauss_legendre(points: usize) -> (&'static [f64], &'static [f64]) {
    const X1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const X2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const X3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    const X4: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W4: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    const X5: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    const W5: [f64; 5] =
        [0.236_926_885_056_189_1, 0.478_628_670_499_366_5, 0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];
    match points {
        1 => (&X1, &W1),
        2 => (&X2, &W2),
        3 => (&X3, &W3),
        4 => (&X4, &W4),
        _ => (&X5, &W5),
    }
}

/// Gauss–Legendre approximation of `int_a^b f`.
pub fn gauss_integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, points: usize) -> T {
    let (x, w) = gauss_legendre(points);
    let half = T::of(0.5) * (b - a);
    let mid = T::of(0.5) * (a + b);
    let mut acc = CompensatedSum::new();
    for (xi, wi) in x.iter().zip(w) {
        acc.add(T::of(*wi) * f(mid + half * T::of(*xi)));
    }
    acc.value() * half
}

/// Seven-point rule exact for polynomials of degree 5 on a triangle, as
/// barycentric coordinates with weights summing to one.
pub fn triangle_rule_degree5() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let b1 = (6.0 + s15) / 21.0;
    let a1 = 1.0 - 2.0 * b1;
    let b2 = (6.0 - s15) / 21.0;
    let a2 = 1.0 - 2.0 * b2;
    let w1 = (155.0 + s15) / 1200.0;
    let w2 = (155.0 - s15) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}
