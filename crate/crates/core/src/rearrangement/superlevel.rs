//! Exact distribution function of a piecewise-linear field.
//!
//! On a triangle of area `A` with sorted vertex values `a <= b <= c`, the
//! area of `{u > t}` is
//!
//! ```text
//!   A                                   t < a
//!   A (1 - (t-a)^2 / ((b-a)(c-a)))      a <= t < b
//!   A (c-t)^2 / ((c-a)(c-b))            b <= t < c
//!   0                                   t >= c
//! ```
//!
//! so `mu` is an exact piecewise quadratic between the sorted vertex values
//! ("knots"), continuous except for jumps at values where whole triangles are
//! flat. `|u|` is handled by adding the entries of `-u` on triangles where
//! `u` takes negative values.

use rayon::prelude::*;

use crate::field::MeshField;
use crate::quadrature::{adaptive_simpson, Estimate};
use crate::real::CompensatedSum;
use crate::Real;

#[derive(Clone, Copy, Debug)]
struct Entry<T> {
    a: T,
    b: T,
    c: T,
    area: T,
}

impl<T: Real> Entry<T> {
    #[inline]
    fn superlevel(&self, t: T) -> T {
        let Entry { a, b, c, area } = *self;
        if t < a {
            area
        } else if t < b {
            let d = t - a;
            area * (T::one() - d * d / ((b - a) * (c - a)))
        } else if t < c {
            let d = c - t;
            area * d * d / ((c - a) * (c - b))
        } else {
            T::zero()
        }
    }
}

/// `t -> |{x : |u(x)| > t}|` for a P1 field, stored as values at the knots
/// and the midpoints between them.
#[derive(Clone, Debug)]
pub struct SuperlevelMeasure<T> {
    knots: Vec<T>,
    at_knot: Vec<T>,
    left_of_knot: Vec<T>,
    at_mid: Vec<T>,
    total: T,
}

struct Evaluator<T> {
    entries: Vec<Entry<T>>,
    suffix: Vec<T>,
    max_span: T,
}

impl<T: Real> Evaluator<T> {
    fn new(mut entries: Vec<Entry<T>>) -> Self {
        entries.sort_by(|x, y| x.a.partial_cmp(&y.a).expect("finite field values"));
        let mut suffix = vec![T::zero(); entries.len() + 1];
        let mut acc = CompensatedSum::new();
        for i in (0..entries.len()).rev() {
            acc.add(entries[i].area);
            suffix[i] = acc.value();
        }
        let max_span = entries.iter().fold(T::zero(), |m, e| m.max(e.c - e.a));
        Self { entries, suffix, max_span }
    }

    fn eval(&self, t: T) -> T {
        let hi = self.entries.partition_point(|e| e.a <= t);
        let lo = self.entries[..hi].partition_point(|e| e.a < t - self.max_span);
        let mut acc = CompensatedSum::new();
        acc.add(self.suffix[hi]);
        for e in &self.entries[lo..hi] {
            acc.add(e.superlevel(t));
        }
        acc.value()
    }
}

fn sort3<T: Real>(v: [T; 3]) -> [T; 3] {
    let mut v = v;
    if v[0] > v[1] {
        v.swap(0, 1);
    }
    if v[1] > v[2] {
        v.swap(1, 2);
    }
    if v[0] > v[1] {
        v.swap(0, 1);
    }
    v
}

impl<T: Real> SuperlevelMeasure<T> {
    pub fn from_field(field: &MeshField<T>) -> Self {
        let mesh = field.mesh();
        let mut entries = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let area = mesh.triangle_area(t);
            let v = field.triangle_values(t);
            let [a, b, c] = sort3(v);
            if c > T::zero() {
                entries.push(Entry { a, b, c, area });
            }
            if a < T::zero() {
                entries.push(Entry { a: -c, b: -b, c: -a, area });
            }
        }
        Self::from_entries(entries, mesh.area)
    }

    fn from_entries(entries: Vec<Entry<T>>, total: T) -> Self {
        let mut knots: Vec<T> = vec![T::zero()];
        for e in &entries {
            for v in [e.a, e.b, e.c] {
                if v > T::zero() {
                    knots.push(v);
                }
            }
        }
        knots.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        knots.dedup();

        let mut plateau_area: Vec<(T, T)> = entries.iter().filter(|e| e.a == e.c && e.a > T::zero()).map(|e| (e.a, e.area)).collect();
        plateau_area.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));

        let ev = Evaluator::new(entries);
        let at_knot: Vec<T> = knots.par_iter().map(|&k| ev.eval(k)).collect();
        let at_mid: Vec<T> = knots.par_windows(2).map(|w| ev.eval(T::of(0.5) * (w[0] + w[1]))).collect();

        let mut jumps = vec![CompensatedSum::new(); knots.len()];
        for (v, a) in plateau_area {
            let j = knots.partition_point(|&k| k < v);
            jumps[j].add(a);
        }
        let mut left_of_knot: Vec<T> = at_knot.iter().zip(&jumps).map(|(&m, j)| m + j.value()).collect();
        // at t = 0 the left limit is the measure of {|u| >= 0}
        left_of_knot[0] = total;
        Self { knots, at_knot, left_of_knot, at_mid, total }
    }

    /// Builds the measure of a field given directly by per-triangle values.
    pub fn from_triangles(triangles: &[([T; 3], T)]) -> Self {
        let mut entries = Vec::new();
        let mut total = CompensatedSum::new();
        for &(v, area) in triangles {
            total.add(area);
            let [a, b, c] = sort3(v);
            if c > T::zero() {
                entries.push(Entry { a, b, c, area });
            }
            if a < T::zero() {
                entries.push(Entry { a: -c, b: -b, c: -a, area });
            }
        }
        Self::from_entries(entries, total.value())
    }

    /// Sorted knots, starting at 0 and ending at `max |u|`.
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    /// Measure of the underlying domain.
    pub fn total_measure(&self) -> T {
        self.total
    }

    pub fn max_value(&self) -> T {
        *self.knots.last().expect("knot list always holds 0")
    }

    fn piece(&self, j: usize, x: T) -> T {
        // quadratic through (0, mu(k_j)), (1/2, mid), (1, mu(k_{j+1}^-))
        let m0 = self.at_knot[j];
        let mm = self.at_mid[j];
        let m1 = self.left_of_knot[j + 1];
        let c1 = -T::of(3.0) * m0 + T::of(4.0) * mm - m1;
        let c2 = T::of(2.0) * (m0 - T::of(2.0) * mm + m1);
        (m0 + x * (c1 + x * c2)).max(T::zero())
    }

    fn piece_slope(&self, j: usize, x: T) -> T {
        let m0 = self.at_knot[j];
        let mm = self.at_mid[j];
        let m1 = self.left_of_knot[j + 1];
        let c1 = -T::of(3.0) * m0 + T::of(4.0) * mm - m1;
        let c2 = T::of(2.0) * (m0 - T::of(2.0) * mm + m1);
        c1 + T::of(2.0) * c2 * x
    }

    /// `mu(t)`: right-continuous, equal to the domain measure for `t < 0`.
    pub fn eval(&self, t: T) -> T {
        if t < T::zero() {
            return self.total;
        }
        let j = self.knots.partition_point(|&k| k <= t);
        if j == self.knots.len() {
            return T::zero();
        }
        let k0 = self.knots[j - 1];
        if t == k0 {
            return self.at_knot[j - 1];
        }
        let k1 = self.knots[j];
        self.piece(j - 1, (t - k0) / (k1 - k0))
    }

    /// `mu(t^-)`.
    pub fn left_limit(&self, t: T) -> T {
        if t <= T::zero() {
            return self.total;
        }
        let j = self.knots.partition_point(|&k| k < t);
        if j < self.knots.len() && self.knots[j] == t {
            return self.left_of_knot[j];
        }
        self.eval(t)
    }

    /// Exact derivative of `mu` away from knots (one-sided at knots).
    pub fn derivative(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        let j = self.knots.partition_point(|&k| k <= t);
        if j == self.knots.len() {
            return T::zero();
        }
        let (k0, k1) = (self.knots[j - 1], self.knots[j]);
        self.piece_slope(j - 1, (t - k0) / (k1 - k0)) / (k1 - k0)
    }

    /// Jump discontinuities `(t, mu(t), mu(t^-))` coming from flat triangles.
    pub fn plateaus(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        (1..self.knots.len())
            .filter(move |&j| self.left_of_knot[j] > self.at_knot[j])
            .map(move |j| (self.knots[j], self.at_knot[j], self.left_of_knot[j]))
    }

    fn solve_piece(&self, j: usize, s: T) -> T {
        // piece j is non-increasing from > s at x = 0 to <= s at x = 1
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..64 {
            let mid = T::of(0.5) * (lo + hi);
            if self.piece(j, mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.knots[j] + hi * (self.knots[j + 1] - self.knots[j])
    }

    /// Decreasing rearrangement `u*(s) = inf { t >= 0 : mu(t) <= s }`.
    pub fn inverse(&self, s: T) -> T {
        if s < T::zero() {
            return self.max_value();
        }
        if self.at_knot[0] <= s {
            return T::zero();
        }
        let j = self.at_knot.partition_point(|&m| m > s);
        if self.left_of_knot[j] > s {
            return self.knots[j];
        }
        self.solve_piece(j - 1, s)
    }

    /// Left limit `u*(s^-) = inf { t >= 0 : mu(t) < s }`.
    pub fn inverse_left(&self, s: T) -> T {
        if self.at_knot[0] < s {
            return T::zero();
        }
        let j = self.at_knot.partition_point(|&m| m >= s);
        if j == self.knots.len() {
            return self.max_value();
        }
        if self.left_of_knot[j] >= s {
            return self.knots[j];
        }
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..64 {
            let mid = T::of(0.5) * (lo + hi);
            if self.piece(j - 1, mid) >= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.knots[j - 1] + hi * (self.knots[j] - self.knots[j - 1])
    }

    /// `int_0^inf t^{q-1} mu(t)^{q/P} dt` by adaptive Simpson on every knot
    /// interval, with the summed error estimate.
    pub fn lorentz_integral(&self, p_lorentz: T, q_lorentz: T, tol: T) -> Estimate<T> {
        let a = q_lorentz / p_lorentz;
        let qm1 = q_lorentz - T::one();
        let top = self.max_value();
        if !(top > T::zero()) {
            return Estimate::exact(T::zero());
        }
        let pieces: Vec<Estimate<T>> = (0..self.knots.len() - 1)
            .into_par_iter()
            .map(|j| {
                let (k0, k1) = (self.knots[j], self.knots[j + 1]);
                let width = k1 - k0;
                let local_tol = tol * width / top;
                let r = adaptive_simpson(
                    |x: T| {
                        let t = k0 + x * width;
                        let m = self.piece(j, x);
                        if m > T::zero() {
                            t.powf(qm1) * m.powf(a)
                        } else {
                            T::zero()
                        }
                    },
                    T::zero(),
                    T::one(),
                    local_tol / width,
                    30,
                );
                Estimate::new(r.estimate.value * width, r.estimate.error * width)
            })
            .collect();
        let mut value = CompensatedSum::new();
        let mut error = CompensatedSum::new();
        for e in pieces {
            value.add(e.value);
            error.add(e.error);
        }
        Estimate::new(value.value(), error.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_from_polygon, Mesh};
    use std::sync::Arc;

    fn unit_square(h: f64) -> Arc<Mesh<f64>> {
        Arc::new(mesh_from_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], h).unwrap())
    }

    #[test]
    fn linear_field_on_square() {
        let m = unit_square(0.1);
        let u = MeshField::from_fn(m, |x| 1.0 - x[0]).unwrap();
        let mu = SuperlevelMeasure::from_field(&u);
        for &t in &[0.0, 0.1, 0.25, 0.5, 0.77, 0.999] {
            assert!((mu.eval(t) - (1.0 - t)).abs() < 1e-13, "t={t}: {}", mu.eval(t));
            assert!((mu.inverse(1.0 - t) - t).abs() < 1e-12);
            assert!((mu.derivative(0.99 * t + 1e-4) + 1.0).abs() < 1e-9);
        }
        assert_eq!(mu.eval(1.0), 0.0);
    }

    #[test]
    fn single_triangle_formula() {
        let mu = SuperlevelMeasure::from_triangles(&[([0.0, 1.0, 3.0], 2.0)]);
        let exact = |t: f64| {
            if t < 1.0 {
                2.0 * (1.0 - t * t / 3.0)
            } else if t < 3.0 {
                2.0 * (3.0 - t).powi(2) / 6.0
            } else {
                0.0
            }
        };
        for i in 0..300 {
            let t = i as f64 * 0.01;
            assert!((mu.eval(t) - exact(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn absolute_value_is_used() {
        let mu = SuperlevelMeasure::from_triangles(&[([-1.0, -1.0, -1.0], 1.0), ([2.0, 2.0, 2.0], 0.5)]);
        assert_eq!(mu.eval(0.5), 1.5);
        assert_eq!(mu.eval(1.0), 0.5);
        assert_eq!(mu.eval(2.0), 0.0);
        assert_eq!(mu.left_limit(2.0), 0.5);
        assert_eq!(mu.left_limit(1.0), 1.5);
        assert_eq!(mu.inverse(0.25), 2.0);
        assert_eq!(mu.inverse(1.0), 1.0);
        assert_eq!(mu.inverse_left(0.5), 2.0);
        assert_eq!(mu.inverse(0.5), 1.0);
    }
}
