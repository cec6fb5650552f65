//! Decreasing radial functions on a ball.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::{unit_ball_volume, PdeParameters};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    /// Sample `i` holds on `[r_i, r_{i+1})`.
    Step,
    Linear,
    /// Cubic Hermite using stored slopes.
    Hermite,
}

/// Non-increasing function of `r` sampled on `0 = r_0 < ... < r_m = R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile<T> {
    n: usize,
    radius: T,
    r: Vec<T>,
    values: Vec<T>,
    slopes: Option<Vec<T>>,
    kind: Interpolation,
    /// Accumulated quadrature error bound of the sampled values.
    pub quadrature_error: T,
}

impl<T: Real> RadialProfile<T> {
    pub fn new(n: usize, r: Vec<T>, values: Vec<T>, kind: Interpolation) -> Result<Self> {
        if r.len() < 2 || r.len() != values.len() {
            return Err(domain("profile needs at least two samples with one value each"));
        }
        if r[0] != T::zero() {
            return Err(domain("profile samples must start at r = 0"));
        }
        if r.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain("profile radii must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("profile values must be finite"));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(domain(format!("profile increases between samples {i} and {}", i + 1)));
        }
        let radius = *r.last().expect("checked length");
        Ok(Self { n, radius, r, values, slopes: None, kind, quadrature_error: T::zero() })
    }

    /// Hermite profile with the given `dv/dr` at each sample.
    pub fn with_slopes(n: usize, r: Vec<T>, values: Vec<T>, slopes: Vec<T>) -> Result<Self> {
        if slopes.len() != r.len() {
            return Err(domain("one slope per sample is required"));
        }
        let mut p = Self::new(n, r, values, Interpolation::Hermite)?;
        p.slopes = Some(slopes);
        Ok(p)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// `omega_n R^n`.
    pub fn volume(&self) -> T {
        unit_ball_volume::<T>(self.n) * self.radius.powi(self.n as i32)
    }

    pub fn radii(&self) -> &[T] {
        &self.r
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn slopes(&self) -> Option<&[T]> {
        self.slopes.as_deref()
    }

    pub fn kind(&self) -> Interpolation {
        self.kind
    }

    pub fn center_value(&self) -> T {
        self.values[0]
    }

    pub fn boundary_value(&self) -> T {
        *self.values.last().expect("non-empty")
    }

    fn locate(&self, r: T) -> usize {
        (self.r.partition_point(|&x| x <= r).max(1) - 1).min(self.r.len() - 2)
    }

    /// Value at radius `r`, clamped to `[0, R]`.
    pub fn eval(&self, r: T) -> T {
        let r = r.max(T::zero()).min(self.radius);
        if r == self.radius {
            return self.boundary_value();
        }
        let i = self.locate(r);
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let h = r1 - r0;
        let x = (r - r0) / h;
        match self.kind {
            Interpolation::Step => v0,
            Interpolation::Linear => v0 + x * (v1 - v0),
            Interpolation::Hermite => {
                let s = self.slopes.as_ref().expect("Hermite profiles carry slopes");
                let (d0, d1) = (s[i] * h, s[i + 1] * h);
                let x2 = x * x;
                let x3 = x2 * x;
                let two = T::of(2.0);
                let three = T::of(3.0);
                let h00 = two * x3 - three * x2 + T::one();
                let h10 = x3 - two * x2 + x;
                let h01 = three * x2 - two * x3;
                let h11 = x3 - x2;
                h00 * v0 + h10 * d0 + h01 * v1 + h11 * d1
            }
        }
    }

    /// `dv/dr` of the interpolant (zero for step profiles).
    pub fn slope(&self, r: T) -> T {
        let r = r.max(T::zero()).min(self.radius);
        let i = self.locate(r);
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let h = r1 - r0;
        let x = (r - r0) / h;
        match self.kind {
            Interpolation::Step => T::zero(),
            Interpolation::Linear => (v1 - v0) / h,
            Interpolation::Hermite => {
                let s = self.slopes.as_ref().expect("Hermite profiles carry slopes");
                let (d0, d1) = (s[i] * h, s[i + 1] * h);
                let six = T::of(6.0);
                let x2 = x * x;
                let dh00 = six * x2 - six * x;
                let dh10 = T::of(3.0) * x2 - T::of(4.0) * x + T::one();
                let dh01 = six * x - six * x2;
                let dh11 = T::of(3.0) * x2 - T::of(2.0) * x;
                (dh00 * v0 + dh10 * d0 + dh01 * v1 + dh11 * d1) / h
            }
        }
    }

    /// Largest `r` with `v(r) > t`, by bisection on the interpolant; `0` when
    /// `t >= v(0)` and `R` when `t < v(R)`.
    pub fn inverse(&self, t: T) -> T {
        if t >= self.center_value() {
            return T::zero();
        }
        if t < self.boundary_value() {
            return self.radius;
        }
        // the sample grid brackets the crossing
        let i = self.values.partition_point(|&v| v > t);
        let (mut lo, mut hi) = (self.r[i - 1], self.r[i]);
        if self.kind == Interpolation::Step {
            return hi;
        }
        for _ in 0..80 {
            let mid = T::of(0.5) * (lo + hi);
            if self.eval(mid) > t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * self.radius {
                break;
            }
        }
        T::of(0.5) * (lo + hi)
    }

    /// Writes `r,value` CSV preceded by a comment recording the problem.
    pub fn write_csv<W: Write>(&self, mut w: W, params: &PdeParameters<T>) -> Result<()> {
        writeln!(
            w,
            "# n={} p={:.16e} beta={:.16e} volume={:.16e}",
            self.n,
            params.p.as_f64(),
            params.beta.as_f64(),
            self.volume().as_f64()
        )?;
        writeln!(w, "r,value")?;
        for (r, v) in self.r.iter().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", r.as_f64(), v.as_f64())?;
        }
        Ok(())
    }

    /// Reads `r,value` CSV (comment lines starting with `#` and the header are
    /// skipped) as a linearly interpolated profile in dimension `n`.
    pub fn read_csv<R: BufRead>(reader: R, n: usize) -> Result<Self> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("r,") {
                continue;
            }
            let mut it = line.split(',').map(|x| x.trim().parse::<f64>());
            match (it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b))) => {
                    r.push(T::of(a));
                    v.push(T::of(b));
                }
                _ => return Err(Error::Parse { line: i + 1, msg: format!("bad profile row {line:?}") }),
            }
        }
        Self::new(n, r, v, Interpolation::Linear)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let r: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let f = |x: f64| 2.0 - x * x * x;
        let df = |x: f64| -3.0 * x * x;
        let p = RadialProfile::with_slopes(2, r.clone(), r.iter().map(|&x| f(x)).collect(), r.iter().map(|&x| df(x)).collect()).unwrap();
        for i in 0..100 {
            let x = i as f64 / 100.0;
            assert!((p.eval(x) - f(x)).abs() < 1e-14);
            assert!((p.slope(x) - df(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_increasing_profiles() {
        assert!(RadialProfile::new(2, vec![0.0, 1.0], vec![0.0, 1.0], Interpolation::Linear).is_err());
        assert!(RadialProfile::new(2, vec![0.1, 1.0], vec![1.0, 0.0], Interpolation::Linear).is_err());
    }

    #[test]
    fn inverse_of_linear_profile() {
        let p = RadialProfile::<f64>::new(2, vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 0.0], Interpolation::Linear).unwrap();
        assert!((p.inverse(0.25) - 0.75).abs() < 1e-14);
        assert_eq!(p.inverse(1.0), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let p = RadialProfile::new(2, vec![0.0, 0.5, 1.0], vec![1.0, 0.75, 0.0], Interpolation::Linear).unwrap();
        let prm = PdeParameters::new(2, 2.0, 1.0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf, &prm).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# n=2"));
        let back = RadialProfile::<f64>::read_csv(text.as_bytes(), 2).unwrap();
        assert_eq!(back.values(), p.values());
    }
}
