//! Non-increasing right-continuous step functions on `[0, M]`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::real::CompensatedSum;
use crate::Real;

/// Step function with value `values[i]` on `[breakpoints[i], breakpoints[i+1])`,
/// the last interval ending at `total_measure`, and zero beyond it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    total_measure: T,
}

impl<T: Real> StepFunction<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, total_measure: T) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(domain("step function needs one value per breakpoint"));
        }
        if let Some(&b0) = breakpoints.first() {
            if b0 != T::zero() {
                return Err(domain("first breakpoint must be 0"));
            }
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain("breakpoints must be strictly increasing"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(domain("step values must be non-increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) || !total_measure.is_finite() {
            return Err(domain("step function must be finite"));
        }
        if let Some(&last) = breakpoints.last() {
            if !(last < total_measure) {
                return Err(domain("last breakpoint must lie below the total measure"));
            }
        } else if total_measure != T::zero() {
            return Err(domain("empty step function must have zero measure"));
        }
        Ok(Self { breakpoints, values, total_measure })
    }

    /// The zero function on `[0, m]`.
    pub fn zero(m: T) -> Self {
        if m > T::zero() {
            Self { breakpoints: vec![T::zero()], values: vec![T::zero()], total_measure: m }
        } else {
            Self { breakpoints: vec![], values: vec![], total_measure: T::zero() }
        }
    }

    /// Sorts `(value, measure)` plateaus into a decreasing step function,
    /// merging equal values and skipping empty plateaus.
    pub fn from_plateaus(plateaus: &[(T, T)]) -> Result<Self> {
        let mut items: Vec<(T, T)> = plateaus.iter().copied().filter(|&(_, m)| m > T::zero()).collect();
        if plateaus.iter().any(|&(v, m)| !v.is_finite() || !m.is_finite() || m < T::zero()) {
            return Err(domain("plateaus need finite values and non-negative measures"));
        }
        items.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
        let mut breakpoints = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut acc = CompensatedSum::new();
        for (v, m) in items {
            if values.last() != Some(&v) {
                breakpoints.push(acc.value());
                values.push(v);
            }
            acc.add(m);
        }
        Self::new(breakpoints, values, acc.value())
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn total_measure(&self) -> T {
        self.total_measure
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Right endpoint of interval `i`.
    pub fn interval_end(&self, i: usize) -> T {
        self.breakpoints.get(i + 1).copied().unwrap_or(self.total_measure)
    }

    /// Iterator over `(left, right, value)`.
    pub fn intervals(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        (0..self.len()).map(move |i| (self.breakpoints[i], self.interval_end(i), self.values[i]))
    }

    /// Value at `x`; zero for `x >= total_measure` or `x < 0`.
    pub fn eval(&self, x: T) -> T {
        if x < T::zero() || !(x < self.total_measure) {
            return T::zero();
        }
        let i = self.breakpoints.partition_point(|&b| b <= x);
        self.values[i - 1]
    }

    /// `int_0^x` of the step function, exact plateau-wise.
    pub fn integral_to(&self, x: T) -> T {
        let x = x.min(self.total_measure);
        let mut acc = CompensatedSum::new();
        for (a, b, v) in self.intervals() {
            if a >= x {
                break;
            }
            acc.add(v * (b.min(x) - a));
        }
        acc.value()
    }

    pub fn integral(&self) -> T {
        self.integral_to(self.total_measure)
    }

    /// Distribution function `t -> |{s : |g(s)| > t}|` of a non-negative
    /// decreasing step function `g`, itself a step function of `t` on `[0, max g]`.
    pub fn distribution(&self) -> Result<StepFunction<T>> {
        if self.values.iter().any(|&v| v < T::zero()) {
            return Err(domain("distribution of a step function needs non-negative values"));
        }
        // intervals in t: [v_{j+1}, v_j) carry measure b_{j+1} (end of interval j)
        let positive: Vec<(T, T)> = self.intervals().filter(|&(_, _, v)| v > T::zero()).map(|(_, b, v)| (v, b)).collect();
        if positive.is_empty() {
            return Ok(StepFunction::zero(T::zero()));
        }
        let mut breakpoints = vec![T::zero()];
        let mut values = Vec::new();
        for j in (0..positive.len()).rev() {
            let (v, end) = positive[j];
            values.push(end);
            if j > 0 {
                breakpoints.push(v);
            }
        }
        let top = positive[0].0;
        StepFunction::new(breakpoints, values, top)
    }

    /// Writes CSV with the given header (`s,value` or `t,mu`), one row per breakpoint
    /// and a closing row `total_measure,0`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &str) -> Result<()> {
        writeln!(w, "{header}")?;
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", b.as_f64(), v.as_f64())?;
        }
        writeln!(w, "{:.16e},{:.16e}", self.total_measure.as_f64(), 0.0)?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if i == 0 || line.is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.trim().parse().ok()).ok_or(Error::Parse { line: i + 1, msg: format!("bad row {line:?}") })
            };
            rows.push((parse(it.next())?, parse(it.next())?));
        }
        let Some(&(total, _)) = rows.last() else {
            return Err(Error::Parse { line: 1, msg: "missing rows".into() });
        };
        rows.pop();
        Self::new(rows.iter().map(|r| T::of(r.0)).collect(), rows.iter().map(|r| T::of(r.1)).collect(), T::of(total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plateaus() -> StepFunction<f64> {
        StepFunction::from_plateaus(&[(1.0, 2.0), (3.0, 1.0)]).unwrap()
    }

    #[test]
    fn plateaus_sort_decreasing() {
        let s = plateaus();
        assert_eq!(s.breakpoints(), &[0.0, 1.0]);
        assert_eq!(s.values(), &[3.0, 1.0]);
        assert_eq!(s.total_measure(), 3.0);
        assert_eq!(s.eval(0.5), 3.0);
        assert_eq!(s.eval(1.0), 1.0);
        assert_eq!(s.eval(3.0), 0.0);
    }

    #[test]
    fn cumulative_integral() {
        let s = plateaus();
        assert_eq!(s.integral_to(2.0), 4.0);
        assert_eq!(s.integral_to(0.0), 0.0);
        assert_eq!(s.integral(), 5.0);
    }

    #[test]
    fn distribution_inverts_plateaus() {
        let mu = plateaus().distribution().unwrap();
        assert_eq!(mu.eval(0.0), 3.0);
        assert_eq!(mu.eval(0.99), 3.0);
        assert_eq!(mu.eval(1.0), 1.0);
        assert_eq!(mu.eval(2.9), 1.0);
        assert_eq!(mu.eval(3.0), 0.0);
    }

    #[test]
    fn rejects_increasing_values() {
        assert!(StepFunction::new(vec![0.0, 1.0], vec![1.0, 2.0], 2.0).is_err());
        assert!(StepFunction::new(vec![0.5], vec![1.0], 2.0).is_err());
        assert!(StepFunction::new(vec![0.0, 2.0], vec![2.0, 1.0], 2.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = plateaus();
        let mut buf = Vec::new();
        s.write_csv(&mut buf, "s,value").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,value\n"));
        let back = StepFunction::<f64>::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, s);
    }
}
