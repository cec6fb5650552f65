//! Pólya–Szegő comparison of a P1 field with its Schwarz rearrangement.

use crate::error::{usage, Result};
use crate::fem::p_dirichlet_seminorm;
use crate::field::MeshField;
use crate::params::PdeParameters;
use crate::quadrature::Estimate;
use crate::real::CompensatedSum;
use crate::rearrangement::{rearrangement_nodes, SuperlevelMeasure};
use crate::Real;

/// `int |grad u#|^p` as `int_0^{|Omega|} |du*/ds|^p (n omega^{1/n} s^{1-1/n})^p ds`
/// with `u*` interpolated linearly between exact values on the measure grid.
fn radial_seminorm_on_grid<T: Real>(mu: &SuperlevelMeasure<T>, params: &PdeParameters<T>, grid_size: usize) -> Result<T> {
    let (s, vals) = rearrangement_nodes(mu, grid_size)?;
    let n = params.dim();
    let p = params.p;
    let a = (T::one() - T::one() / n) * p + T::one();
    let c = (n * params.omega_n.powf(T::one() / n)).powf(p);
    let mut acc = CompensatedSum::new();
    for (w, v) in s.windows(2).zip(vals.windows(2)) {
        let ds = w[1] - w[0];
        if ds > T::zero() && v[0] > v[1] {
            let slope = (v[0] - v[1]) / ds;
            acc.add(slope.powf(p) * c * (w[1].powf(a) - w[0].powf(a)) / a);
        }
    }
    Ok(acc.value())
}

/// Radial seminorm of `field` with an error estimate from halving the grid.
pub fn radial_seminorm<T: Real>(field: &MeshField<T>, params: &PdeParameters<T>, grid_size: usize) -> Result<Estimate<T>> {
    if grid_size < 2 {
        return Err(usage("the measure grid needs at least two cells"));
    }
    if params.n != 2 {
        return Err(usage(format!("P1 fields live in the plane (got n = {})", params.n)));
    }
    let mu = SuperlevelMeasure::from_field(field);
    let fine = radial_seminorm_on_grid(&mu, params, grid_size)?;
    let coarse = radial_seminorm_on_grid(&mu, params, (grid_size / 2).max(2))?;
    Ok(Estimate::new(fine, (fine - coarse).abs()))
}

/// `int |grad u|^p - int |grad u#|^p` for a non-negative field; the error is
/// that of the radial side, the mesh side being exact.
pub fn polya_szego_gap<T: Real>(field: &MeshField<T>, params: &PdeParameters<T>, grid_size: usize) -> Result<Estimate<T>> {
    if field.min() < T::zero() {
        return Err(usage(format!("the field must be non-negative (min {})", field.min())));
    }
    let radial = radial_seminorm(field, params, grid_size)?;
    let direct = p_dirichlet_seminorm(field, params.p);
    Ok(Estimate::new(direct - radial.value, radial.error))
}

/// `u - min u`, the field the comparison is applied to for Robin solutions.
pub fn shift_to_zero_minimum<T: Real>(field: &MeshField<T>) -> Result<MeshField<T>> {
    let m = field.min();
    field.map(|x| (x - m).max(T::zero()))
}
