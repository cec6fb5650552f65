//! Level curves of P1 fields by marching triangles, boundary traces of
//! superlevel sets and gradient integrals.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::field::MeshField;
use crate::mesh::{dist, Point};
use crate::real::CompensatedSum;
use crate::Real;

/// Relative shift applied to `t` when it coincides with a vertex value.
pub const TIE_BREAK: f64 = 1e-14;

/// Piece of the boundary where `u > t`, with the trace values at its ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSegment<T> {
    pub start: Point<T>,
    pub end: Point<T>,
    pub u_start: T,
    pub u_end: T,
}

impl<T: Real> TraceSegment<T> {
    pub fn length(&self) -> T {
        dist(self.start, self.end)
    }

    /// `int 1/u` along the segment; exact for the linear trace.
    pub fn reciprocal_integral(&self) -> Result<T> {
        let (a, b) = (self.u_start, self.u_end);
        if !(a > T::zero() && b > T::zero()) {
            return Err(domain(format!("trace value {} is not positive", a.min(b))));
        }
        let d = (b - a) / a;
        let mean = if d == T::zero() { T::one() / a } else { d.ln_1p() / (a * d) };
        Ok(self.length() * mean)
    }
}

/// `{u = t}` inside the domain and `{u > t}` on its boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetGeometry<T> {
    /// Level actually used after tie-breaking.
    pub level: T,
    pub perimeter_interior: T,
    pub exterior_trace: Vec<TraceSegment<T>>,
}

impl<T: Real> LevelSetGeometry<T> {
    pub fn exterior_length(&self) -> T {
        let mut acc = CompensatedSum::new();
        for s in &self.exterior_trace {
            acc.add(s.length());
        }
        acc.value()
    }

    /// Perimeter of the superlevel set, interior plus exterior part.
    pub fn perimeter(&self) -> T {
        self.perimeter_interior + self.exterior_length()
    }
}

fn effective_level<T: Real>(field: &MeshField<T>, t: T) -> T {
    if field.values().contains(&t) {
        let scale = field.max_abs().max(T::one());
        t + T::of(TIE_BREAK) * scale
    } else {
        t
    }
}

fn crossing<T: Real>(a: Point<T>, b: Point<T>, ua: T, ub: T, t: T) -> Point<T> {
    let s = (t - ua) / (ub - ua);
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

pub fn level_set_geometry<T: Real>(field: &MeshField<T>, t: T) -> Result<LevelSetGeometry<T>> {
    if !(t >= T::zero()) {
        return Err(domain(format!("level must be non-negative (got {t})")));
    }
    let mesh = field.mesh();
    let u = field.values();
    let level = effective_level(field, t);
    let pieces: Vec<T> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let tri = mesh.triangles[k];
            let above: [bool; 3] = tri.map(|i| u[i] > level);
            let count = above.iter().filter(|&&x| x).count();
            if count == 0 || count == 3 {
                return T::zero();
            }
            let mut pts = Vec::with_capacity(2);
            for e in 0..3 {
                let (i, j) = (tri[e], tri[(e + 1) % 3]);
                if above[e] != above[(e + 1) % 3] {
                    pts.push(crossing(mesh.vertices[i], mesh.vertices[j], u[i], u[j], level));
                }
            }
            dist(pts[0], pts[1])
        })
        .collect();
    let mut acc = CompensatedSum::new();
    for p in pieces {
        acc.add(p);
    }
    let mut trace = Vec::new();
    for &[i, j] in &mesh.boundary_edges {
        let (a, b) = (mesh.vertices[i], mesh.vertices[j]);
        let (ua, ub) = (u[i], u[j]);
        match (ua > level, ub > level) {
            (true, true) => trace.push(TraceSegment { start: a, end: b, u_start: ua, u_end: ub }),
            (true, false) => {
                let c = crossing(a, b, ua, ub, level);
                trace.push(TraceSegment { start: a, end: c, u_start: ua, u_end: level });
            }
            (false, true) => {
                let c = crossing(a, b, ua, ub, level);
                trace.push(TraceSegment { start: c, end: b, u_start: level, u_end: ub });
            }
            (false, false) => {}
        }
    }
    Ok(LevelSetGeometry { level, perimeter_interior: acc.value(), exterior_trace: trace })
}

/// `int over {u > t} on the boundary of 1/u`.
pub fn exterior_reciprocal_integral<T: Real>(field: &MeshField<T>, t: T) -> Result<T> {
    let geo = level_set_geometry(field, t)?;
    let mut acc = CompensatedSum::new();
    for s in &geo.exterior_trace {
        acc.add(s.reciprocal_integral()?);
    }
    Ok(acc.value())
}

/// `int |grad u|^p`, exact for the piecewise constant gradient.
pub fn p_dirichlet_seminorm<T: Real>(field: &MeshField<T>, p: T) -> T {
    let mesh = field.mesh();
    let parts: Vec<T> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let g = field.gradient(k);
            (g[0] * g[0] + g[1] * g[1]).powf(p / T::of(2.0)) * mesh.triangle_area(k)
        })
        .collect();
    let mut acc = CompensatedSum::new();
    for v in parts {
        acc.add(v);
    }
    acc.value()
}
