//! Piecewise-linear scalar fields on a [`Mesh`].

use std::sync::Arc;

use crate::error::{domain, geometry, usage, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::triangle_rule_degree5;
use crate::real::CompensatedSum;
use crate::Real;

/// Continuous P1 function given by its vertex values.
#[derive(Clone, Debug)]
pub struct MeshField<T> {
    mesh: Arc<Mesh<T>>,
    values: Vec<T>,
}

impl<T: Real> MeshField<T> {
    pub fn new(mesh: Arc<Mesh<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(geometry(format!("field has {} values for {} vertices", values.len(), mesh.num_vertices())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!("field value at vertex {i} is not finite")));
        }
        Ok(Self { mesh, values })
    }

    /// Interpolates `f` at the vertices.
    pub fn from_fn<F: Fn(Point<T>) -> T>(mesh: Arc<Mesh<T>>, f: F) -> Result<Self> {
        let values = mesh.vertices.iter().map(|&x| f(x)).collect();
        Self::new(mesh, values)
    }

    pub fn constant(mesh: Arc<Mesh<T>>, c: T) -> Result<Self> {
        let values = vec![c; mesh.num_vertices()];
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Result<Self> {
        Self::new(self.mesh.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Errors unless every vertex value is strictly positive.
    pub fn require_positive(&self, what: &str) -> Result<()> {
        match self.values.iter().position(|&v| !(v > T::zero())) {
            Some(i) => Err(domain(format!("{what} must be positive (vertex {i} has {})", self.values[i]))),
            None => Ok(()),
        }
    }

    pub fn same_mesh(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    pub(crate) fn require_same_mesh(&self, other: &Self) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(usage("fields live on different meshes"))
        }
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn triangle_values(&self, t: usize) -> [T; 3] {
        let tri = self.mesh.triangles[t];
        [self.values[tri[0]], self.values[tri[1]], self.values[tri[2]]]
    }

    /// Constant gradient of the interpolant on triangle `t`.
    pub fn gradient(&self, t: usize) -> [T; 2] {
        let tri = self.mesh.triangles[t];
        let [a, b, c] = [self.mesh.vertices[tri[0]], self.mesh.vertices[tri[1]], self.mesh.vertices[tri[2]]];
        let [ua, ub, uc] = self.triangle_values(t);
        let twice = T::of(2.0) * self.mesh.triangle_area(t);
        let (db, dc) = (ub - ua, uc - ua);
        let gx = (db * (c[1] - a[1]) - dc * (b[1] - a[1])) / twice;
        let gy = (dc * (b[0] - a[0]) - db * (c[0] - a[0])) / twice;
        [gx, gy]
    }

    /// `int_Omega u`, exact for the interpolant.
    pub fn integral(&self) -> T {
        let mut acc = CompensatedSum::new();
        for t in 0..self.mesh.num_triangles() {
            let [a, b, c] = self.triangle_values(t);
            acc.add(self.mesh.triangle_area(t) * (a + b + c) / T::of(3.0));
        }
        acc.value()
    }

    /// `int_Omega |u|^p` by a degree-5 rule, with 4-level subdivision on
    /// triangles where `u` changes sign.
    pub fn integral_abs_pow(&self, p: T) -> T {
        let mut acc = CompensatedSum::new();
        for t in 0..self.mesh.num_triangles() {
            let vals = self.triangle_values(t);
            let sign_change = vals.iter().any(|&v| v > T::zero()) && vals.iter().any(|&v| v < T::zero());
            let levels = if sign_change { 4 } else { 0 };
            acc.add(self.mesh.triangle_area(t) * subdivided_mean(vals, levels, &|u: T| u.abs().powf(p)));
        }
        acc.value()
    }

    /// Value of the interpolant at barycentric coordinates of triangle `t`.
    pub fn eval_barycentric(&self, t: usize, bary: [T; 3]) -> T {
        let v = self.triangle_values(t);
        bary[0] * v[0] + bary[1] * v[1] + bary[2] * v[2]
    }

    /// `(int (u_h - g)^2)^{1/2}` and `(int g^2)^{1/2}` by a degree-5 rule on each triangle.
    pub fn l2_error<F: Fn(Point<T>) -> T>(&self, exact: F) -> (T, T) {
        let rule = triangle_rule_degree5();
        let mut err = CompensatedSum::new();
        let mut norm = CompensatedSum::new();
        for t in 0..self.mesh.num_triangles() {
            let tri = self.mesh.triangles[t];
            let [a, b, c] = [self.mesh.vertices[tri[0]], self.mesh.vertices[tri[1]], self.mesh.vertices[tri[2]]];
            let area = self.mesh.triangle_area(t);
            for (bary, w) in rule {
                let l = [T::of(bary[0]), T::of(bary[1]), T::of(bary[2])];
                let x = [l[0] * a[0] + l[1] * b[0] + l[2] * c[0], l[0] * a[1] + l[1] * b[1] + l[2] * c[1]];
                let g = exact(x);
                let d = self.eval_barycentric(t, l) - g;
                err.add(area * T::of(w) * d * d);
                norm.add(area * T::of(w) * g * g);
            }
        }
        (err.value().sqrt(), norm.value().sqrt())
    }
}

/// Mean of `phi(u)` over a triangle with linear `u`, using the degree-5 rule
/// on `4^levels` congruent subtriangles.
pub(crate) fn subdivided_mean<T: Real, F: Fn(T) -> T>(vals: [T; 3], levels: usize, phi: &F) -> T {
    let rule = triangle_rule_degree5();
    let mean = |v: [T; 3]| {
        let mut s = CompensatedSum::new();
        for (bary, w) in rule {
            s.add(T::of(w) * phi(T::of(bary[0]) * v[0] + T::of(bary[1]) * v[1] + T::of(bary[2]) * v[2]));
        }
        s.value()
    };
    if levels == 0 {
        return mean(vals);
    }
    let half = T::of(0.5);
    let [a, b, c] = vals;
    let (ab, bc, ca) = (half * (a + b), half * (b + c), half * (c + a));
    let quarter = T::of(0.25);
    quarter
        * (subdivided_mean([a, ab, ca], levels - 1, phi)
            + subdivided_mean([ab, b, bc], levels - 1, phi)
            + subdivided_mean([ca, bc, c], levels - 1, phi)
            + subdivided_mean([ab, bc, ca], levels - 1, phi))
}
