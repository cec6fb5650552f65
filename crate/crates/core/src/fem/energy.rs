//! Regularized p-Dirichlet energy on P1 elements: value, gradient, tangent
//! matrix and an accurate evaluation of energy differences.

use rayon::prelude::*;

use super::sparse::CsrMatrix;
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;
use crate::real::CompensatedSum;
use crate::Real;

/// Boundary treatment of the energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Boundary<T> {
    /// `(beta/p) int_{dOmega} |u|^p` is added.
    Robin(T),
    /// Boundary vertices are held at 0 and carry no energy.
    Dirichlet,
}

const EDGE_POINTS: usize = 3;

/// `J_eps(u) = (1/p) int (|grad u|^2 + eps^2)^{p/2} + (beta/p) int_bd (u^2 + eps^2)^{p/2} - int f u`.
pub(crate) struct EnergyForm<'a, T> {
    mesh: &'a Mesh<T>,
    pub p: T,
    pub eps: T,
    pub boundary: Boundary<T>,
    /// `int f phi_i`, exact for P1 data.
    pub load: Vec<T>,
    basis: Vec<[[T; 2]; 3]>,
    edge_nodes: Vec<(T, T)>,
}

/// `(a + d)^q - a^q` without cancellation, for `a >= 0` and `a + d >= 0`.
fn pow_diff<T: Real>(a: T, d: T, q: T) -> T {
    if a > T::zero() {
        a.powf(q) * (q * (d / a).ln_1p()).exp_m1()
    } else {
        (a + d).max(T::zero()).powf(q)
    }
}

fn basis_gradients<T: Real>(mesh: &Mesh<T>, t: usize) -> [[T; 2]; 3] {
    let tri = mesh.triangles[t];
    let [a, b, c] = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
    let twice = T::of(2.0) * mesh.triangle_area(t);
    [
        [(b[1] - c[1]) / twice, (c[0] - b[0]) / twice],
        [(c[1] - a[1]) / twice, (a[0] - c[0]) / twice],
        [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice],
    ]
}

/// `int f phi_i` for a P1 datum `f` (consistent mass matrix).
pub(crate) fn load_vector<T: Real>(mesh: &Mesh<T>, f: &[T]) -> Vec<T> {
    let mut b = vec![T::zero(); mesh.num_vertices()];
    let twelve = T::of(12.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let s = f[tri[0]] + f[tri[1]] + f[tri[2]];
        let a = mesh.triangle_area(t);
        for &i in tri {
            b[i] = b[i] + a * (s + f[i]) / twelve;
        }
    }
    b
}

impl<'a, T: Real> EnergyForm<'a, T> {
    pub fn new(mesh: &'a Mesh<T>, f: &[T], p: T, eps: T, boundary: Boundary<T>) -> Self {
        let basis = (0..mesh.num_triangles()).map(|t| basis_gradients(mesh, t)).collect();
        let (x, w) = gauss_legendre(EDGE_POINTS);
        let edge_nodes = x.iter().zip(w).map(|(&x, &w)| (T::of(0.5 * (x + 1.0)), T::of(0.5 * w))).collect();
        Self { mesh, p, eps, boundary, load: load_vector(mesh, f), basis, edge_nodes }
    }

    fn grad(&self, t: usize, u: &[T]) -> [T; 2] {
        let tri = self.mesh.triangles[t];
        let g = &self.basis[t];
        let mut out = [T::zero(); 2];
        for k in 0..3 {
            out[0] = out[0] + u[tri[k]] * g[k][0];
            out[1] = out[1] + u[tri[k]] * g[k][1];
        }
        out
    }

    fn beta(&self) -> Option<T> {
        match self.boundary {
            Boundary::Robin(b) => Some(b),
            Boundary::Dirichlet => None,
        }
    }

    pub fn energy(&self, u: &[T]) -> T {
        let half_p = self.p / T::of(2.0);
        let e2 = self.eps * self.eps;
        let bulk: Vec<T> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let g = self.grad(t, u);
                self.mesh.triangle_area(t) * (g[0] * g[0] + g[1] * g[1] + e2).powf(half_p)
            })
            .collect();
        let mut acc = CompensatedSum::new();
        for v in bulk {
            acc.add(v / self.p);
        }
        if let Some(beta) = self.beta() {
            for &[a, b] in &self.mesh.boundary_edges {
                let len = self.mesh.edge_length([a, b]);
                for &(s, w) in &self.edge_nodes {
                    let x = u[a] + s * (u[b] - u[a]);
                    acc.add(beta / self.p * len * w * (x * x + e2).powf(half_p));
                }
            }
        }
        for (bi, ui) in self.load.iter().zip(u) {
            acc.add(-*bi * *ui);
        }
        acc.value()
    }

    /// `J_eps(u + du) - J_eps(u)`, accurate even when the change is far below
    /// the rounding level of `J_eps(u)`.
    pub fn change(&self, u: &[T], du: &[T]) -> T {
        let half_p = self.p / T::of(2.0);
        let e2 = self.eps * self.eps;
        let bulk: Vec<T> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let g = self.grad(t, u);
                let d = self.grad(t, du);
                let w = g[0] * g[0] + g[1] * g[1] + e2;
                let dw = d[0] * (g[0] + g[0] + d[0]) + d[1] * (g[1] + g[1] + d[1]);
                self.mesh.triangle_area(t) * pow_diff(w, dw, half_p)
            })
            .collect();
        let mut acc = CompensatedSum::new();
        for v in bulk {
            acc.add(v / self.p);
        }
        if let Some(beta) = self.beta() {
            for &[a, b] in &self.mesh.boundary_edges {
                let len = self.mesh.edge_length([a, b]);
                for &(s, w) in &self.edge_nodes {
                    let x = u[a] + s * (u[b] - u[a]);
                    let d = du[a] + s * (du[b] - du[a]);
                    acc.add(beta / self.p * len * w * pow_diff(x * x + e2, d * (x + x + d), half_p));
                }
            }
        }
        for (bi, di) in self.load.iter().zip(du) {
            acc.add(-*bi * *di);
        }
        acc.value()
    }

    /// `dJ_eps/du_i`; on Dirichlet meshes boundary entries are zeroed.
    pub fn gradient(&self, u: &[T]) -> Vec<T> {
        let e2 = self.eps * self.eps;
        let expo = (self.p - T::of(2.0)) / T::of(2.0);
        let local: Vec<[T; 3]> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let g = self.grad(t, u);
                let s2 = g[0] * g[0] + g[1] * g[1] + e2;
                let coef = if s2 > T::zero() { s2.powf(expo) } else { T::zero() };
                let scale = coef * self.mesh.triangle_area(t);
                let b = &self.basis[t];
                [0, 1, 2].map(|k| scale * (g[0] * b[k][0] + g[1] * b[k][1]))
            })
            .collect();
        let mut r: Vec<T> = self.load.iter().map(|&b| -b).collect();
        for (tri, loc) in self.mesh.triangles.iter().zip(&local) {
            for k in 0..3 {
                r[tri[k]] = r[tri[k]] + loc[k];
            }
        }
        match self.boundary {
            Boundary::Robin(beta) => {
                for &[a, b] in &self.mesh.boundary_edges {
                    let len = self.mesh.edge_length([a, b]);
                    for &(s, w) in &self.edge_nodes {
                        let x = u[a] + s * (u[b] - u[a]);
                        let s2 = x * x + e2;
                        let coef = if s2 > T::zero() { s2.powf(expo) } else { T::zero() };
                        let c = beta * len * w * coef * x;
                        r[a] = r[a] + c * (T::one() - s);
                        r[b] = r[b] + c * s;
                    }
                }
            }
            Boundary::Dirichlet => {
                for (i, ri) in r.iter_mut().enumerate() {
                    if self.mesh.is_boundary_vertex(i) {
                        *ri = T::zero();
                    }
                }
            }
        }
        r
    }

    /// Tangent matrix of `J_eps` at `u`. Dirichlet vertices become identity rows.
    pub fn hessian(&self, u: &[T], h: &mut CsrMatrix<T>) {
        h.clear();
        let e2 = self.eps * self.eps;
        let two = T::of(2.0);
        let p = self.p;
        let local: Vec<[[T; 3]; 3]> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let g = self.grad(t, u);
                let s2 = g[0] * g[0] + g[1] * g[1] + e2;
                let mut m = [[T::zero(); 3]; 3];
                if !(s2 > T::zero()) {
                    return m;
                }
                let a = s2.powf((p - two) / two);
                let c = (p - two) * s2.powf((p - T::of(4.0)) / two);
                let area = self.mesh.triangle_area(t);
                let b = &self.basis[t];
                let gb: [T; 3] = [0, 1, 2].map(|k| g[0] * b[k][0] + g[1] * b[k][1]);
                for i in 0..3 {
                    for j in 0..3 {
                        let bb = b[i][0] * b[j][0] + b[i][1] * b[j][1];
                        m[i][j] = area * (a * bb + c * gb[i] * gb[j]);
                    }
                }
                m
            })
            .collect();
        for (tri, m) in self.mesh.triangles.iter().zip(&local) {
            for i in 0..3 {
                for j in 0..3 {
                    h.add(tri[i], tri[j], m[i][j]);
                }
            }
        }
        match self.boundary {
            Boundary::Robin(beta) => {
                for &[a, b] in &self.mesh.boundary_edges {
                    let len = self.mesh.edge_length([a, b]);
                    for &(s, w) in &self.edge_nodes {
                        let x = u[a] + s * (u[b] - u[a]);
                        let s2 = x * x + e2;
                        if !(s2 > T::zero()) {
                            continue;
                        }
                        let c = beta * len * w * s2.powf((p - T::of(4.0)) / two) * ((p - T::one()) * x * x + e2);
                        let phi = [T::one() - s, s];
                        let idx = [a, b];
                        for i in 0..2 {
                            for j in 0..2 {
                                h.add(idx[i], idx[j], c * phi[i] * phi[j]);
                            }
                        }
                    }
                }
            }
            Boundary::Dirichlet => {
                for i in 0..self.mesh.num_vertices() {
                    if self.mesh.is_boundary_vertex(i) {
                        h.pin(i);
                    }
                }
            }
        }
    }
}
