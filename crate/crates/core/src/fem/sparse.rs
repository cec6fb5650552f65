//! Symmetric sparse matrices on the vertex graph of a mesh and a
//! Jacobi-preconditioned conjugate gradient solver.

use crate::mesh::Mesh;
use crate::Real;

/// Compressed sparse row matrix whose pattern is the vertex adjacency of a
/// triangulation (diagonal included).
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn from_mesh(mesh: &Mesh<T>) -> Self {
        let nv = mesh.num_vertices();
        let mut adj: Vec<Vec<usize>> = (0..nv).map(|i| vec![i]).collect();
        for tri in &mesh.triangles {
            for &a in tri {
                for &b in tri {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        let mut row_start = Vec::with_capacity(nv + 1);
        let mut cols = Vec::new();
        row_start.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_start.push(cols.len());
        }
        let values = vec![T::zero(); cols.len()];
        Self { row_start, cols, values }
    }

    pub fn dim(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let row = &self.cols[self.row_start[i]..self.row_start[i + 1]];
        self.row_start[i] + row.binary_search(&j).expect("entry outside the sparsity pattern")
    }

    /// Adds `v` to entry `(i, j)`, which must belong to the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.slot(i, j);
        self.values[k] = self.values[k] + v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let row = &self.cols[self.row_start[i]..self.row_start[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.row_start[i] + k],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Replaces row and column `i` by the identity row.
    pub fn pin(&mut self, i: usize) {
        for k in self.row_start[i]..self.row_start[i + 1] {
            let j = self.cols[k];
            self.values[k] = if j == i { T::one() } else { T::zero() };
            if j != i {
                let kk = self.slot(j, i);
                self.values[kk] = T::zero();
            }
        }
    }

    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for k in self.row_start[i]..self.row_start[i + 1] {
                s = s + self.values[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }
}

/// Outcome of an iterative linear solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolve<T> {
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub relative_residual: T,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Solves `A x = b` for symmetric positive definite `A` by conjugate
/// gradients with diagonal preconditioning, starting from `x = 0`.
pub fn pcg<T: Real>(a: &CsrMatrix<T>, b: &[T], rel_tol: T, max_iter: usize) -> (Vec<T>, LinearSolve<T>) {
    let n = a.dim();
    let mut x = vec![T::zero(); n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == T::zero() {
        return (x, LinearSolve { iterations: 0, relative_residual: T::zero(), converged: true });
    }
    let inv_diag: Vec<T> = a.diagonal().into_iter().map(|d| if d > T::zero() { T::one() / d } else { T::one() }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut d = z.clone();
    let mut q = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut res = T::one();
    for it in 0..max_iter {
        a.mul_vec(&d, &mut q);
        let dq = dot(&d, &q);
        if !(dq > T::zero()) {
            return (x, LinearSolve { iterations: it, relative_residual: res, converged: false });
        }
        let alpha = rz / dq;
        for i in 0..n {
            x[i] = x[i] + alpha * d[i];
            r[i] = r[i] - alpha * q[i];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        if res <= rel_tol {
            return (x, LinearSolve { iterations: it + 1, relative_residual: res, converged: true });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let gamma = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + gamma * d[i];
        }
    }
    (x, LinearSolve { iterations: max_iter, relative_residual: res, converged: false })
}
