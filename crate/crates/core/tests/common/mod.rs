#![allow(dead_code)]

use std::sync::Arc;

use talenti_core::{mesh_from_polygon, Mesh, MeshField};

pub fn unit_square(h: f64) -> Arc<Mesh<f64>> {
    Arc::new(mesh_from_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], h).unwrap())
}

/// Disjoint right triangles with legs `1` and `2 A_i`, so triangle `i` has area `A_i` exactly.
pub fn plateau_mesh(areas: &[f64]) -> Arc<Mesh<f64>> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, &a) in areas.iter().enumerate() {
        let x0 = 2.0 * i as f64;
        let base = vertices.len();
        vertices.extend([[x0, 0.0], [x0 + 1.0, 0.0], [x0, 2.0 * a]]);
        triangles.push([base, base + 1, base + 2]);
    }
    Arc::new(Mesh::from_parts(vertices, triangles, None).unwrap())
}

/// Field equal to `values[i]` on the `i`-th triangle of a [`plateau_mesh`].
pub fn plateau_field(mesh: &Arc<Mesh<f64>>, values: &[f64]) -> MeshField<f64> {
    let vals = values.iter().flat_map(|&v| [v, v, v]).collect();
    MeshField::new(mesh.clone(), vals).unwrap()
}

/// Structured right-triangle mesh of `[0,1]^2` with `n x n` cells, dyadic for power-of-two `n`.
pub fn grid_square(n: usize) -> Arc<Mesh<f64>> {
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Arc::new(Mesh::from_parts(vertices, triangles, None).unwrap())
}
