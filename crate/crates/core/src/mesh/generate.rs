//! Structured initial meshes for the benchmark domains.

use super::{Mesh, MeshError, Point};

/// `[x0, x1] x [y0, y1]` split into `n x n` squares, each cut along its
/// lower-left to upper-right diagonal. Square `(i, j)` owns triangles
/// `2 (j n + i)` (lower) and `2 (j n + i) + 1` (upper).
pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, n: usize) -> Result<Mesh, MeshError> {
    let n = n.max(1);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([
                x0 + (x1 - x0) * i as f64 / n as f64,
                y0 + (y1 - y0) * j as f64 / n as f64,
            ]);
        }
    }
    let v = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            triangles.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// `(0, 1)^2` with `2 n^2` triangles.
pub fn unit_square(n: usize) -> Result<Mesh, MeshError> {
    rectangle(0.0, 1.0, 0.0, 1.0, n)
}

/// The single triangle `conv((0,0), (1,0), (0,1))`.
pub fn reference_triangle() -> Mesh {
    Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])
        .expect("reference triangle is valid")
}

/// `(-1, 1)^2 \ [0, 1] x [-1, 0]` with the reentrant corner at the origin.
/// Each of the three unit squares is split into `n x n` cells of two triangles.
pub fn lshape(n: usize) -> Result<Mesh, MeshError> {
    let n = n.max(1);
    let m = 2 * n;
    let mut index = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices: Vec<Point> = Vec::new();
    let coord = |i: usize| -1.0 + i as f64 / n as f64;
    let inside_cell = |i: usize, j: usize| !(i >= n && j < n);
    let mut triangles = Vec::new();
    let mut vid = |i: usize, j: usize, vertices: &mut Vec<Point>| {
        let k = j * (m + 1) + i;
        if index[k] == usize::MAX {
            index[k] = vertices.len();
            vertices.push([coord(i), coord(j)]);
        }
        index[k]
    };
    for j in 0..m {
        for i in 0..m {
            if !inside_cell(i, j) {
                continue;
            }
            let a = vid(i, j, &mut vertices);
            let b = vid(i + 1, j, &mut vertices);
            let c = vid(i + 1, j + 1, &mut vertices);
            let d = vid(i, j + 1, &mut vertices);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::new(vertices, triangles)
}
