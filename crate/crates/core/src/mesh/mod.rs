//! Conforming triangulations of polygonal domains.
//!
//! A [`Mesh`] is immutable once built. Edges are numbered in order of first
//! appearance while scanning triangles by index, so `edge.triangles.0` is the
//! lower-indexed neighbour and the stored vertex order runs counterclockwise
//! around it.

mod generate;
mod io;
mod refine;

use std::collections::HashMap;

use thiserror::Error;

pub use generate::{lshape, rectangle, reference_triangle, unit_square};
pub use io::{read_ascii, write_ascii};
pub use refine::{refine, refine_uniform, Refinement};

pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index}, but only {count} vertices exist")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("triangle {triangle} has zero area")]
    DegenerateTriangle { triangle: usize },
    #[error("triangles {first} and {second} have the same vertices")]
    DuplicateTriangle { first: usize, second: usize },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("vertex {vertex} lies inside edge ({0}, {1})", .edge.0, .edge.1)]
    HangingNode { vertex: usize, edge: (usize, usize) },
    #[error("wavenumber {value} at ({x}, {y}) is not positive", x = .at[0], y = .at[1])]
    NonpositiveWavenumber { value: f64, at: Point },
    #[error("refinement closure did not terminate after {0} sweeps")]
    ClosureNonTermination(usize),
    #[error("element {0} is not in the mesh")]
    UnknownElement(usize),
    #[error("degree map has {found} entries for {expected} triangles")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("polynomial degree must be at least 1 (element {0})")]
    ZeroDegree(usize),
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// Adjacent triangles; the second entry is `None` on the boundary.
    pub triangles: (usize, Option<usize>),
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles.1.is_none()
    }
}

/// Affine map `x = origin + jac * xi` from the reference triangle.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub origin: Point,
    /// Columns are `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl Affine {
    pub fn to_physical(&self, xi: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient (`J^{-T} g`).
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }

    /// Physical Laplacian from a reference Hessian `(xx, xy, yy)`:
    /// `trace(J^{-T} H J^{-1})`.
    pub fn push_laplacian(&self, h: [f64; 3]) -> f64 {
        let hm = [[h[0], h[1]], [h[1], h[2]]];
        let mut lap = 0.0;
        for a in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    lap += self.inv[i][a] * hm[i][j] * self.inv[j][a];
                }
            }
        }
        lap
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    vertex_triangles: Vec<Vec<usize>>,
}

/// Seed for a patch query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchSeed {
    Element(usize),
    Edge(usize),
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn signed_double_area(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

impl Mesh {
    /// Builds the edge topology and validates conformity. Clockwise triangles
    /// are reoriented.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let nv = vertices.len();
        let mut triangles = triangles;
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: v,
                        count: nv,
                    });
                }
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area2 = signed_double_area(a, b, c);
            let scale = dist(a, b).max(dist(b, c)).max(dist(c, a));
            if tri[0] == tri[1]
                || tri[1] == tri[2]
                || tri[0] == tri[2]
                || area2.abs() <= 1e-14 * scale * scale
            {
                return Err(MeshError::DegenerateTriangle { triangle: t });
            }
            if area2 < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut key = *tri;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateTriangle { first, second: t });
            }
            seen.insert(key, t);
        }

        let mut edge_index: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 2);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for j in 0..3 {
                let (a, b) = (tri[j], tri[(j + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = match edge_index.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.triangles.1.is_some() {
                            return Err(MeshError::NonManifoldEdge(key.0, key.1));
                        }
                        edge.triangles.1 = Some(t);
                        e
                    }
                    None => {
                        edges.push(Edge {
                            vertices: [a, b],
                            triangles: (t, None),
                            length: dist(vertices[a], vertices[b]),
                        });
                        edge_index.insert(key, edges.len() - 1);
                        edges.len() - 1
                    }
                };
                te[j] = e;
            }
            triangle_edges.push(te);
        }

        let mut vertex_triangles = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_triangles[v].push(t);
            }
        }

        let mesh = Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            vertex_triangles,
        };
        mesh.check_hanging_nodes()?;
        Ok(mesh)
    }

    /// A conforming mesh has no used vertex strictly inside a boundary edge;
    /// interior edges are covered by the two-triangle rule.
    fn check_hanging_nodes(&self) -> Result<(), MeshError> {
        let mut used: Vec<usize> = (0..self.vertices.len())
            .filter(|&v| !self.vertex_triangles[v].is_empty())
            .collect();
        used.sort_by(|&a, &b| self.vertices[a][0].total_cmp(&self.vertices[b][0]));
        let xs: Vec<f64> = used.iter().map(|&v| self.vertices[v][0]).collect();
        for edge in self.edges.iter().filter(|e| e.is_boundary()) {
            let [a, b] = edge.vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let tol = 1e-12 * edge.length;
            let (xlo, xhi) = (pa[0].min(pb[0]) - tol, pa[0].max(pb[0]) + tol);
            let (ylo, yhi) = (pa[1].min(pb[1]) - tol, pa[1].max(pb[1]) + tol);
            let start = xs.partition_point(|&x| x < xlo);
            for (&v, &x) in used[start..].iter().zip(&xs[start..]) {
                if x > xhi {
                    break;
                }
                if v == a || v == b {
                    continue;
                }
                let p = self.vertices[v];
                if p[1] < ylo || p[1] > yhi {
                    continue;
                }
                let d = [pb[0] - pa[0], pb[1] - pa[1]];
                let cross = d[0] * (p[1] - pa[1]) - d[1] * (p[0] - pa[0]);
                if cross.abs() > tol * edge.length {
                    continue;
                }
                let s =
                    (d[0] * (p[0] - pa[0]) + d[1] * (p[1] - pa[1])) / (edge.length * edge.length);
                if s > 1e-12 && s < 1.0 - 1e-12 {
                    return Err(MeshError::HangingNode {
                        vertex: v,
                        edge: (a, b),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge indices of triangle `t`; local edge `j` joins vertices `j` and `j + 1`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn affine(&self, t: usize) -> Affine {
        let [a, b, c] = self.triangle_points(t);
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        Affine {
            origin: a,
            jac,
            inv,
            det,
        }
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * signed_double_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// `h_K`: the longest edge of `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.triangle_edges[t]
            .iter()
            .map(|&e| self.edges[e].length)
            .fold(0.0, f64::max)
    }

    /// Diameter of the inscribed circle, `2 |K| / s` with `s` the semiperimeter.
    pub fn inscribed_diameter(&self, t: usize) -> f64 {
        let perimeter: f64 = self.triangle_edges[t]
            .iter()
            .map(|&e| self.edges[e].length)
            .sum();
        4.0 * self.area(t) / perimeter
    }

    /// `rho_T = max_K h_K / diam(B_K)`.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.diameter(t) / self.inscribed_diameter(t))
            .fold(0.0, f64::max)
    }

    pub fn h_max(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.length)
            .fold(f64::INFINITY, f64::min)
    }

    /// Unit normal of edge `e`, pointing out of `edge.triangles.0`.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let edge = &self.edges[e];
        let [a, b] = edge.vertices.map(|v| self.vertices[v]);
        [(b[1] - a[1]) / edge.length, -(b[0] - a[0]) / edge.length]
    }

    /// Point at parameter `s` in `[0, 1]` along edge `e`.
    pub fn edge_point(&self, e: usize, s: f64) -> Point {
        let [a, b] = self.edges[e].vertices.map(|v| self.vertices[v]);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        self.edge_point(e, 0.5)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edges[e].is_boundary())
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_boundary())
    }

    /// Triangles meeting the seed: `omega_K` (vertex neighbours of `K`,
    /// including `K`) or `omega_e` (triangles touching `e`). Sorted ascending.
    pub fn patch(&self, seed: PatchSeed) -> Vec<usize> {
        let verts: Vec<usize> = match seed {
            PatchSeed::Element(t) => self.triangles[t].to_vec(),
            PatchSeed::Edge(e) => self.edges[e].vertices.to_vec(),
        };
        let mut out: Vec<usize> = verts
            .iter()
            .flat_map(|&v| self.vertex_triangles[v].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Longest edge of `t`; near-ties go to the smallest edge index.
    pub fn longest_edge(&self, t: usize) -> usize {
        let te = self.triangle_edges[t];
        let hk = self.diameter(t);
        te.iter()
            .copied()
            .filter(|&e| self.edges[e].length >= hk * (1.0 - 1e-12))
            .min()
            .expect("triangle has edges")
    }
}

/// Per-triangle polynomial degrees `p_K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeMap {
    degrees: Vec<usize>,
}

impl DegreeMap {
    pub fn uniform(num_triangles: usize, p: usize) -> Self {
        Self {
            degrees: vec![p; num_triangles],
        }
    }

    pub fn from_vec(degrees: Vec<usize>) -> Self {
        Self { degrees }
    }

    /// Checks the entry count against `mesh` and that every degree is at least 1.
    pub fn validate(&self, mesh: &Mesh) -> Result<(), MeshError> {
        if self.degrees.len() != mesh.num_triangles() {
            return Err(MeshError::DegreeMismatch {
                expected: mesh.num_triangles(),
                found: self.degrees.len(),
            });
        }
        if let Some(t) = self.degrees.iter().position(|&p| p == 0) {
            return Err(MeshError::ZeroDegree(t));
        }
        Ok(())
    }

    pub fn get(&self, t: usize) -> usize {
        self.degrees[t]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// `p_e = min p_K` over triangles containing `e`.
    pub fn edge_degree(&self, mesh: &Mesh, e: usize) -> usize {
        let (a, b) = mesh.edges()[e].triangles;
        match b {
            Some(b) => self.degrees[a].min(self.degrees[b]),
            None => self.degrees[a],
        }
    }

    pub fn min_degree(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Smallest `rho` with `(p_K + 1) / rho <= p_K' + 1 <= rho (p_K + 1)` for
    /// every pair of triangles sharing a vertex.
    pub fn comparability(&self, mesh: &Mesh) -> f64 {
        let mut rho: f64 = 1.0;
        for t in 0..mesh.num_triangles() {
            for s in mesh.patch(PatchSeed::Element(t)) {
                let r = (self.degrees[s] + 1) as f64 / (self.degrees[t] + 1) as f64;
                rho = rho.max(r);
            }
        }
        rho
    }

    /// Total number of degrees of freedom, `sum_K (p_K + 1)(p_K + 2) / 2`.
    pub fn num_dofs(&self) -> usize {
        self.degrees
            .iter()
            .map(|&p| crate::basis::dimension(p))
            .sum()
    }
}

/// Elementwise and edgewise `h / p` data and the resolution measure `M_kh/p`.
#[derive(Debug, Clone)]
pub struct MeshFunctions {
    pub element_h: Vec<f64>,
    pub element_p: Vec<usize>,
    pub edge_h: Vec<f64>,
    pub edge_p: Vec<usize>,
    pub mkhp: f64,
}

/// Computes `h`, `p` per element and edge together with
/// `M_kh/p = max(sup_e k h_e / p_e, sup_K k h_K / p_K)`, sampling `k` at
/// vertices, edge midpoints and centroids.
pub fn mesh_functions(
    mesh: &Mesh,
    degrees: &DegreeMap,
    k: impl Fn(Point) -> f64,
) -> Result<MeshFunctions, MeshError> {
    let sample = |x: Point| -> Result<f64, MeshError> {
        let v = k(x);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(MeshError::NonpositiveWavenumber { value: v, at: x })
        }
    };
    let mut mkhp: f64 = 0.0;
    let mut element_h = Vec::with_capacity(mesh.num_triangles());
    let mut element_p = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let h = mesh.diameter(t);
        let p = degrees.get(t);
        let mut kmax = sample(mesh.centroid(t))?;
        for x in mesh.triangle_points(t) {
            kmax = kmax.max(sample(x)?);
        }
        for e in mesh.triangle_edges(t) {
            kmax = kmax.max(sample(mesh.edge_midpoint(e))?);
        }
        mkhp = mkhp.max(kmax * h / p as f64);
        element_h.push(h);
        element_p.push(p);
    }
    let mut edge_h = Vec::with_capacity(mesh.num_edges());
    let mut edge_p = Vec::with_capacity(mesh.num_edges());
    for e in 0..mesh.num_edges() {
        let h = mesh.edges()[e].length;
        let p = degrees.edge_degree(mesh, e);
        let kmax = [0.0, 0.5, 1.0]
            .iter()
            .map(|&s| sample(mesh.edge_point(e, s)))
            .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))?;
        mkhp = mkhp.max(kmax * h / p as f64);
        edge_h.push(h);
        edge_p.push(p);
    }
    Ok(MeshFunctions {
        element_h,
        element_p,
        edge_h,
        edge_p,
        mkhp,
    })
}
