//! Longest-edge bisection with conforming closure.
//!
//! Refinement works on edges: each marked triangle marks its longest edge,
//! then every triangle holding a marked edge also marks its own longest edge
//! until nothing changes. A triangle is then split across its longest edge,
//! and each half is split once more if its outer edge is marked. Every marked
//! edge is bisected in both neighbours, so the result has no hanging nodes.

use std::collections::VecDeque;

use super::{DegreeMap, Mesh, MeshError, Point};

#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: Mesh,
    pub degrees: DegreeMap,
    /// `parents[child]` is the triangle of the input mesh that contains `child`.
    pub parents: Vec<usize>,
}

/// Bisects every `marked` triangle across its longest edge, plus the closure
/// needed to remove hanging nodes. Children inherit the parent's degree.
pub fn refine(mesh: &Mesh, degrees: &DegreeMap, marked: &[usize]) -> Result<Refinement, MeshError> {
    degrees.validate(mesh)?;
    let mut edge_marked = vec![false; mesh.num_edges()];
    let mut queue = VecDeque::new();
    for &t in marked {
        if t >= mesh.num_triangles() {
            return Err(MeshError::UnknownElement(t));
        }
        let e = mesh.longest_edge(t);
        if !edge_marked[e] {
            edge_marked[e] = true;
            queue.push_back(e);
        }
    }
    close(mesh, &mut edge_marked, queue)?;
    split(mesh, degrees, &edge_marked)
}

/// Splits every triangle into four by bisecting all of its edges.
pub fn refine_uniform(mesh: &Mesh, degrees: &DegreeMap) -> Result<Refinement, MeshError> {
    degrees.validate(mesh)?;
    split(mesh, degrees, &vec![true; mesh.num_edges()])
}

fn close(
    mesh: &Mesh,
    edge_marked: &mut [bool],
    mut queue: VecDeque<usize>,
) -> Result<(), MeshError> {
    // Each pass over the queue marks at least one new edge or ends, so the
    // number of edges bounds the work.
    let bound = mesh.num_edges() + 1;
    let mut processed = 0usize;
    while let Some(e) = queue.pop_front() {
        processed += 1;
        if processed > bound * 2 {
            return Err(MeshError::ClosureNonTermination(processed));
        }
        let (a, b) = mesh.edges()[e].triangles;
        for t in std::iter::once(a).chain(b) {
            let le = mesh.longest_edge(t);
            if !edge_marked[le] {
                edge_marked[le] = true;
                queue.push_back(le);
            }
        }
    }
    Ok(())
}

fn split(mesh: &Mesh, degrees: &DegreeMap, edge_marked: &[bool]) -> Result<Refinement, MeshError> {
    let mut vertices: Vec<Point> = mesh.vertices().to_vec();
    let mut midpoint = vec![usize::MAX; mesh.num_edges()];
    for (e, &m) in edge_marked.iter().enumerate() {
        if m {
            midpoint[e] = vertices.len();
            vertices.push(mesh.edge_midpoint(e));
        }
    }

    let mut triangles = Vec::with_capacity(mesh.num_triangles() * 2);
    let mut parents = Vec::with_capacity(mesh.num_triangles() * 2);
    let mut child_degrees = Vec::with_capacity(mesh.num_triangles() * 2);
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let te = mesh.triangle_edges(t);
        let le = mesh.longest_edge(t);
        let before = triangles.len();
        if !edge_marked[le] {
            debug_assert!(
                te.iter().all(|&e| !edge_marked[e]),
                "closure left a hanging node"
            );
            triangles.push(tri);
        } else {
            // Rotate so the longest edge runs from a to b, c opposite.
            let j = te.iter().position(|&e| e == le).unwrap();
            let (a, b, c) = (tri[j], tri[(j + 1) % 3], tri[(j + 2) % 3]);
            let (e_bc, e_ca) = (te[(j + 1) % 3], te[(j + 2) % 3]);
            let m = midpoint[le];
            // (a, m, c): outer edge c -> a.
            if edge_marked[e_ca] {
                let n = midpoint[e_ca];
                triangles.push([a, m, n]);
                triangles.push([m, c, n]);
            } else {
                triangles.push([a, m, c]);
            }
            // (m, b, c): outer edge b -> c.
            if edge_marked[e_bc] {
                let q = midpoint[e_bc];
                triangles.push([m, b, q]);
                triangles.push([m, q, c]);
            } else {
                triangles.push([m, b, c]);
            }
        }
        for _ in before..triangles.len() {
            parents.push(t);
            child_degrees.push(degrees.get(t));
        }
    }

    let mesh = Mesh::new(vertices, triangles)?;
    Ok(Refinement {
        mesh,
        degrees: DegreeMap::from_vec(child_degrees),
        parents,
    })
}
