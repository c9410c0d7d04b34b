//! Basis tabulation on physical elements.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::basis::{BasisValues, LocalBasis};
use crate::mesh::{Affine, Mesh, Point};
use crate::quadrature::{triangle_rule, QuadratureError, TriangleRule};

/// Basis values at a set of points: `vals[q * n + i]` is basis function `i`
/// at point `q`. Gradients are physical; Laplacians are filled on request.
#[derive(Debug, Clone)]
pub struct Tab {
    pub n: usize,
    pub vals: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub laps: Vec<f64>,
}

impl Tab {
    pub fn val(&self, q: usize, i: usize) -> f64 {
        self.vals[q * self.n + i]
    }

    pub fn grad(&self, q: usize, i: usize) -> [f64; 2] {
        self.grads[q * self.n + i]
    }

    pub fn normal_derivative(&self, q: usize, i: usize, normal: [f64; 2]) -> f64 {
        let g = self.grad(q, i);
        g[0] * normal[0] + g[1] * normal[1]
    }
}

#[derive(Debug)]
struct ReferenceTable {
    n: usize,
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
    hessians: Vec<[f64; 3]>,
}

fn reference_table(p: usize, rule: &TriangleRule) -> Arc<ReferenceTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<ReferenceTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&(p, rule.degree)) {
        return t.clone();
    }
    let basis = LocalBasis::of_degree(p);
    let n = basis.len();
    let mut values = Vec::with_capacity(n * rule.len());
    let mut grads = Vec::with_capacity(n * rule.len());
    let mut hessians = Vec::with_capacity(n * rule.len());
    let mut bv = BasisValues::default();
    for xi in &rule.points {
        basis.evaluate(*xi, &mut bv);
        values.extend_from_slice(&bv.values);
        grads.extend_from_slice(&bv.grads);
        hessians.extend_from_slice(&bv.hessians);
    }
    let table = Arc::new(ReferenceTable {
        n,
        values,
        grads,
        hessians,
    });
    cache
        .lock()
        .unwrap()
        .insert((p, rule.degree), table.clone());
    table
}

/// Element quadrature points (physical), weights (physical measure) and the
/// basis tabulated there.
pub struct ElementQuadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub tab: Tab,
}

pub fn element_quadrature(
    mesh: &Mesh,
    t: usize,
    p: usize,
    order: usize,
    with_laplacian: bool,
) -> Result<ElementQuadrature, QuadratureError> {
    let rule = triangle_rule(order)?;
    let table = reference_table(p, &rule);
    let affine = mesh.affine(t);
    let scale = affine.det.abs();
    let points = rule
        .points
        .iter()
        .map(|xi| affine.to_physical(*xi))
        .collect();
    let weights = rule.weights.iter().map(|w| w * scale).collect();
    let grads = table
        .grads
        .iter()
        .map(|g| affine.push_gradient(*g))
        .collect();
    let laps = if with_laplacian {
        table
            .hessians
            .iter()
            .map(|h| affine.push_laplacian(*h))
            .collect()
    } else {
        Vec::new()
    };
    Ok(ElementQuadrature {
        points,
        weights,
        tab: Tab {
            n: table.n,
            vals: table.values.clone(),
            grads,
            laps,
        },
    })
}

/// Basis of element `t` (degree `p`) at arbitrary physical points.
pub fn tabulate_at(mesh: &Mesh, t: usize, p: usize, points: &[Point], with_laplacian: bool) -> Tab {
    tabulate_with(&mesh.affine(t), p, points, with_laplacian)
}

pub fn tabulate_with(affine: &Affine, p: usize, points: &[Point], with_laplacian: bool) -> Tab {
    let basis = LocalBasis::of_degree(p);
    let n = basis.len();
    let mut vals = Vec::with_capacity(n * points.len());
    let mut grads = Vec::with_capacity(n * points.len());
    let mut laps = Vec::new();
    let mut bv = BasisValues::default();
    for x in points {
        basis.evaluate(affine.to_reference(*x), &mut bv);
        vals.extend_from_slice(&bv.values);
        grads.extend(bv.grads.iter().map(|g| affine.push_gradient(*g)));
        if with_laplacian {
            laps.extend(bv.hessians.iter().map(|h| affine.push_laplacian(*h)));
        }
    }
    Tab {
        n,
        vals,
        grads,
        laps,
    }
}
