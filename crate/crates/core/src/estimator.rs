//! Residual a posteriori error estimators.
//!
//! For a discrete solution `v` and an element `K`:
//!
//! ```text
//! η_R² = (h_K/p_K)² ‖Δv + k²v + f‖²_K
//! η_E² = ½ Σ_{interior e ⊂ ∂K} ‖√(βh/p) [[∇v]]_N‖²_e + Σ_{boundary e ⊂ ∂K} ‖√h (g - ∂_n v - ikv)‖²_e
//! η_J² = ½ Σ_{interior e ⊂ ∂K} ‖√(αp²/h) [[v]]‖²_e
//! η²   = η_R² + η_E² + η_J²
//! η̌²   = η_R² + (p_K/2) Σ_{interior} ‖√(βh/p) [[∇v]]_N‖²_e + boundary part of η_E²
//! osc² = (h_K/p_K)² ‖f - Π f‖²_K + Σ_{boundary} ‖√h (g - Π g)‖²_e
//! ```
//!
//! `Π` is the L² projection onto polynomials of degree `p_K`. `η̃` is `η` with
//! `f`, `g` replaced by their projections. Global values are root-sum-square.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::legendre_values;
use crate::dg::tables::{element_quadrature, tabulate_at};
use crate::dg::{edge_kmax, edge_quadrature, element_kmax, interior_sides, DgError, DgSolution};
use crate::mesh::mesh_functions;
use crate::quadrature::edge_rule;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ElementEstimate {
    pub id: usize,
    pub eta_r: f64,
    pub eta_e: f64,
    pub eta_j: f64,
    pub eta: f64,
    pub eta_check: f64,
    pub osc: f64,
    /// `η_K` with projected data.
    #[serde(skip)]
    pub eta_tilde: f64,
}

#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub elements: Vec<ElementEstimate>,
    pub eta: f64,
    pub eta_tilde: f64,
    pub eta_check: f64,
    pub osc: f64,
    pub eta_r: f64,
    pub eta_e: f64,
    pub eta_j: f64,
    pub mkhp: f64,
}

impl EstimatorReport {
    /// `η̌_K²`, the marking input.
    pub fn eta_check_squared(&self) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| e.eta_check * e.eta_check)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.elements {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rss(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

/// Squared edge integrals shared by the element estimators.
#[derive(Debug, Clone, Copy, Default)]
struct EdgeTerms {
    /// `‖√(βh/p) [[∇v]]_N‖²` on interior edges.
    grad_jump: f64,
    /// `‖√(αp²/h) [[v]]‖²` on interior edges.
    jump: f64,
    /// `‖√h (g - ∂_n v - ikv)‖²` on boundary edges.
    robin: f64,
    /// Same with `g` replaced by its projection.
    robin_projected: f64,
    /// `‖√h (g - Π g)‖²` on boundary edges.
    osc: f64,
}

fn edge_terms(sol: &DgSolution, e: usize) -> Result<EdgeTerms, DgError> {
    let mesh = sol.mesh;
    let problem = sol.problem;
    let edge = &mesh.edges()[e];
    let he = edge.length;
    let pe = sol.degrees.edge_degree(mesh, e);
    let mut out = EdgeTerms::default();
    if !edge.is_boundary() {
        let (plus, minus, n) = interior_sides(mesh, e, sol.orientation);
        let (pp, pm) = (sol.degrees.get(plus), sol.degrees.get(minus));
        let (pts, wts) = edge_quadrature(mesh, e, 2 * pp.max(pm) + 2)?;
        let tp = tabulate_at(mesh, plus, pp, &pts, false);
        let tm = tabulate_at(mesh, minus, pm, &pts, false);
        let pe = pe as f64;
        let pen = problem.penalty;
        for (q, w) in wts.iter().enumerate() {
            let (vp, gp) = sol.combine(plus, &tp, q);
            let (vm, gm) = sol.combine(minus, &tm, q);
            let dn = (gp[0] - gm[0]) * n[0] + (gp[1] - gm[1]) * n[1];
            out.grad_jump += w * pen.beta * he / pe * dn.norm_sqr();
            out.jump += w * pen.alpha * pe * pe / he * (vp - vm).norm_sqr();
        }
    } else {
        let t = edge.triangles.0;
        let p = sol.degrees.get(t);
        let n = mesh.edge_normal(e);
        let order = problem.data_quadrature_order(p, he, edge_kmax(mesh, problem, e));
        let rule = edge_rule(order)?;
        let (pts, wts) = edge_quadrature(mesh, e, order)?;
        let tab = tabulate_at(mesh, t, p, &pts, false);
        let g: Vec<C64> = pts.iter().map(|x| problem.g(*x, n)).collect();
        if let Some(i) = g
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(DgError::NonFiniteData {
                element: t,
                at: pts[i],
            });
        }
        // Projection onto P_p(e) with the orthonormal Legendre basis in the
        // edge parameter; reference weights integrate over [0, 1].
        let mut leg = vec![0.0; p + 1];
        let mut coeffs = vec![C64::new(0.0, 0.0); p + 1];
        for (q, s) in rule.points.iter().enumerate() {
            legendre_values(p, *s, &mut leg);
            for (c, l) in coeffs.iter_mut().zip(&leg) {
                *c += g[q] * (rule.weights[q] * l);
            }
        }
        for (q, (x, w)) in pts.iter().zip(&wts).enumerate() {
            legendre_values(p, rule.points[q], &mut leg);
            let pg: C64 = coeffs.iter().zip(&leg).map(|(c, l)| c * l).sum();
            let (v, grad) = sol.combine(t, &tab, q);
            let trace = grad[0] * n[0] + grad[1] * n[1] + I * problem.k(*x) * v;
            out.robin += w * he * (g[q] - trace).norm_sqr();
            out.robin_projected += w * he * (pg - trace).norm_sqr();
            out.osc += w * he * (g[q] - pg).norm_sqr();
        }
    }
    Ok(out)
}

/// Interior residual terms of element `t`: `(h/p)²‖r‖²` with the true
/// and the projected source, and `(h/p)²‖f - Πf‖²`.
fn element_terms(sol: &DgSolution, t: usize) -> Result<(f64, f64, f64), DgError> {
    let mesh = sol.mesh;
    let problem = sol.problem;
    let p = sol.degrees.get(t);
    let h = mesh.diameter(t);
    let order = problem.data_quadrature_order(p, h, element_kmax(mesh, problem, t));
    let quad = element_quadrature(mesh, t, p, order, true)?;
    let det = 2.0 * mesh.area(t);
    let f: Vec<C64> = quad.points.iter().map(|x| problem.f(*x)).collect();
    if let Some(i) = f
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(DgError::NonFiniteData {
            element: t,
            at: quad.points[i],
        });
    }
    let n = quad.tab.n;
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for (q, w) in quad.weights.iter().enumerate() {
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c += f[q] * (w * quad.tab.val(q, i) / det);
        }
    }
    let (mut res, mut res_proj, mut osc) = (0.0, 0.0, 0.0);
    for (q, (x, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
        let pf: C64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * quad.tab.val(q, i))
            .sum();
        let (v, _) = sol.combine(t, &quad.tab, q);
        let lap = sol.combine_laplacian(t, &quad.tab, q);
        let k = problem.k(*x);
        let r = lap + v * (k * k);
        res += w * (r + f[q]).norm_sqr();
        res_proj += w * (r + pf).norm_sqr();
        osc += w * (f[q] - pf).norm_sqr();
    }
    let s = (h / p as f64).powi(2);
    Ok((s * res, s * res_proj, s * osc))
}

pub fn estimate(sol: &DgSolution) -> Result<EstimatorReport, DgError> {
    let mesh = sol.mesh;
    let edges: Vec<EdgeTerms> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| edge_terms(sol, e))
        .collect::<Result<_, _>>()?;
    let elements: Vec<ElementEstimate> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let (r2, r2_proj, osc_f) = element_terms(sol, t)?;
            let (mut gj, mut jump, mut robin, mut robin_proj, mut osc_g) =
                (0.0, 0.0, 0.0, 0.0, 0.0);
            for e in mesh.triangle_edges(t) {
                let et = &edges[e];
                if mesh.edges()[e].is_boundary() {
                    robin += et.robin;
                    robin_proj += et.robin_projected;
                    osc_g += et.osc;
                } else {
                    gj += et.grad_jump;
                    jump += et.jump;
                }
            }
            let e2 = 0.5 * gj + robin;
            let j2 = 0.5 * jump;
            let p = sol.degrees.get(t) as f64;
            Ok(ElementEstimate {
                id: t,
                eta_r: r2.sqrt(),
                eta_e: e2.sqrt(),
                eta_j: j2.sqrt(),
                eta: (r2 + e2 + j2).sqrt(),
                eta_check: (r2 + 0.5 * p * gj + robin).sqrt(),
                osc: (osc_f + osc_g).sqrt(),
                eta_tilde: (r2_proj + 0.5 * gj + robin_proj + j2).sqrt(),
            })
        })
        .collect::<Result<_, DgError>>()?;
    let mkhp = mesh_functions(mesh, sol.degrees, |x| sol.problem.k(x))?.mkhp;
    Ok(EstimatorReport {
        eta: rss(elements.iter().map(|e| e.eta)),
        eta_tilde: rss(elements.iter().map(|e| e.eta_tilde)),
        eta_check: rss(elements.iter().map(|e| e.eta_check)),
        osc: rss(elements.iter().map(|e| e.osc)),
        eta_r: rss(elements.iter().map(|e| e.eta_r)),
        eta_e: rss(elements.iter().map(|e| e.eta_e)),
        eta_j: rss(elements.iter().map(|e| e.eta_j)),
        mkhp,
        elements,
    })
}
