//! Error norms.
//!
//! `‖v‖_{H;T} = ‖kv‖ + ‖∇_T v‖` measures errors in the experiments. The dG
//! norms add the skeleton and boundary terms of the form; their boundary
//! weight `k(1 - δkh/p)` is negative on coarse meshes, where the norm is
//! undefined.

use rayon::prelude::*;
use thiserror::Error;

use crate::dg::tables::element_quadrature;
use crate::dg::{
    edge_kmax, edge_quadrature, element_kmax, interior_sides, DgError, DgSolution, Difference,
    ElementField, Exact, ExactSolution, JumpOrientation,
};
use crate::mesh::{DegreeMap, Mesh};
use crate::problem::ProblemSpec;

#[derive(Debug, Error)]
pub enum NormError {
    #[error(transparent)]
    Dg(#[from] DgError),
    #[error("boundary weight k(1 - δkh/p) = {weight} is negative on edge {edge}")]
    NormUndefined { edge: usize, weight: f64 },
}

/// `‖k v‖` and `‖∇_T v‖` separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtParts {
    pub k_l2: f64,
    pub grad_l2: f64,
}

impl HtParts {
    pub fn total(&self) -> f64 {
        self.k_l2 + self.grad_l2
    }
}

pub fn ht_parts(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    v: &dyn ElementField,
) -> Result<HtParts, DgError> {
    let parts: Vec<(f64, f64)> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let p = degrees.get(t);
            let order =
                problem.data_quadrature_order(p, mesh.diameter(t), element_kmax(mesh, problem, t));
            let quad = element_quadrature(mesh, t, p, order, false)?;
            let mut kv = 0.0;
            let mut gv = 0.0;
            for (x, w) in quad.points.iter().zip(&quad.weights) {
                let (val, g) = v.value_and_gradient(t, *x);
                let k = problem.k(*x);
                kv += w * k * k * val.norm_sqr();
                gv += w * (g[0].norm_sqr() + g[1].norm_sqr());
            }
            Ok((kv, gv))
        })
        .collect::<Result<_, DgError>>()?;
    let (kv, gv) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(HtParts {
        k_l2: kv.sqrt(),
        grad_l2: gv.sqrt(),
    })
}

pub fn ht_norm(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    v: &dyn ElementField,
) -> Result<f64, DgError> {
    Ok(ht_parts(mesh, degrees, problem, v)?.total())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorHt {
    pub absolute: f64,
    /// `‖u‖_{H;T}` of the exact solution.
    pub exact_norm: f64,
    pub relative: f64,
}

/// `‖u - u_T‖_{H;T}` together with the relative value.
pub fn error_ht(sol: &DgSolution, exact: &dyn ExactSolution) -> Result<ErrorHt, DgError> {
    let ex = Exact(exact);
    let diff = Difference(&ex, sol);
    let absolute = ht_norm(sol.mesh, sol.degrees, sol.problem, &diff)?;
    let exact_norm = ht_norm(sol.mesh, sol.degrees, sol.problem, &ex)?;
    let relative = if exact_norm > 0.0 {
        absolute / exact_norm
    } else {
        absolute
    };
    Ok(ErrorHt {
        absolute,
        exact_norm,
        relative,
    })
}

/// Squared contributions of the dG⁺ norm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DgNormParts {
    pub grad: f64,
    pub k_l2: f64,
    pub grad_jump: f64,
    pub jump: f64,
    pub boundary_normal: f64,
    pub boundary_mass: f64,
    pub mean_grad: f64,
}

impl DgNormParts {
    pub fn dg(&self) -> f64 {
        (self.grad
            + self.k_l2
            + self.grad_jump
            + self.jump
            + self.boundary_normal
            + self.boundary_mass)
            .sqrt()
    }

    pub fn dg_plus(&self) -> f64 {
        (self.dg().powi(2) + self.mean_grad).sqrt()
    }
}

/// Computes every term of the dG⁺ norm of `v`; fails when the boundary weight
/// is negative at some quadrature point.
pub fn dg_norm_parts(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    v: &dyn ElementField,
) -> Result<DgNormParts, NormError> {
    let pen = problem.penalty;
    let ht = ht_parts(mesh, degrees, problem, v)?;
    let mut parts = DgNormParts {
        grad: ht.grad_l2.powi(2),
        k_l2: ht.k_l2.powi(2),
        ..Default::default()
    };
    let edges: Vec<DgNormParts> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let he = mesh.edges()[e].length;
            let pe = degrees.edge_degree(mesh, e);
            let order = problem
                .data_quadrature_order(pe, he, edge_kmax(mesh, problem, e))
                .max(2 * degrees.max_degree() + 2);
            let (pts, wts) = edge_quadrature(mesh, e, order)?;
            let pe = pe as f64;
            let mut out = DgNormParts::default();
            if mesh.edges()[e].is_boundary() {
                let t = mesh.edges()[e].triangles.0;
                let n = mesh.edge_normal(e);
                for (x, w) in pts.iter().zip(&wts) {
                    let k = problem.k(*x);
                    let weight = k * (1.0 - pen.delta * k * he / pe);
                    if weight < 0.0 {
                        return Err(NormError::NormUndefined { edge: e, weight });
                    }
                    let (val, g) = v.value_and_gradient(t, *x);
                    let dn = g[0] * n[0] + g[1] * n[1];
                    out.boundary_normal += w * pen.delta * he / pe * dn.norm_sqr();
                    out.boundary_mass += w * weight * val.norm_sqr();
                }
            } else {
                let (plus, minus, n) = interior_sides(mesh, e, JumpOrientation::default());
                let jw = pen.alpha * pe * pe / he;
                for (x, w) in pts.iter().zip(&wts) {
                    let (vp, gp) = v.value_and_gradient(plus, *x);
                    let (vm, gm) = v.value_and_gradient(minus, *x);
                    let dn = (gp[0] - gm[0]) * n[0] + (gp[1] - gm[1]) * n[1];
                    out.grad_jump += w * pen.beta * he / pe * dn.norm_sqr();
                    out.jump += w * jw * (vp - vm).norm_sqr();
                    let mean = [0.5 * (gp[0] + gm[0]), 0.5 * (gp[1] + gm[1])];
                    out.mean_grad += w / jw * (mean[0].norm_sqr() + mean[1].norm_sqr());
                }
            }
            Ok(out)
        })
        .collect::<Result<_, NormError>>()?;
    for e in edges {
        parts.grad_jump += e.grad_jump;
        parts.jump += e.jump;
        parts.boundary_normal += e.boundary_normal;
        parts.boundary_mass += e.boundary_mass;
        parts.mean_grad += e.mean_grad;
    }
    Ok(parts)
}

pub fn dg_norm(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    v: &dyn ElementField,
) -> Result<f64, NormError> {
    Ok(dg_norm_parts(mesh, degrees, problem, v)?.dg())
}

pub fn dg_plus_norm(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    v: &dyn ElementField,
) -> Result<f64, NormError> {
    Ok(dg_norm_parts(mesh, degrees, problem, v)?.dg_plus())
}
