//! Assembly and solution of the discrete dG problem `a_T(u_T, v) = F_T(v)`.
//!
//! With `[[u]] = u⁺ - u⁻`, normal `n` pointing out of the `+` side,
//! `{∇u} = (∇u⁺ + ∇u⁻) / 2` and `h/p` taken edgewise:
//!
//! ```text
//! a_T(u, v) = (∇u, ∇v) - (k²u, v)
//!           - ([[u]] n, {∇v})_S - ({∇u}, [[v]] n)_S
//!           + i (β h/p [[∂_n u]], [[∂_n v]])_S + i (α p²/h [[u]], [[v]])_S
//!           - (δ k h/p u, ∂_n v)_∂Ω - (δ k h/p ∂_n u, v)_∂Ω
//!           + i (δ h/p ∂_n u, ∂_n v)_∂Ω + i (k (1 - δ k h/p) u, v)_∂Ω
//! F_T(v)    = (f, v) + i (δ h/p g, ∂_n v)_∂Ω + ((1 - δ k h/p) g, v)_∂Ω
//! ```
//!
//! where `(a, b) = ∫ a conj(b)`. Matrix rows are test functions:
//! `A[i, j] = a_T(φ_j, φ_i)`.

mod solver;
pub(crate) mod tables;

use std::ops::Range;

use faer::sparse::{SparseColMat, Triplet};
use rayon::prelude::*;
use thiserror::Error;

use crate::basis::{dimension, MAX_DEGREE};
use crate::mesh::{DegreeMap, Mesh, MeshError, Point};
use crate::problem::ProblemSpec;
use crate::quadrature::{edge_rule, QuadratureError};
use crate::C64;

pub use solver::solve;
use tables::{element_quadrature, tabulate_at, Tab};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum DgError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    QuadratureUnavailable(#[from] QuadratureError),
    #[error("polynomial degree {0} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("data is not finite on element {element} at ({x}, {y})", x = .at[0], y = .at[1])]
    NonFiniteData { element: usize, at: Point },
    #[error("penalty constants must be positive")]
    InvalidPenalty,
    #[error("linear system is singular")]
    SingularSystem,
    #[error("relative residual {0:e} exceeds tolerance")]
    ResidualTooLarge(f64),
}

/// Which neighbour of an interior edge is the `+` side of the jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpOrientation {
    #[default]
    LowerIndex,
    HigherIndex,
}

/// `(plus, minus, normal)` of an interior edge, normal pointing out of `plus`.
pub fn interior_sides(
    mesh: &Mesh,
    e: usize,
    orientation: JumpOrientation,
) -> (usize, usize, [f64; 2]) {
    let (a, b) = mesh.edges()[e].triangles;
    let b = b.expect("interior edge");
    let n = mesh.edge_normal(e);
    match orientation {
        JumpOrientation::LowerIndex => (a, b, n),
        JumpOrientation::HigherIndex => (b, a, [-n[0], -n[1]]),
    }
}

/// Element-to-coefficient-block map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofLayout {
    offsets: Vec<usize>,
}

impl DofLayout {
    pub fn new(degrees: &DegreeMap) -> Self {
        let mut offsets = Vec::with_capacity(degrees.len() + 1);
        offsets.push(0);
        for &p in degrees.as_slice() {
            offsets.push(offsets.last().unwrap() + dimension(p));
        }
        Self { offsets }
    }

    pub fn range(&self, t: usize) -> Range<usize> {
        self.offsets[t]..self.offsets[t + 1]
    }

    pub fn num_dofs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Element owning global DOF `i`.
    pub fn element_of(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }
}

/// Largest wavenumber sampled at the vertices, edge midpoints and centroid of `t`.
pub(crate) fn element_kmax(mesh: &Mesh, problem: &ProblemSpec, t: usize) -> f64 {
    let mut k = problem.k(mesh.centroid(t));
    for x in mesh.triangle_points(t) {
        k = k.max(problem.k(x));
    }
    for e in mesh.triangle_edges(t) {
        k = k.max(problem.k(mesh.edge_midpoint(e)));
    }
    k
}

pub(crate) fn edge_kmax(mesh: &Mesh, problem: &ProblemSpec, e: usize) -> f64 {
    [0.0, 0.5, 1.0]
        .iter()
        .map(|&s| problem.k(mesh.edge_point(e, s)))
        .fold(0.0, f64::max)
}

/// Physical quadrature on edge `e`: points and weights (including `h_e`).
pub(crate) fn edge_quadrature(
    mesh: &Mesh,
    e: usize,
    order: usize,
) -> Result<(Vec<Point>, Vec<f64>), DgError> {
    let rule = edge_rule(order)?;
    let h = mesh.edges()[e].length;
    let pts = rule.points.iter().map(|&s| mesh.edge_point(e, s)).collect();
    let wts = rule.weights.iter().map(|w| w * h).collect();
    Ok((pts, wts))
}

pub(crate) fn check_setup(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
) -> Result<(), DgError> {
    degrees.validate(mesh)?;
    if degrees.max_degree() > MAX_DEGREE {
        return Err(DgError::DegreeTooHigh(degrees.max_degree()));
    }
    let pen = problem.penalty;
    if !(pen.alpha > 0.0 && pen.beta > 0.0 && pen.delta > 0.0) {
        return Err(DgError::InvalidPenalty);
    }
    Ok(())
}

fn finite(v: C64, element: usize, at: Point) -> Result<C64, DgError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(DgError::NonFiniteData { element, at })
    }
}

fn wavenumber_at(problem: &ProblemSpec, x: Point) -> Result<f64, DgError> {
    let k = problem.k(x);
    if k > 0.0 && k.is_finite() {
        Ok(k)
    } else {
        Err(MeshError::NonpositiveWavenumber { value: k, at: x }.into())
    }
}

struct LocalBlock {
    entries: Vec<(usize, usize, C64)>,
    rhs: Vec<(usize, C64)>,
}

/// Assembled global system.
pub struct DgSystem<'a> {
    pub mesh: &'a Mesh,
    pub degrees: &'a DegreeMap,
    pub problem: &'a ProblemSpec,
    pub layout: DofLayout,
    pub orientation: JumpOrientation,
    pub matrix: SparseColMat<usize, C64>,
    pub rhs: Vec<C64>,
}

impl<'a> DgSystem<'a> {
    pub fn num_dofs(&self) -> usize {
        self.layout.num_dofs()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.num_dofs()];
        let m = self.matrix.as_ref();
        for (j, xj) in x.iter().enumerate() {
            for (i, v) in m.row_idx_of_col(j).zip(m.val_of_col(j)) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `A[i, j]`, zero outside the sparsity pattern.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let m = self.matrix.as_ref();
        m.row_idx_of_col(j)
            .zip(m.val_of_col(j))
            .find(|(r, _)| *r == i)
            .map_or(C64::new(0.0, 0.0), |(_, v)| *v)
    }
}

pub fn assemble<'a>(
    mesh: &'a Mesh,
    degrees: &'a DegreeMap,
    problem: &'a ProblemSpec,
) -> Result<DgSystem<'a>, DgError> {
    assemble_with(mesh, degrees, problem, JumpOrientation::default())
}

pub fn assemble_with<'a>(
    mesh: &'a Mesh,
    degrees: &'a DegreeMap,
    problem: &'a ProblemSpec,
    orientation: JumpOrientation,
) -> Result<DgSystem<'a>, DgError> {
    check_setup(mesh, degrees, problem)?;
    let layout = DofLayout::new(degrees);

    let element_blocks: Vec<LocalBlock> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| element_block(mesh, degrees, problem, &layout, t))
        .collect::<Result<_, _>>()?;
    let edge_blocks: Vec<LocalBlock> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            if mesh.edges()[e].is_boundary() {
                boundary_block(mesh, degrees, problem, &layout, e)
            } else {
                interior_block(mesh, degrees, problem, &layout, e, orientation)
            }
        })
        .collect::<Result<_, _>>()?;

    let n = layout.num_dofs();
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
    for block in element_blocks.iter().chain(&edge_blocks) {
        triplets.extend_from_slice(&block.entries);
        for &(i, v) in &block.rhs {
            rhs[i] += v;
        }
    }
    // Stable sort keeps the summation order of duplicates fixed.
    triplets.sort_by_key(|&(i, j, _)| (j, i));
    let mut merged: Vec<Triplet<usize, usize, C64>> = Vec::with_capacity(triplets.len() / 2);
    for (i, j, v) in triplets {
        match merged.last_mut() {
            Some(last) if last.row == i && last.col == j => last.val += v,
            _ => merged.push(Triplet::new(i, j, v)),
        }
    }
    let matrix =
        SparseColMat::try_new_from_triplets(n, n, &merged).expect("indices within the layout");

    Ok(DgSystem {
        mesh,
        degrees,
        problem,
        layout,
        orientation,
        matrix,
        rhs,
    })
}

fn element_block(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    layout: &DofLayout,
    t: usize,
) -> Result<LocalBlock, DgError> {
    let p = degrees.get(t);
    let h = mesh.diameter(t);
    let kmax = element_kmax(mesh, problem, t);
    let data_order = problem.data_quadrature_order(p, h, kmax);
    let stiff_order = if problem.wavenumber.is_constant() {
        2 * p + 2
    } else {
        data_order
    };
    let off = layout.range(t).start;
    let n = dimension(p);

    let quad = element_quadrature(mesh, t, p, stiff_order, false)?;
    let mut local = vec![C64::new(0.0, 0.0); n * n];
    for (q, (x, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
        let k = wavenumber_at(problem, *x)?;
        let k2 = k * k;
        for i in 0..n {
            let gi = quad.tab.grad(q, i);
            let vi = quad.tab.val(q, i);
            for j in 0..n {
                let gj = quad.tab.grad(q, j);
                let vj = quad.tab.val(q, j);
                local[i * n + j] += w * (gj[0] * gi[0] + gj[1] * gi[1] - k2 * vj * vi);
            }
        }
    }
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push((off + i, off + j, local[i * n + j]));
        }
    }

    let quad = element_quadrature(mesh, t, p, data_order, false)?;
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for (q, (x, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
        let f = finite(problem.f(*x), t, *x)?;
        for (i, r) in rhs.iter_mut().enumerate() {
            *r += f * (w * quad.tab.val(q, i));
        }
    }
    Ok(LocalBlock {
        entries,
        rhs: rhs
            .into_iter()
            .enumerate()
            .map(|(i, v)| (off + i, v))
            .collect(),
    })
}

fn interior_block(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    layout: &DofLayout,
    e: usize,
    orientation: JumpOrientation,
) -> Result<LocalBlock, DgError> {
    let (plus, minus, normal) = interior_sides(mesh, e, orientation);
    let (pp, pm) = (degrees.get(plus), degrees.get(minus));
    let pe = pp.min(pm) as f64;
    let he = mesh.edges()[e].length;
    let pen = problem.penalty;
    let grad_pen = I * (pen.beta * he / pe);
    let jump_pen = I * (pen.alpha * pe * pe / he);

    let (pts, wts) = edge_quadrature(mesh, e, 2 * pp.max(pm) + 2)?;
    let sides = [
        (
            tabulate_at(mesh, plus, pp, &pts, false),
            layout.range(plus).start,
            1.0,
        ),
        (
            tabulate_at(mesh, minus, pm, &pts, false),
            layout.range(minus).start,
            -1.0,
        ),
    ];

    let mut entries = Vec::new();
    for (test, test_off, sr) in &sides {
        for (trial, trial_off, ss) in &sides {
            let (ni, nj) = (test.n, trial.n);
            let mut local = vec![C64::new(0.0, 0.0); ni * nj];
            for (q, w) in wts.iter().enumerate() {
                for i in 0..ni {
                    let vi = test.val(q, i);
                    let dvi = test.normal_derivative(q, i, normal);
                    for j in 0..nj {
                        let vj = trial.val(q, j);
                        let dvj = trial.normal_derivative(q, j, normal);
                        let real = -ss * vj * 0.5 * dvi - 0.5 * dvj * sr * vi;
                        let sign = ss * sr;
                        local[i * nj + j] +=
                            (real + grad_pen * (sign * dvj * dvi) + jump_pen * (sign * vj * vi))
                                * *w;
                    }
                }
            }
            for i in 0..ni {
                for j in 0..nj {
                    entries.push((test_off + i, trial_off + j, local[i * nj + j]));
                }
            }
        }
    }
    Ok(LocalBlock {
        entries,
        rhs: Vec::new(),
    })
}

fn boundary_block(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    layout: &DofLayout,
    e: usize,
) -> Result<LocalBlock, DgError> {
    let t = mesh.edges()[e].triangles.0;
    let normal = mesh.edge_normal(e);
    let p = degrees.get(t);
    let pe = p as f64;
    let he = mesh.edges()[e].length;
    let delta = problem.penalty.delta;
    let kmax = edge_kmax(mesh, problem, e);
    let data_order = problem.data_quadrature_order(p, he, kmax);
    let mat_order = if problem.wavenumber.is_constant() {
        2 * p + 2
    } else {
        data_order
    };
    let off = layout.range(t).start;
    let n = dimension(p);

    let mut entries = Vec::with_capacity(n * n);
    let (pts, wts) = edge_quadrature(mesh, e, mat_order)?;
    let tab = tabulate_at(mesh, t, p, &pts, false);
    let mut local = vec![C64::new(0.0, 0.0); n * n];
    for (q, (x, w)) in pts.iter().zip(&wts).enumerate() {
        let k = wavenumber_at(problem, *x)?;
        let s = delta * k * he / pe;
        let mass = I * (k * (1.0 - s));
        let grad = I * (delta * he / pe);
        for i in 0..n {
            let vi = tab.val(q, i);
            let dvi = tab.normal_derivative(q, i, normal);
            for j in 0..n {
                let vj = tab.val(q, j);
                let dvj = tab.normal_derivative(q, j, normal);
                let real = -s * vj * dvi - s * dvj * vi;
                local[i * n + j] += (real + grad * (dvj * dvi) + mass * (vj * vi)) * *w;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            entries.push((off + i, off + j, local[i * n + j]));
        }
    }

    let (pts, wts) = edge_quadrature(mesh, e, data_order)?;
    let tab = tabulate_at(mesh, t, p, &pts, false);
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for (q, (x, w)) in pts.iter().zip(&wts).enumerate() {
        let k = wavenumber_at(problem, *x)?;
        let g = finite(problem.g(*x, normal), t, *x)?;
        let s = delta * k * he / pe;
        let grad = I * (delta * he / pe) * g;
        let mass = g * (1.0 - s);
        for (i, r) in rhs.iter_mut().enumerate() {
            *r += (grad * tab.normal_derivative(q, i, normal) + mass * tab.val(q, i)) * *w;
        }
    }
    Ok(LocalBlock {
        entries,
        rhs: rhs
            .into_iter()
            .enumerate()
            .map(|(i, v)| (off + i, v))
            .collect(),
    })
}

/// Outcome of the sufficient unique-solvability condition
/// `sup_{∂Ω} δ k h/p < 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solvability {
    pub value: f64,
    pub guaranteed: bool,
}

impl Solvability {
    /// Distance to the threshold; positive when solvability is guaranteed.
    pub fn margin(&self) -> f64 {
        0.5 - self.value
    }
}

pub fn solvability_check(mesh: &Mesh, degrees: &DegreeMap, problem: &ProblemSpec) -> Solvability {
    let delta = problem.penalty.delta;
    let value = mesh
        .boundary_edges()
        .map(|e| {
            let k = edge_kmax(mesh, problem, e);
            delta * k * mesh.edges()[e].length / degrees.edge_degree(mesh, e) as f64
        })
        .fold(0.0, f64::max);
    Solvability {
        value,
        guaranteed: value < 0.5,
    }
}

/// A function given elementwise by value and gradient; discrete solutions
/// and exact solutions both qualify.
pub trait ElementField: Sync {
    fn value_and_gradient(&self, t: usize, x: Point) -> (C64, [C64; 2]);
}

/// Smooth function with analytic derivatives.
pub trait ExactSolution: Send + Sync {
    fn value(&self, x: Point) -> C64;
    fn gradient(&self, x: Point) -> [C64; 2];
    fn laplacian(&self, x: Point) -> C64;
}

/// Views an [`ExactSolution`] as an [`ElementField`].
pub struct Exact<'a>(pub &'a dyn ExactSolution);

impl ElementField for Exact<'_> {
    fn value_and_gradient(&self, _t: usize, x: Point) -> (C64, [C64; 2]) {
        (self.0.value(x), self.0.gradient(x))
    }
}

/// `a - b`, evaluated pointwise.
pub struct Difference<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: ElementField + ?Sized, B: ElementField + ?Sized> ElementField for Difference<'_, A, B> {
    fn value_and_gradient(&self, t: usize, x: Point) -> (C64, [C64; 2]) {
        let (va, ga) = self.0.value_and_gradient(t, x);
        let (vb, gb) = self.1.value_and_gradient(t, x);
        (va - vb, [ga[0] - gb[0], ga[1] - gb[1]])
    }
}

/// Discrete dG function: one coefficient block per element.
#[derive(Clone)]
pub struct DgSolution<'a> {
    pub mesh: &'a Mesh,
    pub degrees: &'a DegreeMap,
    pub problem: &'a ProblemSpec,
    pub layout: DofLayout,
    pub coeffs: Vec<C64>,
    pub orientation: JumpOrientation,
}

impl<'a> DgSolution<'a> {
    pub fn from_coefficients(
        mesh: &'a Mesh,
        degrees: &'a DegreeMap,
        problem: &'a ProblemSpec,
        coeffs: Vec<C64>,
    ) -> Self {
        let layout = DofLayout::new(degrees);
        assert_eq!(
            layout.num_dofs(),
            coeffs.len(),
            "coefficient count does not match the layout"
        );
        Self {
            mesh,
            degrees,
            problem,
            layout,
            coeffs,
            orientation: JumpOrientation::default(),
        }
    }

    /// Elementwise L² projection of `func`; exact for polynomials of degree `<= p_K`.
    pub fn project(
        mesh: &'a Mesh,
        degrees: &'a DegreeMap,
        problem: &'a ProblemSpec,
        func: impl Fn(Point) -> C64 + Sync,
    ) -> Result<Self, DgError> {
        let layout = DofLayout::new(degrees);
        let blocks: Vec<Vec<C64>> = (0..mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let p = degrees.get(t);
                let order = problem.data_quadrature_order(
                    p,
                    mesh.diameter(t),
                    element_kmax(mesh, problem, t),
                );
                let quad = element_quadrature(mesh, t, p, order, false)?;
                // The basis is orthonormal on the reference element, so the
                // physical Gram matrix is |det J| times the identity.
                let scale = 2.0 * mesh.area(t);
                let mut c = vec![C64::new(0.0, 0.0); quad.tab.n];
                for (q, (x, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
                    let v = func(*x);
                    for (i, ci) in c.iter_mut().enumerate() {
                        *ci += v * (w * quad.tab.val(q, i) / scale);
                    }
                }
                Ok(c)
            })
            .collect::<Result<_, DgError>>()?;
        Ok(Self {
            mesh,
            degrees,
            problem,
            layout,
            coeffs: blocks.concat(),
            orientation: JumpOrientation::default(),
        })
    }

    pub fn with_orientation(mut self, orientation: JumpOrientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn block(&self, t: usize) -> &[C64] {
        &self.coeffs[self.layout.range(t)]
    }

    /// Combines a tabulated basis with the coefficients of element `t`:
    /// `(value, gradient)` at point `q`.
    pub(crate) fn combine(&self, t: usize, tab: &Tab, q: usize) -> (C64, [C64; 2]) {
        let c = self.block(t);
        let mut v = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        for (i, ci) in c.iter().enumerate() {
            v += ci * tab.val(q, i);
            let gi = tab.grad(q, i);
            g[0] += ci * gi[0];
            g[1] += ci * gi[1];
        }
        (v, g)
    }

    pub(crate) fn combine_laplacian(&self, t: usize, tab: &Tab, q: usize) -> C64 {
        self.block(t)
            .iter()
            .enumerate()
            .map(|(i, ci)| ci * tab.laps[q * tab.n + i])
            .sum()
    }

    pub fn value(&self, t: usize, x: Point) -> C64 {
        self.value_and_gradient(t, x).0
    }

    pub fn gradient(&self, t: usize, x: Point) -> [C64; 2] {
        self.value_and_gradient(t, x).1
    }

    /// Exact Laplacian of the local polynomial on element `t`.
    pub fn laplacian(&self, t: usize, x: Point) -> C64 {
        let tab = tabulate_at(self.mesh, t, self.degrees.get(t), &[x], true);
        self.combine_laplacian(t, &tab, 0)
    }

    fn traces(&self, e: usize, s: f64) -> (Trace, Option<Trace>) {
        let x = self.mesh.edge_point(e, s);
        let edge = &self.mesh.edges()[e];
        if edge.is_boundary() {
            let t = edge.triangles.0;
            let (v, g) = self.value_and_gradient(t, x);
            (
                Trace {
                    v,
                    g,
                    n: self.mesh.edge_normal(e),
                },
                None,
            )
        } else {
            let (plus, minus, n) = interior_sides(self.mesh, e, self.orientation);
            let (vp, gp) = self.value_and_gradient(plus, x);
            let (vm, gm) = self.value_and_gradient(minus, x);
            (Trace { v: vp, g: gp, n }, Some(Trace { v: vm, g: gm, n }))
        }
    }

    /// `[[v]]` at parameter `s` of edge `e`; the plain trace on the boundary.
    pub fn jump(&self, e: usize, s: f64) -> C64 {
        match self.traces(e, s) {
            (p, Some(m)) => p.v - m.v,
            (p, None) => p.v,
        }
    }

    /// `[[∇v]]_N = ∇v⁺·n⁺ + ∇v⁻·n⁻`; the normal derivative on the boundary.
    pub fn normal_gradient_jump(&self, e: usize, s: f64) -> C64 {
        match self.traces(e, s) {
            (p, Some(m)) => p.dn() - m.dn(),
            (p, None) => p.dn(),
        }
    }

    /// `{v}` at parameter `s`; the trace on the boundary.
    pub fn mean(&self, e: usize, s: f64) -> C64 {
        match self.traces(e, s) {
            (p, Some(m)) => 0.5 * (p.v + m.v),
            (p, None) => p.v,
        }
    }

    /// `{∇v}` at parameter `s`.
    pub fn mean_gradient(&self, e: usize, s: f64) -> [C64; 2] {
        match self.traces(e, s) {
            (p, Some(m)) => [0.5 * (p.g[0] + m.g[0]), 0.5 * (p.g[1] + m.g[1])],
            (p, None) => p.g,
        }
    }
}

struct Trace {
    v: C64,
    g: [C64; 2],
    n: [f64; 2],
}

impl Trace {
    fn dn(&self) -> C64 {
        self.g[0] * self.n[0] + self.g[1] * self.n[1]
    }
}

impl ElementField for DgSolution<'_> {
    fn value_and_gradient(&self, t: usize, x: Point) -> (C64, [C64; 2]) {
        let tab = tabulate_at(self.mesh, t, self.degrees.get(t), &[x], false);
        self.combine(t, &tab, 0)
    }
}

/// `[a_T(u, φ_i)]_i` for a field `u` given by pointwise evaluation,
/// integrated at data order.
pub fn apply_form(
    mesh: &Mesh,
    degrees: &DegreeMap,
    problem: &ProblemSpec,
    u: &dyn ElementField,
) -> Result<Vec<C64>, DgError> {
    check_setup(mesh, degrees, problem)?;
    let layout = DofLayout::new(degrees);
    let pen = problem.penalty;
    let mut out = vec![C64::new(0.0, 0.0); layout.num_dofs()];

    let element_parts: Vec<Vec<C64>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let p = degrees.get(t);
            let order =
                problem.data_quadrature_order(p, mesh.diameter(t), element_kmax(mesh, problem, t));
            let quad = element_quadrature(mesh, t, p, order, false)?;
            let mut r = vec![C64::new(0.0, 0.0); quad.tab.n];
            for (q, (x, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
                let k = wavenumber_at(problem, *x)?;
                let (v, g) = u.value_and_gradient(t, *x);
                for (i, ri) in r.iter_mut().enumerate() {
                    let gi = quad.tab.grad(q, i);
                    *ri += (g[0] * gi[0] + g[1] * gi[1] - v * (k * k) * quad.tab.val(q, i)) * *w;
                }
            }
            Ok(r)
        })
        .collect::<Result<_, DgError>>()?;
    for (t, r) in element_parts.into_iter().enumerate() {
        for (o, v) in out[layout.range(t)].iter_mut().zip(r) {
            *o += v;
        }
    }

    let edge_parts: Vec<Vec<(usize, C64)>> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let he = mesh.edges()[e].length;
            let pe = degrees.edge_degree(mesh, e);
            let order = problem.data_quadrature_order(pe, he, edge_kmax(mesh, problem, e));
            let (pts, wts) = edge_quadrature(mesh, e, order.max(2 * degrees.max_degree() + 2))?;
            let mut contrib = Vec::new();
            if mesh.edges()[e].is_boundary() {
                let t = mesh.edges()[e].triangles.0;
                let n = mesh.edge_normal(e);
                let tab = tabulate_at(mesh, t, degrees.get(t), &pts, false);
                let mut r = vec![C64::new(0.0, 0.0); tab.n];
                let pe = pe as f64;
                for (q, (x, w)) in pts.iter().zip(&wts).enumerate() {
                    let k = wavenumber_at(problem, *x)?;
                    let s = pen.delta * k * he / pe;
                    let (v, g) = u.value_and_gradient(t, *x);
                    let dn = g[0] * n[0] + g[1] * n[1];
                    for (i, ri) in r.iter_mut().enumerate() {
                        let phi = tab.val(q, i);
                        let dphi = tab.normal_derivative(q, i, n);
                        *ri += (-(v * s) * dphi - dn * s * phi
                            + I * (pen.delta * he / pe) * dn * dphi
                            + I * (k * (1.0 - s)) * v * phi)
                            * *w;
                    }
                }
                let off = layout.range(t).start;
                contrib.extend(r.into_iter().enumerate().map(|(i, v)| (off + i, v)));
            } else {
                let (plus, minus, n) = interior_sides(mesh, e, JumpOrientation::default());
                let pe = pe as f64;
                let tp = tabulate_at(mesh, plus, degrees.get(plus), &pts, false);
                let tm = tabulate_at(mesh, minus, degrees.get(minus), &pts, false);
                let mut rp = vec![C64::new(0.0, 0.0); tp.n];
                let mut rm = vec![C64::new(0.0, 0.0); tm.n];
                for (q, (x, w)) in pts.iter().zip(&wts).enumerate() {
                    let (vp, gp) = u.value_and_gradient(plus, *x);
                    let (vm, gm) = u.value_and_gradient(minus, *x);
                    let jump = vp - vm;
                    let dnp = gp[0] * n[0] + gp[1] * n[1];
                    let dnm = gm[0] * n[0] + gm[1] * n[1];
                    let mean_dn = 0.5 * (dnp + dnm);
                    let grad_jump = dnp - dnm;
                    for (tab, r, sign) in [(&tp, &mut rp, 1.0), (&tm, &mut rm, -1.0)] {
                        for (i, ri) in r.iter_mut().enumerate() {
                            let phi = tab.val(q, i);
                            let dphi = tab.normal_derivative(q, i, n);
                            *ri += (-jump * (0.5 * dphi) - mean_dn * (sign * phi)
                                + I * (pen.beta * he / pe) * grad_jump * (sign * dphi)
                                + I * (pen.alpha * pe * pe / he) * jump * (sign * phi))
                                * *w;
                        }
                    }
                }
                let (op, om) = (layout.range(plus).start, layout.range(minus).start);
                contrib.extend(rp.into_iter().enumerate().map(|(i, v)| (op + i, v)));
                contrib.extend(rm.into_iter().enumerate().map(|(i, v)| (om + i, v)));
            }
            Ok(contrib)
        })
        .collect::<Result<_, DgError>>()?;
    for part in edge_parts {
        for (i, v) in part {
            out[i] += v;
        }
    }
    Ok(out)
}

/// `max_i |a_T(u, φ_i) - F_T(φ_i)| / max_i |F_T(φ_i)|` for a smooth `u`
/// solving the problem; zero up to quadrature error when the form is consistent.
pub fn consistency_residual(
    problem: &ProblemSpec,
    exact: &dyn ExactSolution,
    mesh: &Mesh,
    degrees: &DegreeMap,
) -> Result<f64, DgError> {
    let lhs = apply_form(mesh, degrees, problem, &Exact(exact))?;
    let sys = assemble(mesh, degrees, problem)?;
    let scale = sys.rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    Ok(lhs
        .iter()
        .zip(&sys.rhs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::SQRT_2;

    use super::*;
    use crate::mesh::{rectangle, reference_triangle, unit_square};
    use crate::problem::{Penalty, Wavenumber};

    fn problem(k: f64, f: C64) -> ProblemSpec {
        ProblemSpec::new(
            "t",
            Wavenumber::Constant(k),
            move |_| f,
            |_, _| C64::new(0.0, 0.0),
        )
    }

    #[test]
    fn form_of_constants_on_reference_triangle() {
        let m = reference_triangle();
        let d = DegreeMap::uniform(1, 1);
        let prob = problem(1.0, C64::new(1.0, 0.0));
        let sys = assemble(&m, &d, &prob).unwrap();
        // The constant mode of the orthonormal basis is sqrt(2), so 1 = φ_0 / sqrt(2).
        let a = sys.entry(0, 0) / 2.0;
        assert!((a - C64::new(-0.5, 1.0 + SQRT_2)).norm() < 1e-12);
        let f = sys.rhs[0] / SQRT_2;
        assert!((f - C64::new(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn solvability_examples() {
        let prob = problem(10.0, C64::new(0.0, 0.0));
        let fine = rectangle(0.0, 1.0, 0.0, 1.0, 10).unwrap();
        let s = solvability_check(&fine, &DegreeMap::uniform(fine.num_triangles(), 1), &prob);
        assert!((s.value - 0.25).abs() < 1e-12 && s.guaranteed);
        let coarse = rectangle(0.0, 0.8, 0.0, 0.8, 2).unwrap();
        let s = solvability_check(
            &coarse,
            &DegreeMap::uniform(coarse.num_triangles(), 1),
            &prob,
        );
        assert!((s.value - 1.0).abs() < 1e-12 && !s.guaranteed);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = unit_square(4).unwrap();
        let d = DegreeMap::uniform(m.num_triangles(), 2);
        let prob = problem(2.0, C64::new(0.0, 0.0));
        let sol = solve(&assemble(&m, &d, &prob).unwrap()).unwrap();
        assert!(sol.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0)));
    }

    #[test]
    fn continuous_fields_have_no_jumps() {
        let m = unit_square(2).unwrap();
        let d = DegreeMap::from_vec((0..8).map(|t| 1 + t % 3).collect());
        let prob = problem(3.0, C64::new(0.0, 0.0));
        let sol =
            DgSolution::project(&m, &d, &prob, |x| C64::new(1.0 + 2.0 * x[0], -x[1])).unwrap();
        for e in m.interior_edges() {
            for s in [0.1, 0.5, 0.77] {
                assert!(sol.jump(e, s).norm() < 1e-12);
                assert!(sol.normal_gradient_jump(e, s).norm() < 1e-12);
            }
        }
        // With no jumps the α-penalty drops out of A c.
        let doubled = prob.clone().with_penalty(Penalty {
            alpha: 60.0,
            ..Penalty::default()
        });
        let a = assemble(&m, &d, &prob).unwrap().matvec(&sol.coeffs);
        let b = assemble(&m, &d, &doubled).unwrap().matvec(&sol.coeffs);
        let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12 * scale, "{}", (x - y).norm());
        }
    }

    #[test]
    fn sparsity_follows_adjacency() {
        let m = unit_square(2).unwrap();
        let d = DegreeMap::uniform(m.num_triangles(), 1);
        let prob = problem(1.0, C64::new(0.0, 0.0));
        let sys = assemble(&m, &d, &prob).unwrap();
        let mat = sys.matrix.as_ref();
        for j in 0..sys.num_dofs() {
            for i in mat.row_idx_of_col(j) {
                let (ti, tj) = (sys.layout.element_of(i), sys.layout.element_of(j));
                let neighbours = ti == tj
                    || m.triangle_edges(ti)
                        .iter()
                        .any(|e| m.triangle_edges(tj).contains(e));
                assert!(
                    neighbours,
                    "entry ({i}, {j}) couples elements {ti} and {tj}"
                );
            }
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let m = unit_square(3).unwrap();
        let d = DegreeMap::uniform(m.num_triangles(), 2);
        let prob = problem(4.0, C64::new(1.0, 0.5));
        let a = assemble(&m, &d, &prob).unwrap();
        let b = assemble(&m, &d, &prob).unwrap();
        assert_eq!(a.rhs, b.rhs);
        assert_eq!(a.matrix.as_ref().val(), b.matrix.as_ref().val());
    }
}
