//! Gauss-type quadrature on the reference segment `[0, 1]` and the reference
//! triangle `conv((0,0), (1,0), (0,1))`.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules, so every node lies strictly inside the triangle and every weight is
//! positive. Rules are built once per exactness degree and cached.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

/// Highest exactness degree for which rules are provided.
pub const MAX_QUADRATURE_DEGREE: usize = 160;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadratureError {
    #[error("no quadrature rule of exactness {requested} (maximum is {max})")]
    UnsupportedDegree { requested: usize, max: usize },
}

/// Quadrature on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Quadrature on the reference triangle, weights summing to 1/2.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n`-point Gauss–Legendre nodes and weights on `[0, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess followed by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is descending in i; map [-1,1] -> [0,1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn check_degree(degree: usize) -> Result<(), QuadratureError> {
    if degree > MAX_QUADRATURE_DEGREE {
        Err(QuadratureError::UnsupportedDegree {
            requested: degree,
            max: MAX_QUADRATURE_DEGREE,
        })
    } else {
        Ok(())
    }
}

fn build_edge_rule(degree: usize) -> EdgeRule {
    let n = (degree + 2) / 2;
    let (points, weights) = gauss_legendre(n.max(1));
    EdgeRule {
        points,
        weights,
        degree,
    }
}

fn build_triangle_rule(degree: usize) -> TriangleRule {
    // (u, v) in [0,1]^2 -> (u (1 - v), v), Jacobian (1 - v). A polynomial of
    // total degree d becomes degree d in u and d + 1 in v.
    let nu = (degree + 2) / 2;
    let nv = (degree + 3) / 2;
    let (pu, wu) = gauss_legendre(nu.max(1));
    let (pv, wv) = gauss_legendre(nv.max(1));
    let mut points = Vec::with_capacity(pu.len() * pv.len());
    let mut weights = Vec::with_capacity(pu.len() * pv.len());
    for (v, wv) in pv.iter().zip(&wv) {
        for (u, wu) in pu.iter().zip(&wu) {
            points.push([u * (1.0 - v), *v]);
            weights.push(wu * wv * (1.0 - v));
        }
    }
    TriangleRule {
        points,
        weights,
        degree,
    }
}

fn edge_cache() -> &'static Vec<OnceLock<Arc<EdgeRule>>> {
    static CACHE: OnceLock<Vec<OnceLock<Arc<EdgeRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        (0..=MAX_QUADRATURE_DEGREE)
            .map(|_| OnceLock::new())
            .collect()
    })
}

fn triangle_cache() -> &'static Vec<OnceLock<Arc<TriangleRule>>> {
    static CACHE: OnceLock<Vec<OnceLock<Arc<TriangleRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        (0..=MAX_QUADRATURE_DEGREE)
            .map(|_| OnceLock::new())
            .collect()
    })
}

/// Gauss–Legendre rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<Arc<EdgeRule>, QuadratureError> {
    check_degree(degree)?;
    Ok(edge_cache()[degree]
        .get_or_init(|| Arc::new(build_edge_rule(degree)))
        .clone())
}

/// Collapsed Gauss rule on the reference triangle exact to total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<Arc<TriangleRule>, QuadratureError> {
    check_degree(degree)?;
    Ok(triangle_cache()[degree]
        .get_or_init(|| Arc::new(build_triangle_rule(degree)))
        .clone())
}

/// Exact integral of `x^a y^b` over the reference triangle: `a! b! / (a + b + 2)!`.
pub fn reference_monomial_integral(a: u32, b: u32) -> f64 {
    // Computed as a product of ratios to stay finite for large exponents.
    let mut value = 1.0;
    for i in 1..=b {
        value *= i as f64 / (a + i) as f64;
    }
    value / ((a + b + 1) as f64 * (a + b + 2) as f64)
}

/// Largest relative error of `rule` over all monomials of total degree up to
/// its declared exactness.
pub fn triangle_exactness_error(rule: &TriangleRule) -> f64 {
    let mut worst: f64 = 0.0;
    for total in 0..=rule.degree as u32 {
        for b in 0..=total {
            let a = total - b;
            let approx: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                .sum();
            let exact = reference_monomial_integral(a, b);
            worst = worst.max(((approx - exact) / exact).abs());
        }
    }
    worst
}

/// Largest relative error of `rule` over `x^j`, `j <= degree`, on `[0, 1]`.
pub fn edge_exactness_error(rule: &EdgeRule) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..=rule.degree as i32 {
        let approx: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(j))
            .sum();
        let exact = 1.0 / (j as f64 + 1.0);
        worst = worst.max(((approx - exact) / exact).abs());
    }
    worst
}
