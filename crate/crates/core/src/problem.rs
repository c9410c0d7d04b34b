//! Helmholtz problem data: `-Δu - k²u = f` in Ω, `∂_n u + iku = g` on ∂Ω.

use std::fmt;
use std::sync::Arc;

use crate::mesh::Point;
use crate::C64;

pub type ScalarField = Arc<dyn Fn(Point) -> C64 + Send + Sync>;
/// Boundary datum evaluated at a point with the outward unit normal there.
pub type BoundaryField = Arc<dyn Fn(Point, [f64; 2]) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum Wavenumber {
    Constant(f64),
    Field(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl Wavenumber {
    pub fn at(&self, x: Point) -> f64 {
        match self {
            Wavenumber::Constant(k) => *k,
            Wavenumber::Field(f) => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Wavenumber::Constant(_))
    }
}

impl fmt::Debug for Wavenumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wavenumber::Constant(k) => write!(f, "Constant({k})"),
            Wavenumber::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// Penalty constants of the dG form: `alpha` weights the solution jumps,
/// `beta` the gradient jumps and `delta` the boundary stabilization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl Default for Penalty {
    fn default() -> Self {
        Self {
            alpha: 30.0,
            beta: 1.0,
            delta: 0.25,
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub wavenumber: Wavenumber,
    pub source: ScalarField,
    pub boundary: BoundaryField,
    pub penalty: Penalty,
    /// Fixed exactness degree for integrals of non-polynomial data; by default
    /// `max(2p + 4, ceil(k h_K) + 6)`.
    pub data_order: Option<usize>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("wavenumber", &self.wavenumber)
            .field("penalty", &self.penalty)
            .field("data_order", &self.data_order)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        wavenumber: Wavenumber,
        source: impl Fn(Point) -> C64 + Send + Sync + 'static,
        boundary: impl Fn(Point, [f64; 2]) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            wavenumber,
            source: Arc::new(source),
            boundary: Arc::new(boundary),
            penalty: Penalty::default(),
            data_order: None,
        }
    }

    pub fn with_penalty(mut self, penalty: Penalty) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_data_order(mut self, order: Option<usize>) -> Self {
        self.data_order = order;
        self
    }

    pub fn k(&self, x: Point) -> f64 {
        self.wavenumber.at(x)
    }

    pub fn f(&self, x: Point) -> C64 {
        (self.source)(x)
    }

    pub fn g(&self, x: Point, normal: [f64; 2]) -> C64 {
        (self.boundary)(x, normal)
    }

    /// Quadrature exactness for data integrals on an element of degree `p`,
    /// diameter `h` and largest sampled wavenumber `k`.
    pub fn data_quadrature_order(&self, p: usize, h: f64, k: f64) -> usize {
        let floor = 2 * p + 4;
        match self.data_order {
            Some(q) => q.max(2 * p + 2),
            None => floor.max((k * h).ceil() as usize + 6),
        }
    }
}
