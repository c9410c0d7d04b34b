//! Benchmark problems with closed-form data.
//!
//! | name           | domain          | exact solution            |
//! |----------------|-----------------|---------------------------|
//! | `plane-wave`   | (0,1)²          | `exp(ik(x+y))`            |
//! | `plane-wave-x` | (0,2π)²         | `exp(ikx)`                |
//! | `lshape-bessel`| (-1,1)² \ [0,1]×[-1,0] | `J_{1/2}(kr)`      |
//! | `piecewise-k`  | (0,2π)²         | none                      |

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::dg::ExactSolution;
use crate::mesh::{lshape, rectangle, unit_square, Mesh, MeshError, Point};
use crate::problem::{ProblemSpec, Wavenumber};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, PartialEq)]
pub enum BenchmarkError {
    #[error(
        "unknown benchmark `{0}`; expected plane-wave, plane-wave-x, lshape-bessel or piecewise-k"
    )]
    UnknownName(String),
    #[error("unknown boundary variant `{0}`; expected g1 or g2")]
    UnknownVariant(String),
    #[error("wavenumber must be positive, got {0}")]
    NonpositiveWavenumber(f64),
    #[error("the Bessel solution is singular at the origin")]
    EvaluationAtOrigin,
}

/// `exp(ik d·x)` for a unit direction `d`.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave {
    pub k: f64,
    pub direction: [f64; 2],
}

impl ExactSolution for PlaneWave {
    fn value(&self, x: Point) -> C64 {
        (I * (self.k * (self.direction[0] * x[0] + self.direction[1] * x[1]))).exp()
    }

    fn gradient(&self, x: Point) -> [C64; 2] {
        let u = self.value(x) * I * self.k;
        [u * self.direction[0], u * self.direction[1]]
    }

    fn laplacian(&self, x: Point) -> C64 {
        let d2 = self.direction[0].powi(2) + self.direction[1].powi(2);
        -self.value(x) * (self.k * self.k * d2)
    }
}

/// `J_{1/2}(kr) = sqrt(2 / (π k r)) sin(kr)`.
#[derive(Debug, Clone, Copy)]
pub struct BesselHalf {
    pub k: f64,
}

impl BesselHalf {
    fn j(z: f64) -> f64 {
        (2.0 / (PI * z)).sqrt() * z.sin()
    }

    fn dj(z: f64) -> f64 {
        (2.0 / PI).sqrt() * (z.cos() / z.sqrt() - 0.5 * z.sin() / z.powf(1.5))
    }

    /// Value with an explicit error at the singular point.
    pub fn value_checked(&self, x: Point) -> Result<C64, BenchmarkError> {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return Err(BenchmarkError::EvaluationAtOrigin);
        }
        Ok(C64::new(Self::j(self.k * r), 0.0))
    }
}

impl ExactSolution for BesselHalf {
    fn value(&self, x: Point) -> C64 {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::new(Self::j(self.k * r), 0.0)
    }

    fn gradient(&self, x: Point) -> [C64; 2] {
        let r = x[0].hypot(x[1]);
        let s = self.k * Self::dj(self.k * r) / r;
        [C64::new(s * x[0], 0.0), C64::new(s * x[1], 0.0)]
    }

    fn laplacian(&self, x: Point) -> C64 {
        let r = x[0].hypot(x[1]);
        let u = Self::j(self.k * r);
        C64::new(-self.k * self.k * u + u / (4.0 * r * r), 0.0)
    }
}

/// `a x + b y + c`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub a: C64,
    pub b: C64,
    pub c: C64,
}

impl ExactSolution for Affine {
    fn value(&self, x: Point) -> C64 {
        self.a * x[0] + self.b * x[1] + self.c
    }

    fn gradient(&self, _x: Point) -> [C64; 2] {
        [self.a, self.b]
    }

    fn laplacian(&self, _x: Point) -> C64 {
        C64::new(0.0, 0.0)
    }
}

/// Problem whose data is induced by `exact`: `f = -Δu - k²u`, `g = ∂_n u + iku`.
pub fn manufactured_problem(name: &str, k: f64, exact: Arc<dyn ExactSolution>) -> ProblemSpec {
    let ef = exact.clone();
    let eg = exact;
    ProblemSpec::new(
        name,
        Wavenumber::Constant(k),
        move |x| -ef.laplacian(x) - ef.value(x) * (k * k),
        move |x, n| {
            let g = eg.gradient(x);
            g[0] * n[0] + g[1] * n[1] + I * k * eg.value(x)
        },
    )
}

/// Boundary side of the square `(0, 2π)²` selected by the outward normal.
fn is_left(n: [f64; 2]) -> bool {
    n[0] < -0.5
}

fn is_right(n: [f64; 2]) -> bool {
    n[0] > 0.5
}

/// Datum of the `plane-wave-x` problem: `0` on the left edge, `2ik` on the
/// right edge, `ik exp(ikx)` on the top and bottom. It is the Robin trace of
/// `exp(ikx)` when `k` is an integer.
fn plane_wave_x_datum(k: f64) -> impl Fn(Point, [f64; 2]) -> C64 + Send + Sync + 'static {
    move |x, n| {
        if is_left(n) {
            C64::new(0.0, 0.0)
        } else if is_right(n) {
            2.0 * I * k
        } else {
            I * k * (I * k * x[0]).exp()
        }
    }
}

/// A problem together with its exact solution when known.
#[derive(Clone)]
pub struct Benchmark {
    pub name: BenchmarkName,
    pub problem: ProblemSpec,
    pub exact: Option<Arc<dyn ExactSolution>>,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("problem", &self.problem)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl Benchmark {
    pub fn initial_mesh(&self, resolution: usize) -> Result<Mesh, MeshError> {
        self.name.initial_mesh(resolution)
    }
}

fn check_k(k: f64) -> Result<(), BenchmarkError> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(BenchmarkError::NonpositiveWavenumber(k))
    }
}

/// Plane wave `exp(ik(x+y))` on the unit square.
pub fn example1(k: f64) -> Result<Benchmark, BenchmarkError> {
    check_k(k)?;
    let exact: Arc<dyn ExactSolution> = Arc::new(PlaneWave {
        k,
        direction: [1.0, 1.0],
    });
    Ok(Benchmark {
        name: BenchmarkName::PlaneWave,
        problem: manufactured_problem("plane-wave", k, exact.clone()),
        exact: Some(exact),
    })
}

/// Plane wave `exp(ikx)` on `(0, 2π)²` with the piecewise boundary datum above.
pub fn example2(k: f64) -> Result<Benchmark, BenchmarkError> {
    check_k(k)?;
    let exact: Arc<dyn ExactSolution> = Arc::new(PlaneWave {
        k,
        direction: [1.0, 0.0],
    });
    Ok(Benchmark {
        name: BenchmarkName::PlaneWaveX,
        problem: ProblemSpec::new(
            "plane-wave-x",
            Wavenumber::Constant(k),
            |_| C64::new(0.0, 0.0),
            plane_wave_x_datum(k),
        ),
        exact: Some(exact),
    })
}

/// `J_{1/2}(kr)` on the L-shape with the reentrant corner at the origin.
pub fn example3(k: f64) -> Result<Benchmark, BenchmarkError> {
    check_k(k)?;
    let exact: Arc<dyn ExactSolution> = Arc::new(BesselHalf { k });
    Ok(Benchmark {
        name: BenchmarkName::LshapeBessel,
        problem: manufactured_problem("lshape-bessel", k, exact.clone()),
        exact: Some(exact),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    G1,
    G2,
}

impl FromStr for Variant {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "g1" => Ok(Variant::G1),
            "g2" => Ok(Variant::G2),
            _ => Err(BenchmarkError::UnknownVariant(s.to_string())),
        }
    }
}

pub const DISC_CENTER: Point = [PI, PI];
pub const DISC_RADIUS: f64 = 1.5;

pub fn in_disc(x: Point) -> bool {
    (x[0] - DISC_CENTER[0]).hypot(x[1] - DISC_CENTER[1]) <= DISC_RADIUS
}

/// `k1` in the central disc, `k2` elsewhere on `(0, 2π)²`, `f = 0`.
pub fn example4(variant: Variant, k1: f64, k2: f64) -> Result<Benchmark, BenchmarkError> {
    check_k(k1)?;
    check_k(k2)?;
    let wavenumber = Wavenumber::Field(Arc::new(move |x| if in_disc(x) { k1 } else { k2 }));
    let zero = |_| C64::new(0.0, 0.0);
    let problem = match variant {
        Variant::G1 => ProblemSpec::new("piecewise-k", wavenumber, zero, |_, n| {
            if is_left(n) {
                C64::new(-1.0, 0.0)
            } else if is_right(n) {
                I
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        Variant::G2 => ProblemSpec::new("piecewise-k", wavenumber, zero, plane_wave_x_datum(k2)),
    };
    Ok(Benchmark {
        name: BenchmarkName::PiecewiseK,
        problem,
        exact: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkName {
    PlaneWave,
    PlaneWaveX,
    LshapeBessel,
    PiecewiseK,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 4] = [
        BenchmarkName::PlaneWave,
        BenchmarkName::PlaneWaveX,
        BenchmarkName::LshapeBessel,
        BenchmarkName::PiecewiseK,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkName::PlaneWave => "plane-wave",
            BenchmarkName::PlaneWaveX => "plane-wave-x",
            BenchmarkName::LshapeBessel => "lshape-bessel",
            BenchmarkName::PiecewiseK => "piecewise-k",
        }
    }

    /// Structured initial mesh; `resolution` cells per unit of the generator.
    pub fn initial_mesh(self, resolution: usize) -> Result<Mesh, MeshError> {
        match self {
            BenchmarkName::PlaneWave => unit_square(resolution),
            BenchmarkName::PlaneWaveX | BenchmarkName::PiecewiseK => {
                rectangle(0.0, TAU, 0.0, TAU, resolution)
            }
            BenchmarkName::LshapeBessel => lshape(resolution),
        }
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkName {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| BenchmarkError::UnknownName(s.to_string()))
    }
}

/// Parameters selecting a registered benchmark.
#[derive(Debug, Clone, Copy)]
pub struct BenchmarkParams {
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
    pub variant: Variant,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            k: 5.0,
            k1: 10.0,
            k2: 1.0,
            variant: Variant::G1,
        }
    }
}

pub fn lookup(name: BenchmarkName, params: &BenchmarkParams) -> Result<Benchmark, BenchmarkError> {
    match name {
        BenchmarkName::PlaneWave => example1(params.k),
        BenchmarkName::PlaneWaveX => example2(params.k),
        BenchmarkName::LshapeBessel => example3(params.k),
        BenchmarkName::PiecewiseK => example4(params.variant, params.k1, params.k2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn plane_wave_source_at_origin() {
        let b = example1(5.0).unwrap();
        assert!(close(b.problem.f([0.0, 0.0]), C64::new(25.0, 0.0), 1e-14));
        let u = b.exact.unwrap();
        for x in [[0.3, 0.7], [0.9, 0.1]] {
            assert!((u.value(x).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_x_boundary_branches() {
        let k = 5.0;
        let b = example2(k).unwrap();
        assert_eq!(b.problem.g([TAU, 1.0], [1.0, 0.0]), 2.0 * I * k);
        assert_eq!(b.problem.g([0.0, 1.0], [-1.0, 0.0]), C64::new(0.0, 0.0));
        // On the bottom edge ∂_y u = 0, so the Robin trace is iku.
        let x = [1.3, 0.0];
        let u = b.exact.unwrap();
        let grad = u.gradient(x);
        let trace = -grad[1] + I * k * u.value(x);
        assert!(close(b.problem.g(x, [0.0, -1.0]), trace, 1e-14));
        // For integer k the datum is the exact Robin trace on every side.
        for (x, n) in [([TAU, 2.0], [1.0, 0.0]), ([0.0, 2.0], [-1.0, 0.0])] {
            let g = u.gradient(x);
            let trace = g[0] * n[0] + g[1] * n[1] + I * k * u.value(x);
            assert!(close(b.problem.g(x, n), trace, 1e-13));
        }
    }

    #[test]
    fn bessel_values() {
        let u = BesselHalf { k: 1.0 };
        assert!(u.value([PI, 0.0]).norm() < 1e-16);
        assert_eq!(
            u.value_checked([0.0, 0.0]),
            Err(BenchmarkError::EvaluationAtOrigin)
        );
    }

    #[test]
    fn bessel_source_closed_form() {
        let k = 10.0;
        let b = example3(k).unwrap();
        let r: f64 = 1e-3;
        let x = [r / 2f64.sqrt(), r / 2f64.sqrt()];
        let j = (2.0 / (PI * k * r)).sqrt() * (k * r).sin();
        let expect = -j / (4.0 * r * r);
        let f = b.problem.f(x);
        assert!((f.re - expect).abs() <= 1e-9 * expect.abs());
        assert!(f.im.abs() < 1e-9);
        // f ~ r^{-3/2}: halving r multiplies |f| by about 2^{3/2}.
        let f2 = b.problem.f([x[0] / 2.0, x[1] / 2.0]).norm();
        assert!((f2 / f.norm() - 2f64.powf(1.5)).abs() < 1e-3);
    }

    #[test]
    fn bessel_derivatives_match_differences() {
        let u = BesselHalf { k: 7.0 };
        let h = 1e-5;
        for x in [[0.3, 0.4], [-0.5, 0.2], [0.1, 0.9]] {
            let g = u.gradient(x);
            let dx = (u.value([x[0] + h, x[1]]) - u.value([x[0] - h, x[1]])) / (2.0 * h);
            let dy = (u.value([x[0], x[1] + h]) - u.value([x[0], x[1] - h])) / (2.0 * h);
            assert!(close(g[0], dx, 1e-7) && close(g[1], dy, 1e-7));
            let lap = (u.value([x[0] + h, x[1]])
                + u.value([x[0] - h, x[1]])
                + u.value([x[0], x[1] + h])
                + u.value([x[0], x[1] - h])
                - 4.0 * u.value(x))
                / (h * h);
            assert!((u.laplacian(x) - lap).norm() < 1e-3 * (1.0 + lap.norm()));
        }
    }

    #[test]
    fn piecewise_wavenumber_and_datum() {
        let b = example4(Variant::G1, 10.0, 1.0).unwrap();
        assert_eq!(b.problem.k([PI, PI]), 10.0);
        assert_eq!(b.problem.k([0.1, 0.1]), 1.0);
        assert_eq!(b.problem.g([0.0, 1.0], [-1.0, 0.0]), C64::new(-1.0, 0.0));
        assert_eq!(b.problem.g([TAU, 1.0], [1.0, 0.0]), I);
        assert_eq!(b.problem.g([1.0, 0.0], [0.0, -1.0]), C64::new(0.0, 0.0));
        let b = example4(Variant::G2, 1.0, 10.0).unwrap();
        assert_eq!(b.problem.g([TAU, 1.0], [1.0, 0.0]), 20.0 * I);
    }

    #[test]
    fn registry_round_trip() {
        for name in BenchmarkName::ALL {
            assert_eq!(name.as_str().parse::<BenchmarkName>().unwrap(), name);
            assert!(name.initial_mesh(2).is_ok());
        }
        assert!("nope".parse::<BenchmarkName>().is_err());
        assert!(example1(0.0).is_err());
    }
}
