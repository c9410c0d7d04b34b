//! Adaptive hp-discontinuous Galerkin solver for the Helmholtz equation
//! `-Δu - k²u = f` with the Robin condition `∂_n u + iku = g`.
//!
//! The pipeline is [`assemble`] → [`solve`] → [`estimate`] → [`doerfler_mark`]
//! → [`refine`], driven end to end by [`adapt`].

pub mod adaptivity;
pub mod basis;
pub mod benchmarks;
pub mod dg;
pub mod estimator;
pub mod mesh;
pub mod norms;
pub mod problem;
pub mod quadrature;
pub mod verify;

pub type C64 = num_complex::Complex64;

pub use adaptivity::{
    adapt, doerfler_mark, AdaptError, AdaptOptions, Marking, RefineMode, RefinementHistory,
    StepRecord, StepView, StopCriteria, HISTORY_HEADER,
};
pub use benchmarks::{Benchmark, BenchmarkName, BenchmarkParams, Variant};
pub use dg::{
    assemble, consistency_residual, solvability_check, solve, DgError, DgSolution, DgSystem,
    ElementField, ExactSolution, JumpOrientation, Solvability,
};
pub use estimator::{estimate, ElementEstimate, EstimatorReport};
pub use mesh::{refine, refine_uniform, DegreeMap, Mesh, MeshError, Point};
pub use norms::{error_ht, ErrorHt, NormError};
pub use problem::{Penalty, ProblemSpec, Wavenumber};
