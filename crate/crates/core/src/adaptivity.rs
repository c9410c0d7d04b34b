//! Dörfler marking and the solve / estimate / mark / refine loop.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::dg::{assemble, solvability_check, solve, DgError, DgSolution, ExactSolution};
use crate::estimator::{estimate, EstimatorReport};
use crate::mesh::{refine, refine_uniform, DegreeMap, Mesh, MeshError};
use crate::norms::error_ht;
use crate::problem::ProblemSpec;

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("marking threshold {0} is outside (0, 1]")]
    ThetaOutOfRange(f64),
    #[error("estimator value {value} of element {element} is negative or not finite")]
    InvalidEstimator { element: usize, value: f64 },
    #[error(transparent)]
    Dg(#[from] DgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("step output failed: {0}")]
    Output(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marking {
    pub elements: Vec<usize>,
    /// Every estimator vanished; nothing was marked.
    pub all_zero: bool,
}

/// Smallest set of elements whose squared estimators carry a `theta`
/// fraction of the total: the shortest prefix of the values sorted in
/// decreasing order, ties by index. `theta = 1` marks every nonzero value.
pub fn doerfler_mark(squared: &[f64], theta: f64) -> Result<Marking, AdaptError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(AdaptError::ThetaOutOfRange(theta));
    }
    if let Some((element, &value)) = squared
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
    {
        return Err(AdaptError::InvalidEstimator { element, value });
    }
    let mut order: Vec<usize> = (0..squared.len()).collect();
    order.sort_by(|&a, &b| squared[b].total_cmp(&squared[a]).then(a.cmp(&b)));
    // Summing in the same order as the prefix keeps θ = 1 exact.
    let total: f64 = order.iter().map(|&i| squared[i]).sum();
    if total == 0.0 {
        return Ok(Marking {
            elements: Vec::new(),
            all_zero: true,
        });
    }
    if theta == 1.0 {
        // Tiny values may not change a rounded sum, but they still carry mass.
        let elements = order.into_iter().filter(|&i| squared[i] > 0.0).collect();
        return Ok(Marking {
            elements,
            all_zero: false,
        });
    }
    let goal = theta * total;
    let mut mass = 0.0;
    let mut elements = Vec::new();
    for &i in &order {
        if mass >= goal || squared[i] == 0.0 {
            break;
        }
        mass += squared[i];
        elements.push(i);
    }
    Ok(Marking {
        elements,
        all_zero: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineMode {
    Uniform,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub max_steps: usize,
    pub max_dofs: Option<usize>,
    pub target_eta: Option<f64>,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            max_steps: 10,
            max_dofs: None,
            target_eta: None,
        }
    }
}

#[derive(Clone)]
pub struct AdaptOptions {
    pub theta: f64,
    pub mode: RefineMode,
    pub stop: StopCriteria,
    pub exact: Option<Arc<dyn ExactSolution>>,
    /// Record wall time per step; off gives byte-identical histories.
    pub timing: bool,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        Self {
            theta: 0.7,
            mode: RefineMode::Adaptive,
            stop: StopCriteria::default(),
            exact: None,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub nelems: usize,
    pub ndofs: usize,
    pub hmax: f64,
    pub hmin: f64,
    pub rho: f64,
    pub mkhp: f64,
    pub eta_check: f64,
    pub eta: f64,
    pub osc: f64,
    /// `‖u - u_T‖_{H;T}` (absolute); empty without an exact solution.
    pub err_ht: Option<f64>,
    pub solvable: bool,
    pub seconds: f64,
    /// Relative error; not part of the CSV.
    #[serde(skip)]
    pub err_rel: Option<f64>,
    #[serde(skip)]
    pub solvability: f64,
}

pub const HISTORY_HEADER: &str =
    "step,nelems,ndofs,hmax,hmin,rho,mkhp,eta_check,eta,osc,err_ht,solvable,seconds";

#[derive(Debug, Clone, Default)]
pub struct RefinementHistory {
    pub steps: Vec<StepRecord>,
}

impl RefinementHistory {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.steps {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.steps.last()
    }
}

/// Everything produced by one pass through the loop, handed to the observer.
pub struct StepView<'a> {
    pub record: &'a StepRecord,
    pub mesh: &'a Mesh,
    pub degrees: &'a DegreeMap,
    pub solution: &'a DgSolution<'a>,
    pub report: &'a EstimatorReport,
}

/// Runs the loop from `mesh`, `degrees` and returns the history together
/// with the final mesh and degrees.
pub fn adapt(
    problem: &ProblemSpec,
    mesh: Mesh,
    degrees: DegreeMap,
    options: &AdaptOptions,
    mut observer: impl FnMut(&StepView) -> std::io::Result<()>,
) -> Result<(RefinementHistory, Mesh, DegreeMap), AdaptError> {
    if !(options.theta > 0.0 && options.theta <= 1.0) {
        return Err(AdaptError::ThetaOutOfRange(options.theta));
    }
    let mut history = RefinementHistory::default();
    let mut mesh = mesh;
    let mut degrees = degrees;
    let mut best = f64::INFINITY;
    let mut stalled = 0usize;
    for step in 0.. {
        let start = Instant::now();
        let solv = solvability_check(&mesh, &degrees, problem);
        if !solv.guaranteed {
            log::warn!(
                "step {step}: sup δkh/p = {:.3} >= 1/2, unique solvability not guaranteed",
                solv.value
            );
        }
        let system = assemble(&mesh, &degrees, problem)?;
        let solution = solve(&system)?;
        drop(system);
        let report = estimate(&solution)?;
        let err = match &options.exact {
            Some(u) => Some(error_ht(&solution, u.as_ref())?),
            None => None,
        };
        let seconds = if options.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let record = StepRecord {
            step,
            nelems: mesh.num_triangles(),
            ndofs: degrees.num_dofs(),
            hmax: mesh.h_max(),
            hmin: mesh.h_min(),
            rho: mesh.shape_regularity(),
            mkhp: report.mkhp,
            eta_check: report.eta_check,
            eta: report.eta,
            osc: report.osc,
            err_ht: err.map(|e| e.absolute),
            solvable: solv.guaranteed,
            seconds,
            err_rel: err.map(|e| e.relative),
            solvability: solv.value,
        };
        log::info!(
            "step {step}: {} elements, {} dofs, eta_check {:.4e}",
            record.nelems,
            record.ndofs,
            record.eta_check
        );
        observer(&StepView {
            record: &record,
            mesh: &mesh,
            degrees: &degrees,
            solution: &solution,
            report: &report,
        })?;
        history.steps.push(record);

        if report.eta_check < best {
            best = report.eta_check;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 5 {
                log::warn!("estimator has not decreased for {stalled} steps");
            }
        }

        let stop = &options.stop;
        if step >= stop.max_steps
            || stop.target_eta.is_some_and(|t| report.eta_check <= t)
            || stop.max_dofs.is_some_and(|m| degrees.num_dofs() >= m)
        {
            break;
        }
        let refined = match options.mode {
            RefineMode::Uniform => refine_uniform(&mesh, &degrees)?,
            RefineMode::Adaptive => {
                let marking = doerfler_mark(&report.eta_check_squared(), options.theta)?;
                if marking.all_zero {
                    log::info!("all estimators vanish; stopping");
                    break;
                }
                refine(&mesh, &degrees, &marking.elements)?
            }
        };
        if stop
            .max_dofs
            .is_some_and(|m| refined.degrees.num_dofs() > m)
        {
            break;
        }
        mesh = refined.mesh;
        degrees = refined.degrees;
    }
    Ok((history, mesh, degrees))
}
