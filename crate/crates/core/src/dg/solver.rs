use faer::prelude::*;
use faer::{Col, Mat};

use super::{DgError, DgSolution, DgSystem};
use crate::C64;

/// Systems smaller than this are factored densely.
const DENSE_LIMIT: usize = 400;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 2;

/// Solves the assembled system by LU with a couple of steps of iterative
/// refinement, and rejects results whose relative residual is too large.
pub fn solve<'a>(system: &DgSystem<'a>) -> Result<DgSolution<'a>, DgError> {
    let n = system.num_dofs();
    let b = Col::<C64>::from_fn(n, |i| system.rhs[i]);
    let bnorm = system.rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();

    let factor: Box<dyn Fn(&Col<C64>) -> Col<C64>> = if n < DENSE_LIMIT {
        let mut dense = Mat::<C64>::zeros(n, n);
        let m = system.matrix.as_ref();
        for j in 0..n {
            for (i, v) in m.row_idx_of_col(j).zip(m.val_of_col(j)) {
                dense[(i, j)] = *v;
            }
        }
        let lu = dense.partial_piv_lu();
        Box::new(move |r| lu.solve(r))
    } else {
        let lu = system.matrix.sp_lu().map_err(|_| DgError::SingularSystem)?;
        Box::new(move |r| lu.solve(r))
    };

    let mut x: Vec<C64> = to_vec(&factor(&b));
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(DgError::SingularSystem);
    }
    let mut rel = relative_residual(system, &x, bnorm);
    for _ in 0..REFINEMENT_STEPS {
        if rel <= RESIDUAL_TOLERANCE * 1e-3 {
            break;
        }
        let ax = system.matvec(&x);
        let r = Col::<C64>::from_fn(n, |i| system.rhs[i] - ax[i]);
        let dx = factor(&r);
        let candidate: Vec<C64> = x.iter().enumerate().map(|(i, v)| v + dx[i]).collect();
        let cand_rel = relative_residual(system, &candidate, bnorm);
        if cand_rel < rel {
            x = candidate;
            rel = cand_rel;
        } else {
            break;
        }
    }
    log::debug!("solved {n} dofs, relative residual {rel:e}");
    if !(rel <= RESIDUAL_TOLERANCE) {
        return Err(DgError::ResidualTooLarge(rel));
    }
    let mut sol = DgSolution::from_coefficients(system.mesh, system.degrees, system.problem, x);
    sol.orientation = system.orientation;
    Ok(sol)
}

fn to_vec(c: &Col<C64>) -> Vec<C64> {
    (0..c.nrows()).map(|i| c[i]).collect()
}

/// `‖Ax - b‖ / ‖b‖`, or `‖Ax‖` when `b = 0`.
pub fn relative_residual(system: &DgSystem, x: &[C64], bnorm: f64) -> f64 {
    let ax = system.matvec(x);
    let r = ax
        .iter()
        .zip(&system.rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if bnorm > 0.0 {
        r / bnorm
    } else {
        r
    }
}
