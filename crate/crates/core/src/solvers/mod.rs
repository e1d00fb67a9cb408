//! ℓ1 and ℓ2 feasibility solves of an assembled KKT system.

pub mod lp;
pub mod lsq;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::kkt::KktSystem;
use lp::{lp_core, LpError, LpOptions};
use lsq::{bounded_least_squares, LsqOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    /// One value per KKT column, `lambda` first.
    pub multipliers: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// `min ||b - A z||_1` as an LP with split residuals `b - A z = s+ - s-`.
pub fn solve_l1(sys: &KktSystem) -> SolveOutcome {
    let (m, n) = (sys.nrows(), sys.ncols());
    let a = DMatrix::from_fn(m, n + 2 * m, |r, c| {
        if c < n {
            sys.a[(r, c)]
        } else if c == n + r {
            1.0
        } else if c == n + m + r {
            -1.0
        } else {
            0.0
        }
    });
    let mut cost = vec![0.0; n + 2 * m];
    for v in cost.iter_mut().skip(n) {
        *v = 1.0;
    }
    let mut free = vec![false; n + 2 * m];
    for (j, nonneg) in sys.nonneg_mask().into_iter().enumerate() {
        free[j] = !nonneg;
    }
    match lp_core(&cost, &a, &sys.b, &free, &LpOptions::default()) {
        Ok(sol) => {
            let multipliers = sol.x[..n].to_vec();
            let residual_norm = sys.residual(&multipliers).iter().map(|v| v.abs()).sum::<f64>();
            SolveOutcome {
                multipliers,
                residual_norm,
                iterations: sol.iterations,
                status: SolveStatus::Optimal,
            }
        }
        Err(e) => {
            let status = match e {
                LpError::IterationLimit(_) => SolveStatus::IterationLimit,
                // the split residual always makes the LP feasible and bounded
                _ => SolveStatus::NumericalFailure,
            };
            let iterations = if let LpError::IterationLimit(k) = e { k } else { 0 };
            let zeros = vec![0.0; n];
            let residual_norm = sys.residual(&zeros).iter().map(|v| v.abs()).sum();
            SolveOutcome { multipliers: zeros, residual_norm, iterations, status }
        }
    }
}

/// `min ||b - A z||_2` with `z_j >= 0` on minor columns.
pub fn solve_l2(sys: &KktSystem) -> SolveOutcome {
    let sol = bounded_least_squares(&sys.a, &sys.b, &sys.nonneg_mask(), &LsqOptions::default());
    let status = if !sol.converged {
        SolveStatus::IterationLimit
    } else if !sol.residual_norm.is_finite() {
        SolveStatus::NumericalFailure
    } else {
        SolveStatus::Optimal
    };
    SolveOutcome { multipliers: sol.x, residual_norm: sol.residual_norm, iterations: sol.iterations, status }
}
