//! Least squares with sign constraints on a subset of the variables
//! (Lawson–Hanson active set, extended with always-passive free variables).

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsqOptions {
    /// A bound variable is optimal once its gradient component is below
    /// `kkt_tol * ||A_j|| * ||r||`.
    pub kkt_tol: f64,
    /// Active-set changes allowed per variable.
    pub iterations_per_variable: usize,
}

impl Default for LsqOptions {
    fn default() -> Self {
        LsqOptions { kkt_tol: 1e-8, iterations_per_variable: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsqSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Unconstrained least squares on the columns in `passive`.
fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> Option<Vec<f64>> {
    if passive.is_empty() {
        return Some(Vec::new());
    }
    let sub = a.select_columns(passive);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = smax * 1e-12;
    let z = svd.solve(b, eps).ok()?;
    if z.iter().all(|v| v.is_finite()) { Some(z.iter().copied().collect()) } else { None }
}

/// Minimizes `||b - A x||_2` subject to `x_j >= 0` wherever `nonneg[j]`.
pub fn bounded_least_squares(a: &DMatrix<f64>, b: &[f64], nonneg: &[bool], opts: &LsqOptions) -> LsqSolution {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "rhs length");
    assert_eq!(nonneg.len(), n, "mask length");
    let bv = DVector::from_column_slice(b);
    let col_norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    // columns this small relative to the largest are rounding residue
    let negligible = 1e-12 * col_norms.iter().cloned().fold(0.0, f64::max);
    let limit = opts.iterations_per_variable * n.max(1);

    let mut x = vec![0.0; n];
    let mut passive: Vec<usize> = (0..n).filter(|&j| !nonneg[j]).collect();
    let mut blocked = vec![false; n];
    let mut iterations = 0usize;
    let mut converged = true;

    if !passive.is_empty() {
        iterations += 1;
        if let Some(z) = solve_passive(a, &bv, &passive) {
            for (k, &j) in passive.iter().enumerate() {
                x[j] = z[k];
            }
        }
    }

    let mut previous = f64::INFINITY;
    'outer: loop {
        let r = &bv - a * DVector::from_column_slice(&x);
        let rnorm = r.norm();
        // every exact outer step lowers the residual; no decrease means the
        // rounding floor has been reached
        if rnorm <= 1e-15 * (1.0 + bv.norm()) || rnorm >= previous * (1.0 - 1e-12) {
            break;
        }
        previous = rnorm;
        let w = a.transpose() * &r;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..n {
            if !nonneg[j] || blocked[j] || passive.contains(&j) || col_norms[j] <= negligible {
                continue;
            }
            if w[j] > opts.kkt_tol * col_norms[j] * rnorm && entering.is_none_or(|(_, s)| w[j] > s) {
                entering = Some((j, w[j]));
            }
        }
        let Some((t, _)) = entering else { break };
        passive.push(t);
        passive.sort_unstable();

        let mut first = true;
        loop {
            if iterations >= limit {
                converged = false;
                break 'outer;
            }
            iterations += 1;
            let Some(z) = solve_passive(a, &bv, &passive) else {
                converged = false;
                break 'outer;
            };
            let infeasible: Vec<usize> =
                (0..passive.len()).filter(|&k| nonneg[passive[k]] && z[k] <= 0.0).collect();
            if infeasible.is_empty() {
                for (k, &j) in passive.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            if first && infeasible.iter().any(|&k| passive[k] == t) && infeasible.len() == 1 {
                // the new column cannot move off its bound; never try it again
                blocked[t] = true;
                passive.retain(|&j| j != t);
                previous = f64::INFINITY;
                break;
            }
            first = false;
            let mut alpha = 1.0f64;
            for &k in &infeasible {
                let j = passive[k];
                let denom = x[j] - z[k];
                if denom > 0.0 {
                    alpha = alpha.min(x[j] / denom);
                }
            }
            for (k, &j) in passive.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
            }
            passive.retain(|&j| !(nonneg[j] && x[j] <= 1e-15 * (1.0 + x[j].abs())));
            for j in 0..n {
                if nonneg[j] && !passive.contains(&j) {
                    x[j] = 0.0;
                }
            }
        }
        for j in 0..n {
            if blocked[j] && w[j] <= 0.0 {
                blocked[j] = false;
            }
        }
    }

    let r = &bv - a * DVector::from_column_slice(&x);
    LsqSolution { x, residual_norm: r.norm(), iterations, converged }
}
