//! Brute-force references for testing: cofactor-expansion determinants,
//! finite-difference gradients, LP vertex enumeration and a multistart local
//! minimizer that labels candidate points as local or global.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::polynomial::Polynomial;
use crate::problem_io::{PopProblem, SourceForm};

pub const DEFAULT_SEED: u64 = 42;
const LAPLACE_CAP: usize = 8;
const BASIN_RADIUS: f64 = 1e-3;
const FEASIBILITY: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("cofactor expansion is capped at {LAPLACE_CAP}x{LAPLACE_CAP}, got {0}x{0}")]
    SizeCap(usize),
    #[error("multistart search supports at most 3 variables, problem has {0}")]
    TooManyVariables(usize),
    #[error("no start converged to a feasible point after {0} attempts")]
    NoFeasibleStart(usize),
}

/// Determinant by recursive cofactor expansion along the first row.
pub fn laplace_det(a: &DMatrix<f64>) -> Result<f64, OracleError> {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let n = a.nrows();
    if n > LAPLACE_CAP {
        return Err(OracleError::SizeCap(n));
    }
    fn expand(a: &DMatrix<f64>) -> f64 {
        let n = a.nrows();
        if n == 0 {
            return 1.0;
        }
        if n == 1 {
            return a[(0, 0)];
        }
        let mut acc = 0.0;
        for j in 0..n {
            let minor = DMatrix::from_fn(n - 1, n - 1, |r, c| a[(r + 1, if c < j { c } else { c + 1 })]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * a[(0, j)] * expand(&minor);
        }
        acc
    }
    Ok(expand(a))
}

/// Central differences with per-coordinate step `step * (1 + |x_k|)`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            let h = step * (1.0 + x[k].abs());
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Optimal value of `min c'x, A x = b, x >= 0 except on free columns` by
/// trying every basis. `None` when no basic feasible solution exists. The
/// LP must be bounded and `A` must have full row rank.
pub fn lp_vertex_min(c: &[f64], a: &DMatrix<f64>, b: &[f64], free_mask: &[bool]) -> Option<f64> {
    let (m, n) = a.shape();
    let mut cols: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        cols.push((j, 1.0));
        if free_mask[j] {
            cols.push((j, -1.0));
        }
    }
    let rhs = DVector::from_column_slice(b);
    let mut best: Option<f64> = None;
    for subset in combinations(cols.len(), m) {
        let basis = DMatrix::from_fn(m, m, |r, k| {
            let (j, s) = cols[subset[k]];
            s * a[(r, j)]
        });
        if basis.determinant().abs() < 1e-10 {
            continue;
        }
        let Some(xb) = basis.lu().solve(&rhs) else { continue };
        if xb.iter().any(|v| *v < -1e-9) {
            continue;
        }
        let value: f64 = subset.iter().zip(xb.iter()).map(|(&k, v)| {
            let (j, s) = cols[k];
            s * c[j] * v
        }).sum();
        if best.is_none_or(|b| value < b) {
            best = Some(value);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct Basin {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeOutcome {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Distinct local minima, sorted by value.
    pub basins: Vec<Basin>,
}

/// Per-variable sampling interval. Constraints of the form
/// `c - sum a_k x_k^2 >= 0` with `a_k > 0` bound `|x_k| <= sqrt(c / a_k)`;
/// anything else falls back to `[-10, 10]`.
pub fn sampling_box(problem: &PopProblem) -> Vec<(f64, f64)> {
    let n = problem.nvars();
    let mut bound = vec![10.0f64; n];
    for g in &problem.constraints {
        let mut constant = 0.0;
        let mut squares = Vec::new();
        let mut ok = true;
        for (alpha, coef) in g.terms() {
            if alpha.is_zero() {
                constant = coef;
            } else if alpha.degree() == 2 && alpha.exponents().iter().filter(|e| **e > 0).count() == 1 && coef < 0.0 {
                squares.push((alpha.first_nonzero().unwrap(), -coef));
            } else {
                ok = false;
            }
        }
        if ok && constant > 0.0 {
            for (k, a) in squares {
                bound[k] = bound[k].min((constant / a).sqrt());
            }
        }
    }
    bound.into_iter().map(|b| (-b, b)).collect()
}

struct Lagrangian<'a> {
    objective: &'a Polynomial,
    constraints: &'a [Polynomial],
    objective_grad: Vec<Polynomial>,
    constraint_grads: Vec<Vec<Polynomial>>,
    /// Genuine inequalities, as opposed to halves of an equality.
    inequality: Vec<bool>,
}

/// Interior margin the feasibility phase aims for on genuine inequalities.
const INTERIOR: f64 = 1e-4;

impl<'a> Lagrangian<'a> {
    fn new(problem: &'a PopProblem) -> Self {
        let n = problem.nvars();
        Lagrangian {
            objective: &problem.objective,
            constraints: &problem.constraints,
            objective_grad: (0..n).map(|k| problem.objective.derivative(k)).collect(),
            constraint_grads: problem.constraints.iter().map(|g| (0..n).map(|k| g.derivative(k)).collect()).collect(),
            inequality: problem
                .provenance
                .iter()
                .map(|p| !matches!(p.form, SourceForm::EqualityHalf { .. }))
                .collect(),
        }
    }

    fn add_grad(&self, i: usize, x: &[f64], w: f64, grad: &mut [f64]) {
        for (k, dg) in self.constraint_grads[i].iter().enumerate() {
            grad[k] += w * dg.evaluate(x);
        }
    }

    /// Objective plus a log barrier of weight `barrier` on the constraints in
    /// `interior` and augmented-Lagrangian terms on the rest. Infinite
    /// outside the barrier's domain.
    fn eval(&self, x: &[f64], interior: &[bool], barrier: f64, mu: &[f64], rho: f64) -> (f64, Vec<f64>) {
        let mut value = self.objective.evaluate(x);
        let mut grad: Vec<f64> = self.objective_grad.iter().map(|p| p.evaluate(x)).collect();
        for (i, g) in self.constraints.iter().enumerate() {
            let v = g.evaluate(x);
            if interior[i] {
                if v <= 0.0 {
                    return (f64::INFINITY, grad);
                }
                value -= barrier * v.ln();
                self.add_grad(i, x, -barrier / v, &mut grad);
            } else {
                let shifted = (mu[i] - rho * v).max(0.0);
                value += (shifted * shifted - mu[i] * mu[i]) / (2.0 * rho);
                if shifted > 0.0 {
                    self.add_grad(i, x, -shifted, &mut grad);
                }
            }
        }
        (value, grad)
    }

    /// Squared shortfall below the target margin: `INTERIOR` for genuine
    /// inequalities, zero for equality halves.
    fn shortfall(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (i, g) in self.constraints.iter().enumerate() {
            let target = if self.inequality[i] { INTERIOR } else { 0.0 };
            let v = g.evaluate(x) - target;
            if v < 0.0 {
                value += 0.5 * v * v;
                self.add_grad(i, x, v, &mut grad);
            }
        }
        (value, grad)
    }

    fn violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|g| (-g.evaluate(x)).max(0.0)).fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with Armijo backtracking and a capped step length.
fn bfgs<F: Fn(&[f64]) -> (f64, Vec<f64>)>(f: F, x0: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut gx) = f(&x);
    let unit = |g: &[f64]| {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        DMatrix::<f64>::identity(n, n) * if gmax > 1.0 { 1.0 / gmax } else { 1.0 }
    };
    let mut h = unit(&gx);
    for _ in 0..max_iter {
        let gnorm = gx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !gnorm.is_finite() || gnorm <= tol * (1.0 + fx.abs()) {
            break;
        }
        let mut dir: Vec<f64> = (&h * DVector::from_column_slice(&gx)).iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &gx);
        if slope >= 0.0 {
            h = unit(&gx);
            dir = (&h * DVector::from_column_slice(&gx)).iter().map(|v| -v).collect();
            slope = dot(&dir, &gx);
        }
        // short steps keep the search inside the basin it started in
        let cap = 0.05 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let len = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if len > cap {
            let k = cap / len;
            dir.iter_mut().for_each(|v| *v *= k);
            slope *= k;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            let sv = DVector::from_column_slice(&s);
            let yv = DVector::from_column_slice(&y);
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let left = &i - &sv * yv.transpose() * rho;
            let right = &i - &yv * sv.transpose() * rho;
            h = &left * &h * &right + &sv * sv.transpose() * rho;
        }
        let moved = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = xn;
        fx = fnew;
        gx = gnew;
        if moved <= 1e-15 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            break;
        }
    }
    x
}

/// Local solve from `x0` in 20 rounds of BFGS (inner tolerance 1e-10).
///
/// A feasibility phase first moves the start strictly inside every genuine
/// inequality. For the first ten rounds those are handled by a log barrier
/// whose weight shrinks fourfold per round, so iterates cannot cross a bound
/// into a neighbouring basin; the remaining rounds polish with an augmented
/// Lagrangian on every constraint. Equality halves use the augmented
/// Lagrangian throughout, its penalty doubling each round. Without a
/// strictly interior start the barrier is skipped.
pub fn local_minimize(problem: &PopProblem, x0: &[f64]) -> Vec<f64> {
    let lag = Lagrangian::new(problem);
    let mut x = bfgs(|z| lag.shortfall(z), x0, 1e-14, 1000);
    let strictly_inside = problem
        .constraints
        .iter()
        .zip(&lag.inequality)
        .all(|(g, ineq)| !ineq || g.evaluate(&x) > 0.0);
    let mut interior: Vec<bool> = lag.inequality.iter().map(|&ineq| ineq && strictly_inside).collect();

    let scale = 1.0 + problem.objective.evaluate(&x).abs();
    let slope = problem.objective.gradient(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut barrier = 1e-4 * scale;
    let mut rho = 1e3 * (1.0 + slope);
    let mut mu = vec![0.0; problem.constraints.len()];
    for round in 0..20 {
        if round == 10 {
            // hand the inequalities over to the augmented Lagrangian, seeded
            // with the barrier's multiplier estimates
            for (i, g) in problem.constraints.iter().enumerate() {
                if interior[i] {
                    mu[i] = barrier * 4.0 / g.evaluate(&x);
                    interior[i] = false;
                }
            }
        }
        x = bfgs(|z| lag.eval(z, &interior, barrier, &mu, rho), &x, 1e-10, 500);
        for (i, g) in problem.constraints.iter().enumerate() {
            if !interior[i] {
                mu[i] = (mu[i] - rho * g.evaluate(&x)).max(0.0);
            }
        }
        barrier *= 0.25;
        rho *= 2.0;
    }
    x
}

/// Seeded multistart local search over the sampling box.
pub fn multistart_minimize(problem: &PopProblem, starts: usize, seed: u64) -> Result<MinimizeOutcome, OracleError> {
    let n = problem.nvars();
    if n > 3 {
        return Err(OracleError::TooManyVariables(n));
    }
    let bounds = sampling_box(problem);
    let lag = Lagrangian::new(problem);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = 100 * starts.max(1);
    let mut basins: Vec<Basin> = Vec::new();
    let mut feasible = 0usize;
    let mut attempts = 0usize;
    while feasible < starts && attempts < budget {
        attempts += 1;
        let x0: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
        let x = local_minimize(problem, &x0);
        if !x.iter().all(|v| v.is_finite()) || lag.violation(&x) > FEASIBILITY {
            continue;
        }
        feasible += 1;
        let value = problem.objective.evaluate(&x);
        let near = basins
            .iter_mut()
            .find(|b| b.point.iter().zip(&x).all(|(p, q)| (p - q).abs() <= BASIN_RADIUS));
        match near {
            Some(b) if value < b.value => *b = Basin { point: x, value },
            Some(_) => {}
            None => basins.push(Basin { point: x, value }),
        }
    }
    if basins.is_empty() {
        return Err(OracleError::NoFeasibleStart(attempts));
    }
    basins.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(MinimizeOutcome { best_point: basins[0].point.clone(), best_value: basins[0].value, basins })
}
