//! Dense two-phase primal simplex for small equality-form LPs.
//!
//! ```text
//! min c'x  s.t.  A x = b,  x_j >= 0 unless free_mask[j]
//! ```
//!
//! Free variables are split into a positive and a negative part. Pricing is
//! Dantzig's rule with ties to the smallest column; after `2 * rows`
//! consecutive degenerate pivots the solver switches to Bland's rule for the
//! rest of the phase.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one objective {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex stopped after {0} pivots")]
    IterationLimit(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpOptions {
    /// Optimality threshold on reduced costs.
    pub opt_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Pivot budget per variable.
    pub pivots_per_variable: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { opt_tol: 1e-8, pivot_tol: 1e-9, pivots_per_variable: 50 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Basis after phase two, as indices into the split variable space.
    basis: Vec<usize>,
}

struct Tableau {
    m: usize,
    ncols: usize,
    // (m + 1) x (ncols + 1), last row = reduced costs, last column = rhs
    t: Vec<f64>,
    // the constraint rows as originally posed, for reinversion
    orig: Vec<f64>,
    costs: Vec<f64>,
    basis: Vec<usize>,
}

const REINVERT_EVERY: usize = 50;

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.ncols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.ncols)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.ncols + 1;
        let p = self.at(row, col);
        for c in 0..w {
            self.t[row * w + c] /= p;
        }
        for r in 0..=self.m {
            if r == row {
                continue;
            }
            let f = self.t[r * w + col];
            if f != 0.0 {
                for c in 0..w {
                    let v = self.t[row * w + c];
                    self.t[r * w + c] -= f * v;
                }
                self.t[r * w + col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        self.costs = costs.to_vec();
        self.price();
    }

    /// Recomputes the reduced-cost row from the current constraint rows.
    fn price(&mut self) {
        let w = self.ncols + 1;
        for c in 0..w {
            self.t[self.m * w + c] = if c < self.ncols { self.costs[c] } else { 0.0 };
        }
        for r in 0..self.m {
            let cb = self.costs[self.basis[r]];
            if cb != 0.0 {
                for c in 0..w {
                    let v = self.t[r * w + c];
                    self.t[self.m * w + c] -= cb * v;
                }
            }
        }
    }

    /// Rebuilds the tableau as `B^-1 [A | b]` from the original rows, which
    /// discards the rounding error accumulated by elimination.
    fn reinvert(&mut self) {
        let (m, w) = (self.m, self.ncols + 1);
        let bmat = DMatrix::from_fn(m, m, |r, k| self.orig[r * w + self.basis[k]]);
        let full = DMatrix::from_fn(m, w, |r, c| self.orig[r * w + c]);
        let Some(sol) = bmat.lu().solve(&full) else { return };
        if !sol.iter().all(|v| v.is_finite()) {
            return;
        }
        for r in 0..m {
            for c in 0..w {
                self.t[r * w + c] = sol[(r, c)];
            }
        }
        for (r, &col) in self.basis.clone().iter().enumerate() {
            for k in 0..m {
                self.t[k * w + col] = if k == r { 1.0 } else { 0.0 };
            }
        }
        self.price();
    }

    /// Runs simplex pivots on the current cost row. Columns at or beyond
    /// `allowed` never enter.
    fn optimize(&mut self, allowed: usize, opts: &LpOptions, budget: usize, used: &mut usize) -> Result<(), LpError> {
        let mut stall = 0usize;
        let mut bland = false;
        let mut since_reinvert = 0usize;
        loop {
            let entering = {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..allowed {
                    let rc = self.at(self.m, c);
                    if rc < -opts.opt_tol {
                        if bland {
                            best = Some((c, rc));
                            break;
                        }
                        if best.is_none_or(|(_, b)| rc < b) {
                            best = Some((c, rc));
                        }
                    }
                }
                match best {
                    Some((c, _)) => c,
                    None if since_reinvert > 0 => {
                        // confirm optimality on a fresh factorization
                        self.reinvert();
                        since_reinvert = 0;
                        continue;
                    }
                    None => return Ok(()),
                }
            };
            let row = self.leaving_row(entering, bland, opts).ok_or(LpError::Unbounded)?;
            let ratio = self.rhs(row).max(0.0) / self.at(row, entering);
            let gain = ratio * -self.at(self.m, entering);
            let objective = -self.at(self.m, self.ncols);
            if *used >= budget {
                return Err(LpError::IterationLimit(*used));
            }
            *used += 1;
            self.pivot(row, entering);
            // progress at rounding level counts as a degenerate pivot
            if gain <= 1e-12 * (1.0 + objective.abs()) {
                stall += 1;
                if stall > 2 * self.m {
                    bland = true;
                }
            } else {
                stall = 0;
            }
            since_reinvert += 1;
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                since_reinvert = 0;
            }
        }
    }

    /// Harris two-pass ratio test: among rows whose ratio is within a small
    /// feasibility slack of the minimum, take the largest pivot. Under
    /// Bland's rule the exact minimum ratio with the smallest basic index
    /// wins instead.
    fn leaving_row(&self, entering: usize, bland: bool, opts: &LpOptions) -> Option<usize> {
        const SLACK: f64 = 1e-9;
        let candidates: Vec<(usize, f64, f64)> = (0..self.m)
            .filter_map(|r| {
                let a = self.at(r, entering);
                (a > opts.pivot_tol).then(|| (r, a, self.rhs(r).max(0.0)))
            })
            .collect();
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for &(r, a, b) in &candidates {
                let ratio = b / a;
                let better = match best {
                    None => true,
                    Some((lr, lo)) => {
                        let tie = 1e-12 * lo.abs().max(1.0);
                        ratio < lo - tie || (ratio <= lo + tie && self.basis[r] < self.basis[lr])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            return best.map(|(r, _)| r);
        }
        let bound = candidates.iter().map(|&(_, a, b)| (b + SLACK) / a).fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64)> = None;
        for &(r, a, b) in &candidates {
            if b / a <= bound && best.is_none_or(|(lr, la)| a > la || (a == la && self.basis[r] < self.basis[lr])) {
                best = Some((r, a));
            }
        }
        best.map(|(r, _)| r)
    }
}

/// Solves the LP; `x` is returned in the caller's (unsplit) variable space.
pub fn lp_core(
    c: &[f64],
    a_eq: &DMatrix<f64>,
    b_eq: &[f64],
    free_mask: &[bool],
    opts: &LpOptions,
) -> Result<LpSolution, LpError> {
    let (m, n) = a_eq.shape();
    if c.len() != n || free_mask.len() != n || b_eq.len() != m {
        return Err(LpError::Dimension(format!(
            "A is {m}x{n}, c has {}, b has {}, mask has {}",
            c.len(),
            b_eq.len(),
            free_mask.len()
        )));
    }

    // split variables: (original index, sign)
    let mut split: Vec<(usize, f64)> = Vec::with_capacity(n + free_mask.iter().filter(|f| **f).count());
    for j in 0..n {
        split.push((j, 1.0));
        if free_mask[j] {
            split.push((j, -1.0));
        }
    }
    let ns = split.len();
    let ncols = ns + m;
    let w = ncols + 1;
    let mut t = vec![0.0; (m + 1) * w];
    for r in 0..m {
        let flip = if b_eq[r] < 0.0 { -1.0 } else { 1.0 };
        for (k, &(j, s)) in split.iter().enumerate() {
            t[r * w + k] = flip * s * a_eq[(r, j)];
        }
        t[r * w + ns + r] = 1.0;
        t[r * w + ncols] = flip * b_eq[r];
    }
    let orig = t[..m * w].to_vec();
    let mut tab = Tableau { m, ncols, t, orig, costs: vec![0.0; ncols], basis: (ns..ns + m).collect() };

    let budget = opts.pivots_per_variable * ns.max(1);
    let mut used = 0;

    // phase one: drive the artificials out
    let mut phase1 = vec![0.0; ncols];
    for v in phase1.iter_mut().skip(ns) {
        *v = 1.0;
    }
    tab.set_costs(&phase1);
    tab.optimize(ncols, opts, budget, &mut used)?;
    let infeas: f64 = (0..m).filter(|&r| tab.basis[r] >= ns).map(|r| tab.rhs(r)).sum();
    let bnorm = b_eq.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeas > 1e-9 * (1.0 + bnorm) {
        return Err(LpError::Infeasible(infeas));
    }
    for r in 0..m {
        if tab.basis[r] >= ns {
            let mut best: Option<(usize, f64)> = None;
            for k in 0..ns {
                let a = tab.at(r, k).abs();
                if a > opts.pivot_tol && best.is_none_or(|(_, b)| a > b) {
                    best = Some((k, a));
                }
            }
            // otherwise the row is redundant and its artificial stays at zero
            if let Some((k, _)) = best {
                tab.pivot(r, k);
            }
        }
    }

    // phase two
    let mut costs = vec![0.0; ncols];
    for (k, &(j, s)) in split.iter().enumerate() {
        costs[k] = s * c[j];
    }
    tab.reinvert();
    tab.set_costs(&costs);
    tab.optimize(ns, opts, budget, &mut used)?;

    let xs = refine(&tab, &split, a_eq, b_eq);
    let mut x = vec![0.0; n];
    for (k, &(j, s)) in split.iter().enumerate() {
        x[j] += s * xs[k];
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective, iterations: used, basis: tab.basis.clone() })
}

/// Recomputes basic values from the original data, `B x_B = b`, to shed the
/// rounding accumulated in the tableau.
fn refine(tab: &Tableau, split: &[(usize, f64)], a_eq: &DMatrix<f64>, b_eq: &[f64]) -> Vec<f64> {
    let m = tab.m;
    let ns = split.len();
    let basis_matrix = DMatrix::from_fn(m, m, |r, k| {
        let col = tab.basis[k];
        if col < ns {
            let (j, s) = split[col];
            s * a_eq[(r, j)]
        } else if col - ns == r {
            if b_eq[r] < 0.0 { -1.0 } else { 1.0 }
        } else {
            0.0
        }
    });
    let mut xs = vec![0.0; ns];
    let solved = basis_matrix.lu().solve(&DVector::from_column_slice(b_eq));
    match solved {
        Some(sol) if sol.iter().all(|v| v.is_finite()) => {
            for (k, &col) in tab.basis.iter().enumerate() {
                if col < ns {
                    xs[col] = sol[k].max(0.0);
                }
            }
        }
        _ => {
            for (r, &col) in tab.basis.iter().enumerate() {
                if col < ns {
                    xs[col] = tab.rhs(r).max(0.0);
                }
            }
        }
    }
    xs
}

impl LpSolution {
    /// Indices of basic variables in the split space (free variables occupy
    /// two consecutive slots).
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }
}
