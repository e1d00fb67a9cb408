//! Candidate feasibility check, KKT assembly, dual solves and the verdict.

use std::time::Instant;

use thiserror::Error;

use crate::kkt::{assemble, KktConfig, KktError, KktSystem};
use crate::multiindex::binomial;
use crate::problem_io::{CertificateReport, PopProblem, Timings, Verdict};
use crate::solvers::{solve_l1, solve_l2, SolveOutcome, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormChoice {
    L1,
    L2,
    Both,
}

impl NormChoice {
    fn l1(self) -> bool {
        matches!(self, NormChoice::L1 | NormChoice::Both)
    }

    fn l2(self) -> bool {
        matches!(self, NormChoice::L2 | NormChoice::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyConfig {
    /// Relaxation order; [`PopProblem::default_order`] when `None`.
    pub order: Option<u32>,
    pub norm: NormChoice,
    pub tol_feas: f64,
    pub tol_comp: f64,
    /// Threshold on the residual divided by `1 + ||f||_2`.
    pub tol_cert: f64,
    pub max_minor_order: Option<usize>,
    pub scale_rows: bool,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            order: None,
            norm: NormChoice::Both,
            tol_feas: 1e-6,
            tol_comp: 1e-9,
            tol_cert: 1e-4,
            max_minor_order: None,
            scale_rows: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("candidate is infeasible: constraint {} evaluates to {value:e}", index + 1)]
    InfeasibleCandidate { index: usize, value: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kkt(#[from] KktError),
}

/// Smallest constraint value at `x`; fails when it is below `-tol_feas`.
pub fn check_candidate_feasibility(problem: &PopProblem, x: &[f64], tol_feas: f64) -> Result<f64, CertifyError> {
    if x.len() != problem.nvars() {
        return Err(KktError::DimensionMismatch { expected: problem.nvars(), got: x.len() }.into());
    }
    let mut worst: Option<(usize, f64)> = None;
    for (i, g) in problem.constraints.iter().enumerate() {
        let v = g.evaluate(x);
        if worst.is_none_or(|(_, w)| v < w) {
            worst = Some((i, v));
        }
    }
    match worst {
        Some((index, value)) if value < -tol_feas => Err(CertifyError::InfeasibleCandidate { index, value }),
        Some((_, value)) => Ok(value),
        None => Ok(f64::INFINITY),
    }
}

fn validate(config: &CertifyConfig) -> Result<(), CertifyError> {
    for (name, v) in [("tol_feas", config.tol_feas), ("tol_comp", config.tol_comp), ("tol_cert", config.tol_cert)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CertifyError::Config(format!("{name} must be positive, got {v}")));
        }
    }
    if config.max_minor_order == Some(0) {
        return Err(CertifyError::Config("max_minor_order must be at least 1".into()));
    }
    Ok(())
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn status_label(s: SolveStatus) -> String {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::IterationLimit => "iteration-limit",
        SolveStatus::NumericalFailure => "numerical-failure",
    }
    .to_string()
}

/// Everything a certification run produced, including the assembled system
/// and raw solver outcomes.
#[derive(Clone, Debug)]
pub struct Certification {
    pub report: CertificateReport,
    pub system: KktSystem,
    pub l1: Option<SolveOutcome>,
    pub l2: Option<SolveOutcome>,
}

/// Runs the full pipeline and returns the report.
pub fn certify(problem: &PopProblem, x: &[f64], config: &CertifyConfig) -> Result<CertificateReport, CertifyError> {
    certify_detailed(problem, x, config).map(|c| c.report)
}

pub fn certify_detailed(problem: &PopProblem, x: &[f64], config: &CertifyConfig) -> Result<Certification, CertifyError> {
    validate(config)?;
    let margin = check_candidate_feasibility(problem, x, config.tol_feas)?;
    let d = config.order.unwrap_or_else(|| problem.default_order());

    let t = Instant::now();
    let kkt_config = KktConfig {
        tol_comp: config.tol_comp,
        tol_feas: config.tol_feas,
        max_minor_order: config.max_minor_order,
        scale_rows: config.scale_rows,
    };
    let system = assemble(problem, x, d, &kkt_config)?;
    let mut timings = Timings { assemble: ms(t), ..Timings::default() };

    let l1 = config.norm.l1().then(|| {
        let t = Instant::now();
        let out = solve_l1(&system);
        timings.solve_l1 = ms(t);
        out
    });
    let l2 = config.norm.l2().then(|| {
        let t = Instant::now();
        let out = solve_l2(&system);
        timings.solve_l2 = ms(t);
        out
    });

    // ||.||_2 <= ||.||_1, so an l1-only run is judged on the l1 residual.
    let normalizer = 1.0 + problem.objective.coefficient_norm();
    let deciding = l2.as_ref().or(l1.as_ref()).expect("at least one norm is solved");
    let failed = [&l1, &l2].iter().any(|o| o.as_ref().is_some_and(|o| o.status == SolveStatus::NumericalFailure));
    let verdict = if !failed && deciding.residual_norm / normalizer <= config.tol_cert {
        Verdict::Certified
    } else {
        Verdict::NotCertified
    };

    let n = problem.nvars();
    let ni = problem
        .constraints
        .iter()
        .map(|g| binomial(n + (d - g.half_degree().unwrap_or(0)) as usize, n))
        .collect();
    let retained = system.ncols() - 1;
    let report = CertificateReport {
        problem: problem.name.clone(),
        order: d,
        n0: binomial(n + d as usize, n),
        ni,
        multipliers_total: retained + system.fixed_zero.len(),
        multipliers_fixed_zero: system.fixed_zero.len(),
        residual_l1: l1.as_ref().map(|o| o.residual_norm),
        residual_l2: l2.as_ref().map(|o| o.residual_norm),
        verdict,
        objective_value: problem.objective.evaluate(x),
        feasibility_margin: margin,
        iterations_l1: l1.as_ref().map(|o| o.iterations),
        iterations_l2: l2.as_ref().map(|o| o.iterations),
        time_ms: timings,
        variables: problem.variables.clone(),
        candidate: x.to_vec(),
        multipliers_free: retained,
        status_l1: l1.as_ref().map(|o| status_label(o.status)),
        status_l2: l2.as_ref().map(|o| status_label(o.status)),
    };
    Ok(Certification { report, system, l1, l2 })
}
