//! Linear KKT system of the determinant-relaxed moment problem at a lift.
//!
//! With `ŷ` fixed, stationarity reads, for every `|alpha| <= 2d`,
//!
//! ```text
//! r_alpha = f_alpha - lambda [alpha = 0]
//!           - sum_I     lambda_{0,I}   trace(co_I(M_d(ŷ))        B_{I,alpha})
//!           - sum_{i,J} lambda_{i,J}   trace(co_J(M_{d-k_i}(g_i ŷ)) C_{i,J,alpha})
//! ```
//!
//! which is linear in the multipliers. The system is stored as `r = b - A z`
//! with `b_alpha = f_alpha`, the free `lambda` in column 0 and one
//! nonnegative column per retained minor multiplier.
//!
//! At a lift every minor of size two or more vanishes, so complementarity
//! only bites on singletons: a diagonal entry that is clearly positive forces
//! its multiplier to zero and the column is dropped.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::minors::{enumerate_index_sets, IndexSet, MinorEvaluation};
use crate::moment::{lift_point, localizing_structure, moment_structure, LiftedPoint, MatrixKind, MatrixStructure};
use crate::multiindex::MonomialBasis;
use crate::problem_io::PopProblem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KktError {
    #[error("relaxation order {order} is below the minimum order {min}")]
    OrderTooSmall { order: u32, min: u32 },
    #[error("candidate has {got} coordinates, problem has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("lift is infeasible: diagonal {set} of {matrix} is {value:e}")]
    InfeasibleLift { matrix: String, set: String, value: f64 },
}

/// Multiplier `lambda_{0,I}` (moment matrix) or `lambda_{i,J}` (localizing).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiplierId {
    pub matrix: MatrixKind,
    pub index_set: IndexSet,
}

impl fmt::Display for MultiplierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.matrix {
            MatrixKind::Moment => write!(f, "lambda_0_{}", self.index_set),
            MatrixKind::Localizing(i) => write!(f, "lambda_{}_{}", i + 1, self.index_set),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Column {
    /// Free multiplier of `y_0 = 1`.
    Lambda,
    Minor(MultiplierId),
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Lambda => f.write_str("lambda"),
            Column::Minor(id) => id.fmt(f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktConfig {
    /// Relative threshold below which a diagonal minor counts as zero.
    pub tol_comp: f64,
    /// Feasibility tolerance of the candidate; constraints with
    /// `|g_i(x̂)| <= tol_feas` are treated as active.
    pub tol_feas: f64,
    /// Largest index-set size enumerated; `None` means the full matrix.
    pub max_minor_order: Option<usize>,
    /// Divide each row of `[A | b]` by the largest magnitude in its `A` part.
    pub scale_rows: bool,
}

impl Default for KktConfig {
    fn default() -> Self {
        KktConfig { tol_comp: 1e-9, tol_feas: 1e-6, max_minor_order: None, scale_rows: false }
    }
}

/// One stationarity column before complementarity elimination.
#[derive(Clone, Debug)]
pub struct MinorColumn {
    pub id: MultiplierId,
    /// `trace(co_I S_{I,alpha})` for every row `alpha`.
    pub coefficients: Vec<f64>,
    /// `det_I` at the lift.
    pub minor_value: f64,
    /// `1 + ||M||_inf` of the matrix the minor belongs to.
    pub scale: f64,
}

/// Moment and localizing structures for a problem at order `d`.
#[derive(Clone, Debug)]
pub struct Structures {
    pub moment: MatrixStructure,
    pub localizing: Vec<MatrixStructure>,
}

impl Structures {
    pub fn build(problem: &PopProblem, d: u32) -> Result<Self, KktError> {
        let min = problem.min_order();
        if d < min {
            return Err(KktError::OrderTooSmall { order: d, min });
        }
        let moments = Arc::new(MonomialBasis::new(problem.nvars(), 2 * d));
        let moment = moment_structure(&moments, d);
        let localizing = problem
            .constraints
            .iter()
            .enumerate()
            .map(|(i, g)| {
                localizing_structure(&moments, g, i, d)
                    .map_err(|_| KktError::OrderTooSmall { order: d, min })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Structures { moment, localizing })
    }

    pub fn all(&self) -> impl Iterator<Item = &MatrixStructure> {
        std::iter::once(&self.moment).chain(self.localizing.iter())
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|r| m.row(r).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Stationarity columns of every multiplier, in frozen order: moment matrix
/// first, then each localizing matrix, each by cardinality then lex order.
pub fn minor_columns(structures: &Structures, lift: &LiftedPoint, max_minor_order: Option<usize>) -> Vec<MinorColumn> {
    let nrows = lift.basis().len();
    let mut out = Vec::new();
    for s in structures.all() {
        let m = s.evaluate_at(lift);
        let scale = 1.0 + inf_norm(&m);
        let cap = max_minor_order.unwrap_or(s.size()).clamp(1, s.size());
        for set in enumerate_index_sets(s.size(), cap) {
            let me = MinorEvaluation::new(&m, set);
            let mut coefficients = vec![0.0; nrows];
            me.accumulate_gradient(s, &mut coefficients);
            out.push(MinorColumn {
                id: MultiplierId { matrix: s.kind(), index_set: me.index_set.clone() },
                coefficients,
                minor_value: me.value,
                scale,
            });
        }
    }
    out
}

fn matrix_label(kind: MatrixKind) -> String {
    match kind {
        MatrixKind::Moment => "moment matrix".to_string(),
        MatrixKind::Localizing(i) => format!("localizing matrix {}", i + 1),
    }
}

/// Whether a multiplier must be zero by complementarity.
///
/// Singleton multipliers are fixed to zero when their diagonal exceeds
/// `tol_comp * scale`, except for localizing matrices of constraints that are
/// active within `tol_feas`. Larger minors vanish at a lift and are always
/// kept.
fn is_fixed_zero(col: &MinorColumn, constraint_values: &[f64], config: &KktConfig) -> Result<bool, KktError> {
    if !col.id.index_set.is_singleton() {
        return Ok(false);
    }
    if col.minor_value < -config.tol_feas * col.scale {
        return Err(KktError::InfeasibleLift {
            matrix: matrix_label(col.id.matrix),
            set: col.id.index_set.to_string(),
            value: col.minor_value,
        });
    }
    if col.minor_value <= config.tol_comp * col.scale {
        return Ok(false);
    }
    Ok(match col.id.matrix {
        MatrixKind::Moment => true,
        MatrixKind::Localizing(i) => constraint_values[i].abs() > config.tol_feas,
    })
}

/// Splits multipliers into retained and fixed-to-zero lists.
pub fn active_multipliers(
    columns: &[MinorColumn],
    constraint_values: &[f64],
    config: &KktConfig,
) -> Result<(Vec<MultiplierId>, Vec<MultiplierId>), KktError> {
    let mut retained = Vec::new();
    let mut fixed = Vec::new();
    for col in columns {
        if is_fixed_zero(col, constraint_values, config)? {
            fixed.push(col.id.clone());
        } else {
            retained.push(col.id.clone());
        }
    }
    Ok((retained, fixed))
}

/// Assembled linear feasibility system `b - A z`, `z_0` free, `z_j >= 0`.
#[derive(Clone, Debug)]
pub struct KktSystem {
    pub rows: Arc<MonomialBasis>,
    pub columns: Vec<Column>,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub fixed_zero: Vec<MultiplierId>,
    /// Factors the rows were divided by, when row scaling is on.
    pub row_scale: Option<Vec<f64>>,
}

impl KktSystem {
    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    /// `true` for columns constrained to be nonnegative.
    pub fn nonneg_mask(&self) -> Vec<bool> {
        self.columns.iter().map(|c| matches!(c, Column::Minor(_))).collect()
    }

    /// Stationarity residual `b - A z`.
    pub fn residual(&self, z: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .map(|r| self.b[r] - (0..self.ncols()).map(|c| self.a[(r, c)] * z[c]).sum::<f64>())
            .collect()
    }

    /// CSV dump: header of column labels, then rows of `A` with `b` last.
    pub fn to_csv(&self) -> String {
        let quote = |s: String| if s.contains(',') { format!("\"{s}\"") } else { s };
        let mut out = String::new();
        let mut header: Vec<String> = self.columns.iter().map(|c| quote(c.to_string())).collect();
        header.push("b".to_string());
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.nrows() {
            let mut row: Vec<String> = (0..self.ncols()).map(|c| format!("{:?}", self.a[(r, c)])).collect();
            row.push(format!("{:?}", self.b[r]));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Builds the KKT feasibility system at the lift of `x` for relaxation order `d`.
pub fn assemble(problem: &PopProblem, x: &[f64], d: u32, config: &KktConfig) -> Result<KktSystem, KktError> {
    if x.len() != problem.nvars() {
        return Err(KktError::DimensionMismatch { expected: problem.nvars(), got: x.len() });
    }
    let structures = Structures::build(problem, d)?;
    let lift = lift_point(x, d);
    let constraint_values: Vec<f64> = problem.constraints.iter().map(|g| g.evaluate(x)).collect();
    let all = minor_columns(&structures, &lift, config.max_minor_order);

    let rows = Arc::clone(lift.basis());
    let nrows = rows.len();
    let mut columns = vec![Column::Lambda];
    let mut data: Vec<Vec<f64>> = Vec::new();
    let mut lambda = vec![0.0; nrows];
    lambda[0] = 1.0;
    data.push(lambda);
    let mut fixed_zero = Vec::new();
    for col in all {
        if is_fixed_zero(&col, &constraint_values, config)? {
            fixed_zero.push(col.id);
        } else {
            columns.push(Column::Minor(col.id));
            data.push(col.coefficients);
        }
    }
    let mut a = DMatrix::from_fn(nrows, data.len(), |r, c| data[c][r]);
    let mut b: Vec<f64> = rows.iter().map(|alpha| problem.objective.coefficient(alpha)).collect();

    let row_scale = if config.scale_rows {
        let factors: Vec<f64> = (0..nrows)
            .map(|r| {
                let m = a.row(r).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                if m > 0.0 { m } else { 1.0 }
            })
            .collect();
        for (r, f) in factors.iter().enumerate() {
            for c in 0..a.ncols() {
                a[(r, c)] /= f;
            }
            b[r] /= f;
        }
        Some(factors)
    } else {
        None
    };

    Ok(KktSystem { rows, columns, a, b, fixed_zero, row_scale })
}
