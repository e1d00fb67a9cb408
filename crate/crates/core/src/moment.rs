//! Symbolic moment and localizing matrices, and the rank-one lift of a point.
//!
//! A [`MatrixStructure`] records, for every entry `(r, c)`, which moments
//! `y_alpha` appear there and with what coefficient. The same data read
//! column-wise gives the coefficient patterns `B_alpha` (moment matrix) and
//! `C_{i,alpha}` (localizing matrix of `g_i`), which is what the KKT rows
//! need.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::multiindex::{MonomialBasis, MultiIndex};
use crate::polynomial::Polynomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("relaxation order {order} is below the constraint half-degree {half_degree}")]
    OrderTooSmall { order: u32, half_degree: u32 },
    #[error("constraint polynomial is identically zero")]
    ZeroConstraint,
}

/// Moment vector `ŷ = (x̂^alpha)` for `|alpha| <= 2d`.
#[derive(Clone, Debug)]
pub struct LiftedPoint {
    order: u32,
    basis: Arc<MonomialBasis>,
    values: Vec<f64>,
}

impl LiftedPoint {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.basis.position(alpha).map(|i| self.values[i])
    }
}

/// Lifts `x` to its moment vector of order `d`.
///
/// Each moment is the product of an earlier moment and one coordinate,
/// `ŷ_alpha = ŷ_{alpha - e_k} * x_k` with `k` the first nonzero exponent, so
/// the products stay consistent across the whole vector.
pub fn lift_point(x: &[f64], d: u32) -> LiftedPoint {
    let n = x.len();
    let basis = Arc::new(MonomialBasis::new(n, 2 * d));
    let mut values = Vec::with_capacity(basis.len());
    for alpha in basis.iter() {
        match alpha.first_nonzero() {
            None => values.push(1.0),
            Some(k) => {
                let prev = alpha
                    .sub_checked(&MultiIndex::unit(n, k))
                    .and_then(|a| basis.position(&a))
                    .expect("graded basis is closed under lowering");
                values.push(values[prev] * x[k]);
            }
        }
    }
    LiftedPoint { order: d, basis, values }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatrixKind {
    Moment,
    /// Localizing matrix of the `i`-th canonical constraint (0-based).
    Localizing(usize),
}

/// Linear map from the moment vector to a symmetric matrix.
#[derive(Clone, Debug)]
pub struct MatrixStructure {
    kind: MatrixKind,
    rows: MonomialBasis,
    moments: Arc<MonomialBasis>,
    // row-major, each list sorted by moment index
    entries: Vec<Vec<(f64, usize)>>,
}

impl MatrixStructure {
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &MonomialBasis {
        &self.rows
    }

    /// Basis indexing the moment vector this structure reads from.
    pub fn moment_basis(&self) -> &Arc<MonomialBasis> {
        &self.moments
    }

    /// `(coefficient, moment index)` pairs making up entry `(r, c)`.
    pub fn entry(&self, r: usize, c: usize) -> &[(f64, usize)] {
        &self.entries[r * self.size() + c]
    }

    /// Numerical matrix at a moment vector laid out like [`Self::moment_basis`].
    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        assert_eq!(y.len(), self.moments.len(), "moment vector has the wrong length");
        let m = self.size();
        let mut out = DMatrix::zeros(m, m);
        for r in 0..m {
            for c in r..m {
                let v: f64 = self.entry(r, c).iter().map(|&(coef, idx)| coef * y[idx]).sum();
                out[(r, c)] = v;
                out[(c, r)] = v;
            }
        }
        out
    }

    pub fn evaluate_at(&self, point: &LiftedPoint) -> DMatrix<f64> {
        self.evaluate(point.values())
    }
}

/// Structure of `M_d(y) = (y_{beta+gamma})`.
pub fn moment_structure(moments: &Arc<MonomialBasis>, d: u32) -> MatrixStructure {
    let n = moments.nvars();
    assert!(moments.degree() >= 2 * d, "moment basis too small for order {d}");
    let rows = MonomialBasis::new(n, d);
    let m = rows.len();
    let mut entries = Vec::with_capacity(m * m);
    for beta in rows.iter() {
        for gamma in rows.iter() {
            let idx = moments.position(&beta.add(gamma)).expect("degree fits");
            entries.push(vec![(1.0, idx)]);
        }
    }
    MatrixStructure { kind: MatrixKind::Moment, rows, moments: Arc::clone(moments), entries }
}

/// Structure of `M_{d-k}(g y) = (sum_gamma' g_gamma' y_{beta+gamma+gamma'})`.
pub fn localizing_structure(
    moments: &Arc<MonomialBasis>,
    g: &Polynomial,
    index: usize,
    d: u32,
) -> Result<MatrixStructure, StructureError> {
    let k = g.half_degree().ok_or(StructureError::ZeroConstraint)?;
    if d < k {
        return Err(StructureError::OrderTooSmall { order: d, half_degree: k });
    }
    assert!(moments.degree() >= 2 * d, "moment basis too small for order {d}");
    let rows = MonomialBasis::new(moments.nvars(), d - k);
    let m = rows.len();
    let mut entries = Vec::with_capacity(m * m);
    for beta in rows.iter() {
        for gamma in rows.iter() {
            let base = beta.add(gamma);
            let mut list: Vec<(f64, usize)> = g
                .terms()
                .map(|(gp, coef)| {
                    let idx = moments.position(&base.add(gp)).expect("degree fits");
                    (coef, idx)
                })
                .collect();
            list.sort_by_key(|&(_, idx)| idx);
            entries.push(list);
        }
    }
    Ok(MatrixStructure { kind: MatrixKind::Localizing(index), rows, moments: Arc::clone(moments), entries })
}
