//! Principal minors, comatrices and determinant gradients.
//!
//! `d det(A) / d A_rc = co(A)_rc`, so the derivative of a principal minor
//! `det_I(M(y))` with respect to a moment `y_alpha` is
//! `trace(co_I(M) * S_{I,alpha})`, where `S_alpha` is the coefficient pattern
//! of `y_alpha` in `M`. [`gradient_coefficient`] evaluates exactly that.

use std::fmt;

use nalgebra::DMatrix;

use crate::moment::MatrixStructure;

/// Sorted, nonempty set of row/column ordinals (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        assert!(!members.is_empty(), "index sets are nonempty");
        IndexSet(members)
    }

    pub fn singleton(i: usize) -> Self {
        IndexSet(vec![i])
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.0.len() == 1
    }
}

impl fmt::Display for IndexSet {
    /// 1-based, brace style: `{1,2}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// All nonempty subsets of `0..size` with at most `max_order` members,
/// ordered by cardinality and then lexicographically.
pub fn enumerate_index_sets(size: usize, max_order: usize) -> Vec<IndexSet> {
    assert!(size >= 1 && max_order >= 1 && max_order <= size, "invalid subset enumeration bounds");
    let mut out = Vec::new();
    for k in 1..=max_order {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            out.push(IndexSet(comb.clone()));
            // advance to the next k-combination in lex order
            let mut i = k;
            while i > 0 && comb[i - 1] == size - k + (i - 1) {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            comb[i - 1] += 1;
            for j in i..k {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    out
}

/// Determinant: closed forms up to 3x3, LU with partial pivoting above.
/// The empty matrix has determinant 1.
pub fn determinant(a: &DMatrix<f64>) -> f64 {
    assert!(a.is_square(), "determinant of a non-square matrix");
    match a.nrows() {
        0 => 1.0,
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        3 => {
            a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
                - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
                + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
        }
        _ => lu_determinant(a.clone()),
    }
}

fn lu_determinant(mut a: DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut det = 1.0;
    for k in 0..n {
        let mut p = k;
        for i in (k + 1)..n {
            if a[(i, k)].abs() > a[(p, k)].abs() {
                p = i;
            }
        }
        if a[(p, k)] == 0.0 {
            return 0.0;
        }
        if p != k {
            a.swap_rows(p, k);
            det = -det;
        }
        let pivot = a[(k, k)];
        det *= pivot;
        for i in (k + 1)..n {
            let factor = a[(i, k)] / pivot;
            if factor != 0.0 {
                for j in (k + 1)..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= factor * v;
                }
            }
        }
    }
    det
}

pub fn submatrix(m: &DMatrix<f64>, set: &IndexSet) -> DMatrix<f64> {
    let idx = set.members();
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

pub fn principal_minor(m: &DMatrix<f64>, set: &IndexSet) -> f64 {
    assert!(*set.members().last().unwrap() < m.nrows(), "index set out of range");
    determinant(&submatrix(m, set))
}

/// Matrix with `row` and `col` deleted.
fn deleted(a: &DMatrix<f64>, row: usize, col: usize) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n - 1, n - 1, |r, c| {
        a[(if r < row { r } else { r + 1 }, if c < col { c } else { c + 1 })]
    })
}

/// Signed cofactor matrix, `co(A)_ij = (-1)^(i+j) det(A without row i, col j)`.
pub fn comatrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square() && a.nrows() >= 1, "comatrix of a non-square or empty matrix");
    let n = a.nrows();
    match n {
        1 => DMatrix::from_element(1, 1, 1.0),
        2 => DMatrix::from_row_slice(2, 2, &[a[(1, 1)], -a[(1, 0)], -a[(0, 1)], a[(0, 0)]]),
        _ => DMatrix::from_fn(n, n, |i, j| {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * determinant(&deleted(a, i, j))
        }),
    }
}

/// A principal minor together with its comatrix.
#[derive(Clone, Debug)]
pub struct MinorEvaluation {
    pub index_set: IndexSet,
    pub value: f64,
    pub comatrix: DMatrix<f64>,
}

impl MinorEvaluation {
    pub fn new(m: &DMatrix<f64>, set: IndexSet) -> Self {
        let sub = submatrix(m, &set);
        let value = determinant(&sub);
        let comatrix = comatrix(&sub);
        MinorEvaluation { index_set: set, value, comatrix }
    }

    /// Adds `trace(co_I * S_{I,alpha})` into `out[alpha]` for every moment
    /// index `alpha` at once.
    pub fn accumulate_gradient(&self, s: &MatrixStructure, out: &mut [f64]) {
        let idx = self.index_set.members();
        for (a, &r) in idx.iter().enumerate() {
            for (b, &c) in idx.iter().enumerate() {
                let w = self.comatrix[(b, a)];
                if w == 0.0 {
                    continue;
                }
                for &(coef, moment) in s.entry(r, c) {
                    out[moment] += w * coef;
                }
            }
        }
    }
}

/// `trace(co_I * S_{I,alpha})` for the single moment index `alpha`.
pub fn gradient_coefficient(me: &MinorEvaluation, s: &MatrixStructure, alpha: usize) -> f64 {
    let idx = me.index_set.members();
    let mut acc = 0.0;
    for (a, &r) in idx.iter().enumerate() {
        for (b, &c) in idx.iter().enumerate() {
            for &(coef, moment) in s.entry(r, c) {
                if moment == alpha {
                    acc += me.comatrix[(b, a)] * coef;
                }
            }
        }
    }
    acc
}
