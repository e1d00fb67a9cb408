//! Multi-indices and the graded monomial basis.
//!
//! Every matrix row/column and every KKT row in the crate is ordered by
//! [`MonomialBasis`], so the ordering here is part of the public contract:
//! total degree ascending, then larger leading exponents first
//! (`1, x1, x2, x1^2, x1*x2, x2^2, ...`).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

/// Exponent vector of a monomial `x^alpha`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit exponent `e_k` in `n` variables.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut e = vec![0; n];
        e[k] = 1;
        MultiIndex(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Total degree `|alpha|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Componentwise sum.
    ///
    /// Panics on a length mismatch; indices of different arity never meet in
    /// a well-formed problem.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.0.len(), other.0.len(), "multi-index length mismatch");
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `self >= other` componentwise.
    pub fn sub_checked(&self, other: &MultiIndex) -> Option<MultiIndex> {
        assert_eq!(self.0.len(), other.0.len(), "multi-index length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn scaled(&self, factor: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|e| e * factor).collect())
    }

    /// First variable with a nonzero exponent.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.0.iter().position(|&e| e > 0)
    }

    /// `x^alpha` at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .fold(1.0, |acc, (&e, &xi)| acc * xi.powi(e as i32))
    }

    /// Graded order used by [`MonomialBasis`].
    pub fn graded_cmp(&self, other: &MultiIndex) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// All monomials of degree at most `degree` in `n` variables, in graded order.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    nvars: usize,
    degree: u32,
    entries: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, degree: u32) -> Self {
        assert!(n >= 1, "basis needs at least one variable");
        let mut entries = Vec::with_capacity(binomial(n + degree as usize, n));
        for t in 0..=degree {
            let mut current = vec![0u32; n];
            push_compositions(t, 0, &mut current, &mut entries);
        }
        let position = entries
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        MonomialBasis {
            nvars: n,
            degree,
            entries,
            position,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MultiIndex] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.entries[i]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.entries.iter()
    }
}

/// Convenience wrapper matching the textbook signature `basis(n, d)`.
pub fn basis(n: usize, d: u32) -> MonomialBasis {
    MonomialBasis::new(n, d)
}

// Exponent vectors of total degree `remaining` over variables `k..`, emitted
// with larger leading exponents first.
fn push_compositions(remaining: u32, k: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let n = current.len();
    if k == n - 1 {
        current[k] = remaining;
        out.push(MultiIndex(current.clone()));
        current[k] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[k] = e;
        push_compositions(remaining - e, k + 1, current, out);
    }
    current[k] = 0;
}

/// `C(n, k)` in `usize`; exact for the sizes this crate deals with.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}
