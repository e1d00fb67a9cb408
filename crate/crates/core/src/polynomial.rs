//! Sparse multivariate polynomials with `f64` coefficients.

use std::collections::BTreeMap;

use crate::multiindex::MultiIndex;

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    // never holds an exact zero
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(nvars);
        p.add_term(MultiIndex::zero(nvars), c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// monomials are summed.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (alpha, c) in terms {
            p.add_term(alpha, c);
        }
        p
    }

    /// Adds `c * x^alpha`, dropping the monomial if it cancels to zero.
    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        assert_eq!(alpha.nvars(), self.nvars, "term arity does not match polynomial");
        use std::collections::btree_map::Entry;
        match self.terms.entry(alpha) {
            Entry::Vacant(v) => {
                if c != 0.0 {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, v)| (k, *v))
    }

    /// Terms in graded order (the order used for printing).
    pub fn graded_terms(&self) -> Vec<(&MultiIndex, f64)> {
        let mut v: Vec<_> = self.terms().collect();
        v.sort_by(|a, b| b.0.graded_cmp(a.0));
        v
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "point dimension does not match polynomial");
        self.terms.iter().map(|(a, c)| c * a.eval(x)).sum()
    }

    /// Largest total degree among stored terms; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    /// `ceil(degree / 2)`, the half-degree that fixes localizing-matrix sizes.
    pub fn half_degree(&self) -> Option<u32> {
        self.degree().map(|d| d.div_ceil(2))
    }

    /// `a * p + b * q`.
    pub fn linear_combine(a: f64, p: &Polynomial, b: f64, q: &Polynomial) -> Polynomial {
        assert_eq!(p.nvars, q.nvars, "polynomials over different variable counts");
        let mut out = Polynomial::zero(p.nvars);
        for (alpha, c) in p.terms() {
            if a != 0.0 {
                out.add_term(alpha.clone(), a * c);
            }
        }
        for (alpha, c) in q.terms() {
            if b != 0.0 {
                out.add_term(alpha.clone(), b * c);
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Polynomial {
        Polynomial::linear_combine(a, self, 0.0, self)
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        out.add_term(MultiIndex::zero(self.nvars), c);
        out
    }

    /// Partial derivative with respect to variable `k`.
    pub fn derivative(&self, k: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (alpha, c) in self.terms() {
            let e = alpha.exponents()[k];
            if e > 0 {
                let reduced = alpha
                    .sub_checked(&MultiIndex::unit(self.nvars, k))
                    .expect("positive exponent");
                out.add_term(reduced, c * e as f64);
            }
        }
        out
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nvars).map(|k| self.derivative(k).evaluate(x)).collect()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uni(coeffs: &[(u32, f64)]) -> Polynomial {
        Polynomial::from_terms(1, coeffs.iter().map(|&(e, c)| (MultiIndex::new(vec![e]), c)))
    }

    fn objective() -> Polynomial {
        uni(&[(4, 0.25), (3, 0.125), (2, -2.0), (1, -1.5), (0, 7.0)])
    }

    #[test]
    fn evaluates_univariate_objective() {
        assert_eq!(objective().evaluate(&[2.0]), 1.0);
        assert_eq!(objective().evaluate(&[-2.0]), 5.0);
        assert_eq!(Polynomial::zero(1).evaluate(&[3.0]), 0.0);
    }

    #[test]
    fn degrees() {
        let g = uni(&[(2, -1.0), (0, 5.0)]);
        assert_eq!(objective().degree(), Some(4));
        assert_eq!(g.degree(), Some(2));
        assert_eq!(Polynomial::constant(1, 7.0).degree(), Some(0));
        assert_eq!(g.half_degree(), Some(1));
        assert_eq!(uni(&[(3, 1.0)]).half_degree(), Some(2));
        assert_eq!(uni(&[(1, 2.0), (0, 1.0)]).half_degree(), Some(1));
        assert_eq!(Polynomial::zero(1).degree(), None);
    }

    #[test]
    fn linear_combinations() {
        let p = objective();
        assert!(Polynomial::linear_combine(1.0, &p, -1.0, &p).is_zero());

        let g = uni(&[(2, 1.0), (0, -5.0)]);
        let neg = Polynomial::linear_combine(-1.0, &g, 0.0, &p);
        assert_eq!(neg, uni(&[(2, -1.0), (0, 5.0)]));

        let sum = Polynomial::linear_combine(1.0, &uni(&[(2, 1.0)]), 1.0, &uni(&[(0, 5.0), (2, -1.0)]));
        assert_eq!(sum, Polynomial::constant(1, 5.0));
        assert_eq!(sum.num_terms(), 1);
    }

    #[test]
    fn derivative_of_objective() {
        let d = objective().derivative(0);
        // x^3 + 3/8 x^2 - 4x - 3/2
        assert_eq!(d.evaluate(&[2.0]), 8.0 + 1.5 - 8.0 - 1.5);
    }

    fn small_poly() -> impl Strategy<Value = Polynomial> {
        proptest::collection::vec(((0u32..4, 0u32..4), -5.0f64..5.0), 0..8).prop_map(|terms| {
            Polynomial::from_terms(
                2,
                terms
                    .into_iter()
                    .map(|((a, b), c)| (MultiIndex::new(vec![a, b]), c)),
            )
        })
    }

    proptest! {
        #[test]
        fn combine_commutes_with_evaluation(
            p in small_poly(), q in small_poly(),
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            x in -1.5f64..1.5, y in -1.5f64..1.5,
        ) {
            let pt = [x, y];
            let lhs = Polynomial::linear_combine(a, &p, b, &q).evaluate(&pt);
            let rhs = a * p.evaluate(&pt) + b * q.evaluate(&pt);
            let scale = 1.0 + (a * p.evaluate(&pt)).abs() + (b * q.evaluate(&pt)).abs()
                + p.coefficient_norm() * a.abs() * 50.0 + q.coefficient_norm() * b.abs() * 50.0;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn half_degree_brackets_degree(p in small_poly()) {
            if let (Some(d), Some(h)) = (p.degree(), p.half_degree()) {
                prop_assert!(d <= 2 * h && 2 * h <= d + 1);
            }
        }

        #[test]
        fn no_zero_coefficients_stored(p in small_poly(), q in small_poly()) {
            let r = Polynomial::linear_combine(1.0, &p, -1.0, &q);
            prop_assert!(r.terms().all(|(_, c)| c != 0.0));
        }
    }
}
