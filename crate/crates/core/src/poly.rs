//! Multivariate polynomials and polynomial vector fields.
//!
//! Terms are stored densely (one exponent per variable) and kept in graded
//! lexicographic order: total degree ascending, then exponent vectors in
//! descending lexicographic order, so `1 < x1 < x2 < x1^2 < x1 x2 < x2^2`.
//! Duplicate monomials are merged on construction and exact zeros dropped.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::VectorField;

/// Graded lexicographic comparison of two exponent vectors of equal length.
pub fn grlex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    let da: f64 = a.iter().sum();
    let db: f64 = b.iter().sum();
    da.total_cmp(&db).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            match y.total_cmp(x) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    })
}

/// A generalized monomial `prod_k x_k^{e_k}` with real exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    exponents: Vec<f64>,
}

impl Monomial {
    pub fn new(exponents: Vec<f64>) -> Result<Self> {
        if let Some(e) = exponents.iter().find(|e| !e.is_finite()) {
            return Err(Error::RejectedInput(format!("non-finite exponent {e}")));
        }
        Ok(Monomial { exponents })
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn total_degree(&self) -> f64 {
        self.exponents.iter().sum()
    }

    /// Evaluates on the open positive orthant.
    pub fn eval_positive(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.exponents.len() {
            return Err(Error::DimensionMismatch {
                expected: self.exponents.len(),
                got: x.len(),
            });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositive { index, value });
        }
        Ok(eval_generalized(&self.exponents, x))
    }
}

/// `prod_k x_k^{e_k}` without validation. Integer exponents use `powi`.
#[inline]
pub(crate) fn eval_generalized(exponents: &[f64], x: &[f64]) -> f64 {
    let mut p = 1.0;
    for (&e, &v) in exponents.iter().zip(x) {
        if e == 0.0 {
            continue;
        }
        if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
            p *= v.powi(e as i32);
        } else {
            p *= v.powf(e);
        }
    }
    p
}

/// One term `coeff * prod_k x_k^{exponents[k]}` of a standard polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        let mut p = self.coeff;
        for (&e, &v) in self.exponents.iter().zip(x) {
            if e != 0 {
                p *= v.powi(e as i32);
            }
        }
        p
    }
}

fn grlex_cmp_u32(a: &[u32], b: &[u32]) -> Ordering {
    let da: u64 = a.iter().map(|&e| e as u64).sum();
    let db: u64 = b.iter().map(|&e| e as u64).sum();
    da.cmp(&db).then_with(|| b.cmp(a))
}

/// A polynomial in `n` variables with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: Vec::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_terms(n, vec![(c, vec![0; n])]).expect("constant polynomial is valid")
    }

    /// The coordinate polynomial `x_i`.
    pub fn variable(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::from_terms(n, vec![(1.0, e)]).expect("variable polynomial is valid")
    }

    /// Builds a polynomial, merging duplicate monomials and dropping zeros.
    pub fn from_terms(n: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        let mut merged: HashMap<Vec<u32>, f64> = HashMap::with_capacity(terms.len());
        for (c, e) in terms {
            if e.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: e.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::RejectedInput(format!("non-finite coefficient {c}")));
            }
            *merged.entry(e).or_insert(0.0) += c;
        }
        let mut terms: Vec<Term> = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exponents, coeff)| Term { coeff, exponents })
            .collect();
        terms.sort_by(|a, b| grlex_cmp_u32(&a.exponents, &b.exponents));
        Ok(Polynomial { n, terms })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    fn raw_terms(&self) -> impl Iterator<Item = (f64, Vec<u32>)> + '_ {
        self.terms.iter().map(|t| (t.coeff, t.exponents.clone()))
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        Polynomial::from_terms(self.n, self.raw_terms().chain(other.raw_terms()).collect())
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial::from_terms(self.n, self.raw_terms().map(|(a, e)| (a * c, e)).collect())
            .expect("scaling preserves validity")
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let e = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                out.push((a.coeff * b.coeff, e));
            }
        }
        Polynomial::from_terms(self.n, out)
    }

    /// Returns `q(y) = p(y + shift)`, expanded binomially.
    pub fn translate(&self, shift: &[f64]) -> Result<Polynomial> {
        if shift.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: shift.len(),
            });
        }
        let mut out: Vec<(f64, Vec<u32>)> = Vec::new();
        for t in &self.terms {
            // Expand prod_k (y_k + s_k)^{e_k} one variable at a time.
            let mut partial: Vec<(f64, Vec<u32>)> = vec![(t.coeff, vec![0; self.n])];
            for (k, &e) in t.exponents.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                for (c, exps) in &partial {
                    for j in 0..=e {
                        let w = binomial_f64(e, j) * shift[k].powi((e - j) as i32);
                        if w == 0.0 {
                            continue;
                        }
                        let mut ne = exps.clone();
                        ne[k] = j;
                        next.push((c * w, ne));
                    }
                }
                partial = next;
            }
            out.extend(partial);
        }
        Polynomial::from_terms(self.n, out)
    }

    fn check_dim(&self, other: &Polynomial) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A polynomial vector field `x' = phi(x)` on `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldDoc", into = "FieldDoc")]
pub struct PolynomialField {
    n: usize,
    components: Vec<Polynomial>,
}

impl PolynomialField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::RejectedInput("field has no components".into()));
        }
        if let Some(p) = components.iter().find(|p| p.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.dim(),
            });
        }
        Ok(PolynomialField { n, components })
    }

    /// Builds a field from raw `(coefficient, exponents)` lists, one per component.
    pub fn from_terms(components: Vec<Vec<(f64, Vec<u32>)>>) -> Result<Self> {
        let n = components.len();
        let comps = components
            .into_iter()
            .map(|c| Polynomial::from_terms(n, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn zero(n: usize) -> Self {
        PolynomialField {
            n,
            components: vec![Polynomial::zero(n); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    /// Evaluates `phi(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.components.iter().map(|p| p.eval(x)).collect())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PolynomialField) -> Result<PolynomialField> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        PolynomialField::new(comps)
    }

    pub fn scale(&self, c: f64) -> PolynomialField {
        PolynomialField {
            n: self.n,
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// The field `y -> phi(y + shift)`.
    pub fn translate(&self, shift: &[f64]) -> Result<PolynomialField> {
        let comps = self
            .components
            .iter()
            .map(|p| p.translate(shift))
            .collect::<Result<Vec<_>>>()?;
        PolynomialField::new(comps)
    }

    /// `sum_i x_i phi_i(x)` at a point of the unit sphere.
    pub fn tangency_residual(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if (r2 - 1.0).abs() > 1e-12 {
            return Err(Error::RejectedInput(format!(
                "point is off the unit sphere (|x|^2 = {r2})"
            )));
        }
        Ok(self.radial_product(x))
    }

    /// `sum_i x_i phi_i(x)` at any point.
    pub(crate) fn radial_product(&self, x: &[f64]) -> f64 {
        self.components.iter().zip(x).map(|(p, xi)| xi * p.eval(x)).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&FieldDoc::from(self)).expect("field serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: FieldDoc = serde_json::from_str(s)?;
        doc.try_into()
    }
}

impl VectorField for PolynomialField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_into(&self, x: &[f64], dx: &mut [f64]) {
        for (d, p) in dx.iter_mut().zip(&self.components) {
            *d = p.eval(x);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    c: f64,
    e: Vec<u32>,
}

/// Wire format: `{"n": int, "components": [[{"c": float, "e": [int, ...]}, ...], ...]}`.
#[derive(Serialize, Deserialize)]
pub(crate) struct FieldDoc {
    n: usize,
    components: Vec<Vec<TermDoc>>,
}

impl From<&PolynomialField> for FieldDoc {
    fn from(f: &PolynomialField) -> Self {
        FieldDoc {
            n: f.n,
            components: f
                .components
                .iter()
                .map(|p| {
                    p.terms
                        .iter()
                        .map(|t| TermDoc {
                            c: t.coeff,
                            e: t.exponents.clone(),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl From<PolynomialField> for FieldDoc {
    fn from(f: PolynomialField) -> Self {
        FieldDoc::from(&f)
    }
}

impl TryFrom<FieldDoc> for PolynomialField {
    type Error = Error;

    fn try_from(doc: FieldDoc) -> Result<Self> {
        if doc.components.len() != doc.n {
            return Err(Error::RejectedInput(format!(
                "field declares n = {} but has {} components",
                doc.n,
                doc.components.len()
            )));
        }
        PolynomialField::from_terms(
            doc.components
                .into_iter()
                .map(|c| c.into_iter().map(|t| (t.c, t.e)).collect())
                .collect(),
        )
    }
}

/// Number of monomials of total degree at most `d` in `n` variables, `C(n + d, n)`.
pub fn count_monomials(n: u32, d: u32) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::RejectedInput("n must be at least 1".into()));
    }
    let mut acc = BigUint::from(1u32);
    // acc = C(d + i, i) after step i; each division is exact.
    for i in 1..=n {
        acc *= BigUint::from(d + i);
        acc /= BigUint::from(i);
    }
    Ok(acc)
}

/// Upper bound on the replicator game size for a degree-`d` field in `n`
/// variables: one action per possible monomial plus one.
pub fn game_size_bound(n: u32, d: u32) -> Result<BigUint> {
    Ok(count_monomials(n, d)? + 1u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation() -> PolynomialField {
        PolynomialField::from_terms(vec![vec![(-1.0, vec![0, 1])], vec![(1.0, vec![1, 0])]]).unwrap()
    }

    #[test]
    fn eval_rotation_field() {
        assert_eq!(rotation().eval(&[2.0, 0.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn eval_zero_and_square() {
        assert_eq!(PolynomialField::zero(3).eval(&[1.0, -2.0, 5.0]).unwrap(), vec![0.0; 3]);
        let sq = PolynomialField::from_terms(vec![vec![(1.0, vec![2])]]).unwrap();
        assert_eq!(sq.eval(&[3.0]).unwrap(), vec![9.0]);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        assert!(matches!(
            rotation().eval(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn tangency_examples() {
        let rot = rotation();
        assert_eq!(rot.tangency_residual(&[1.0, 0.0]).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(rot.tangency_residual(&[h, h]).unwrap().abs() < 1e-15);
        let radial = PolynomialField::from_terms(vec![vec![(1.0, vec![1, 0])], vec![(1.0, vec![0, 1])]]).unwrap();
        assert_eq!(radial.tangency_residual(&[1.0, 0.0]).unwrap(), 1.0);
        assert!(rot.tangency_residual(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn duplicates_merge_and_zeros_vanish() {
        let p = Polynomial::from_terms(2, vec![(1.0, vec![1, 1]), (2.0, vec![1, 1]), (0.0, vec![5, 0])]).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].coeff, 3.0);
        assert_eq!(p.degree(), 2);
        let cancel = Polynomial::from_terms(1, vec![(1.0, vec![3]), (-1.0, vec![3])]).unwrap();
        assert!(cancel.is_zero());
        assert_eq!(cancel.degree(), 0);
    }

    #[test]
    fn grlex_order() {
        let p = Polynomial::from_terms(
            2,
            vec![
                (1.0, vec![0, 2]),
                (1.0, vec![1, 1]),
                (1.0, vec![2, 0]),
                (1.0, vec![0, 1]),
                (1.0, vec![1, 0]),
                (1.0, vec![0, 0]),
            ],
        )
        .unwrap();
        let order: Vec<Vec<u32>> = p.terms().iter().map(|t| t.exponents.clone()).collect();
        assert_eq!(
            order,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(grlex_cmp(&[1.0, 0.0], &[0.0, 1.0]), Ordering::Less);
        assert_eq!(grlex_cmp(&[-1.0, 0.0], &[0.0, 0.0]), Ordering::Less);
    }

    #[test]
    fn translate_matches_shifted_evaluation() {
        let p = Polynomial::from_terms(2, vec![(2.0, vec![3, 1]), (-1.0, vec![0, 2]), (4.0, vec![0, 0])]).unwrap();
        let s = [1.5, -0.5];
        let q = p.translate(&s).unwrap();
        for y in [[0.3, 0.7], [-2.0, 1.0], [4.0, 4.0]] {
            let direct = p.eval(&[y[0] + s[0], y[1] + s[1]]);
            assert!((q.eval(&y) - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn count_small_cases() {
        assert_eq!(count_monomials(1, 1).unwrap(), BigUint::from(2u32));
        assert_eq!(count_monomials(2, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(count_monomials(3, 0).unwrap(), BigUint::from(1u32));
        assert!(count_monomials(0, 4).is_err());
    }

    #[test]
    fn generalized_monomial_needs_positive_input() {
        let m = Monomial::new(vec![-1.0, 0.5]).unwrap();
        assert!((m.eval_positive(&[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            m.eval_positive(&[0.0, 4.0]),
            Err(Error::NonPositive { index: 0, .. })
        ));
        assert!(Monomial::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = PolynomialField::from_terms(vec![
            vec![(1.5, vec![2, 0]), (-1.0, vec![0, 0])],
            vec![(0.25, vec![1, 3])],
        ])
        .unwrap();
        let back = PolynomialField::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
        assert!(PolynomialField::from_json(r#"{"n": 2, "components": [[]]}"#).is_err());
        assert!(PolynomialField::from_json(r#"{"n": 1, "components": [[{"c": 1.0, "e": [1, 2]}]]}"#).is_err());
    }
}
