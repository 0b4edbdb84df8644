//! Noncommutative polynomials in self-adjoint free letters.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{domain, Error, Result};
use crate::moments::{FreeFamily, Label};
use crate::scalar::Scalar;

/// A monomial `x_{i_1}⋯x_{i_r}`; the empty word is the unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Label>);

impl Word {
    pub fn new(letters: Vec<Label>) -> Self {
        Self(letters)
    }

    pub fn unit() -> Self {
        Self(Vec::new())
    }

    pub fn letters(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Adjoint of a word in self-adjoint letters: reversal.
    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn relabeled(&self, map: impl Fn(Label) -> Label) -> Self {
        Self(self.0.iter().map(|&l| map(l)).collect())
    }
}

/// Graded lexicographic: shorter words first, then lexicographic.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("·")?;
            }
            write!(f, "x{l}")?;
        }
        Ok(())
    }
}

/// Finite linear combination of words; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct NCPolynomial<S> {
    terms: BTreeMap<Word, S>,
}

impl<S: Scalar> Default for NCPolynomial<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> NCPolynomial<S> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(S::one())
    }

    pub fn constant(c: S) -> Self {
        Self::monomial(Word::unit(), c)
    }

    pub fn letter(label: Label) -> Self {
        Self::monomial(Word::new(vec![label]), S::one())
    }

    pub fn monomial(word: Word, coeff: S) -> Self {
        let mut p = Self::zero();
        p.add_term(word, coeff);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Word, S)>) -> Self {
        let mut p = Self::zero();
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p
    }

    /// Adds `coeff·word`, collecting like words.
    pub fn add_term(&mut self, word: Word, coeff: S) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &Word) -> S {
        self.terms.get(word).cloned().unwrap_or_else(S::zero)
    }

    /// Coefficient of the unit word.
    pub fn constant_term(&self) -> S {
        self.coefficient(&Word::unit())
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    /// Letters that occur in some word.
    pub fn letters(&self) -> BTreeSet<Label> {
        self.terms
            .keys()
            .flat_map(|w| w.letters().iter().copied())
            .collect()
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, v)| (w.clone(), v.clone() * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), -c.clone());
        }
        out
    }

    /// Bilinear extension of word concatenation.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.concat(v), a.clone() * b);
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc.multiply(self);
        }
        acc
    }

    /// `p*`: words reversed; real coefficients are their own conjugates.
    pub fn adjoint(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.reversed(), c.clone())))
    }

    /// Applies a letter substitution to every word.
    pub fn relabeled(&self, map: impl Fn(Label) -> Label) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.relabeled(&map), c.clone())))
    }

    /// Substitutes this polynomial into `Σ coeffs[k] t^k`.
    pub fn compose_univariate(&self, coeffs: &[S]) -> Self {
        let mut out = Self::zero();
        let mut power = Self::one();
        for (k, c) in coeffs.iter().enumerate() {
            if k > 0 {
                power = power.multiply(self);
            }
            out = out.add(&power.scale(c));
        }
        out
    }

    pub fn to_f64(&self) -> NCPolynomial<f64> {
        NCPolynomial::from_terms(self.terms.iter().map(|(w, c)| (w.clone(), c.to_f64())))
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coefficient(&self) -> S {
        self.terms
            .values()
            .map(Scalar::abs_val)
            .fold(S::zero(), |acc, v| if v > acc { v } else { acc })
    }

    /// Reads a list of `{word: [labels], coeff}` records.
    pub fn from_json(value: &Value) -> Result<Self> {
        let records = value
            .as_array()
            .ok_or_else(|| Error::Parse("polynomial must be a list of terms".into()))?;
        let mut p = Self::zero();
        for rec in records {
            let word = rec
                .get("word")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse("term without `word`".into()))?
                .iter()
                .map(|l| {
                    l.as_u64()
                        .filter(|&x| x >= 1 && x <= Label::MAX as u64)
                        .map(|x| x as Label)
                        .ok_or_else(|| Error::Parse(format!("bad letter {l}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let coeff = S::from_json(
                rec.get("coeff")
                    .ok_or_else(|| Error::Parse("term without `coeff`".into()))?,
            )?;
            p.add_term(Word::new(word), coeff);
        }
        Ok(p)
    }
}

impl<S: Scalar> Serialize for NCPolynomial<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (w, c) in &self.terms {
            seq.serialize_element(&json!({ "word": w.letters(), "coeff": c.to_json() }))?;
        }
        seq.end()
    }
}

impl<S: Scalar> fmt::Display for NCPolynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})·{w}")?;
        }
        Ok(())
    }
}

/// `s_k = x_1 + ⋯ + x_k`.
pub fn expand_sum<S: Scalar>(k: usize) -> Result<NCPolynomial<S>> {
    if k == 0 {
        return domain("partial sum index must be positive");
    }
    Ok(NCPolynomial::from_terms(
        (1..=k as Label).map(|l| (Word::new(vec![l]), S::one())),
    ))
}

/// Generators of a sub-algebra: a set of letters, or a single partial sum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generators {
    Letters(BTreeSet<Label>),
    Sum(usize),
}

impl Generators {
    pub fn letters(labels: impl IntoIterator<Item = Label>) -> Self {
        Self::Letters(labels.into_iter().collect())
    }

    /// Letters that polynomials in these generators may contain.
    pub fn support(&self) -> BTreeSet<Label> {
        match self {
            Generators::Letters(set) => set.clone(),
            Generators::Sum(k) => (1..=*k as Label).collect(),
        }
    }
}

impl fmt::Display for Generators {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generators::Letters(set) => {
                f.write_str("{")?;
                for (k, l) in set.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{l}")?;
                }
                f.write_str("}")
            }
            Generators::Sum(k) => write!(f, "s_{k}"),
        }
    }
}

/// All words of length `1..=max_degree` in the given letters, graded-lex.
pub fn words_up_to(letters: &BTreeSet<Label>, max_degree: usize) -> Vec<Word> {
    let letters: Vec<Label> = letters.iter().copied().collect();
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Label>> = vec![Vec::new()];
    for _ in 0..max_degree {
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for &l in &letters {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(Word::new));
        layer = next;
    }
    out
}

impl<S: Scalar> FreeFamily<S> {
    /// Linear extension of the mixed moment.
    pub fn trace(&self, p: &NCPolynomial<S>) -> Result<S> {
        let mut total = S::zero();
        for (w, c) in p.terms() {
            total = total + c.clone() * &self.mixed_moment(w.letters())?;
        }
        Ok(total)
    }

    /// `⟨p, q⟩ = τ(p* q)`.
    pub fn inner_product(&self, p: &NCPolynomial<S>, q: &NCPolynomial<S>) -> Result<S> {
        let mut total = S::zero();
        for (u, a) in p.terms() {
            let ur = u.reversed();
            for (v, b) in q.terms() {
                let m = self.mixed_moment(ur.concat(v).letters())?;
                total = total + a.clone() * b * &m;
            }
        }
        Ok(total)
    }

    pub fn norm_squared(&self, p: &NCPolynomial<S>) -> Result<S> {
        self.inner_product(p, p)
    }

    /// `p − τ(p)·1`.
    pub fn center(&self, p: &NCPolynomial<S>) -> Result<NCPolynomial<S>> {
        let t = self.trace(p)?;
        Ok(p.sub(&NCPolynomial::constant(t)))
    }

    /// `cov(p, q) = ⟨p − τ(p), q − τ(q)⟩`.
    pub fn covariance(&self, p: &NCPolynomial<S>, q: &NCPolynomial<S>) -> Result<S> {
        let pq = self.inner_product(p, q)?;
        Ok(pq - self.trace(&p.adjoint())? * &self.trace(q)?)
    }

    /// Centered monomials of degree `1..=max_degree` in the generators.
    ///
    /// Letter sets give every word; a partial sum `s_k` gives its powers.
    pub fn monomial_basis(
        &self,
        generators: &Generators,
        max_degree: usize,
    ) -> Result<Vec<NCPolynomial<S>>> {
        if max_degree == 0 {
            return domain("basis degree must be at least 1");
        }
        match generators {
            Generators::Letters(set) => {
                for &l in set {
                    self.law(l)?;
                }
                words_up_to(set, max_degree)
                    .into_iter()
                    .map(|w| {
                        let tau = self.mixed_moment(w.letters())?;
                        let mut p = NCPolynomial::monomial(w, S::one());
                        p.add_term(Word::unit(), -tau);
                        Ok(p)
                    })
                    .collect()
            }
            Generators::Sum(k) => {
                if *k > self.len() {
                    return domain(format!("s_{k} needs {k} letters, family has {}", self.len()));
                }
                let s = expand_sum::<S>(*k)?;
                let mut out = Vec::with_capacity(max_degree);
                let mut power = NCPolynomial::one();
                for _ in 0..max_degree {
                    power = power.multiply(&s);
                    out.push(self.center(&power)?);
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::laws;
    use crate::scalar::Rational;

    fn q(p: i64, d: i64) -> Rational {
        Rational::ratio(p, d)
    }

    fn x(l: Label) -> NCPolynomial<Rational> {
        NCPolynomial::letter(l)
    }

    #[test]
    fn multiplication_examples() {
        let p = x(1).add(&x(2).scale(&q(3, 1)));
        assert_eq!(NCPolynomial::one().multiply(&p), p);
        assert_eq!(
            x(1).multiply(&x(2)),
            NCPolynomial::monomial(Word::new(vec![1, 2]), q(1, 1))
        );
        let s = expand_sum::<Rational>(2).unwrap();
        let sq = s.multiply(&s);
        assert_eq!(sq.num_terms(), 4);
        for w in [[1, 1], [1, 2], [2, 1], [2, 2]] {
            assert_eq!(sq.coefficient(&Word::new(w.to_vec())), q(1, 1));
        }
    }

    #[test]
    fn expand_sum_examples() {
        assert_eq!(expand_sum::<Rational>(1).unwrap(), x(1));
        assert_eq!(expand_sum::<Rational>(2).unwrap(), x(1).add(&x(2)));
        assert!(expand_sum::<Rational>(0).is_err());
        // s_3^2 has 3^2 distinct words, all with coefficient one.
        let s3 = expand_sum::<Rational>(3).unwrap();
        assert_eq!(s3.pow(2).num_terms(), 9);
        assert_eq!(s3.pow(3).num_terms(), 27);
    }

    #[test]
    fn graded_lex_order() {
        let p = NCPolynomial::from_terms(vec![
            (Word::new(vec![2]), q(1, 1)),
            (Word::new(vec![1, 1]), q(1, 1)),
            (Word::unit(), q(1, 1)),
            (Word::new(vec![1]), q(1, 1)),
        ]);
        let order: Vec<String> = p.terms().map(|(w, _)| w.to_string()).collect();
        assert_eq!(order, ["1", "x1", "x2", "x1·x1"]);
    }

    #[test]
    fn adjoint_is_involutive() {
        let p = NCPolynomial::from_terms(vec![
            (Word::new(vec![1, 2, 2]), q(2, 3)),
            (Word::new(vec![2, 1]), q(-1, 1)),
        ]);
        assert_eq!(p.adjoint().adjoint(), p);
        assert_eq!(p.adjoint().coefficient(&Word::new(vec![2, 2, 1])), q(2, 3));
    }

    #[test]
    fn inner_products() {
        let law = laws::semicircular(q(1, 2), q(1, 1), 6);
        let fam = FreeFamily::iid(law, 3).unwrap();
        let one = NCPolynomial::<Rational>::one();
        assert_eq!(fam.inner_product(&one, &one).unwrap(), q(1, 1));
        // Free letters: ⟨x1, x2⟩ = τ(x1)τ(x2).
        assert_eq!(fam.inner_product(&x(1), &x(2)).unwrap(), q(1, 4));
        let s = expand_sum::<Rational>(3).unwrap();
        let centered = fam.center(&s).unwrap();
        assert_eq!(fam.norm_squared(&centered).unwrap(), q(3, 1));
        assert_eq!(fam.trace(&centered).unwrap(), q(0, 1));
    }

    #[test]
    fn basis_examples() {
        let fam = FreeFamily::iid(laws::semicircular(q(0, 1), q(1, 1), 6), 3).unwrap();
        let basis = fam.monomial_basis(&Generators::Sum(2), 2).unwrap();
        let s = expand_sum::<Rational>(2).unwrap();
        assert_eq!(basis[0], s);
        assert_eq!(basis[1], s.pow(2).sub(&NCPolynomial::constant(q(2, 1))));
        let letters = fam.monomial_basis(&Generators::letters([1, 2]), 2).unwrap();
        assert_eq!(letters.len(), 6);
        assert!(fam.monomial_basis(&Generators::Sum(4), 1).is_err());
        assert!(fam.monomial_basis(&Generators::letters([1]), 0).is_err());
    }

    #[test]
    fn json_terms() {
        let p = NCPolynomial::from_terms(vec![(Word::new(vec![1, 2]), q(1, 2))]);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v, serde_json::json!([{ "word": [1, 2], "coeff": "1/2" }]));
        assert_eq!(NCPolynomial::<Rational>::from_json(&v).unwrap(), p);
    }
}
