#![allow(dead_code)]

use freeprob::moments::laws;
use freeprob::{CumulantSequence, NCPolynomial, Rational, Scalar, Word};
use proptest::prelude::*;
use rand::Rng;

pub fn q(p: i64, d: i64) -> Rational {
    Rational::ratio(p, d)
}

pub fn rational() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=6).prop_map(|(p, d)| q(p, d))
}

pub fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=12, 1i64..=6).prop_map(|(p, d)| q(p, d))
}

/// Laws with genuine (positive-definite) distributions: semicircular,
/// an affine image of Bernoulli, or Bernoulli smoothed by a semicircle.
pub fn valid_law(order: usize) -> impl Strategy<Value = CumulantSequence<Rational>> {
    (0u8..3, rational(), positive_rational()).prop_map(move |(kind, a, b)| match kind {
        0 => laws::semicircular(a, b, order),
        1 => laws::bernoulli::<Rational>(order).dilated(&b).shifted(&a),
        _ => laws::bernoulli::<Rational>(order)
            .add(&laws::semicircular(Rational::from_i64(0), b, order))
            .shifted(&a),
    })
}

pub fn word(labels: u16, max_len: usize) -> impl Strategy<Value = Vec<u16>> {
    prop::collection::vec(1..=labels, 1..=max_len)
}

pub fn polynomial(labels: u16, max_degree: usize) -> impl Strategy<Value = NCPolynomial<Rational>> {
    prop::collection::vec((prop::collection::vec(1..=labels, 0..=max_degree), rational()), 1..6)
        .prop_map(|terms| NCPolynomial::from_terms(terms.into_iter().map(|(w, c)| (Word::new(w), c))))
}

/// A random rational polynomial of degree `≤ max_degree` in `x_1..x_n`.
pub fn random_polynomial<R: Rng>(rng: &mut R, n: u16, max_degree: usize) -> NCPolynomial<Rational> {
    let terms = rng.gen_range(1..=6);
    let mut p = NCPolynomial::zero();
    for _ in 0..terms {
        let len = rng.gen_range(0..=max_degree);
        let w: Vec<u16> = (0..len).map(|_| rng.gen_range(1..=n)).collect();
        let c = q(rng.gen_range(-9..=9), rng.gen_range(1..=5));
        p.add_term(Word::new(w), c);
    }
    if p.is_zero() {
        p = NCPolynomial::letter(1);
    }
    p
}
