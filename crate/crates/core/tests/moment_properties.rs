mod common;

use common::{polynomial, q, rational, valid_law, word};
use freeprob::moments::{laws, reference};
use freeprob::{
    cumulants_to_moments, moments_to_cumulants, CumulantSequence, FreeFamily, MomentSequence,
    Rational, Scalar,
};
use num::Zero;
use proptest::prelude::*;

fn family(laws: Vec<CumulantSequence<Rational>>) -> FreeFamily<Rational> {
    FreeFamily::new(laws).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_exact(values in prop::collection::vec(rational(), 1..=10)) {
        let m = MomentSequence::new(values);
        prop_assert_eq!(cumulants_to_moments(&moments_to_cumulants(&m)), m.clone());
        let k = CumulantSequence::new(m.values().to_vec());
        prop_assert_eq!(moments_to_cumulants(&cumulants_to_moments(&k)), k);
    }

    #[test]
    fn recursions_agree_with_enumeration(values in prop::collection::vec(rational(), 1..=8)) {
        let m = MomentSequence::new(values);
        prop_assert_eq!(moments_to_cumulants(&m), reference::moments_to_cumulants(&m).unwrap());
        let k = CumulantSequence::new(m.values().to_vec());
        prop_assert_eq!(cumulants_to_moments(&k), reference::cumulants_to_moments(&k).unwrap());
    }

    #[test]
    fn single_letter_words_give_the_law(law in valid_law(8), r in 1usize..=8) {
        let fam = family(vec![law.clone()]);
        let expected = cumulants_to_moments(&law).get(r).unwrap();
        prop_assert_eq!(fam.mixed_moment(&vec![1; r]).unwrap(), expected);
    }

    #[test]
    fn interval_recursion_matches_filtered_enumeration(
        a in valid_law(8), b in valid_law(8), c in valid_law(8), w in word(3, 8),
    ) {
        let fam = family(vec![a, b, c]);
        prop_assert_eq!(fam.mixed_moment(&w).unwrap(), reference::mixed_moment(&w, &fam).unwrap());
    }

    #[test]
    fn moments_are_cyclic(a in valid_law(8), b in valid_law(8), c in valid_law(8), w in word(3, 8)) {
        let fam = family(vec![a, b, c]);
        let base = fam.mixed_moment(&w).unwrap();
        for s in 1..w.len() {
            let mut rotated = w.clone();
            rotated.rotate_left(s);
            prop_assert_eq!(fam.mixed_moment(&rotated).unwrap(), base.clone());
        }
    }

    #[test]
    fn centered_alternating_words_vanish(a in valid_law(6), b in valid_law(6), len in 2usize..=6) {
        let zero = Rational::zero();
        let fam = family(vec![a.shifted(&-a.values()[0].clone()), b.shifted(&-b.values()[0].clone())]);
        prop_assert_eq!(fam.law(1).unwrap().values()[0].clone(), zero.clone());
        let w: Vec<u16> = (0..len).map(|i| 1 + (i % 2) as u16).collect();
        prop_assert_eq!(fam.mixed_moment(&w).unwrap(), zero);
    }

    #[test]
    fn named_laws_have_psd_hankel(law in valid_law(10)) {
        prop_assert!(cumulants_to_moments(&law).hankel_is_psd());
    }

    #[test]
    fn trace_of_square_is_nonnegative(a in valid_law(6), b in valid_law(6), p in polynomial(2, 3)) {
        let fam = family(vec![a, b]);
        prop_assert!(fam.norm_squared(&p).unwrap() >= Rational::zero());
        prop_assert!(fam.trace(&p.adjoint().multiply(&p)).unwrap() >= Rational::zero());
        let pf = p.to_f64();
        let ff = FreeFamily::new(vec![fam.law(1).unwrap().to_f64(), fam.law(2).unwrap().to_f64()]).unwrap();
        prop_assert!(ff.norm_squared(&pf).unwrap() >= -1e-10);
    }

    #[test]
    fn trace_is_tracial(a in valid_law(6), b in valid_law(6), p in polynomial(2, 3), r in polynomial(2, 3)) {
        let fam = family(vec![a, b]);
        prop_assert_eq!(fam.trace(&p.multiply(&r)).unwrap(), fam.trace(&r.multiply(&p)).unwrap());
    }

    #[test]
    fn centering_is_idempotent(a in valid_law(6), b in valid_law(6), p in polynomial(2, 3)) {
        let fam = family(vec![a, b]);
        let c = fam.center(&p).unwrap();
        prop_assert!(fam.trace(&c).unwrap().is_zero());
        prop_assert_eq!(fam.center(&c).unwrap(), c);
    }
}

#[test]
fn hankel_rejects_negative_variance() {
    let m = MomentSequence::new(vec![q(0, 1), q(-1, 1)]);
    assert!(!m.hankel_is_psd());
    for law in [
        laws::semicircular(q(0, 1), q(1, 1), 10),
        laws::bernoulli::<Rational>(10),
        laws::point_mass(q(3, 2), 10),
    ] {
        assert!(cumulants_to_moments(&law).hankel_is_psd());
    }
}

#[test]
fn float_mode_follows_exact_mode() {
    let law = laws::bernoulli::<Rational>(10).add(&laws::semicircular(q(0, 1), q(1, 2), 10));
    let exact = cumulants_to_moments(&law);
    let float = cumulants_to_moments(&law.to_f64());
    for (a, b) in exact.values().iter().zip(float.values()) {
        assert!((a.to_f64() - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}
