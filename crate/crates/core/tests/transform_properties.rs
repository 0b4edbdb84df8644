mod common;

use common::valid_law;
use freeprob::moments::laws;
use freeprob::transforms::{
    density_from_cumulants, dilate_moments, free_convolve_moments, free_power, moments_of,
    DensityOptions, Measure,
};
use freeprob::{cumulants_to_moments, Rational, Scalar};
use num::complex::Complex64;
use proptest::prelude::*;

fn measure() -> impl Strategy<Value = Measure> {
    (0u8..5, -1.0f64..1.0, 0.2f64..2.0, 2usize..5).prop_map(|(kind, a, v, n)| match kind {
        0 => Measure::semicircular(a, v),
        1 => Measure::uniform(a - v, a + v),
        2 => Measure::bernoulli().smoothed(v),
        3 => Measure::FreePower {
            base: Box::new(Measure::bernoulli()),
            n,
        },
        _ => Measure::Dilated {
            base: Box::new(Measure::bernoulli().smoothed(v)),
            alpha: 1.0 / (n as f64).sqrt(),
        },
    })
}

fn symmetric_measure() -> impl Strategy<Value = Measure> {
    (0u8..3, 0.2f64..2.0).prop_map(|(kind, v)| match kind {
        0 => Measure::bernoulli(),
        1 => Measure::uniform(-v, v),
        _ => Measure::bernoulli().smoothed(v),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convolution_is_commutative_and_associative(a in valid_law(8), b in valid_law(8), c in valid_law(8)) {
        let (ma, mb, mc) = (cumulants_to_moments(&a), cumulants_to_moments(&b), cumulants_to_moments(&c));
        prop_assert_eq!(free_convolve_moments(&ma, &mb), free_convolve_moments(&mb, &ma));
        prop_assert_eq!(
            free_convolve_moments(&free_convolve_moments(&ma, &mb), &mc),
            free_convolve_moments(&ma, &free_convolve_moments(&mb, &mc))
        );
    }

    #[test]
    fn normalized_free_powers_keep_symmetry_and_variance(mu in symmetric_measure(), n in 1usize..=6) {
        let base = moments_of(&mu, 8);
        let m = dilate_moments(&free_power(&mu, n, 8).unwrap(), &(1.0 / (n as f64).sqrt())).unwrap();
        for r in (1..=8).step_by(2) {
            prop_assert!(m.get(r).unwrap().abs() <= 1e-12, "m_{} = {}", r, m.get(r).unwrap());
        }
        let (v, v0) = (m.get(2).unwrap(), base.get(2).unwrap());
        prop_assert!((v - v0).abs() <= 1e-12 * v0, "{} vs {}", v, v0);
    }

    #[test]
    fn cauchy_transform_maps_upper_to_lower(mu in measure(), re in -4.0f64..4.0, im in 1e-3f64..3.0) {
        let (g, _) = mu.cauchy(Complex64::new(re, im)).unwrap();
        prop_assert!(g.im < 0.0, "G = {}", g);
    }

    #[test]
    fn cauchy_transform_matches_moment_series_far_out(mu in measure(), angle in 0.1f64..3.0) {
        let (lo, hi) = mu.support_bound();
        let radius = lo.abs().max(hi.abs());
        let z = Complex64::from_polar(10.0 * radius, angle);
        let (g, _) = mu.cauchy(z).unwrap();
        let m = moments_of(&mu, 24).with_unit();
        let series: Complex64 = m.iter().enumerate().map(|(k, mk)| mk / z.powi(k as i32 + 1)).sum();
        prop_assert!((g - series).norm() <= 1e-6 / radius, "{} vs {}", g, series);
        prop_assert!((g * z - 1.0).norm() <= 0.2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn recovered_densities_reproduce_moments(kind in 0u8..2, mean in -2i64..=2, var in 1i64..=4, n in 2i64..=4) {
        let kappa = if kind == 0 {
            laws::semicircular(Rational::from_i64(mean), Rational::ratio(var, 2), 16)
        } else {
            laws::bernoulli::<Rational>(16).scaled(&Rational::from_i64(n))
        };
        let rec = density_from_cumulants(&kappa, &DensityOptions::default()).unwrap();
        prop_assert!((0.999..=1.001).contains(&rec.captured_mass), "mass {}", rec.captured_mass);
        let m = cumulants_to_moments(&kappa);
        for r in 1..=8 {
            let want = m.get(r).unwrap().to_f64();
            let got = rec.density.moment(r);
            prop_assert!((got - want).abs() <= 2e-3 * want.abs().max(1.0), "m_{}: {} vs {}", r, got, want);
        }
    }
}
