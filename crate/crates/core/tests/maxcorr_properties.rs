mod common;

use common::{positive_rational, rational, valid_law};
use freeprob::maxcorr::{correlation_sweep, max_correlation};
use freeprob::{Rational, Scalar};
use proptest::prelude::*;

fn pair() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4).prop_flat_map(|n| (1..n, Just(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn maximum_is_the_square_root_of_the_ratio(law in valid_law(8), (m, n) in pair(), d in 1usize..=4) {
        let report = max_correlation(m, n, d, &law).unwrap();
        prop_assert!(report.pass, "rho {} vs {}", report.rho_max, report.theoretical);
        prop_assert!(report.rho_max <= (m as f64 / n as f64).sqrt() + 1e-6);
    }

    #[test]
    fn invariant_under_dilation_and_shift(
        law in valid_law(6), (m, n) in pair(), d in 1usize..=3,
        alpha in positive_rational(), c in rational(),
    ) {
        let base = max_correlation(m, n, d, &law).unwrap().rho_max;
        let moved = max_correlation(m, n, d, &law.dilated(&alpha).shifted(&c)).unwrap().rho_max;
        prop_assert!((base - moved).abs() <= 1e-9, "{} vs {}", base, moved);
    }

    #[test]
    fn linear_correlation_is_exact(law in valid_law(2), (m, n) in pair()) {
        let report = max_correlation(m, n, 1, &law).unwrap();
        prop_assert_eq!(report.linear_rho_squared, Rational::ratio(m as i64, n as i64).to_string());
    }

    #[test]
    fn sweep_is_monotone_in_degree(law in valid_law(8), (m, n) in pair()) {
        let sweep = correlation_sweep(m, n, 4, &law).unwrap();
        for w in sweep.windows(2) {
            prop_assert!(w[1].1 >= w[0].1 - 1e-10, "{:?}", sweep);
        }
    }

    #[test]
    fn float_mode_agrees(law in valid_law(6), (m, n) in pair(), d in 1usize..=3) {
        let exact = max_correlation(m, n, d, &law).unwrap().rho_max;
        let float = max_correlation(m, n, d, &law.to_f64()).unwrap().rho_max;
        prop_assert!((exact - float).abs() <= 1e-8, "{} vs {}", exact, float);
    }
}
