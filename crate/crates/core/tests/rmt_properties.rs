use freeprob::rmt::{estimate_mixed_moments, EnsembleSpec, RotationGroup};
use freeprob::transforms::Measure;

fn words() -> Vec<Vec<u16>> {
    vec![
        vec![1, 2, 1, 2],
        vec![1, 1, 2, 2],
        vec![1, 2, 1, 2, 1, 2],
        vec![1, 2, 2, 1, 2, 2],
        vec![1, 1, 2, 1, 2, 2],
        vec![1, 2, 1, 1, 2, 2],
        vec![1, 2, 2, 2],
        vec![1, 1, 1, 1],
        vec![2, 2, 2, 2],
    ]
}

fn median_deviation(size: usize) -> f64 {
    let spec = EnsembleSpec::new(size, 16, Measure::bernoulli().smoothed(0.5), 11);
    let mut dev: Vec<f64> = estimate_mixed_moments(&words(), &spec)
        .unwrap()
        .iter()
        .map(|e| e.deviation)
        .collect();
    dev.sort_by(f64::total_cmp);
    dev[dev.len() / 2]
}

#[test]
fn deviation_shrinks_with_size() {
    let d: Vec<f64> = [128, 512, 1024].iter().map(|&n| median_deviation(n)).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn fixed_seed_reproduces_bitwise() {
    for rotation in [RotationGroup::Orthogonal, RotationGroup::Unitary] {
        let spec = EnsembleSpec::new(64, 3, Measure::bernoulli(), 5).with_rotation(rotation);
        let a = estimate_mixed_moments(&words(), &spec).unwrap();
        let b = estimate_mixed_moments(&words(), &spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
            assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
        let other = estimate_mixed_moments(&words(), &EnsembleSpec { seed: 6, ..spec.clone() }).unwrap();
        assert!(a.iter().zip(&other).any(|(x, y)| x.mean != y.mean));
    }
}
