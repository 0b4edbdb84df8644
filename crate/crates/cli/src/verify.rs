//! `verify`: the invariant suite over seeded random corpora. `--quick` shrinks
//! every corpus and the random matrices.

use std::collections::BTreeSet;

use freeprob::info::{
    entropy_via_fisher, fisher_information, free_entropy, monotonicity_report, FisherIntegralOptions,
    MonotonicityOptions,
};
use freeprob::maxcorr::{max_correlation, smoothed_bernoulli};
use freeprob::moments::laws;
use freeprob::nc_lattice::catalan;
use freeprob::projections::{symmetrize, ProjectionEngine};
use freeprob::rmt::{empirical_max_correlation, estimate_mixed_moments, EnsembleSpec, RotationGroup};
use freeprob::transforms::{cumulants_of, density_from_cumulants, free_convolve_moments, DensityOptions, Measure};
use freeprob::{
    cumulants_to_moments, enumerate_nc, moebius_to_top, moments_to_cumulants, CumulantSequence,
    FreeFamily, Label, MomentSequence, NCPolynomial, Rational, Scalar, Word,
};
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::VerifyArgs;
use crate::commands::random_words;
use crate::error::CliError;
use crate::output::Report;

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn q(p: i64, d: i64) -> Rational {
    Rational::ratio(p, d)
}

fn random_law(rng: &mut ChaCha8Rng, order: usize) -> CumulantSequence<Rational> {
    let a = q(rng.gen_range(-4..=4), rng.gen_range(1..=3));
    let b = q(rng.gen_range(1..=6), rng.gen_range(1..=3));
    match rng.gen_range(0..3) {
        0 => laws::semicircular(a, b, order),
        1 => laws::bernoulli::<Rational>(order).dilated(&b).shifted(&a),
        _ => smoothed_bernoulli(b, order).shifted(&a),
    }
}

fn random_polynomial(rng: &mut ChaCha8Rng, n: Label, max_degree: usize) -> NCPolynomial<Rational> {
    let terms = rng.gen_range(1..=5);
    NCPolynomial::from_terms((0..terms).map(|_| {
        let len = rng.gen_range(0..=max_degree);
        let w: Vec<Label> = (0..len).map(|_| rng.gen_range(1..=n)).collect();
        (Word::new(w), q(rng.gen_range(-5..=5), rng.gen_range(1..=4)))
    }))
}

fn subset(rng: &mut ChaCha8Rng, n: Label) -> BTreeSet<Label> {
    (1..=n).filter(|_| rng.gen_bool(0.5)).collect()
}

fn nonempty_subset(rng: &mut ChaCha8Rng, n: Label) -> BTreeSet<Label> {
    loop {
        let s = subset(rng, n);
        if !s.is_empty() {
            return s;
        }
    }
}

fn corpus(rng: &mut ChaCha8Rng, size: usize) -> Vec<(FreeFamily<Rational>, NCPolynomial<Rational>)> {
    (0..size)
        .map(|_| {
            let n: Label = rng.gen_range(1..=4);
            let laws = (0..n).map(|_| random_law(rng, 8)).collect();
            let z = random_polynomial(rng, n, 3);
            (FreeFamily::new(laws).expect("nonempty family"), z)
        })
        .collect()
}

fn maximal_correlation(quick: bool) -> freeprob::Result<Check> {
    let families = [
        laws::semicircular(q(0, 1), q(1, 1), 10),
        laws::bernoulli(10),
        smoothed_bernoulli(q(1, 2), 10),
    ];
    let (n_max, d_max) = if quick { (4, 3) } else { (6, 4) };
    let (mut cases, mut worst) = (0, 0.0f64);
    for kappa in &families {
        for n in 2..=n_max {
            for m in 1..n {
                for d in 1..=d_max {
                    let r = max_correlation(m, n, d, kappa)?;
                    worst = worst.max((r.rho_max - (m as f64 / n as f64).sqrt()).abs());
                    cases += 1;
                }
            }
        }
    }
    Ok(Check {
        name: "maximal correlation equals sqrt(m/n)",
        pass: worst <= 1e-6,
        detail: format!("{cases} cases, max deviation {worst:.3e}"),
    })
}

fn lattice(quick: bool, rng: &mut ChaCha8Rng) -> freeprob::Result<Check> {
    let r_max = if quick { 8 } else { 10 };
    let mut counts = true;
    let mut sums = true;
    for r in 1..=r_max {
        let all = enumerate_nc(r)?;
        counts &= all.len() as u64 == catalan(r);
        if r >= 2 {
            sums &= all.iter().map(moebius_to_top).sum::<i64>() == 0;
        }
    }
    let trips = if quick { 20 } else { 100 };
    let mut round_trip = true;
    for _ in 0..trips {
        let values: Vec<Rational> = (0..10).map(|_| q(rng.gen_range(-50..=50), rng.gen_range(1..=12))).collect();
        let m = MomentSequence::new(values.clone());
        round_trip &= cumulants_to_moments(&moments_to_cumulants(&m)) == m;
        let k = CumulantSequence::new(values);
        round_trip &= moments_to_cumulants(&cumulants_to_moments(&k)) == k;
    }
    Ok(Check {
        name: "non-crossing lattice and moment-cumulant round trip",
        pass: counts && sums && round_trip,
        detail: format!("catalan {counts}, moebius sums {sums}, {trips} exact round trips {round_trip}"),
    })
}

fn projections(
    corpus: &[(FreeFamily<Rational>, NCPolynomial<Rational>)],
    rng: &mut ChaCha8Rng,
) -> freeprob::Result<Vec<Check>> {
    let (mut es_ok, mut comm_ok) = (true, true);
    for (fam, z) in corpus {
        let n = fam.len() as Label;
        let d = z.degree().max(1);
        let engine = ProjectionEngine::new(fam);
        let i_set = nonempty_subset(rng, n);
        let first = *i_set.iter().next().expect("nonempty");
        let j_set: BTreeSet<Label> = subset(rng, n).into_iter().filter(|&l| l != first).collect();
        let dec = engine.verify_decomposition(z, &i_set, d)?;
        let orth = engine.verify_orthogonality(z, &i_set, &j_set, d)?;
        es_ok &= dec.pass && orth.inner.is_zero() && orth.projection_norm_sq.is_zero();

        let (a, b) = (subset(rng, n), subset(rng, n));
        let comm = engine.verify_commutation(z, &a, &b, d)?;
        let meet: BTreeSet<Label> = a.intersection(&b).copied().collect();
        let tower = engine.verify_tower(z, &a, &meet, d)?;
        comm_ok &= comm.pass && tower.pass;
    }
    Ok(vec![
        Check {
            name: "efron-stein decomposition and orthogonality",
            pass: es_ok,
            detail: format!("{} exact cases", corpus.len()),
        },
        Check {
            name: "commuting projections and tower property",
            pass: comm_ok,
            detail: format!("{} exact cases", 2 * corpus.len()),
        },
    ])
}

fn symmetry_bound(quick: bool, rng: &mut ChaCha8Rng) -> freeprob::Result<Check> {
    let cases = if quick { 20 } else { 100 };
    let mut held = 0;
    for _ in 0..cases {
        let n: Label = rng.gen_range(1..=4);
        let fam = FreeFamily::iid(random_law(rng, 8), n as usize)?;
        let z = fam.center(&symmetrize(&random_polynomial(rng, n, 3), n as usize))?;
        if z.is_zero() {
            held += 1;
            continue;
        }
        let i_set = nonempty_subset(rng, n);
        let b = ProjectionEngine::new(&fam).verify_symmetry_bound(&z, &i_set, n as usize, z.degree().max(1))?;
        held += usize::from(b.holds());
    }
    Ok(Check {
        name: "symmetric projection bound",
        pass: held == cases,
        detail: format!("held {held}/{cases}"),
    })
}

fn sum_projections(quick: bool) -> freeprob::Result<Check> {
    let families = [laws::semicircular(q(0, 1), q(1, 1), 8), laws::bernoulli(8), smoothed_bernoulli(q(1, 2), 8)];
    let n_max = if quick { 3 } else { 4 };
    let (mut ok, mut cases) = (true, 0);
    for kappa in &families {
        for n in 2..=n_max {
            let fam = FreeFamily::iid(kappa.clone(), n)?;
            let engine = ProjectionEngine::new(&fam);
            for m in 1..n {
                for k in 1..=3usize {
                    let mut p = vec![Rational::zero(); k + 1];
                    p[k] = Rational::from_i64(1);
                    ok &= engine.verify_sum_projection(&p, m, n, k)?.distance_sq.is_zero();
                    cases += 1;
                }
            }
        }
    }
    Ok(Check {
        name: "projection onto a partial sum",
        pass: ok,
        detail: format!("{cases} exact distances"),
    })
}

fn fisher_and_entropy(quick: bool) -> freeprob::Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for var in [q(1, 1), q(2, 1), q(1, 2)] {
        let m = cumulants_to_moments(&laws::semicircular(q(0, 1), var.clone(), 12));
        let res = fisher_information(&m, 6)?;
        worst = worst.max((res.phi.clone() * &var - Rational::from_i64(1)).to_f64().abs());
    }
    let sc = free_entropy(&Measure::semicircular(0.0, 1.0), 2000)?;
    let uni = free_entropy(&Measure::uniform(-1.0, 1.0), 2000)?;
    let entropy_ok = (sc - 1.4189385).abs() <= 1e-4 && (uni - 0.8620534).abs() <= 1e-4;
    let opts = FisherIntegralOptions::default();
    let via_sc = entropy_via_fisher(&laws::semicircular(0.0, 1.0, 24), &opts)?;
    let sc_dev = (via_sc - 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()).abs();
    let mut via_ok = sc_dev <= 1e-6;
    let mut via_detail = format!("semicircle deviation {sc_dev:.3e}");
    if !quick {
        let via_uni = entropy_via_fisher(&cumulants_of(&Measure::uniform(-1.0, 1.0), 24), &opts)?;
        via_ok &= (via_uni - uni).abs() <= 5e-3;
        via_detail.push_str(&format!(", uniform {via_uni:.7} vs {uni:.7}"));
    }
    Ok(vec![
        Check {
            name: "fisher information of the semicircle",
            pass: worst == 0.0,
            detail: format!("max |phi*var - 1| = {worst:.3e}"),
        },
        Check {
            name: "free entropy of semicircle and uniform",
            pass: entropy_ok,
            detail: format!("chi(SC) = {sc:.7}, chi(U[-1,1]) = {uni:.7}"),
        },
        Check {
            name: "entropy from the fisher integral",
            pass: via_ok,
            detail: via_detail,
        },
    ])
}

fn monotonicity(quick: bool) -> freeprob::Result<Check> {
    let opts = MonotonicityOptions {
        n_max: if quick { 4 } else { 6 },
        degree: 8,
        order: 16,
        ..MonotonicityOptions::default()
    };
    let report = monotonicity_report(&Measure::bernoulli().smoothed(0.5), &opts)?;
    let chi: Vec<String> = report.entries.iter().map(|e| format!("{:.5}", e.chi)).collect();
    Ok(Check {
        name: "entropy and fisher monotone along the free CLT",
        pass: report.pass && report.chi_strict && report.phi_strict,
        detail: format!("chi {}", chi.join(" ")),
    })
}

fn arcsine() -> freeprob::Result<Check> {
    let bern = MomentSequence::new((1..=10).map(|r| Rational::from_i64(i64::from(r % 2 == 0))).collect());
    let arcsine = free_convolve_moments(&bern, &bern);
    let mut exact = true;
    for k in 1..=5i64 {
        let binom = (k + 1..=2 * k).product::<i64>() / (1..=k).product::<i64>();
        exact &= arcsine.get(2 * k as usize) == Some(Rational::from_i64(binom));
        exact &= arcsine.get(2 * k as usize - 1).is_some_and(|v| v.is_zero());
    }
    let kappa = laws::bernoulli::<Rational>(16).scaled(&Rational::from_i64(2));
    let rho0 = density_from_cumulants(&kappa, &DensityOptions::default())?.density.interpolate(0.0);
    let target = 0.5 / std::f64::consts::PI;
    Ok(Check {
        name: "bernoulli free square is arcsine",
        pass: exact && (rho0 - target).abs() <= 1e-3,
        detail: format!("moments exact {exact}, rho(0) = {rho0:.6} vs {target:.6}"),
    })
}

fn random_matrices(quick: bool, seed: u64) -> freeprob::Result<Check> {
    let (size, trials, count) = if quick { (256, 8, 12) } else { (1024, 20, 40) };
    let words = random_words(count, 6, 2, seed);
    let spec = EnsembleSpec::new(size, trials, Measure::bernoulli(), seed).with_rotation(RotationGroup::Unitary);
    let estimates = estimate_mixed_moments(&words, &spec)?;
    let within = estimates.iter().filter(|e| e.within).count();
    let mut pass = within * 100 >= 95 * words.len();
    let mut detail = format!("{within}/{} words within 3 stderr at N = {size}, T = {trials}", words.len());
    if !quick {
        let rho = empirical_max_correlation(1, 2, 2, &spec)?.rho;
        pass &= (rho - 0.5f64.sqrt()).abs() <= 0.02;
        detail.push_str(&format!(", empirical rho(1,2) = {rho:.5}"));
    }
    Ok(Check {
        name: "random-matrix mixed moments",
        pass,
        detail,
    })
}

pub fn run(a: &VerifyArgs, r: &mut Report, seed: u64) -> Result<(), CliError> {
    let quick = a.quick;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![maximal_correlation(quick)?, lattice(quick, &mut rng)?];
    let corpus = corpus(&mut rng, if quick { 10 } else { 50 });
    checks.extend(projections(&corpus, &mut rng)?);
    checks.push(symmetry_bound(quick, &mut rng)?);
    checks.push(sum_projections(quick)?);
    checks.extend(fisher_and_entropy(quick)?);
    checks.push(monotonicity(quick)?);
    checks.push(arcsine()?);
    if !a.skip_rmt {
        checks.push(random_matrices(quick, seed)?);
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let mut rows = vec![vec!["check".to_string(), "pass".into(), "detail".into()]];
    rows.extend(checks.iter().map(|c| vec![c.name.to_string(), c.pass.to_string(), c.detail.clone()]));
    r.tolerances = json!({
        "maximal_correlation": 1e-6,
        "exact_identities": 0.0,
        "entropy": 1e-4,
        "entropy_via_fisher": 5e-3,
        "arcsine_density": 1e-3,
        "rmt_sigmas": 3.0,
        "rmt_coverage": 0.95,
        "rmt_maxcorr": 0.02,
    });
    r.pass = passed == checks.len();
    r.result = json!({ "quick": quick, "passed": passed, "total": checks.len(), "checks": checks });
    r.rows = Some(rows);
    Ok(())
}
