//! One function per subcommand. Each fills in a [`Report`]; `pass` carries
//! the invariant checks that command is responsible for.

use std::collections::BTreeSet;

use freeprob::info::{
    entropy_via_fisher, fisher_information, free_entropy, monotonicity_report, semicircle_entropy,
    FisherIntegralOptions, MonotonicityOptions,
};
use freeprob::maxcorr::{correlation_sweep, max_correlation};
use freeprob::projections::ProjectionEngine;
use freeprob::rmt::{empirical_max_correlation, estimate_mixed_moments, DiagonalSampling, EnsembleSpec, RotationGroup};
use freeprob::scalar::parse_rational;
use freeprob::transforms::{
    density_from_cumulants, density_of, dilate_moments, free_convolve_moments, free_power_moments,
    DensityOptions, InversionMethod, RecoveredDensity,
};
use freeprob::{
    cumulants_to_moments, moments_to_cumulants, CumulantSequence, FreeFamily, Generators, Label,
    MomentSequence, NCPolynomial, NumericMode, Rational, Scalar,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::*;
use crate::dist::{Dist, DistScalar};
use crate::error::{usage, CliError};
use crate::output::Report;
use crate::poly;

/// Relative tolerance for identities checked in floating point.
const FLOAT_TOL: f64 = 1e-9;
/// Allowed error in the recovered mass and first two moments of a density.
const DENSITY_TOL: f64 = 2e-3;
/// Grid error allowed when comparing entropies.
const ENTROPY_TOL: f64 = 1e-4;
/// Agreement required between `χ` from the density and from the Fisher integral.
const ENTROPY_FISHER_TOL: f64 = 5e-3;
/// Largest letter set for which every Efron–Stein component is listed.
const MAX_ES_LETTERS: usize = 8;

pub fn run(cli: &Cli, config: Value) -> Result<Report, CliError> {
    let mode = cli.global.mode;
    let name = match &cli.command {
        Command::Cumulants(_) => "cumulants",
        Command::Moments(_) => "moments",
        Command::Convolve(_) => "convolve",
        Command::Density(_) => "density",
        Command::Project(_) => "project",
        Command::EfronStein(_) => "efron-stein",
        Command::Maxcorr(_) => "maxcorr",
        Command::Entropy(_) => "entropy",
        Command::Fisher(_) => "fisher",
        Command::Monotonicity(_) => "monotonicity",
        Command::RmtCheck(_) => "rmt-check",
        Command::Verify(_) => "verify",
    };
    let mut r = Report::new(name, config);
    macro_rules! by_mode {
        ($f:ident, $a:expr $(, $extra:expr)*) => {
            match mode {
                Mode::Exact => $f::<Rational>($a, &mut r $(, $extra)*),
                Mode::Float => $f::<f64>($a, &mut r $(, $extra)*),
            }
        };
    }
    match &cli.command {
        Command::Cumulants(a) => by_mode!(sequence, a, true)?,
        Command::Moments(a) => by_mode!(sequence, a, false)?,
        Command::Convolve(a) => by_mode!(convolve, a)?,
        Command::Density(a) => by_mode!(density, a)?,
        Command::Project(a) => by_mode!(project, a)?,
        Command::EfronStein(a) => by_mode!(efron_stein, a)?,
        Command::Maxcorr(a) => by_mode!(maxcorr, a)?,
        Command::Fisher(a) => by_mode!(fisher, a)?,
        Command::Entropy(a) => entropy(a, &mut r)?,
        Command::Monotonicity(a) => monotonicity(a, &mut r)?,
        Command::RmtCheck(a) => rmt_check(a, &mut r, cli.global.seed)?,
        Command::Verify(a) => crate::verify::run(a, &mut r, cli.global.seed)?,
    }
    Ok(r)
}

fn tolerance<S: Scalar>() -> f64 {
    match S::MODE {
        NumericMode::Exact => 0.0,
        NumericMode::Float => FLOAT_TOL,
    }
}

/// Whether two sequences agree (exactly, or to [`FLOAT_TOL`] relative), and
/// the largest relative deviation.
fn agree<S: Scalar>(a: &[S], b: &[S]) -> (bool, f64) {
    let dev = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y).to_f64().abs() / y.to_f64().abs().max(1.0))
        .fold(0.0, f64::max);
    let ok = a.len() == b.len()
        && match S::MODE {
            NumericMode::Exact => a == b,
            NumericMode::Float => dev <= FLOAT_TOL,
        };
    (ok, dev)
}

/// Deviation between polynomials, and whether it is within tolerance.
fn poly_agree<S: Scalar>(a: &NCPolynomial<S>, b: &NCPolynomial<S>) -> (bool, f64) {
    let diff = a.sub(b).max_abs_coefficient();
    let scale = a.max_abs_coefficient().to_f64().max(1.0);
    let ok = match S::MODE {
        NumericMode::Exact => diff.is_zero(),
        NumericMode::Float => diff.to_f64() <= FLOAT_TOL * scale,
    };
    (ok, diff.to_f64())
}

fn seq_json<S: Scalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(Scalar::to_json).collect())
}

fn number(s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|e| CliError::Usage(e.to_string()))
}

fn number_list<S: DistScalar>(text: &str) -> Result<Vec<S>, CliError> {
    let out: Vec<S> = text
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| number(t).map(|r| S::from_rational(&r)))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return usage("empty number list");
    }
    Ok(out)
}

fn float_list(text: &str) -> Result<Vec<f64>, CliError> {
    number_list::<f64>(text)
}

fn label_set(text: &str) -> Result<BTreeSet<Label>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let t = t.trim_start_matches('x');
            match t.parse::<Label>() {
                Ok(l) if l >= 1 => Ok(l),
                _ => usage(format!("bad letter `{t}`")),
            }
        })
        .collect()
}

fn pair_csv<S: Scalar>(m: &MomentSequence<S>, k: &CumulantSequence<S>) -> String {
    let mut out = String::from("r,moment,cumulant\n");
    for r in 1..=m.order() {
        let show = |v: Option<S>| v.map(|x| crate::output::scalar_text(&x.to_json())).unwrap_or_default();
        out.push_str(&format!("{r},{},{}\n", show(m.get(r)), show(k.get(r).cloned())));
    }
    out
}

fn sequence<S: DistScalar>(a: &SequenceArgs, r: &mut Report, to_cumulants: bool) -> Result<(), CliError> {
    let (source, m, k) = match &a.values {
        Some(text) => {
            let values = number_list::<S>(text)?;
            if to_cumulants {
                let m = MomentSequence::new(values);
                let k = moments_to_cumulants(&m);
                ("moments".to_string(), m, k)
            } else {
                let k = CumulantSequence::new(values);
                ("cumulants".to_string(), cumulants_to_moments(&k), k)
            }
        }
        None => {
            let d = Dist::from_args(&a.dist)?;
            let k = d.cumulants::<S>(a.order);
            (d.id, cumulants_to_moments(&k), k)
        }
    };
    let (ok_k, dev_k) = agree(moments_to_cumulants(&m).values(), k.values());
    let (ok_m, dev_m) = agree(cumulants_to_moments(&k).values(), m.values());
    r.tolerances = json!({ "round_trip": tolerance::<S>() });
    r.pass = ok_k && ok_m;
    r.result = json!({
        "source": source,
        "mode": S::MODE,
        "order": m.order(),
        "moments": seq_json(m.values()),
        "cumulants": seq_json(k.values()),
        "hankel_psd": m.hankel_is_psd(),
        "round_trip_deviation": dev_k.max(dev_m),
    });
    r.set_csv(&pair_csv(&m, &k));
    Ok(())
}

fn convolve<S: DistScalar>(a: &ConvolveArgs, r: &mut Report) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let k1 = d.cumulants::<S>(a.order);
    let m1 = cumulants_to_moments(&k1);
    let mut checks = serde_json::Map::new();
    let mut pass = true;
    let (mut m, mut k, operation) = if let Some(w) = &a.with {
        let d2 = Dist::parse(w, None)?;
        let m2 = cumulants_to_moments(&d2.cumulants::<S>(a.order));
        let ab = free_convolve_moments(&m1, &m2);
        let (ok, dev) = agree(ab.values(), free_convolve_moments(&m2, &m1).values());
        pass &= ok;
        checks.insert("commutativity_deviation".into(), dev.into());
        let k = moments_to_cumulants(&ab);
        (ab, k, format!("{} ⊞ {}", d.id, d2.id))
    } else if let Some(n) = a.power {
        let p = free_power_moments(&m1, n)?;
        let k = moments_to_cumulants(&p);
        let (ok, dev) = agree(k.values(), k1.scaled(&S::from_i64(n as i64)).values());
        pass &= ok;
        checks.insert("cumulant_scaling_deviation".into(), dev.into());
        (p, k, format!("{}^⊞{n}", d.id))
    } else {
        (m1, k1, d.id.clone())
    };
    let mut operation = operation;
    if let Some(text) = &a.dilate {
        let alpha = S::from_rational(&number(text)?);
        m = dilate_moments(&m, &alpha)?;
        let dilated = moments_to_cumulants(&m);
        let (ok, dev) = agree(dilated.values(), k.dilated(&alpha).values());
        pass &= ok;
        checks.insert("dilation_deviation".into(), dev.into());
        k = dilated;
        operation = format!("D_{text}({operation})");
    }
    r.tolerances = json!({ "identities": tolerance::<S>() });
    r.pass = pass;
    r.result = json!({
        "operation": operation,
        "mode": S::MODE,
        "moments": seq_json(m.values()),
        "cumulants": seq_json(k.values()),
        "checks": Value::Object(checks),
    });
    r.set_csv(&pair_csv(&m, &k));
    Ok(())
}

fn density<S: DistScalar>(a: &DensityArgs, r: &mut Report) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let rec: RecoveredDensity = match a.method {
        Method::Model => density_of(&d.measure(), a.cells)?,
        method => {
            let mut opts = DensityOptions {
                cells: a.cells,
                method: if method == Method::Rseries { InversionMethod::RSeries } else { InversionMethod::Jacobi },
                ..DensityOptions::default()
            };
            if let Some(eps) = &a.eps {
                opts.eps = float_list(eps)?;
            }
            density_from_cumulants(&d.cumulants::<S>(a.order), &opts)?
        }
    };
    let target = d.cumulants::<f64>(2);
    let target = cumulants_to_moments(&target);
    let (m1, m2) = (rec.density.moment(1), rec.density.moment(2));
    let dev1 = (m1 - target.values()[0]).abs();
    let dev2 = (m2 - target.values()[1]).abs() / target.values()[1].abs().max(1.0);
    let mass_dev = (rec.captured_mass - 1.0).abs();
    r.tolerances = json!({ "mass": DENSITY_TOL, "moments": DENSITY_TOL });
    r.pass = mass_dev <= DENSITY_TOL && dev1 <= DENSITY_TOL && dev2 <= DENSITY_TOL;
    let mut result = json!({
        "distribution": d.id,
        "method": a.method,
        "mass_deviation": mass_dev,
        "moment_deviation": [dev1, dev2],
    });
    let extra = serde_json::to_value(&rec).expect("density serializes");
    if let (Value::Object(m), Value::Object(e)) = (&mut result, extra) {
        m.extend(e);
    }
    r.result = result;
    r.set_csv(&rec.density.to_csv());
    Ok(())
}

/// Letters in use, the family size, and the cumulant order needed.
fn family_for<S: DistScalar>(
    d: &Dist,
    z: &NCPolynomial<S>,
    letters: Option<usize>,
    needed: usize,
    degree: usize,
) -> Result<FreeFamily<S>, CliError> {
    let needed = needed.max(z.letters().iter().max().copied().unwrap_or(1) as usize).max(1);
    let n = letters.unwrap_or(needed);
    if n < needed {
        return usage(format!("--letters {n} is smaller than the largest letter in use ({needed})"));
    }
    let order = 2 * degree.max(z.degree()).max(1) + 2;
    Ok(FreeFamily::iid(d.cumulants::<S>(order), n)?)
}

fn project<S: DistScalar>(a: &ProjectArgs, r: &mut Report) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let z: NCPolynomial<S> = poly::parse(&a.poly)?;
    let gens = match (&a.subset, a.sum) {
        (Some(s), None) => Generators::Letters(label_set(s)?),
        (None, Some(k)) if k >= 1 => Generators::Sum(k),
        _ => return usage("give exactly one of --subset or --sum (k ≥ 1)"),
    };
    let needed = gens.support().iter().max().copied().unwrap_or(1) as usize;
    let degree = a.degree.unwrap_or(z.degree()).max(1);
    let fam = family_for(&d, &z, a.letters, needed, degree)?;
    let engine = ProjectionEngine::new(&fam);
    let res = engine.project(&z, &gens, degree)?;
    let again = engine.project(&res.projection, &gens, degree)?;
    let (idem_ok, idem_dev) = poly_agree(&again.projection, &res.projection);
    let residual_tol = tolerance::<S>() * fam.norm_squared(&z)?.to_f64().max(1.0);
    r.tolerances = json!({ "idempotence": tolerance::<S>(), "normal_equations": residual_tol });
    r.pass = idem_ok && res.residual_norm <= residual_tol;
    r.result = json!({
        "distribution": d.id,
        "mode": S::MODE,
        "letters": fam.len(),
        "generators": gens.to_string(),
        "degree": degree,
        "input": res.input,
        "projection": res.projection,
        "projection_text": res.projection.to_string(),
        "norm_sq_input": fam.norm_squared(&z)?.to_json(),
        "norm_sq_projection": fam.norm_squared(&res.projection)?.to_json(),
        "residual_norm": res.residual_norm,
        "gram_condition": res.gram_condition,
        "dropped": res.dropped,
        "idempotence_deviation": idem_dev,
    });
    Ok(())
}

fn subsets(set: &BTreeSet<Label>) -> Vec<BTreeSet<Label>> {
    let items: Vec<Label> = set.iter().copied().collect();
    let mut out: Vec<BTreeSet<Label>> = (0..1usize << items.len())
        .map(|mask| (0..items.len()).filter(|i| mask >> i & 1 == 1).map(|i| items[i]).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn efron_stein<S: DistScalar>(a: &EfronSteinArgs, r: &mut Report) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let z: NCPolynomial<S> = poly::parse(&a.poly)?;
    let given = a.subset.as_deref().map(label_set).transpose()?;
    let needed = given.as_ref().and_then(|s| s.iter().max().copied()).unwrap_or(1) as usize;
    let degree = a.degree.unwrap_or(z.degree()).max(1);
    let fam = family_for(&d, &z, a.letters, needed, degree)?;
    let set = given.unwrap_or_else(|| fam.labels().collect());
    if set.len() > MAX_ES_LETTERS {
        return usage(format!("at most {MAX_ES_LETTERS} letters"));
    }
    let engine = ProjectionEngine::new(&fam);
    let mut components = Vec::new();
    for t in subsets(&set) {
        let c = engine.efron_stein_component(&z, &t, degree)?;
        components.push(json!({
            "subset": c.subset,
            "component": c.component,
            "text": c.component.to_string(),
            "norm_sq": fam.norm_squared(&c.component)?.to_json(),
        }));
    }
    let decomposition = engine.verify_decomposition(&z, &set, degree)?;
    let defect = engine.parseval_defect(&z, &set, degree)?;
    let tol = tolerance::<S>();
    let mut orth_ok = true;
    let mut orth_worst = 0.0f64;
    for t in subsets(&set).into_iter().filter(|t| !t.is_empty()) {
        let first = *t.iter().next().expect("nonempty");
        let j: BTreeSet<Label> = set.iter().copied().filter(|&l| l != first).collect();
        let check = engine.verify_orthogonality(&z, &t, &j, degree)?;
        let worst = check.value().max(check.projection_norm_sq.to_f64().abs());
        orth_worst = orth_worst.max(worst);
        orth_ok &= match S::MODE {
            NumericMode::Exact => check.inner.is_zero() && check.projection_norm_sq.is_zero(),
            NumericMode::Float => worst <= tol,
        };
    }
    let parseval_ok = match S::MODE {
        NumericMode::Exact => defect.is_zero(),
        NumericMode::Float => defect.to_f64().abs() <= tol * fam.norm_squared(&z)?.to_f64().max(1.0),
    };
    r.tolerances = json!({ "decomposition": decomposition.tolerance, "orthogonality": tol, "parseval": tol });
    r.pass = decomposition.pass && orth_ok && parseval_ok;
    r.result = json!({
        "distribution": d.id,
        "mode": S::MODE,
        "letters": fam.len(),
        "subset": set,
        "degree": degree,
        "input": z,
        "components": components,
        "decomposition": decomposition,
        "orthogonality_max": orth_worst,
        "parseval_defect": defect.to_json(),
    });
    Ok(())
}

fn maxcorr<S: DistScalar>(a: &MaxcorrArgs, r: &mut Report) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let kappa = d.cumulants::<S>(2 * a.degree.max(1));
    let report = max_correlation(a.m, a.n, a.degree, &kappa)?.with_distribution(d.id.clone());
    let mut pass = report.pass;
    let mut result = serde_json::to_value(&report).expect("report serializes");
    if a.sweep {
        let sweep = correlation_sweep(a.m, a.n, a.degree, &kappa)?;
        pass &= sweep.iter().all(|(_, rho)| (rho - report.theoretical).abs() <= report.tolerance);
        if let Value::Object(m) = &mut result {
            m.insert(
                "sweep".into(),
                sweep.iter().map(|(deg, rho)| json!({ "degree": deg, "rho_max": rho })).collect(),
            );
        }
    }
    r.tolerances = json!({ "rho_max": report.tolerance });
    r.pass = pass;
    r.result = result;
    Ok(())
}

fn entropy(a: &EntropyArgs, r: &mut Report) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let mu = d.measure();
    let chi = free_entropy(&mu, a.cells)?;
    let chi_half = free_entropy(&mu, (a.cells / 2).max(1))?;
    let var = d.cumulants::<f64>(2).values()[1];
    let bound = semicircle_entropy(var);
    let grid_change = if chi.is_finite() { (chi - chi_half).abs() } else { 0.0 };
    let mut pass = !chi.is_finite() || chi <= bound + ENTROPY_TOL;
    let mut result = json!({
        "distribution": d.id,
        "cells": a.cells,
        "chi": chi.to_json(),
        "chi_half_grid": chi_half.to_json(),
        "grid_change": grid_change,
        "variance": var,
        "semicircle_bound": bound,
    });
    if a.via_fisher {
        let opts = FisherIntegralOptions { degree: a.fisher_degree, ..FisherIntegralOptions::default() };
        let via = entropy_via_fisher(&d.cumulants::<f64>(2 * a.fisher_degree + 4), &opts)?;
        if chi.is_finite() {
            pass &= (via - chi).abs() <= ENTROPY_FISHER_TOL;
        }
        if let Value::Object(m) = &mut result {
            m.insert("chi_via_fisher".into(), via.to_json());
            m.insert("fisher_degree".into(), a.fisher_degree.into());
        }
    }
    r.tolerances = json!({ "semicircle_bound": ENTROPY_TOL, "via_fisher": ENTROPY_FISHER_TOL });
    r.pass = pass;
    r.result = result;
    Ok(())
}

fn conjugate_text<S: Scalar>(c: &[S]) -> String {
    let mut parts = Vec::new();
    for (k, x) in c.iter().enumerate() {
        if x.is_zero() || (S::MODE == NumericMode::Float && x.to_f64().abs() < 1e-14) {
            continue;
        }
        let power = match k {
            0 => String::new(),
            1 => "z".into(),
            _ => format!("z^{k}"),
        };
        let text = if k > 0 && *x == S::one() { power } else if k == 0 { format!("{x}") } else { format!("{x}·{power}") };
        parts.push(text);
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

fn fisher<S: DistScalar>(a: &FisherArgs, r: &mut Report) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let kappa = d.cumulants::<S>(2 * a.degree.max(1) + 2);
    let var = kappa.variance().cloned().unwrap_or_else(S::zero);
    let moments = cumulants_to_moments(&kappa);
    let res = fisher_information(&moments, a.degree)?;
    let tol = tolerance::<S>();
    let scale = moments.get(2 * a.degree.max(1)).map_or(1.0, |m| m.to_f64().abs().max(1.0));
    let cramer_rao = res.divergent
        || match S::MODE {
            NumericMode::Exact => res.phi.clone() * &var >= S::one(),
            NumericMode::Float => res.phi.to_f64() * var.to_f64() >= 1.0 - tol,
        };
    let residual_ok = res.atomic || res.max_residual() <= tol * scale;
    r.tolerances = json!({ "cramer_rao": tol, "residuals": tol * scale });
    r.pass = cramer_rao && residual_ok;
    let mut result = json!({
        "distribution": d.id,
        "mode": S::MODE,
        "variance": var.to_json(),
        "conjugate_variable": conjugate_text(&res.coefficients),
        "cramer_rao": cramer_rao,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut result, serde_json::to_value(&res).expect("serializes")) {
        m.extend(e);
    }
    r.result = result;
    Ok(())
}

fn monotonicity(a: &MonotonicityArgs, r: &mut Report) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let opts = MonotonicityOptions {
        n_max: a.nmax,
        degree: a.degree,
        order: a.order,
        cells: a.cells,
        intermediate_max: a.intermediate_max,
    };
    let report = monotonicity_report(&d.measure(), &opts)?;
    r.tolerances = json!({ "chi": "chi_tol column", "phi": 0.0 });
    r.pass = report.pass;
    r.set_csv(&report.to_csv());
    let mut result = json!({ "distribution": d.id });
    if let (Value::Object(m), Value::Object(e)) = (&mut result, serde_json::to_value(&report).expect("serializes")) {
        m.extend(e);
    }
    r.result = result;
    Ok(())
}

fn parse_words(text: &str) -> Result<Vec<Vec<Label>>, CliError> {
    text.split(';')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(label_set_ordered)
        .collect()
}

fn label_set_ordered(text: &str) -> Result<Vec<Label>, CliError> {
    text.split(',')
        .map(str::trim)
        .map(|t| match t.trim_start_matches('x').parse::<Label>() {
            Ok(l) if l >= 1 => Ok(l),
            _ => usage(format!("bad letter `{t}` in word")),
        })
        .collect()
}

/// Distinct words of length `2..=max_len` over `1..=labels`.
pub fn random_words(count: usize, max_len: usize, labels: Label, seed: u64) -> Vec<Vec<Label>> {
    let possible: usize = (2..=max_len)
        .map(|len| (labels as usize).saturating_pow(len as u32))
        .fold(0usize, usize::saturating_add);
    let count = count.min(possible);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words: Vec<Vec<Label>> = Vec::with_capacity(count);
    while words.len() < count {
        let len = rng.gen_range(2..=max_len);
        let w: Vec<Label> = (0..len).map(|_| rng.gen_range(1..=labels)).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    words
}

fn rmt_check(a: &RmtArgs, r: &mut Report, seed: u64) -> Result<(), CliError> {
    let d = Dist::from_args(&a.dist)?;
    let words = match &a.words {
        Some(text) => parse_words(text)?,
        None => {
            if a.max_len < 2 || a.labels == 0 {
                return usage("random words need --max-len ≥ 2 and --labels ≥ 1");
            }
            random_words(a.random_words, a.max_len, a.labels, seed)
        }
    };
    if words.is_empty() {
        return usage("no words to estimate");
    }
    if !(0.0..=1.0).contains(&a.coverage) {
        return usage("--coverage must lie in [0, 1]");
    }
    let mut spec = EnsembleSpec::new(a.size, a.trials, d.measure(), seed).with_rotation(match a.rotation {
        Rotation::Orthogonal => RotationGroup::Orthogonal,
        Rotation::Unitary => RotationGroup::Unitary,
    });
    spec.diagonal = match a.diagonal {
        Diagonal::Quantiles => DiagonalSampling::Quantiles,
        Diagonal::Iid => DiagonalSampling::Iid,
    };
    let estimates = estimate_mixed_moments(&words, &spec)?;
    let within = estimates.iter().filter(|e| e.within).count();
    let observed = within as f64 / estimates.len() as f64;
    let mut pass = observed >= a.coverage;
    let mut result = json!({
        "distribution": d.id,
        "ensemble": spec,
        "words": estimates,
        "within": within,
        "total": words.len(),
        "coverage": observed,
    });
    if let Some(pair) = &a.maxcorr {
        let (m, n) = pair
            .split_once(',')
            .and_then(|(m, n)| Some((m.trim().parse::<usize>().ok()?, n.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| CliError::Usage(format!("--maxcorr expects `m,n`, got `{pair}`")))?;
        let emp = empirical_max_correlation(m, n, a.maxcorr_degree, &spec)?;
        pass &= (emp.rho - emp.theoretical).abs() <= a.maxcorr_tolerance;
        if let Value::Object(map) = &mut result {
            map.insert("maxcorr".into(), serde_json::to_value(&emp).expect("serializes"));
        }
    }
    let mut csv = String::from("word,mean,stderr,engine,deviation,within\n");
    for e in &estimates {
        let w: Vec<String> = e.word.iter().map(|l| l.to_string()).collect();
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            w.join(" "),
            e.mean,
            e.stderr,
            e.engine_value,
            e.deviation,
            e.within
        ));
    }
    r.tolerances = json!({
        "sigmas": 3.0,
        "roundoff_floor": freeprob::rmt::ROUNDOFF_FLOOR,
        "coverage": a.coverage,
        "maxcorr": a.maxcorr_tolerance,
    });
    r.pass = pass;
    r.result = result;
    r.set_csv(&csv);
    Ok(())
}
