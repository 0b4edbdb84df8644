//! Free entropy, free Fisher information and their behaviour along the free
//! central limit theorem.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::factor_symmetric;
use crate::moments::{cumulants_to_moments, CumulantSequence, MomentSequence};
use crate::scalar::{NumericMode, Rational, Scalar};
use crate::transforms::{cumulants_of, density_of, GridDensity, Measure, DEFAULT_CELLS};

/// `3/4 + ½·log(2π)`.
pub fn entropy_constant() -> f64 {
    0.75 + 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// `½·log(2πe)`, the entropy of the standard semicircle.
pub fn semicircle_entropy(variance: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln()
}

/// Growth ratio `Φ_D/Φ_{D−1}` above which the estimate is flagged divergent.
pub const DIVERGENCE_RATIO: f64 = 1.1;

/// `∫₀¹∫₀¹ log|k + x − y| dx dy`.
fn cell_log_kernel(k: usize) -> f64 {
    if k == 0 {
        return -1.5;
    }
    let kf = k as f64;
    if k < 8 {
        let f = |x: f64| if x == 0.0 { 0.0 } else { 0.5 * x * x * x.abs().ln() - 0.75 * x * x };
        return f(kf + 1.0) + f(kf - 1.0) - 2.0 * f(kf);
    }
    // ln k − Σ_q E[u^{2q}]/(2q·k^{2q}) with u triangular on [−1, 1].
    let inv2 = 1.0 / (kf * kf);
    let mut power = 1.0;
    let mut tail = 0.0;
    for q in 1..=12 {
        power *= inv2;
        let qf = q as f64;
        tail += power / (qf * (2.0 * qf + 1.0) * (2.0 * qf + 2.0));
    }
    kf.ln() - tail
}

/// `∬ log|a − b| ρ(a)ρ(b) da db` for a piecewise-constant density, exact up
/// to rounding.
pub fn log_energy(grid: &GridDensity) -> f64 {
    let h = grid.width();
    let rho = &grid.values;
    let n = rho.len();
    let mass: f64 = rho.iter().sum::<f64>() * h;
    let lags: Vec<f64> = (1..n)
        .into_par_iter()
        .map(|k| {
            let c: f64 = rho[..n - k].iter().zip(&rho[k..]).map(|(a, b)| a * b).sum();
            c * cell_log_kernel(k)
        })
        .collect();
    let diag: f64 = rho.iter().map(|r| r * r).sum::<f64>() * cell_log_kernel(0);
    let cross: f64 = lags.iter().sum();
    mass * mass * h.ln() + h * h * (diag + 2.0 * cross)
}

/// `χ` of a piecewise-constant density.
pub fn free_entropy_grid(grid: &GridDensity) -> Result<f64> {
    let mass = grid.mass();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("density has mass {mass}, not 1")));
    }
    Ok(log_energy(grid) + entropy_constant())
}

/// `χ(μ)` on a grid of `cells` cells; `−∞` for atomic measures.
pub fn free_entropy(mu: &Measure, cells: usize) -> Result<f64> {
    if mu.is_atomic() {
        mu.validate()?;
        return Ok(f64::NEG_INFINITY);
    }
    match density_of(mu, cells) {
        Ok(rec) => free_entropy_grid(&rec.density),
        Err(Error::Atom(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Conjugate-variable solve in the power basis `1, z, …, z^D`.
#[derive(Debug, Clone)]
pub struct FisherResult<S> {
    pub degree: usize,
    /// `ξ ≈ Σ c_k z^k`.
    pub coefficients: Vec<S>,
    /// `Φ_D = cᵀ H c`.
    pub phi: S,
    /// `Φ_1..Φ_D`.
    pub history: Vec<f64>,
    /// `⟨z^r, ξ⟩ − Σ_{k<r} m_k m_{r−1−k}` for `r = 0..=D`.
    pub residuals: Vec<f64>,
    /// The same for `r > D` where the moments reach.
    pub extended_residuals: Vec<f64>,
    pub rank: usize,
    /// The Hankel Gram is singular: finitely many atoms.
    pub atomic: bool,
    /// `Φ_D/Φ_{D−1}` at the cap.
    pub growth_ratio: Option<f64>,
    /// `Φ` is reported as infinite.
    pub divergent: bool,
}

impl<S: Scalar> FisherResult<S> {
    /// `Φ` as a number, `None` when flagged infinite.
    pub fn value(&self) -> Option<f64> {
        if self.divergent {
            None
        } else {
            Some(self.phi.to_f64())
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

impl<S: Scalar> Serialize for FisherResult<S> {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FisherResult", 11)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field(
            "coefficients",
            &self.coefficients.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        )?;
        st.serialize_field("phi", &self.value())?;
        st.serialize_field("phi_truncated", &self.phi.to_json())?;
        st.serialize_field("history", &self.history)?;
        st.serialize_field("residuals", &self.residuals)?;
        st.serialize_field("extended_residuals", &self.extended_residuals)?;
        st.serialize_field("rank", &self.rank)?;
        st.serialize_field("atomic", &self.atomic)?;
        st.serialize_field("growth_ratio", &self.growth_ratio)?;
        st.serialize_field("divergent", &self.divergent)?;
        st.end()
    }
}

struct FisherSolve<S> {
    coefficients: Vec<S>,
    phi: S,
    rank: usize,
}

fn solve_conjugate<S: Scalar>(m: &[S], degree: usize) -> FisherSolve<S> {
    let size = degree + 1;
    let hankel: Vec<Vec<S>> = (0..size)
        .map(|i| (0..size).map(|j| m[i + j].clone()).collect())
        .collect();
    let rhs = conjugate_rhs(m, size);
    let f = factor_symmetric(&hankel);
    let c = f.solve(&rhs);
    let phi = c.iter().zip(&rhs).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b);
    FisherSolve {
        coefficients: c,
        phi,
        rank: f.rank(),
    }
}

/// `b_r = Σ_{k<r} m_k m_{r−1−k}` for `r = 0..len`.
fn conjugate_rhs<S: Scalar>(m: &[S], len: usize) -> Vec<S> {
    (0..len)
        .map(|r| {
            (0..r).fold(S::zero(), |acc, k| acc + m[k].clone() * &m[r - 1 - k])
        })
        .collect()
}

/// Least-squares conjugate variable over polynomials of degree `≤ D`.
pub fn fisher_information<S: Scalar>(
    moments: &MomentSequence<S>,
    degree: usize,
) -> Result<FisherResult<S>> {
    if degree == 0 {
        return Err(Error::Domain("degree must be at least 1".into()));
    }
    if moments.order() < 2 * degree {
        return Err(Error::Resource {
            len: 2 * degree,
            cap: moments.order(),
        });
    }
    let m = moments.with_unit();
    let mut history = Vec::with_capacity(degree);
    let mut last = None;
    for d in 1..=degree {
        let solve = solve_conjugate(&m, d);
        history.push(solve.phi.to_f64());
        last = Some(solve);
    }
    let solve = last.expect("degree ≥ 1");
    let size = degree + 1;
    let residual_at = |r: usize| -> S {
        let lhs = solve
            .coefficients
            .iter()
            .enumerate()
            .fold(S::zero(), |acc, (k, c)| acc + c.clone() * &m[k + r]);
        let rhs = (0..r).fold(S::zero(), |acc, k| acc + m[k].clone() * &m[r - 1 - k]);
        lhs - rhs
    };
    let residuals = (0..size).map(|r| residual_at(r).to_f64().abs()).collect();
    let extended_residuals = (size..=moments.order() - degree)
        .map(|r| residual_at(r).to_f64().abs())
        .collect();
    let atomic = solve.rank < size;
    let growth_ratio = if degree >= 2 && history[degree - 2] > 0.0 {
        Some(history[degree - 1] / history[degree - 2])
    } else {
        None
    };
    let divergent = atomic || growth_ratio.is_some_and(|g| g > DIVERGENCE_RATIO);
    Ok(FisherResult {
        degree,
        coefficients: solve.coefficients,
        phi: solve.phi,
        history,
        residuals,
        extended_residuals,
        rank: solve.rank,
        atomic,
        growth_ratio,
        divergent,
    })
}

/// `Φ_D` of the standardized law, rescaled back: `Φ(z) = Φ(z/s)/s²`.
fn standardized_fisher(kappa: &CumulantSequence<f64>, degree: usize) -> Result<FisherResult<f64>> {
    let var = *kappa.variance().ok_or_else(|| Error::Domain("need κ_2".into()))?;
    let s = var.sqrt();
    let centered = kappa.shifted(&-kappa.get(1).copied().unwrap_or(0.0));
    let unit = centered.dilated(&(1.0 / s)).truncated(2 * degree);
    let mut res = fisher_information(&cumulants_to_moments(&unit), degree)?;
    res.phi /= var;
    for h in res.history.iter_mut() {
        *h /= var;
    }
    Ok(res)
}

/// Options for the integral representation of `χ`.
#[derive(Debug, Clone, Serialize)]
pub struct FisherIntegralOptions {
    pub degree: usize,
    /// Upper end of the numerical integral; the tail is closed analytically.
    pub horizon: f64,
    pub tolerance: f64,
}

impl Default for FisherIntegralOptions {
    fn default() -> Self {
        Self {
            degree: 10,
            horizon: 200.0,
            tolerance: 1e-9,
        }
    }
}

/// `χ = ½∫₀^∞ (1/(1+t) − Φ(z + √t·s)) dt + ½·log(2πe)` with `Φ` from the
/// truncated conjugate-variable solve on the heat-flow cumulants.
pub fn entropy_via_fisher(
    kappa: &CumulantSequence<f64>,
    options: &FisherIntegralOptions,
) -> Result<f64> {
    let degree = options.degree;
    if kappa.order() < 2 * degree {
        return Err(Error::Resource {
            len: 2 * degree,
            cap: kappa.order(),
        });
    }
    let var = *kappa.variance().ok_or_else(|| Error::Domain("need κ_2".into()))?;
    if !(var > 0.0) {
        return Err(Error::Degenerate("κ_2 must be positive".into()));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |t: f64| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        let flowed = kappa.add(&crate::moments::laws::semicircular(0.0, t, kappa.order()));
        match standardized_fisher(&flowed, degree) {
            Ok(res) if !res.divergent => 1.0 / (1.0 + t) - res.phi,
            Ok(_) => {
                *failure.borrow_mut() = Some(Error::Numerical(format!(
                    "Fisher information not converged at t = {t}"
                )));
                0.0
            }
            Err(e) => {
                *failure.borrow_mut() = Some(Error::Numerical(format!("at t = {t}: {e}")));
                0.0
            }
        }
    };
    let horizon = options.horizon;
    let mut breaks = vec![0.0];
    let mut b = 0.25;
    while b < horizon {
        breaks.push(b);
        b *= 8.0;
    }
    breaks.push(horizon);
    let mut integral = 0.0;
    for w in breaks.windows(2) {
        integral += quadrature::double_exponential::integrate(&integrand, w[0], w[1], options.tolerance)
            .integral;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let tail = ((var + horizon) / (1.0 + horizon)).ln();
    Ok(0.5 * (integral + tail) + semicircle_entropy(1.0))
}

/// One row of a monotonicity table.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityEntry {
    pub n: usize,
    #[serde(serialize_with = "crate::scalar::serialize_extended")]
    pub chi: f64,
    /// `|χ(cells) − χ(cells/2)|`.
    pub chi_tolerance: f64,
    /// `None` when flagged infinite.
    pub phi: Option<f64>,
    pub phi_truncated: f64,
    /// `|Φ_D − Φ_{D−1}|`, the change from the last degree step.
    pub phi_truncation_change: f64,
    pub phi_divergent: bool,
    pub atomic: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntermediateCheck {
    pub m: usize,
    pub n: usize,
    /// `Φ_D(s_n)`.
    pub lhs: f64,
    /// `(m/n)·Φ_D(s_m)`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub base: String,
    pub n_max: usize,
    pub degree: usize,
    pub order: usize,
    pub cells: usize,
    pub mode: NumericMode,
    pub entries: Vec<MonotonicityEntry>,
    pub chi_nondecreasing: bool,
    pub phi_nonincreasing: bool,
    /// Every finite gap exceeds the combined tolerances.
    pub chi_strict: bool,
    pub phi_strict: bool,
    pub intermediate: Vec<IntermediateCheck>,
    pub pass: bool,
}

impl MonotonicityReport {
    /// CSV with header `n,chi,chi_tol,phi,phi_divergent,chi_ok,phi_ok`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,chi,chi_tol,phi,phi_divergent,chi_ok,phi_ok\n");
        for (k, e) in self.entries.iter().enumerate() {
            let (chi_ok, phi_ok) = if k == 0 {
                (true, true)
            } else {
                let prev = &self.entries[k - 1];
                (
                    chi_step_ok(prev, e),
                    phi_order(e) <= phi_order(prev),
                )
            };
            let phi = e.phi.map_or("inf".to_string(), |p| format!("{p:.16e}"));
            out.push_str(&format!(
                "{},{},{:.3e},{},{},{},{}\n",
                e.n,
                if e.chi.is_finite() { format!("{:.16e}", e.chi) } else { "-inf".into() },
                e.chi_tolerance,
                phi,
                e.phi_divergent,
                chi_ok,
                phi_ok
            ));
        }
        out
    }
}

fn chi_step_ok(prev: &MonotonicityEntry, cur: &MonotonicityEntry) -> bool {
    if prev.chi == f64::NEG_INFINITY {
        return true;
    }
    cur.chi >= prev.chi - (prev.chi_tolerance + cur.chi_tolerance)
}

/// Total order with divergent entries above every finite value.
fn phi_order(e: &MonotonicityEntry) -> f64 {
    e.phi.unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityOptions {
    pub n_max: usize,
    pub degree: usize,
    pub order: usize,
    pub cells: usize,
    /// Pairs `m < n ≤ intermediate_max` checked for `Φ(s_n) ≤ (m/n)Φ(s_m)`.
    pub intermediate_max: usize,
}

impl Default for MonotonicityOptions {
    fn default() -> Self {
        Self {
            n_max: 6,
            degree: 8,
            order: 16,
            cells: DEFAULT_CELLS,
            intermediate_max: 4,
        }
    }
}

/// `χ` and `Φ` of `n^{−1/2}_* μ^{⊞n}` for `n = 1..=n_max`.
///
/// `Φ` is solved exactly in rationals from the cumulants (read as exact
/// dyadics) using `Φ(s_n/√n) = n·Φ(s_n)`; `χ` comes from the density of the
/// exact Cauchy model.
pub fn monotonicity_report(
    mu: &Measure,
    options: &MonotonicityOptions,
) -> Result<MonotonicityReport> {
    mu.validate()?;
    let MonotonicityOptions {
        n_max,
        degree,
        order,
        cells,
        intermediate_max,
    } = *options;
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if order < 2 * degree {
        return Err(Error::Resource {
            len: 2 * degree,
            cap: order,
        });
    }
    let kappa_f = cumulants_of(mu, order);
    if !(kappa_f.variance().copied().unwrap_or(0.0) > 0.0) {
        return Err(Error::Degenerate("σ(μ) must be positive".into()));
    }
    let kappa: CumulantSequence<Rational> =
        CumulantSequence::new(kappa_f.values().iter().map(|v| Rational::from_f64(*v)).collect());

    let fisher_sum = |n: usize| -> Result<FisherResult<Rational>> {
        let k_n = kappa.scaled(&Rational::from_i64(n as i64));
        fisher_information(&cumulants_to_moments(&k_n), degree)
    };

    let rows: Vec<Result<MonotonicityEntry>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let fisher = fisher_sum(n)?;
            let nq = Rational::from_i64(n as i64);
            let phi_truncated = (fisher.phi.clone() * &nq).to_f64();
            let nf = n as f64;
            let change = if degree >= 2 {
                nf * (fisher.history[degree - 1] - fisher.history[degree - 2]).abs()
            } else {
                0.0
            };
            let measure = Measure::Dilated {
                base: Box::new(Measure::FreePower {
                    base: Box::new(mu.clone()),
                    n,
                }),
                alpha: 1.0 / nf.sqrt(),
            };
            let chi = free_entropy(&measure, cells)?;
            let chi_tolerance = if chi.is_finite() {
                (chi - free_entropy(&measure, cells / 2)?).abs()
            } else {
                0.0
            };
            Ok(MonotonicityEntry {
                n,
                chi,
                chi_tolerance,
                phi: if fisher.divergent { None } else { Some(phi_truncated) },
                phi_truncated,
                phi_truncation_change: change,
                phi_divergent: fisher.divergent,
                atomic: fisher.atomic,
            })
        })
        .collect();
    let entries: Vec<MonotonicityEntry> = rows.into_iter().collect::<Result<_>>()?;

    let mut chi_nondecreasing = true;
    let mut phi_nonincreasing = true;
    let mut chi_strict = true;
    let mut phi_strict = true;
    for w in entries.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        chi_nondecreasing &= chi_step_ok(prev, cur);
        phi_nonincreasing &= phi_order(cur) <= phi_order(prev);
        if prev.chi.is_finite() {
            chi_strict &= cur.chi - prev.chi > prev.chi_tolerance + cur.chi_tolerance;
        }
        if let (Some(a), Some(b)) = (prev.phi, cur.phi) {
            phi_strict &= a - b > 0.0;
        }
    }

    let mut intermediate = Vec::new();
    let upto = intermediate_max.min(n_max.max(intermediate_max));
    let sums: Vec<FisherResult<Rational>> = (1..=upto).map(fisher_sum).collect::<Result<_>>()?;
    for n in 2..=upto {
        for m in 1..n {
            let (fm, fn_) = (&sums[m - 1], &sums[n - 1]);
            if fm.divergent || fn_.divergent {
                continue;
            }
            let rhs = fm.phi.clone() * &Rational::ratio(m as i64, n as i64);
            intermediate.push(IntermediateCheck {
                m,
                n,
                lhs: fn_.phi.to_f64(),
                rhs: rhs.to_f64(),
                holds: fn_.phi <= rhs,
            });
        }
    }
    let pass = chi_nondecreasing && phi_nonincreasing && intermediate.iter().all(|c| c.holds);
    Ok(MonotonicityReport {
        base: serde_json::to_string(mu).unwrap_or_default(),
        n_max,
        degree,
        order,
        cells,
        mode: NumericMode::Exact,
        entries,
        chi_nondecreasing,
        phi_nonincreasing,
        chi_strict,
        phi_strict,
        intermediate,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::laws;

    #[test]
    fn kernel_series_matches_closed_form() {
        let f = |x: f64| 0.5 * x * x * x.ln() - 0.75 * x * x;
        for k in 8..12 {
            let kf = k as f64;
            let closed = f(kf + 1.0) + f(kf - 1.0) - 2.0 * f(kf);
            assert!((closed - cell_log_kernel(k)).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_entropy_is_exact_on_aligned_grid() {
        let grid = GridDensity::new(-1.0, 1.0, vec![0.5; 400]).unwrap();
        let chi = free_entropy_grid(&grid).unwrap();
        let exact = 2f64.ln() - 1.5 + entropy_constant();
        assert!((chi - exact).abs() < 1e-12);
    }

    #[test]
    fn semicircle_entropy_on_grid() {
        let chi = free_entropy(&Measure::semicircular(0.0, 1.0), 2000).unwrap();
        assert!((chi - semicircle_entropy(1.0)).abs() < 1e-4);
        let shifted = free_entropy(&Measure::semicircular(3.0, 1.0), 2000).unwrap();
        assert!((chi - shifted).abs() < 1e-6);
        assert_eq!(free_entropy(&Measure::bernoulli(), 100).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn fisher_of_semicircle() {
        let q = Rational::ratio;
        for (var, phi) in [(q(1, 1), q(1, 1)), (q(2, 1), q(1, 2)), (q(1, 2), q(2, 1))] {
            let m = cumulants_to_moments(&laws::semicircular(q(0, 1), var.clone(), 12));
            let res = fisher_information(&m, 6).unwrap();
            assert_eq!(res.phi, phi);
            assert_eq!(res.coefficients[1], q(1, 1) / &var);
            assert!(res.residuals.iter().all(|r| *r == 0.0));
            assert!(res.extended_residuals.iter().all(|r| *r == 0.0));
            assert!(!res.divergent);
        }
    }

    #[test]
    fn atoms_flag_divergence() {
        let m = cumulants_to_moments(&laws::bernoulli::<Rational>(8));
        let res = fisher_information(&m, 4).unwrap();
        assert!(res.atomic && res.divergent);
        assert_eq!(res.value(), None);
    }

    #[test]
    fn history_is_nondecreasing() {
        let k = laws::bernoulli::<Rational>(20)
            .add(&laws::semicircular(Rational::from_i64(0), Rational::ratio(1, 2), 20));
        let res = fisher_information(&cumulants_to_moments(&k), 10).unwrap();
        for w in res.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
        // Free Cramér–Rao.
        assert!(res.phi.to_f64() >= 1.0 / 1.5);
    }

    #[test]
    fn integral_representation_semicircle() {
        let k = laws::semicircular(0.0, 1.0, 20);
        let chi = entropy_via_fisher(&k, &FisherIntegralOptions::default()).unwrap();
        assert!((chi - semicircle_entropy(1.0)).abs() < 1e-6);
    }
}
