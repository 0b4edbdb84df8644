//! Maximal correlation between `L²(s_n)` and `L²(s_m)` over polynomials of
//! bounded degree, as a canonical-correlation problem on centered powers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::algebra::NCPolynomial;
use crate::error::{Error, Result};
use crate::linalg::factor_symmetric;
use crate::moments::{cumulants_to_moments, laws, CumulantSequence, FreeFamily};
use crate::scalar::{NumericMode, Scalar};

/// Relative eigenvalue floor for the symmetric inverse roots.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Excess over `√(m/n)` tolerated before a report fails.
pub const THEOREM_TOLERANCE: f64 = 1e-6;

/// Covariance matrices of centered powers `1..=D`: `A` for `s_n`, `B` for `s_m`,
/// and the cross block `C[i][j] = cov(s_n^i, s_m^j)`.
#[derive(Debug, Clone)]
pub struct JointGrams<S> {
    pub gram_a: Vec<Vec<S>>,
    pub gram_b: Vec<Vec<S>>,
    pub cross_c: Vec<Vec<S>>,
}

fn centered_gram<S: Scalar>(moments: &[S], degree: usize) -> Vec<Vec<S>> {
    (1..=degree)
        .map(|i| {
            (1..=degree)
                .map(|j| moments[i + j].clone() - moments[i].clone() * &moments[j])
                .collect()
        })
        .collect()
}

fn check_law<S: Scalar>(kappa: &CumulantSequence<S>, degree: usize) -> Result<()> {
    if degree == 0 {
        return Err(Error::Domain("degree must be at least 1".into()));
    }
    let var = kappa
        .variance()
        .ok_or_else(|| Error::Domain("law needs at least two cumulants".into()))?;
    if S::MODE == NumericMode::Exact && var.is_zero() || var.to_f64() <= 0.0 {
        return Err(Error::Degenerate(
            "σ(x_1) = 0: the letters must be non-scalar".into(),
        ));
    }
    if kappa.order() < 2 * degree {
        return Err(Error::Resource {
            len: 2 * degree,
            cap: kappa.order(),
        });
    }
    Ok(())
}

/// Gram blocks for `(s_n, s_m)`, writing `s_n = s_m + t` with `t` free from `s_m`.
pub fn joint_grams<S: Scalar>(
    m: usize,
    n: usize,
    degree: usize,
    kappa: &CumulantSequence<S>,
) -> Result<JointGrams<S>> {
    if m == 0 || m > n {
        return Err(Error::Domain(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    check_law(kappa, degree)?;
    let order = 2 * degree;
    let kappa = kappa.truncated(order);
    let k_m = kappa.scaled(&S::from_i64(m as i64));
    let k_t = kappa.scaled(&S::from_i64((n - m) as i64));
    let k_n = kappa.scaled(&S::from_i64(n as i64));

    let mom_n = cumulants_to_moments(&k_n).with_unit();
    let mom_m = cumulants_to_moments(&k_m).with_unit();
    let gram_a = centered_gram(&mom_n, degree);
    let gram_b = centered_gram(&mom_m, degree);

    let family = FreeFamily::new(vec![k_m, k_t])?.with_r_max(order.max(1));
    let s_m = NCPolynomial::<S>::letter(1);
    let s_n = s_m.add(&NCPolynomial::letter(2));
    let mut pow_n = vec![NCPolynomial::one()];
    let mut pow_m = vec![NCPolynomial::one()];
    for _ in 0..degree {
        pow_n.push(pow_n.last().expect("nonempty").multiply(&s_n));
        pow_m.push(pow_m.last().expect("nonempty").multiply(&s_m));
    }
    let mut cross_c = vec![vec![S::zero(); degree]; degree];
    for i in 1..=degree {
        for j in 1..=degree {
            let joint = family.inner_product(&pow_n[i], &pow_m[j])?;
            cross_c[i - 1][j - 1] = joint - mom_n[i].clone() * &mom_m[j];
        }
    }
    Ok(JointGrams {
        gram_a,
        gram_b,
        cross_c,
    })
}

/// Top canonical correlation of a Gram triple.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub rho: f64,
    /// Coefficients on the first basis.
    pub f: Vec<f64>,
    /// Coefficients on the second basis.
    pub g: Vec<f64>,
    pub dropped_a: Vec<usize>,
    pub dropped_b: Vec<usize>,
}

/// `W` with `Wᵀ G W = I` on the retained eigendirections of the equilibrated Gram.
fn inverse_root(gram: &DMatrix<f64>, which: &str) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let k = gram.nrows();
    let scale: Vec<f64> = (0..k)
        .map(|i| {
            let d = gram[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let eq = DMatrix::from_fn(k, k, |i, j| gram[(i, j)] * scale[i] * scale[j]);
    let trace: f64 = (0..k).map(|i| eq[(i, i)]).sum();
    let eig = SymmetricEigen::new(eq);
    let floor = EIGEN_FLOOR * trace.max(f64::MIN_POSITIVE);
    let kept: Vec<usize> = (0..k).filter(|&c| eig.eigenvalues[c] > floor).collect();
    if kept.is_empty() {
        return Err(Error::Conditioning {
            context: format!("{which} Gram has no direction above the floor"),
            condition: f64::INFINITY,
        });
    }
    let mut w = DMatrix::zeros(k, kept.len());
    for (col, &c) in kept.iter().enumerate() {
        let inv = 1.0 / eig.eigenvalues[c].sqrt();
        for i in 0..k {
            w[(i, col)] = scale[i] * eig.eigenvectors[(i, c)] * inv;
        }
    }
    let dropped = (0..k).filter(|c| !kept.contains(c)).collect();
    Ok((w, dropped))
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Largest singular value of `A^{−1/2} C B^{−1/2}` with optimizers.
///
/// Reported drops refer to eigendirections of the equilibrated Grams.
pub fn cca_top(a: &[Vec<f64>], b: &[Vec<f64>], c: &[Vec<f64>]) -> Result<Canonical> {
    let (wa, dropped_a) = inverse_root(&to_matrix(a), "A")?;
    let (wb, dropped_b) = inverse_root(&to_matrix(b), "B")?;
    let core = wa.transpose() * to_matrix(c) * &wb;
    let svd = core.svd(true, true);
    let (top, rho) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &s)| if s > best.1 { (i, s) } else { best });
    let u = svd.u.as_ref().expect("u requested").column(top).into_owned();
    let v: DVector<f64> = svd.v_t.as_ref().expect("v requested").row(top).transpose();
    let f = &wa * u;
    let g = &wb * v;
    Ok(Canonical {
        rho: rho.max(0.0),
        f: f.iter().copied().collect(),
        g: g.iter().copied().collect(),
        dropped_a,
        dropped_b,
    })
}

fn matrix_f64<S: Scalar>(m: &[Vec<S>]) -> Vec<Vec<f64>> {
    m.iter().map(|row| row.iter().map(Scalar::to_f64).collect()).collect()
}

/// Removes basis directions that are exactly dependent (exact mode) or under
/// the pivot floor (float mode); returns the kept indices.
fn independent_indices<S: Scalar>(gram: &[Vec<S>]) -> Vec<usize> {
    let f = factor_symmetric(gram);
    (0..gram.len()).filter(|i| !f.dropped().contains(i)).collect()
}

fn restrict(m: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|&i| cols.iter().map(|&j| m[i][j]).collect()).collect()
}

fn expand(v: &[f64], kept: &[usize], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (x, &i) in v.iter().zip(kept) {
        out[i] = *x;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LabeledMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub m: usize,
    pub n: usize,
    pub degree: usize,
    pub distribution: String,
    pub mode: NumericMode,
    pub gram_a: LabeledMatrix,
    pub gram_b: LabeledMatrix,
    pub cross_c: LabeledMatrix,
    pub rho_max: f64,
    /// Coefficients on `s_n^k − τ(s_n^k)`, `k = 1..=D`.
    pub optimizer_f: Vec<f64>,
    /// Coefficients on `s_m^k − τ(s_m^k)`, `k = 1..=D`.
    pub optimizer_g: Vec<f64>,
    pub theoretical: f64,
    pub deviation: f64,
    /// `ρ(s_n, s_m)²`, exact in rational mode.
    pub linear_rho_squared: String,
    pub dropped_a: Vec<usize>,
    pub dropped_b: Vec<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

fn labels(var: &str, degree: usize) -> Vec<String> {
    (1..=degree).map(|k| format!("{var}^{k}")).collect()
}

/// CCA between the centered power bases of `s_n` and `s_m`.
pub fn max_correlation<S: Scalar>(
    m: usize,
    n: usize,
    degree: usize,
    kappa: &CumulantSequence<S>,
) -> Result<CorrelationReport> {
    let grams = joint_grams(m, n, degree, kappa)?;
    let linear_sq = grams.cross_c[0][0].clone() * &grams.cross_c[0][0]
        / (grams.gram_a[0][0].clone() * &grams.gram_b[0][0]);

    let keep_a = independent_indices(&grams.gram_a);
    let keep_b = independent_indices(&grams.gram_b);
    let a = matrix_f64(&grams.gram_a);
    let b = matrix_f64(&grams.gram_b);
    let c = matrix_f64(&grams.cross_c);
    let cca = cca_top(
        &restrict(&a, &keep_a, &keep_a),
        &restrict(&b, &keep_b, &keep_b),
        &restrict(&c, &keep_a, &keep_b),
    )?;
    let mut dropped_a: Vec<usize> = (0..degree).filter(|i| !keep_a.contains(i)).collect();
    dropped_a.extend(cca.dropped_a.iter().map(|&i| keep_a[i]));
    dropped_a.sort_unstable();
    let mut dropped_b: Vec<usize> = (0..degree).filter(|i| !keep_b.contains(i)).collect();
    dropped_b.extend(cca.dropped_b.iter().map(|&i| keep_b[i]));
    dropped_b.sort_unstable();

    let theoretical = (m as f64 / n as f64).sqrt();
    let deviation = (cca.rho - theoretical).abs();
    Ok(CorrelationReport {
        m,
        n,
        degree,
        distribution: "custom".into(),
        mode: S::MODE,
        gram_a: LabeledMatrix {
            rows: labels("s_n", degree),
            cols: labels("s_n", degree),
            values: a,
        },
        gram_b: LabeledMatrix {
            rows: labels("s_m", degree),
            cols: labels("s_m", degree),
            values: b,
        },
        cross_c: LabeledMatrix {
            rows: labels("s_n", degree),
            cols: labels("s_m", degree),
            values: c,
        },
        rho_max: cca.rho,
        optimizer_f: expand(&cca.f, &keep_a, degree),
        optimizer_g: expand(&cca.g, &keep_b, degree),
        theoretical,
        deviation,
        linear_rho_squared: linear_sq.to_string(),
        dropped_a: dropped_a.into_iter().map(|i| i + 1).collect(),
        dropped_b: dropped_b.into_iter().map(|i| i + 1).collect(),
        tolerance: THEOREM_TOLERANCE,
        pass: deviation <= THEOREM_TOLERANCE,
    })
}

impl CorrelationReport {
    pub fn with_distribution(mut self, id: impl Into<String>) -> Self {
        self.distribution = id.into();
        self
    }
}

/// `(D, rho_max(D))` for `D = 1..=max_degree`.
pub fn correlation_sweep<S: Scalar>(
    m: usize,
    n: usize,
    max_degree: usize,
    kappa: &CumulantSequence<S>,
) -> Result<Vec<(usize, f64)>> {
    (1..=max_degree)
        .map(|d| max_correlation(m, n, d, kappa).map(|r| (d, r.rho_max)))
        .collect()
}

/// Symmetric Bernoulli convolved with a centered semicircular of variance `t`.
pub fn smoothed_bernoulli<S: Scalar>(t: S, order: usize) -> CumulantSequence<S> {
    laws::bernoulli::<S>(order).add(&laws::semicircular(S::zero(), t, order))
}
