//! Conditional expectations onto letter sub-algebras and the interaction
//! (Efron–Stein) components built from them.
//!
//! `proj_I(z)` is the least-squares solution of the normal equations over
//! the centered monomials of degree `≤ D` in the letters of `I`, plus the
//! unit. For a polynomial `z` of degree `d` in free letters the projection
//! is itself a polynomial of degree `≤ d` in the `I`-letters, so `D = d`
//! loses nothing.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{expand_sum, Generators, NCPolynomial};
use crate::error::{Error, Result};
use crate::linalg::{factor_symmetric, SymmetricFactorization};
use crate::moments::{FreeFamily, Label};
use crate::scalar::{NumericMode, Scalar};

/// Tolerance on float-mode deviations in verification reports.
pub const FLOAT_TOLERANCE: f64 = 1e-10;

fn mode_tolerance<S: Scalar>() -> f64 {
    match S::MODE {
        NumericMode::Exact => 0.0,
        NumericMode::Float => FLOAT_TOLERANCE,
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionResult<S> {
    pub input: NCPolynomial<S>,
    pub generators: Generators,
    pub degree: usize,
    pub projection: NCPolynomial<S>,
    /// Largest violation of the normal equations `⟨b, z − proj⟩ = 0`.
    pub residual_norm: f64,
    pub gram_condition: f64,
    /// Basis directions removed as linearly dependent (or under the float floor).
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct EfronSteinComponent<S> {
    pub subset: BTreeSet<Label>,
    pub component: NCPolynomial<S>,
}

/// Outcome of one identity check, serialized as
/// `{claim, parameters, deviation, tolerance, pass, details}`.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub parameters: Value,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: Value,
}

impl VerificationReport {
    fn new(claim: &str, parameters: Value, deviation: f64, tolerance: f64, details: Value) -> Self {
        Self {
            claim: claim.to_string(),
            parameters,
            deviation,
            tolerance,
            pass: deviation <= tolerance,
            details,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrthogonalityCheck<S> {
    /// `⟨z_I, z_J⟩`.
    pub inner: S,
    /// `‖proj_J(z_I)‖²`.
    pub projection_norm_sq: S,
}

impl<S: Scalar> OrthogonalityCheck<S> {
    /// `|⟨z_I, z_J⟩|`.
    pub fn value(&self) -> f64 {
        self.inner.to_f64().abs()
    }
}

#[derive(Debug, Clone)]
pub struct SymmetryBound<S> {
    pub lhs_sq: S,
    pub rhs_sq: S,
    /// `‖proj_I(z)‖₂`.
    pub lhs: f64,
    /// `√(|I|/n)·‖z‖₂`.
    pub rhs: f64,
    /// `max |‖z_J‖² − ‖z_{J'}‖²|` over `J ⊆ I`, `J' = {1..|J|}`.
    pub exchangeability_deviation: f64,
}

impl<S: Scalar> SymmetryBound<S> {
    pub fn holds(&self) -> bool {
        match S::MODE {
            NumericMode::Exact => self.lhs_sq <= self.rhs_sq,
            NumericMode::Float => self.lhs <= self.rhs + 1e-12 * self.rhs.max(1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SumProjectionCheck<S> {
    pub onto_letters: NCPolynomial<S>,
    pub onto_sum: NCPolynomial<S>,
    pub distance_sq: S,
    pub distance: f64,
}

struct Subspace<S> {
    basis: Vec<NCPolynomial<S>>,
    gram: Vec<Vec<S>>,
    factor: SymmetricFactorization<S>,
}

/// Projection engine bound to a free family; caches factored Gram
/// matrices per `(generators, degree)`.
pub struct ProjectionEngine<'a, S> {
    family: &'a FreeFamily<S>,
    subspaces: Mutex<HashMap<(Generators, usize), Arc<Subspace<S>>>>,
}

impl<'a, S: Scalar> ProjectionEngine<'a, S> {
    pub fn new(family: &'a FreeFamily<S>) -> Self {
        Self {
            family,
            subspaces: Mutex::new(HashMap::new()),
        }
    }

    pub fn family(&self) -> &FreeFamily<S> {
        self.family
    }

    fn subspace(&self, generators: &Generators, degree: usize) -> Result<Arc<Subspace<S>>> {
        let key = (generators.clone(), degree);
        if let Some(s) = self.subspaces.lock().expect("subspace cache").get(&key) {
            return Ok(Arc::clone(s));
        }
        let basis = if matches!(generators, Generators::Letters(set) if set.is_empty()) {
            Vec::new()
        } else {
            self.family.monomial_basis(generators, degree)?
        };
        let k = basis.len();
        let mut gram = vec![vec![S::zero(); k]; k];
        for i in 0..k {
            for j in i..k {
                let g = self.family.inner_product(&basis[i], &basis[j])?;
                gram[j][i] = g.clone();
                gram[i][j] = g;
            }
        }
        let factor = factor_symmetric(&gram);
        let sub = Arc::new(Subspace {
            basis,
            gram,
            factor,
        });
        self.subspaces
            .lock()
            .expect("subspace cache")
            .insert(key, Arc::clone(&sub));
        Ok(sub)
    }

    /// `proj` onto the closure of polynomials in `generators`, degree-capped at `degree`.
    pub fn project(
        &self,
        z: &NCPolynomial<S>,
        generators: &Generators,
        degree: usize,
    ) -> Result<ProjectionResult<S>> {
        let needed = match generators {
            Generators::Letters(_) => z.degree(),
            Generators::Sum(_) => z.degree(),
        };
        if degree < needed && !(matches!(generators, Generators::Letters(s) if s.is_empty())) {
            return Err(Error::Precondition(format!(
                "degree cap {degree} below deg(z) = {needed}"
            )));
        }
        let tau = self.family.trace(z)?;
        let sub = self.subspace(generators, degree.max(1))?;
        let rhs: Vec<S> = sub
            .basis
            .iter()
            .map(|b| self.family.inner_product(b, z))
            .collect::<Result<_>>()?;
        let coeffs = sub.factor.solve(&rhs);

        let mut residual = 0.0f64;
        let mut scale = 0.0f64;
        for (i, r) in rhs.iter().enumerate() {
            let gc = sub.gram[i]
                .iter()
                .zip(&coeffs)
                .fold(S::zero(), |acc, (g, c)| acc + g.clone() * c);
            residual = residual.max((r.clone() - gc).to_f64().abs());
            scale = scale.max(r.to_f64().abs());
        }
        if S::MODE == NumericMode::Float && residual > 1e-8 * scale.max(1.0) {
            return Err(Error::Conditioning {
                context: format!("projection onto {generators} at degree {degree}"),
                condition: sub.factor.condition(),
            });
        }

        let mut projection = NCPolynomial::constant(tau);
        for (b, c) in sub.basis.iter().zip(&coeffs) {
            if !c.is_zero() {
                projection = projection.add(&b.scale(c));
            }
        }
        Ok(ProjectionResult {
            input: z.clone(),
            generators: generators.clone(),
            degree,
            projection,
            residual_norm: residual,
            gram_condition: sub.factor.condition(),
            dropped: sub.factor.dropped().len(),
        })
    }

    /// `proj_I(z)` for a letter set `I`.
    pub fn conditional_expectation(
        &self,
        z: &NCPolynomial<S>,
        subset: &BTreeSet<Label>,
        degree: usize,
    ) -> Result<ProjectionResult<S>> {
        self.project(z, &Generators::Letters(subset.clone()), degree)
    }

    fn proj(&self, z: &NCPolynomial<S>, subset: &BTreeSet<Label>, degree: usize) -> Result<NCPolynomial<S>> {
        self.conditional_expectation(z, subset, degree)
            .map(|r| r.projection)
            .map_err(|e| annotate(e, subset))
    }

    /// `proj_J(z)` for every `J ⊆ I`, keyed by bitmask over `I` in ascending order.
    fn all_subset_projections(
        &self,
        z: &NCPolynomial<S>,
        subset: &BTreeSet<Label>,
        degree: usize,
    ) -> Result<Vec<NCPolynomial<S>>> {
        let letters: Vec<Label> = subset.iter().copied().collect();
        (0..1usize << letters.len())
            .map(|mask| self.proj(z, &mask_subset(&letters, mask), degree))
            .collect()
    }

    /// `z_I = Σ_{J⊆I} (−1)^{|I|−|J|} proj_J(z)`.
    pub fn efron_stein_component(
        &self,
        z: &NCPolynomial<S>,
        subset: &BTreeSet<Label>,
        degree: usize,
    ) -> Result<EfronSteinComponent<S>> {
        let projections = self.all_subset_projections(z, subset, degree)?;
        Ok(EfronSteinComponent {
            subset: subset.clone(),
            component: inclusion_exclusion(&projections, (1 << subset.len()) - 1, subset.len()),
        })
    }

    fn difference_report(
        &self,
        claim: &str,
        parameters: Value,
        lhs: &NCPolynomial<S>,
        rhs: &NCPolynomial<S>,
    ) -> Result<VerificationReport> {
        let diff = lhs.sub(rhs);
        let coeff_dev = diff.max_abs_coefficient().to_f64();
        let l2_sq = self.family.norm_squared(&diff)?;
        let l2 = l2_sq.to_f64().max(0.0).sqrt();
        let deviation = coeff_dev.max(l2);
        Ok(VerificationReport::new(
            claim,
            parameters,
            deviation,
            mode_tolerance::<S>(),
            json!({
                "coefficient_deviation": coeff_dev,
                "l2_deviation": l2,
                "mode": S::MODE,
            }),
        ))
    }

    /// Both sides of `proj_I(z) = Σ_{J⊆I} z_J`.
    pub fn verify_decomposition(
        &self,
        z: &NCPolynomial<S>,
        subset: &BTreeSet<Label>,
        degree: usize,
    ) -> Result<VerificationReport> {
        let projections = self.all_subset_projections(z, subset, degree)?;
        let k = subset.len();
        let full = (1usize << k) - 1;
        let mut sum = NCPolynomial::zero();
        for mask in 0..=full {
            sum = sum.add(&inclusion_exclusion(&projections, mask, k));
        }
        self.difference_report(
            "efron-stein decomposition: proj_I(z) = sum over J in I of z_J",
            json!({ "subset": subset, "degree": degree }),
            &projections[full],
            &sum,
        )
    }

    /// `|⟨z_I, z_J⟩|` and `‖proj_J(z_I)‖²`, both zero when `I ∖ J ≠ ∅`.
    pub fn verify_orthogonality(
        &self,
        z: &NCPolynomial<S>,
        i_set: &BTreeSet<Label>,
        j_set: &BTreeSet<Label>,
        degree: usize,
    ) -> Result<OrthogonalityCheck<S>> {
        if i_set.is_subset(j_set) {
            return Err(Error::Precondition(format!(
                "orthogonality needs I ∖ J nonempty (I = {i_set:?}, J = {j_set:?})"
            )));
        }
        let z_i = self.efron_stein_component(z, i_set, degree)?.component;
        let z_j = self.efron_stein_component(z, j_set, degree)?.component;
        let inner = self.family.inner_product(&z_i, &z_j)?;
        let projected = self.proj(&z_i, j_set, degree.max(z_i.degree()))?;
        let projection_norm_sq = self.family.norm_squared(&projected)?;
        Ok(OrthogonalityCheck {
            inner,
            projection_norm_sq,
        })
    }

    /// `proj_I ∘ proj_J = proj_{I∩J}` on `z`.
    pub fn verify_commutation(
        &self,
        z: &NCPolynomial<S>,
        i_set: &BTreeSet<Label>,
        j_set: &BTreeSet<Label>,
        degree: usize,
    ) -> Result<VerificationReport> {
        let inner = self.proj(z, j_set, degree)?;
        let composed = self.proj(&inner, i_set, degree)?;
        let meet: BTreeSet<Label> = i_set.intersection(j_set).copied().collect();
        let direct = self.proj(z, &meet, degree)?;
        self.difference_report(
            "commuting projections: proj_I(proj_J(z)) = proj_{I∩J}(z)",
            json!({ "I": i_set, "J": j_set, "degree": degree }),
            &composed,
            &direct,
        )
    }

    /// Tower property `proj_J ∘ proj_I = proj_J` for `J ⊆ I`.
    pub fn verify_tower(
        &self,
        z: &NCPolynomial<S>,
        i_set: &BTreeSet<Label>,
        j_set: &BTreeSet<Label>,
        degree: usize,
    ) -> Result<VerificationReport> {
        if !j_set.is_subset(i_set) {
            return Err(Error::Precondition("tower property needs J ⊆ I".into()));
        }
        let outer = self.proj(z, i_set, degree)?;
        let composed = self.proj(&outer, j_set, degree)?;
        let direct = self.proj(z, j_set, degree)?;
        self.difference_report(
            "tower property: proj_J(proj_I(z)) = proj_J(z)",
            json!({ "I": i_set, "J": j_set, "degree": degree }),
            &composed,
            &direct,
        )
    }

    /// `‖proj_I(z)‖² − Σ_{J⊆I} ‖z_J‖²`.
    pub fn parseval_defect(
        &self,
        z: &NCPolynomial<S>,
        subset: &BTreeSet<Label>,
        degree: usize,
    ) -> Result<S> {
        let projections = self.all_subset_projections(z, subset, degree)?;
        let k = subset.len();
        let full = (1usize << k) - 1;
        let mut total = S::zero();
        for mask in 0..=full {
            let c = inclusion_exclusion(&projections, mask, k);
            total = total + self.family.norm_squared(&c)?;
        }
        Ok(self.family.norm_squared(&projections[full])? - total)
    }

    /// `‖proj_I(z)‖₂ ≤ √(|I|/n)·‖z‖₂` for symmetric centered `z` in `x_1..x_n`.
    pub fn verify_symmetry_bound(
        &self,
        z: &NCPolynomial<S>,
        subset: &BTreeSet<Label>,
        n: usize,
        degree: usize,
    ) -> Result<SymmetryBound<S>> {
        self.require_iid(n)?;
        if subset.iter().any(|&l| l == 0 || l as usize > n) {
            return Err(Error::Precondition(format!("subset {subset:?} not inside 1..={n}")));
        }
        if !is_symmetric(z, n) {
            return Err(Error::Precondition(format!(
                "z is not symmetric in x_1..x_{n}"
            )));
        }
        let tau = self.family.trace(z)?;
        if !negligible(&tau) {
            return Err(Error::Precondition(format!("τ(z) = {tau} is not zero")));
        }
        let projected = self.proj(z, subset, degree)?;
        let lhs_sq = self.family.norm_squared(&projected)?;
        let z_sq = self.family.norm_squared(z)?;
        let rhs_sq = z_sq * &S::ratio(subset.len() as i64, n as i64);

        // Exchangeability: ‖z_J‖ depends only on |J|.
        let mut exchangeability_deviation = 0.0f64;
        let letters: Vec<Label> = subset.iter().copied().collect();
        for mask in 1..1usize << letters.len() {
            let j = mask_subset(&letters, mask);
            let j_prime: BTreeSet<Label> = (1..=j.len() as Label).collect();
            if j == j_prime {
                continue;
            }
            let a = self.efron_stein_component(z, &j, degree)?.component;
            let b = self.efron_stein_component(z, &j_prime, degree)?.component;
            let diff = self.family.norm_squared(&a)? - self.family.norm_squared(&b)?;
            exchangeability_deviation = exchangeability_deviation.max(diff.to_f64().abs());
        }

        Ok(SymmetryBound {
            lhs: lhs_sq.to_f64().max(0.0).sqrt(),
            rhs: rhs_sq.to_f64().max(0.0).sqrt(),
            lhs_sq,
            rhs_sq,
            exchangeability_deviation,
        })
    }

    /// Distance between `proj_{L²(x_1..x_m)}(p(s_n))` and `proj_{L²(s_m)}(p(s_n))`.
    pub fn verify_sum_projection(
        &self,
        p: &[S],
        m: usize,
        n: usize,
        degree: usize,
    ) -> Result<SumProjectionCheck<S>> {
        if m == 0 || m > n {
            return Err(Error::Precondition(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
        }
        self.require_iid(n)?;
        let z = expand_sum::<S>(n)?.compose_univariate(p);
        let letters: BTreeSet<Label> = (1..=m as Label).collect();
        let onto_letters = self.proj(&z, &letters, degree)?;
        let onto_sum = self.project(&z, &Generators::Sum(m), degree)?.projection;
        let diff = onto_letters.sub(&onto_sum);
        let distance_sq = self.family.norm_squared(&diff)?;
        Ok(SumProjectionCheck {
            distance: distance_sq.to_f64().max(0.0).sqrt(),
            onto_letters,
            onto_sum,
            distance_sq,
        })
    }

    fn require_iid(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.family.len() {
            return Err(Error::Precondition(format!(
                "n = {n} letters requested, family has {}",
                self.family.len()
            )));
        }
        let first = self.family.law(1)?;
        for l in 2..=n as Label {
            if self.family.law(l)? != first {
                return Err(Error::Precondition(
                    "letters 1..n must be identically distributed".into(),
                ));
            }
        }
        Ok(())
    }
}

fn negligible<S: Scalar>(x: &S) -> bool {
    match S::MODE {
        NumericMode::Exact => x.is_zero(),
        NumericMode::Float => x.to_f64().abs() <= 1e-12,
    }
}

fn annotate(e: Error, subset: &BTreeSet<Label>) -> Error {
    match e {
        Error::Conditioning { context, condition } => Error::Conditioning {
            context: format!("{context} (subset J = {subset:?})"),
            condition,
        },
        other => other,
    }
}

fn mask_subset(letters: &[Label], mask: usize) -> BTreeSet<Label> {
    letters
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, &l)| l)
        .collect()
}

/// `Σ_{K ⊆ mask} (−1)^{|mask|−|K|} projections[K]`.
fn inclusion_exclusion<S: Scalar>(projections: &[NCPolynomial<S>], mask: usize, _bits: usize) -> NCPolynomial<S> {
    let mut out = NCPolynomial::zero();
    let size = mask.count_ones();
    let mut sub = mask;
    loop {
        let sign = if (size - sub.count_ones()) % 2 == 0 {
            S::one()
        } else {
            -S::one()
        };
        out = out.add(&projections[sub].scale(&sign));
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    out
}

/// Invariance of `z` under every permutation of the letters `1..=n`.
pub fn is_symmetric<S: Scalar>(z: &NCPolynomial<S>, n: usize) -> bool {
    if z.letters().iter().any(|&l| l as usize > n) {
        return false;
    }
    let mut perm: Vec<Label> = (1..=n as Label).collect();
    loop {
        let relabeled = z.relabeled(|l| perm[l as usize - 1]);
        let same = match S::MODE {
            NumericMode::Exact => relabeled == *z,
            NumericMode::Float => {
                relabeled.sub(z).max_abs_coefficient().to_f64()
                    <= 1e-12 * z.max_abs_coefficient().to_f64().max(1.0)
            }
        };
        if !same {
            return false;
        }
        if !next_permutation(&mut perm) {
            return true;
        }
    }
}

/// Symmetrization `(1/n!) Σ_σ z∘σ`.
pub fn symmetrize<S: Scalar>(z: &NCPolynomial<S>, n: usize) -> NCPolynomial<S> {
    let mut perm: Vec<Label> = (1..=n as Label).collect();
    let mut acc = NCPolynomial::zero();
    let mut count = 0i64;
    loop {
        acc = acc.add(&z.relabeled(|l| if (l as usize) <= n { perm[l as usize - 1] } else { l }));
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    acc.scale(&(S::one() / S::from_i64(count)))
}

fn next_permutation(v: &mut [Label]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
