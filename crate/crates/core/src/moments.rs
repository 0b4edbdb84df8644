//! Univariate moment/cumulant sequences and mixed moments of free families.
//!
//! A [`FreeFamily`] stores one free-cumulant sequence per letter. Mixed
//! cumulants across distinct letters vanish, so the moment of a word is a
//! sum over non-crossing partitions whose blocks are letter-constant.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::error::{domain, Error, Result};
use crate::linalg::is_positive_semidefinite;
use crate::nc_lattice::{enumerate_nc_capped, moebius_to_top, DEFAULT_R_MAX};
use crate::scalar::{NumericMode, Scalar};

/// Letters are labelled `1..=n`.
pub type Label = u16;

/// `m_1..m_N` of a distribution; `m_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<S> {
    values: Vec<S>,
}

/// Free cumulants `κ_1..κ_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSequence<S> {
    values: Vec<S>,
}

macro_rules! sequence_common {
    ($ty:ident) => {
        impl<S: Scalar> $ty<S> {
            pub fn new(values: Vec<S>) -> Self {
                Self { values }
            }

            pub fn order(&self) -> usize {
                self.values.len()
            }

            pub fn values(&self) -> &[S] {
                &self.values
            }

            pub fn into_values(self) -> Vec<S> {
                self.values
            }

            pub fn to_f64(&self) -> $ty<f64> {
                $ty {
                    values: self.values.iter().map(Scalar::to_f64).collect(),
                }
            }

            pub fn truncated(&self, order: usize) -> Self {
                Self {
                    values: self.values.iter().take(order).cloned().collect(),
                }
            }

            /// Reads `{order, values, mode}`; values may be numbers or `"p/q"` strings.
            pub fn from_json(value: &Value) -> Result<Self> {
                let values = value
                    .get("values")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("missing `values` array".into()))?;
                let values = values.iter().map(S::from_json).collect::<Result<Vec<_>>>()?;
                if let Some(order) = value.get("order").and_then(Value::as_u64) {
                    if order as usize != values.len() {
                        return Err(Error::Parse(format!(
                            "order {order} does not match {} values",
                            values.len()
                        )));
                    }
                }
                Ok(Self { values })
            }
        }

        impl<S: Scalar> Serialize for $ty<S> {
            fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
                let mut st = serializer.serialize_struct(stringify!($ty), 3)?;
                st.serialize_field("order", &self.values.len())?;
                let values: Vec<Value> = self.values.iter().map(Scalar::to_json).collect();
                st.serialize_field("values", &values)?;
                st.serialize_field("mode", &S::MODE)?;
                st.end()
            }
        }
    };
}

sequence_common!(MomentSequence);
sequence_common!(CumulantSequence);

impl<S: Scalar> MomentSequence<S> {
    /// `m_r`, with `m_0 = 1`.
    pub fn get(&self, r: usize) -> Option<S> {
        if r == 0 {
            Some(S::one())
        } else {
            self.values.get(r - 1).cloned()
        }
    }

    /// `m_0..=m_N` including the implicit unit.
    pub fn with_unit(&self) -> Vec<S> {
        std::iter::once(S::one()).chain(self.values.iter().cloned()).collect()
    }

    /// Hankel matrix `[m_{i+j}]` for `0 ≤ i, j ≤ size-1`.
    pub fn hankel(&self, size: usize) -> Result<Vec<Vec<S>>> {
        if 2 * (size.max(1) - 1) > self.order() {
            return domain(format!(
                "Hankel of size {size} needs moments to order {}",
                2 * (size - 1)
            ));
        }
        let m = self.with_unit();
        Ok((0..size)
            .map(|i| (0..size).map(|j| m[i + j].clone()).collect())
            .collect())
    }

    /// Positive semidefiniteness of the largest Hankel matrix the data allows.
    pub fn hankel_is_psd(&self) -> bool {
        let size = self.order() / 2 + 1;
        match self.hankel(size) {
            Ok(h) => is_positive_semidefinite(&h, 1e-12),
            Err(_) => false,
        }
    }

    pub fn mean(&self) -> S {
        self.get(1).unwrap_or_else(S::zero)
    }

    pub fn variance(&self) -> Option<S> {
        let m1 = self.get(1)?;
        let m2 = self.get(2)?;
        Some(m2 - m1.clone() * &m1)
    }
}

impl<S: Scalar> CumulantSequence<S> {
    /// `κ_r` for `r ≥ 1`.
    pub fn get(&self, r: usize) -> Option<&S> {
        if r == 0 {
            None
        } else {
            self.values.get(r - 1)
        }
    }

    pub fn scaled(&self, factor: &S) -> Self {
        Self {
            values: self.values.iter().map(|v| v.clone() * factor).collect(),
        }
    }

    /// Cumulants of `α·x`: `κ_r ← α^r κ_r`.
    pub fn dilated(&self, alpha: &S) -> Self {
        let mut power = S::one();
        let values = self
            .values
            .iter()
            .map(|v| {
                power = power.clone() * alpha;
                v.clone() * &power
            })
            .collect();
        Self { values }
    }

    /// Cumulants of `x + c`.
    pub fn shifted(&self, c: &S) -> Self {
        let mut values = self.values.clone();
        if let Some(first) = values.first_mut() {
            *first = first.clone() + c;
        }
        Self { values }
    }

    /// Termwise sum; the result has the shorter order.
    pub fn add(&self, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.clone() + b)
                .collect(),
        }
    }

    pub fn variance(&self) -> Option<&S> {
        self.get(2)
    }
}

/// Coefficients `[t^0..t^deg]` of `M(t)^s` for `M(t) = Σ m_i t^i`.
fn series_power<S: Scalar>(m: &[S], s: usize, deg: usize) -> Vec<S> {
    let mut acc = vec![S::zero(); deg + 1];
    acc[0] = S::one();
    for _ in 0..s {
        let mut next = vec![S::zero(); deg + 1];
        for (i, a) in acc.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, mj) in m.iter().enumerate().take(deg + 1 - i) {
                next[i + j] = next[i + j].clone() + a.clone() * mj;
            }
        }
        acc = next;
    }
    acc
}

/// Free cumulants from moments.
///
/// Uses the first-block recursion `m_r = Σ_s κ_s [t^{r−s}] M(t)^s`, which is
/// the non-crossing moment-cumulant formula grouped by the block of 1; the
/// enumeration form lives in [`reference`].
pub fn moments_to_cumulants<S: Scalar>(m: &MomentSequence<S>) -> CumulantSequence<S> {
    let n = m.order();
    let full = m.with_unit();
    let mut kappa: Vec<S> = Vec::with_capacity(n);
    let powers: Vec<Vec<S>> = (0..=n).map(|s| series_power(&full, s, n)).collect();
    for r in 1..=n {
        let mut value = full[r].clone();
        for s in 1..r {
            value = value - kappa[s - 1].clone() * &powers[s][r - s];
        }
        kappa.push(value);
    }
    CumulantSequence::new(kappa)
}

/// Moments from free cumulants (inverse of [`moments_to_cumulants`]).
pub fn cumulants_to_moments<S: Scalar>(kappa: &CumulantSequence<S>) -> MomentSequence<S> {
    let n = kappa.order();
    let mut full: Vec<S> = vec![S::zero(); n + 1];
    full[0] = S::one();
    for r in 1..=n {
        let mut value = kappa.values[r - 1].clone();
        for s in 1..r {
            let power = series_power(&full[..r], s, r - s);
            value = value + kappa.values[s - 1].clone() * &power[r - s];
        }
        full[r] = value;
    }
    MomentSequence::new(full.into_iter().skip(1).collect())
}

/// Definitional sums over `NC(r)`, used to pin the fast paths.
pub mod reference {
    use super::*;

    /// `κ_r = Σ_{π∈NC(r)} μ(π, 1_r) Π_{V∈π} m_{|V|}`.
    pub fn moments_to_cumulants<S: Scalar>(m: &MomentSequence<S>) -> Result<CumulantSequence<S>> {
        let full = m.with_unit();
        let mut kappa = Vec::with_capacity(m.order());
        for r in 1..=m.order() {
            let mut total = S::zero();
            for pi in enumerate_nc_capped(r, DEFAULT_R_MAX)?.iter() {
                let weight = S::from_i64(moebius_to_top(pi));
                let prod = pi
                    .block_sizes()
                    .fold(S::one(), |acc, size| acc * &full[size]);
                total = total + weight * &prod;
            }
            kappa.push(total);
        }
        Ok(CumulantSequence::new(kappa))
    }

    /// `m_r = Σ_{π∈NC(r)} Π_{V∈π} κ_{|V|}`.
    pub fn cumulants_to_moments<S: Scalar>(kappa: &CumulantSequence<S>) -> Result<MomentSequence<S>> {
        let mut moments = Vec::with_capacity(kappa.order());
        for r in 1..=kappa.order() {
            let mut total = S::zero();
            for pi in enumerate_nc_capped(r, DEFAULT_R_MAX)?.iter() {
                total = total
                    + pi.block_sizes()
                        .fold(S::one(), |acc, size| acc * &kappa.values[size - 1]);
            }
            moments.push(total);
        }
        Ok(MomentSequence::new(moments))
    }

    /// Sum over `π ≤ ker(word)` in `NC(r)`, by filtering the full enumeration.
    pub fn mixed_moment<S: Scalar>(word: &[Label], family: &FreeFamily<S>) -> Result<S> {
        if word.is_empty() {
            return Ok(S::one());
        }
        family.check_word(word)?;
        let mut total = S::zero();
        'partitions: for pi in enumerate_nc_capped(word.len(), family.r_max)?.iter() {
            let mut prod = S::one();
            for block in pi.blocks() {
                let label = word[block[0] - 1];
                if block.iter().any(|&i| word[i - 1] != label) {
                    continue 'partitions;
                }
                prod = prod * family.cumulant(label, block.len())?;
            }
            total = total + prod;
        }
        Ok(total)
    }
}

/// Free letters with their cumulant sequences and a moment cache.
#[derive(Debug)]
pub struct FreeFamily<S> {
    laws: Vec<CumulantSequence<S>>,
    identically_distributed: bool,
    r_max: usize,
    cache: Mutex<HashMap<Vec<Label>, S>>,
}

impl<S: Scalar> Clone for FreeFamily<S> {
    fn clone(&self) -> Self {
        Self {
            laws: self.laws.clone(),
            identically_distributed: self.identically_distributed,
            r_max: self.r_max,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<S: Scalar> FreeFamily<S> {
    /// One law per letter; letter `i` has law `laws[i-1]`.
    pub fn new(laws: Vec<CumulantSequence<S>>) -> Result<Self> {
        if laws.is_empty() {
            return domain("a free family needs at least one letter");
        }
        if laws.len() > Label::MAX as usize {
            return domain("too many letters");
        }
        let identically_distributed = laws.windows(2).all(|w| w[0] == w[1]);
        Ok(Self {
            laws,
            identically_distributed,
            r_max: DEFAULT_R_MAX,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// `n` free copies of one law.
    pub fn iid(law: CumulantSequence<S>, n: usize) -> Result<Self> {
        Self::new(vec![law; n])
    }

    pub fn with_r_max(mut self, r_max: usize) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        1..=self.laws.len() as Label
    }

    pub fn identically_distributed(&self) -> bool {
        self.identically_distributed
    }

    pub fn law(&self, label: Label) -> Result<&CumulantSequence<S>> {
        self.laws
            .get((label as usize).wrapping_sub(1))
            .ok_or_else(|| Error::Domain(format!("letter {label} not in family of {}", self.len())))
    }

    pub fn cumulant(&self, label: Label, order: usize) -> Result<S> {
        let law = self.law(label)?;
        law.get(order).cloned().ok_or_else(|| {
            Error::Domain(format!(
                "cumulant κ_{order} of letter {label} unavailable (order {})",
                law.order()
            ))
        })
    }

    fn check_word(&self, word: &[Label]) -> Result<()> {
        if word.len() > self.r_max {
            return Err(Error::Resource {
                len: word.len(),
                cap: self.r_max,
            });
        }
        for &l in word {
            self.law(l)?;
        }
        Ok(())
    }

    /// `τ(x_{i_1}⋯x_{i_r})`, memoized per word.
    pub fn mixed_moment(&self, word: &[Label]) -> Result<S> {
        if word.is_empty() {
            return Ok(S::one());
        }
        self.check_word(word)?;
        if let Some(v) = self.cache.lock().expect("moment cache").get(word) {
            return Ok(v.clone());
        }
        let value = IntervalMoments::new(self, word).evaluate()?;
        self.cache
            .lock()
            .expect("moment cache")
            .insert(word.to_vec(), value.clone());
        Ok(value)
    }

    /// Cumulants of `Σ_{i∈subset} x_i` (free cumulants add).
    pub fn sum_cumulants(&self, subset: &[Label]) -> Result<CumulantSequence<S>> {
        let (first, rest) = subset
            .split_first()
            .ok_or_else(|| Error::Domain("empty subset".into()))?;
        let mut acc = self.law(*first)?.clone();
        let mut seen = vec![*first];
        for l in rest {
            if seen.contains(l) {
                return domain(format!("letter {l} repeated in subset"));
            }
            seen.push(*l);
            acc = acc.add(self.law(*l)?);
        }
        Ok(acc)
    }

    pub fn mode(&self) -> NumericMode {
        S::MODE
    }
}

/// Interval dynamic program for one word.
///
/// `M(i, j)` is the moment of the subword `[i, j)`. Grouping partitions by
/// the block of position `i`, each block `i = v_1 < … < v_k` contributes
/// `κ_k · Π M(v_l + 1, v_{l+1}) · M(v_k + 1, j)`: the gaps are independent
/// because the partition is non-crossing.
struct IntervalMoments<'a, S> {
    family: &'a FreeFamily<S>,
    word: &'a [Label],
    memo: HashMap<(usize, usize), S>,
}

impl<'a, S: Scalar> IntervalMoments<'a, S> {
    fn new(family: &'a FreeFamily<S>, word: &'a [Label]) -> Self {
        Self {
            family,
            word,
            memo: HashMap::new(),
        }
    }

    fn evaluate(&mut self) -> Result<S> {
        self.interval(0, self.word.len())
    }

    fn interval(&mut self, i: usize, j: usize) -> Result<S> {
        if i >= j {
            return Ok(S::one());
        }
        if let Some(v) = self.memo.get(&(i, j)) {
            return Ok(v.clone());
        }
        let label = self.word[i];
        // chain[c][k]: sum over completions when the block's last chosen
        // element is c and it already has k elements.
        let mut chain: HashMap<(usize, usize), S> = HashMap::new();
        let value = self.chain(i, 1, j, label, &mut chain)?;
        self.memo.insert((i, j), value.clone());
        Ok(value)
    }

    fn chain(
        &mut self,
        last: usize,
        count: usize,
        end: usize,
        label: Label,
        memo: &mut HashMap<(usize, usize), S>,
    ) -> Result<S> {
        if let Some(v) = memo.get(&(last, count)) {
            return Ok(v.clone());
        }
        let kappa = self.family.cumulant(label, count)?;
        let mut total = if kappa.is_zero() {
            S::zero()
        } else {
            kappa * &self.interval(last + 1, end)?
        };
        for next in last + 1..end {
            if self.word[next] != label {
                continue;
            }
            let gap = self.interval(last + 1, next)?;
            if gap.is_zero() {
                continue;
            }
            let rest = self.chain(next, count + 1, end, label, memo)?;
            total = total + gap * &rest;
        }
        memo.insert((last, count), total.clone());
        Ok(total)
    }
}

/// Named laws with closed-form cumulants.
pub mod laws {
    use super::*;

    /// Semicircular law of given mean and variance: `κ = (mean, var, 0, …)`.
    pub fn semicircular<S: Scalar>(mean: S, variance: S, order: usize) -> CumulantSequence<S> {
        let mut values = vec![S::zero(); order];
        if order >= 1 {
            values[0] = mean;
        }
        if order >= 2 {
            values[1] = variance;
        }
        CumulantSequence::new(values)
    }

    /// Symmetric Bernoulli `½δ₋₁ + ½δ₁`: `κ_{2k} = (−1)^{k+1} C_{k−1}`.
    pub fn bernoulli<S: Scalar>(order: usize) -> CumulantSequence<S> {
        let moments: Vec<S> = (1..=order)
            .map(|r| if r % 2 == 0 { S::one() } else { S::zero() })
            .collect();
        moments_to_cumulants(&MomentSequence::new(moments))
    }

    /// Point mass at `a`.
    pub fn point_mass<S: Scalar>(a: S, order: usize) -> CumulantSequence<S> {
        let mut values = vec![S::zero(); order];
        if order >= 1 {
            values[0] = a;
        }
        CumulantSequence::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num::Zero;

    fn qs(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_i64(x)).collect()
    }

    #[test]
    fn semicircular_cumulants() {
        let m = MomentSequence::new(qs(&[0, 1, 0, 2, 0, 5]));
        assert_eq!(moments_to_cumulants(&m).values(), qs(&[0, 1, 0, 0, 0, 0]).as_slice());
    }

    #[test]
    fn point_mass_cumulants() {
        let a = Rational::ratio(3, 2);
        let m = MomentSequence::new((1..=6).map(|r| a.pow_n(r)).collect());
        let k = moments_to_cumulants(&m);
        assert_eq!(k.values()[0], a);
        assert!(k.values()[1..].iter().all(|x| x.is_zero()));
    }

    #[test]
    fn bernoulli_cumulants() {
        let m = MomentSequence::new(qs(&[0, 1, 0, 1, 0, 1]));
        assert_eq!(moments_to_cumulants(&m).values(), qs(&[0, 1, 0, -1, 0, 2]).as_slice());
    }

    #[test]
    fn semicircular_moments_are_catalan() {
        let k = laws::semicircular(Rational::from_i64(0), Rational::from_i64(1), 10);
        let m = cumulants_to_moments(&k);
        assert_eq!(m.values(), qs(&[0, 1, 0, 2, 0, 5, 0, 14, 0, 42]).as_slice());
    }

    #[test]
    fn doubled_bernoulli_moments() {
        let k = CumulantSequence::new(qs(&[0, 2, 0, -2]));
        let m = cumulants_to_moments(&k);
        assert_eq!(m.get(2).unwrap(), Rational::from_i64(2));
        assert_eq!(m.get(4).unwrap(), Rational::from_i64(6));
    }

    #[test]
    fn point_mass_moments() {
        let a = Rational::ratio(-2, 3);
        let m = cumulants_to_moments(&laws::point_mass(a.clone(), 5));
        for r in 1..=5 {
            assert_eq!(m.get(r).unwrap(), a.pow_n(r as u32));
        }
    }

    #[test]
    fn mixed_moments_of_free_semicirculars() {
        let fam = FreeFamily::iid(laws::semicircular(Rational::from_i64(0), Rational::from_i64(1), 8), 2).unwrap();
        assert_eq!(fam.mixed_moment(&[1, 2, 1, 2]).unwrap(), Rational::from_i64(0));
        assert_eq!(fam.mixed_moment(&[1, 1, 2, 2]).unwrap(), Rational::from_i64(1));
        assert_eq!(fam.mixed_moment(&[2, 2, 2, 2]).unwrap(), Rational::from_i64(2));
        assert_eq!(fam.mixed_moment(&[]).unwrap(), Rational::from_i64(1));
    }

    #[test]
    fn word_cap_is_enforced() {
        let fam = FreeFamily::iid(laws::semicircular(0.0, 1.0, 20), 1)
            .unwrap()
            .with_r_max(6);
        match fam.mixed_moment(&[1; 7]) {
            Err(Error::Resource { len: 7, cap: 6 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_letter_is_rejected() {
        let fam = FreeFamily::iid(laws::semicircular(0.0, 1.0, 4), 2).unwrap();
        assert!(fam.mixed_moment(&[1, 3]).is_err());
    }

    #[test]
    fn sum_cumulants_examples() {
        let fam = FreeFamily::iid(laws::semicircular(Rational::from_i64(0), Rational::from_i64(1), 6), 5).unwrap();
        let k = fam.sum_cumulants(&[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(k.values(), qs(&[0, 5, 0, 0, 0, 0]).as_slice());

        let bern = FreeFamily::iid(laws::bernoulli::<Rational>(6), 2).unwrap();
        let k = bern.sum_cumulants(&[1, 2]).unwrap();
        assert_eq!(k.values(), qs(&[0, 2, 0, -2, 0, 4]).as_slice());
        assert!(bern.sum_cumulants(&[]).is_err());
    }

    #[test]
    fn variance_of_free_sum_scales_with_n() {
        let law = laws::bernoulli::<Rational>(4).add(&laws::semicircular(
            Rational::ratio(1, 3),
            Rational::ratio(1, 2),
            4,
        ));
        let fam = FreeFamily::iid(law.clone(), 4).unwrap();
        let sum = fam.sum_cumulants(&[1, 2, 3, 4]).unwrap();
        let var_sum = cumulants_to_moments(&sum).variance().unwrap();
        let var_one = cumulants_to_moments(&law).variance().unwrap();
        assert_eq!(var_sum, Rational::from_i64(4) * var_one);
    }

    #[test]
    fn hankel_psd_checks() {
        let sc = cumulants_to_moments(&laws::semicircular(0.0, 1.0, 8));
        assert!(sc.hankel_is_psd());
        let bern = MomentSequence::new(qs(&[0, 1, 0, 1, 0, 1]));
        assert!(bern.hankel_is_psd());
        let bad = MomentSequence::new(qs(&[0, -1]));
        assert!(!bad.hankel_is_psd());
    }

    #[test]
    fn json_shape() {
        let m = MomentSequence::new(vec![Rational::ratio(1, 2), Rational::from_i64(1)]);
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["order"], 2);
        assert_eq!(v["values"][0], "1/2");
        assert_eq!(v["mode"], "exact");
        let back = MomentSequence::<Rational>::from_json(&v).unwrap();
        assert_eq!(back, m);
    }
}
