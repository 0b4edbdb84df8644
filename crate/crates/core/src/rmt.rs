//! Random-matrix cross-check of the combinatorial engine: free letters are
//! realized as independently rotated diagonal matrices.
//!
//! Traces are invariant under a common conjugation, so the first letter is
//! kept diagonal and every other letter is `V D Vᵀ` with its own Haar `V`.

use std::collections::HashMap;

use nalgebra::{ComplexField, DMatrix, DVector};
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxcorr::cca_top;
use crate::moments::{FreeFamily, Label};
use crate::transforms::{cumulants_of, density_of, Measure};

pub const MAX_WORD_LEN: usize = 12;
pub const MAX_LABELS: usize = 6;

/// Absolute slack added to `3·stderr` to absorb rounding when a word is
/// deterministic (zero spread across trials).
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagonalSampling {
    /// `μ`-quantiles at `(i + ½)/N`, the same in every trial.
    Quantiles,
    /// Independent draws from `μ` per trial.
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationGroup {
    /// Real Haar rotations; `O(1/N)` finite-size bias on alternating words.
    Orthogonal,
    /// Complex Haar rotations; `O(1/N²)` bias at four times the arithmetic.
    Unitary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub size: usize,
    pub trials: usize,
    pub measure: Measure,
    pub diagonal: DiagonalSampling,
    pub rotation: RotationGroup,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(size: usize, trials: usize, measure: Measure, seed: u64) -> Self {
        Self {
            size,
            trials,
            measure,
            diagonal: DiagonalSampling::Quantiles,
            rotation: RotationGroup::Orthogonal,
            seed,
        }
    }

    pub fn with_rotation(mut self, rotation: RotationGroup) -> Self {
        self.rotation = rotation;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.size < 2 || self.trials < 1 {
            return Err(Error::Domain(format!(
                "ensemble needs N ≥ 2 and T ≥ 1 (N = {}, T = {})",
                self.size, self.trials
            )));
        }
        self.measure.validate()
    }
}

/// Seed of trial `k`: one splitmix64 step on `seed + k·golden`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed.wrapping_add((trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverse CDF of `μ` as a monotone table.
struct Quantile {
    atoms: Option<Vec<(f64, f64)>>,
    edges: Vec<f64>,
    cdf: Vec<f64>,
}

impl Quantile {
    fn new(mu: &Measure) -> Result<Self> {
        if let Measure::Atomic { atoms } = mu {
            let mut atoms = atoms.clone();
            atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
            return Ok(Self {
                atoms: Some(atoms),
                edges: Vec::new(),
                cdf: Vec::new(),
            });
        }
        let grid = density_of(mu, 4000)?.density;
        let h = grid.width();
        let mut cdf = Vec::with_capacity(grid.cells() + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for v in &grid.values {
            acc += v * h;
            cdf.push(acc);
        }
        let edges = (0..=grid.cells()).map(|i| grid.edge(i)).collect();
        Ok(Self {
            atoms: None,
            edges,
            cdf,
        })
    }

    fn at(&self, p: f64) -> f64 {
        if let Some(atoms) = &self.atoms {
            let mut acc = 0.0;
            for (x, w) in atoms {
                acc += w;
                if p < acc {
                    return *x;
                }
            }
            return atoms.last().map(|a| a.0).unwrap_or(0.0);
        }
        let k = self.cdf.partition_point(|c| *c < p).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let f = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.5 };
        self.edges[k - 1] + f * (self.edges[k] - self.edges[k - 1])
    }
}

/// Scalar field of the rotations.
trait Field: ComplexField<RealField = f64> + Copy {
    /// Haar-distributed rotation: QR of a Gaussian matrix with the phases of
    /// `diag(R)` moved into `Q`.
    fn haar(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Self>;
    fn matmul(a: &DMatrix<Self>, b: &DMatrix<Self>) -> DMatrix<Self>;
}

impl Field for f64 {
    fn haar(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        q
    }

    fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a * b
    }
}

impl Field for Complex64 {
    fn haar(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let g = DMatrix::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        });
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..n {
            let d = r[(j, j)];
            let norm = d.norm();
            if norm > 0.0 {
                let phase = d / norm;
                let mut col = q.column_mut(j);
                col *= phase;
            }
        }
        q
    }

    /// Three real products on split parts; the real kernel is much faster
    /// than the generic complex one.
    fn matmul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
        let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
        let p1 = &ar * &br;
        let p2 = &ai * &bi;
        let p3 = (&ar + &ai) * (&br + &bi);
        DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
            Complex64::new(p1[(i, j)] - p2[(i, j)], p3[(i, j)] - p1[(i, j)] - p2[(i, j)])
        })
    }
}


/// One trial's realization: diagonals per label and rotations for labels ≥ 2.
struct Frame<T: Field> {
    diagonals: Vec<DVector<f64>>,
    rotations: Vec<Option<DMatrix<T>>>,
    powers: HashMap<(Label, usize), DMatrix<T>>,
}

impl<T: Field> Frame<T> {
    fn new(spec: &EnsembleSpec, quantile: &Quantile, labels: usize, trial: usize) -> Self {
        let n = spec.size;
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(spec.seed, trial));
        let mut diagonals = Vec::with_capacity(labels);
        let mut rotations = Vec::with_capacity(labels);
        for l in 0..labels {
            let d = match spec.diagonal {
                DiagonalSampling::Quantiles => {
                    DVector::from_fn(n, |i, _| quantile.at((i as f64 + 0.5) / n as f64))
                }
                DiagonalSampling::Iid => DVector::from_fn(n, |_, _| quantile.at(rng.gen::<f64>())),
            };
            diagonals.push(d);
            rotations.push(if l == 0 { None } else { Some(T::haar(n, &mut rng)) });
        }
        Self {
            diagonals,
            rotations,
            powers: HashMap::new(),
        }
    }

    fn diag_power(&self, label: Label, k: usize) -> DVector<f64> {
        self.diagonals[label as usize - 1].map(|x| x.powi(k as i32))
    }

    /// `V D^k V*` for a rotated label.
    fn dense_power(&mut self, label: Label, k: usize) -> &DMatrix<T> {
        if !self.powers.contains_key(&(label, k)) {
            let d = self.diag_power(label, k);
            let p = rotated(self.rotations[label as usize - 1].as_ref().expect("rotated label"), &d);
            self.powers.insert((label, k), p);
        }
        &self.powers[&(label, k)]
    }

    /// The full matrix of a letter.
    fn letter(&self, label: Label) -> DMatrix<T> {
        let d = &self.diagonals[label as usize - 1];
        match &self.rotations[label as usize - 1] {
            None => DMatrix::from_diagonal(&d.map(T::from_real)),
            Some(v) => rotated(v, d),
        }
    }

    /// Normalized trace of the word.
    fn trace(&mut self, word: &[Label]) -> f64 {
        let n = self.diagonals[0].len() as f64;
        let mut factors: Vec<Factor<T>> = Vec::new();
        for (l, k) in cyclic_runs(word) {
            if l == 1 {
                factors.push(Factor::Diag(self.diag_power(1, k)));
            } else {
                factors.push(Factor::Dense(self.dense_power(l, k).clone()));
            }
        }
        word_trace(&factors).real() / n
    }
}

/// `V · diag(d) · V*`.
fn rotated<T: Field>(v: &DMatrix<T>, d: &DVector<f64>) -> DMatrix<T> {
    let mut vd = v.clone();
    for (j, dj) in d.iter().enumerate() {
        vd.column_mut(j).scale_mut(*dj);
    }
    T::matmul(&vd, &v.adjoint())
}

enum Factor<T: Field> {
    Diag(DVector<f64>),
    Dense(DMatrix<T>),
}

enum Accumulator<T: Field> {
    Identity,
    Diag(DVector<f64>),
    Dense(DMatrix<T>),
}

impl<T: Field> Accumulator<T> {
    fn times(self, f: &Factor<T>) -> Self {
        match (self, f) {
            (Accumulator::Identity, Factor::Diag(d)) => Accumulator::Diag(d.clone()),
            (Accumulator::Identity, Factor::Dense(m)) => Accumulator::Dense(m.clone()),
            (Accumulator::Diag(a), Factor::Diag(d)) => Accumulator::Diag(a.component_mul(d)),
            (Accumulator::Diag(a), Factor::Dense(m)) => {
                let mut out = m.clone();
                for (i, ai) in a.iter().enumerate() {
                    out.row_mut(i).scale_mut(*ai);
                }
                Accumulator::Dense(out)
            }
            (Accumulator::Dense(mut a), Factor::Diag(d)) => {
                for (j, dj) in d.iter().enumerate() {
                    a.column_mut(j).scale_mut(*dj);
                }
                Accumulator::Dense(a)
            }
            (Accumulator::Dense(a), Factor::Dense(m)) => Accumulator::Dense(T::matmul(&a, m)),
        }
    }
}

/// `tr(F_1 ⋯ F_k)`. The cyclic order is rotated to end on a dense factor `C`,
/// the rest is folded (one product per further dense factor) and `tr(X C)` is
/// closed in `O(N²)`.
fn word_trace<T: Field>(factors: &[Factor<T>]) -> T {
    let Some(pos) = factors.iter().rposition(|f| matches!(f, Factor::Dense(_))) else {
        let mut d: Option<DVector<f64>> = None;
        for f in factors {
            if let Factor::Diag(x) = f {
                d = Some(match d {
                    None => x.clone(),
                    Some(acc) => acc.component_mul(x),
                });
            }
        }
        return T::from_real(d.map_or(0.0, |v| v.sum()));
    };
    let mut acc = Accumulator::Identity;
    for f in factors[pos + 1..].iter().chain(&factors[..pos]) {
        acc = acc.times(f);
    }
    let Factor::Dense(c) = &factors[pos] else {
        unreachable!("position of a dense factor")
    };
    match acc {
        Accumulator::Identity => c.trace(),
        Accumulator::Diag(d) => d
            .iter()
            .enumerate()
            .fold(T::zero(), |s, (i, di)| s + c[(i, i)] * T::from_real(*di)),
        Accumulator::Dense(x) => x.component_mul(&c.transpose()).sum(),
    }
}

/// Runs of equal letters in the cyclically rotated word, starting at a
/// run boundary (and at a first-label run when possible).
fn cyclic_runs(word: &[Label]) -> Vec<(Label, usize)> {
    let n = word.len();
    let mut runs: Vec<(Label, usize)> = Vec::new();
    for &l in word {
        match runs.last_mut() {
            Some((last, k)) if *last == l => *k += 1,
            _ => runs.push((l, 1)),
        }
    }
    if runs.len() > 1 && runs[0].0 == runs[runs.len() - 1].0 {
        let (_, k) = runs.pop().expect("nonempty");
        runs[0].1 += k;
    }
    debug_assert_eq!(runs.iter().map(|r| r.1).sum::<usize>(), n);
    // Merge adjacent runs of non-first labels only when they coincide.
    if let Some(pos) = runs.iter().position(|r| r.0 == 1) {
        runs.rotate_left(pos);
    }
    runs
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub word: Vec<Label>,
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(rename = "T")]
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub engine_value: f64,
    pub deviation: f64,
    /// `|mean − engine| ≤ 3·stderr + ROUNDOFF_FLOOR`.
    pub within: bool,
}

fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let t = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / t;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

fn check_words(words: &[Vec<Label>]) -> Result<usize> {
    let mut labels = 1;
    for w in words {
        if w.is_empty() || w.len() > MAX_WORD_LEN {
            return Err(Error::Resource {
                len: w.len(),
                cap: MAX_WORD_LEN,
            });
        }
        for &l in w {
            if l == 0 || l as usize > MAX_LABELS {
                return Err(Error::Domain(format!("label {l} outside 1..={MAX_LABELS}")));
            }
            labels = labels.max(l as usize);
        }
    }
    Ok(labels)
}

fn trial_traces<T: Field>(
    words: &[Vec<Label>],
    spec: &EnsembleSpec,
    quantile: &Quantile,
    labels: usize,
) -> Vec<Vec<f64>> {
    (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut frame = Frame::<T>::new(spec, quantile, labels, t);
            words.iter().map(|w| frame.trace(w)).collect()
        })
        .collect()
}

/// Ensemble averages of several words from shared trials.
pub fn estimate_mixed_moments(
    words: &[Vec<Label>],
    spec: &EnsembleSpec,
) -> Result<Vec<MomentEstimate>> {
    spec.validate()?;
    let labels = check_words(words)?;
    let quantile = Quantile::new(&spec.measure)?;
    let max_len = words.iter().map(Vec::len).max().unwrap_or(1);
    let family = FreeFamily::iid(cumulants_of(&spec.measure, max_len), labels)?
        .with_r_max(MAX_WORD_LEN);

    let per_trial = match spec.rotation {
        RotationGroup::Orthogonal => trial_traces::<f64>(words, spec, &quantile, labels),
        RotationGroup::Unitary => trial_traces::<Complex64>(words, spec, &quantile, labels),
    };

    words
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let samples: Vec<f64> = per_trial.iter().map(|row| row[k]).collect();
            let (mean, stderr) = mean_stderr(&samples);
            let engine_value = family.mixed_moment(w)?;
            let deviation = (mean - engine_value).abs();
            Ok(MomentEstimate {
                word: w.clone(),
                size: spec.size,
                trials: spec.trials,
                mean,
                stderr,
                engine_value,
                deviation,
                within: deviation <= 3.0 * stderr + ROUNDOFF_FLOOR,
            })
        })
        .collect()
}

pub fn estimate_mixed_moment(word: &[Label], spec: &EnsembleSpec) -> Result<MomentEstimate> {
    let mut out = estimate_mixed_moments(&[word.to_vec()], spec)?;
    Ok(out.remove(0))
}

/// Per trial: `tr(S_n^i S_n^j)`, `tr(S_m^i S_m^j)`, `tr(S_n^i S_m^j)` and
/// the single traces, all normalized.
struct TrialStats {
    nn: Vec<Vec<f64>>,
    mm: Vec<Vec<f64>>,
    nm: Vec<Vec<f64>>,
    n1: Vec<f64>,
    m1: Vec<f64>,
}

fn trial_power_stats<T: Field>(
    m: usize,
    n: usize,
    degree: usize,
    spec: &EnsembleSpec,
    quantile: &Quantile,
) -> Vec<TrialStats> {
    let nf = spec.size as f64;
    (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let frame = Frame::<T>::new(spec, quantile, n, t);
            let mut s_m = frame.letter(1);
            let mut s_n = s_m.clone();
            for l in 2..=n {
                let x = frame.letter(l as Label);
                if l <= m {
                    s_m += &x;
                }
                s_n += &x;
            }
            let powers = |s: &DMatrix<T>| {
                let mut out = vec![s.clone()];
                for _ in 1..degree {
                    let next = T::matmul(out.last().expect("nonempty"), s);
                    out.push(next);
                }
                out
            };
            let pn = powers(&s_n);
            let pm = if m == n { pn.clone() } else { powers(&s_m) };
            let tr = |a: &DMatrix<T>, b: &DMatrix<T>| a.component_mul(&b.transpose()).sum().real() / nf;
            let grid = |x: &[DMatrix<T>], y: &[DMatrix<T>]| {
                (0..degree)
                    .map(|i| (0..degree).map(|j| tr(&x[i], &y[j])).collect())
                    .collect::<Vec<Vec<f64>>>()
            };
            TrialStats {
                nn: grid(&pn, &pn),
                mm: grid(&pm, &pm),
                nm: grid(&pn, &pm),
                n1: pn.iter().map(|p| p.trace().real() / nf).collect(),
                m1: pm.iter().map(|p| p.trace().real() / nf).collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalCorrelation {
    pub m: usize,
    pub n: usize,
    pub degree: usize,
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(rename = "T")]
    pub trials: usize,
    pub rho: f64,
    pub theoretical: f64,
}

/// CCA on sample covariances of normalized traces of powers of `S_n`, `S_m`.
pub fn empirical_max_correlation(
    m: usize,
    n: usize,
    degree: usize,
    spec: &EnsembleSpec,
) -> Result<EmpiricalCorrelation> {
    spec.validate()?;
    if m == 0 || m > n || n > MAX_LABELS {
        return Err(Error::Domain(format!(
            "need 1 ≤ m ≤ n ≤ {MAX_LABELS}, got m = {m}, n = {n}"
        )));
    }
    if degree == 0 || 2 * degree > MAX_WORD_LEN {
        return Err(Error::Domain(format!("degree {degree} outside 1..={}", MAX_WORD_LEN / 2)));
    }
    let quantile = Quantile::new(&spec.measure)?;
    let size = spec.size;

    let stats = match spec.rotation {
        RotationGroup::Orthogonal => trial_power_stats::<f64>(m, n, degree, spec, &quantile),
        RotationGroup::Unitary => trial_power_stats::<Complex64>(m, n, degree, spec, &quantile),
    };
    let t = stats.len() as f64;
    let avg = |f: &dyn Fn(&TrialStats) -> f64| stats.iter().map(f).sum::<f64>() / t;
    let cov = |pick: &dyn Fn(&TrialStats, usize, usize) -> f64,
               left: &dyn Fn(&TrialStats, usize) -> f64,
               right: &dyn Fn(&TrialStats, usize) -> f64| {
        (0..degree)
            .map(|i| {
                (0..degree)
                    .map(|j| {
                        avg(&|s| pick(s, i, j)) - avg(&|s| left(s, i)) * avg(&|s| right(s, j))
                    })
                    .collect()
            })
            .collect::<Vec<Vec<f64>>>()
    };
    let a = cov(&|s, i, j| s.nn[i][j], &|s, i| s.n1[i], &|s, j| s.n1[j]);
    let b = cov(&|s, i, j| s.mm[i][j], &|s, i| s.m1[i], &|s, j| s.m1[j]);
    let c = cov(&|s, i, j| s.nm[i][j], &|s, i| s.n1[i], &|s, j| s.m1[j]);
    let cca = cca_top(&a, &b, &c)?;
    Ok(EmpiricalCorrelation {
        m,
        n,
        degree,
        size,
        trials: spec.trials,
        rho: cca.rho,
        theoretical: (m as f64 / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_are_cyclic() {
        assert_eq!(cyclic_runs(&[1, 2, 1]), vec![(1, 2), (2, 1)]);
        assert_eq!(cyclic_runs(&[2, 1, 1, 2]), vec![(1, 2), (2, 2)]);
        assert_eq!(cyclic_runs(&[2, 2]), vec![(2, 2)]);
    }

    #[test]
    fn trace_matches_dense_product() {
        let spec = EnsembleSpec::new(12, 1, Measure::semicircular(0.3, 1.0), 7);
        let q = Quantile::new(&spec.measure).unwrap();
        let mut frame = Frame::<f64>::new(&spec, &q, 3, 0);
        let mut cframe = Frame::<Complex64>::new(&spec, &q, 3, 0);
        let words: Vec<Vec<Label>> = vec![
            vec![1, 2, 1, 2],
            vec![2, 1, 2, 2, 1, 3],
            vec![1, 2, 3, 1, 2, 3],
            vec![2, 3, 2, 3, 2],
            vec![3, 3, 3],
            vec![2, 1, 1, 1],
            vec![1, 2, 1, 2, 1, 2, 1, 3],
        ];
        for w in words {
            let mut p = DMatrix::<f64>::identity(12, 12);
            let mut pc = DMatrix::<Complex64>::identity(12, 12);
            for &l in &w {
                p *= frame.letter(l);
                pc *= cframe.letter(l);
            }
            let direct: f64 = p.trace() / 12.0;
            let fast = frame.trace(&w);
            assert!((direct - fast).abs() < 1e-10, "{w:?}: {direct} vs {fast}");
            let direct = pc.trace().re / 12.0;
            let fast = cframe.trace(&w);
            assert!((direct - fast).abs() < 1e-10, "{w:?}: {direct} vs {fast}");
        }
    }

    #[test]
    fn haar_rotations_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = f64::haar(20, &mut rng);
        let err = (&q * q.transpose() - DMatrix::identity(20, 20)).abs().max();
        assert!(err < 1e-12);
        let u = Complex64::haar(20, &mut rng);
        let err = (&u * u.adjoint() - DMatrix::identity(20, 20)).map(|z| z.norm()).max();
        assert!(err < 1e-12);
    }

    #[test]
    fn seeded_runs_repeat() {
        let spec = EnsembleSpec::new(32, 3, Measure::bernoulli(), 11);
        let words = vec![vec![1, 2, 1, 2], vec![1, 1, 2, 2]];
        let a = estimate_mixed_moments(&words, &spec).unwrap();
        let b = estimate_mixed_moments(&words, &spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
        }
    }

    #[test]
    fn quantile_diagonal_reproduces_single_letter_moments() {
        let spec = EnsembleSpec::new(64, 2, Measure::bernoulli(), 1);
        let est = estimate_mixed_moment(&[1, 1, 1, 1], &spec).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-14);
        assert!(est.within);
    }
}
