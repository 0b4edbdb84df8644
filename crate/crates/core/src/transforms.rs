//! Compactly supported measures, Cauchy transforms, free convolution and
//! Stieltjes inversion.

use num::complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{cumulants_to_moments, moments_to_cumulants, CumulantSequence, MomentSequence};
use crate::scalar::Scalar;

type C = Complex64;

/// Default number of cumulants kept when truncating the R-transform.
pub const DEFAULT_ORDER: usize = 16;

/// Default number of grid cells for recovered densities.
pub const DEFAULT_CELLS: usize = 2000;

/// Default heights above the real axis for Stieltjes inversion.
pub const DEFAULT_EPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Height used when inverting an exact Cauchy model.
pub const MODEL_EPS: f64 = 1e-10;

/// Minimum captured mass before a support window is accepted.
pub const MASS_THRESHOLD: f64 = 0.999;

/// Piecewise-constant density on `cells` equal cells of `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub a: f64,
    pub b: f64,
    /// Average density on each cell.
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Result<Self> {
        if !(a < b) || values.is_empty() {
            return Err(Error::Domain(format!(
                "grid needs a < b and at least one cell (a = {a}, b = {b}, {} cells)",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("grid density values must be finite and nonnegative".into()));
        }
        Ok(Self { a, b, values })
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn width(&self) -> f64 {
        (self.b - self.a) / self.values.len() as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.a + i as f64 * self.width()
    }

    pub fn center(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.width()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.width()
    }

    /// Linear interpolation between cell centers.
    pub fn interpolate(&self, t: f64) -> f64 {
        let h = self.width();
        let x = (t - self.a) / h - 0.5;
        if x <= 0.0 {
            return if t < self.a { 0.0 } else { self.values[0] };
        }
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return if t > self.b { 0.0 } else { self.values[self.values.len() - 1] };
        }
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// `∫ t^r` over the density, exact for the piecewise-constant model.
    pub fn moment(&self, r: usize) -> f64 {
        let p = (r + 1) as i32;
        (0..self.cells())
            .map(|i| {
                let (lo, hi) = (self.edge(i), self.edge(i + 1));
                self.values[i] * (hi.powi(p) - lo.powi(p)) / p as f64
            })
            .sum()
    }

    /// CSV with header `t,density` at cell centers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,density\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e}\n", self.center(i), v));
        }
        out
    }
}

/// A compactly supported probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum Measure {
    Atomic { atoms: Vec<(f64, f64)> },
    GridDensity(GridDensity),
    Semicircular { mean: f64, variance: f64 },
    Uniform { a: f64, b: f64 },
    /// `base ⊞ Semicircular(0, variance)`.
    Smoothed { base: Box<Measure>, variance: f64 },
    /// `base^{⊞n}`.
    FreePower { base: Box<Measure>, n: usize },
    /// Pushforward by `t ↦ alpha·t`.
    Dilated { base: Box<Measure>, alpha: f64 },
}

impl Measure {
    pub fn bernoulli() -> Self {
        Measure::Atomic {
            atoms: vec![(-1.0, 0.5), (1.0, 0.5)],
        }
    }

    pub fn semicircular(mean: f64, variance: f64) -> Self {
        Measure::Semicircular { mean, variance }
    }

    pub fn uniform(a: f64, b: f64) -> Self {
        Measure::Uniform { a, b }
    }

    pub fn smoothed(self, variance: f64) -> Self {
        if variance == 0.0 {
            return self;
        }
        Measure::Smoothed {
            base: Box::new(self),
            variance,
        }
    }

    /// Structural checks: weights and densities normalized, parameters in range.
    pub fn validate(&self) -> Result<()> {
        match self {
            Measure::Atomic { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Domain("atomic measure without atoms".into()));
                }
                if atoms.iter().any(|(x, w)| !x.is_finite() || !(*w >= 0.0)) {
                    return Err(Error::Domain("atoms need finite locations and weights ≥ 0".into()));
                }
                let total: f64 = atoms.iter().map(|(_, w)| w).sum();
                if (total - 1.0).abs() > 1e-10 {
                    return Err(Error::Domain(format!("atom weights sum to {total}, not 1")));
                }
            }
            Measure::GridDensity(g) => {
                GridDensity::new(g.a, g.b, g.values.clone())?;
                let mass = g.mass();
                if (mass - 1.0).abs() > 1e-8 {
                    return Err(Error::Domain(format!("grid density has mass {mass}, not 1")));
                }
            }
            Measure::Semicircular { mean, variance } => {
                if !mean.is_finite() || !(*variance >= 0.0) {
                    return Err(Error::Domain("semicircular needs variance ≥ 0".into()));
                }
            }
            Measure::Uniform { a, b } => {
                if !(a < b) {
                    return Err(Error::Domain(format!("uniform needs a < b (a = {a}, b = {b})")));
                }
            }
            Measure::Smoothed { base, variance } => {
                if !(*variance >= 0.0) {
                    return Err(Error::Domain("smoothing variance must be ≥ 0".into()));
                }
                base.validate()?;
            }
            Measure::FreePower { base, n } => {
                if *n == 0 {
                    return Err(Error::Domain("free power needs n ≥ 1".into()));
                }
                base.validate()?;
            }
            Measure::Dilated { base, alpha } => {
                if !(*alpha > 0.0) {
                    return Err(Error::Domain(format!("dilation needs α > 0, got {alpha}")));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// An interval containing the support.
    pub fn support_bound(&self) -> (f64, f64) {
        match self {
            Measure::Atomic { atoms } => atoms
                .iter()
                .filter(|(_, w)| *w > 0.0)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
                    (lo.min(*x), hi.max(*x))
                }),
            Measure::GridDensity(g) => (g.a, g.b),
            Measure::Semicircular { mean, variance } => {
                let r = 2.0 * variance.sqrt();
                (mean - r, mean + r)
            }
            Measure::Uniform { a, b } => (*a, *b),
            Measure::Smoothed { base, variance } => {
                let (lo, hi) = base.support_bound();
                let r = 2.0 * variance.sqrt();
                (lo - r, hi + r)
            }
            Measure::FreePower { base, n } => {
                // ‖Σ (x_i − c)‖ ≤ n·‖x − c‖ around the mean c.
                let (lo, hi) = base.support_bound();
                let mean = base.mean();
                let r = (hi - mean).max(mean - lo);
                let n = *n as f64;
                (n * mean - n * r, n * mean + n * r)
            }
            Measure::Dilated { base, alpha } => {
                let (lo, hi) = base.support_bound();
                (alpha * lo, alpha * hi)
            }
        }
    }

    fn mean(&self) -> f64 {
        moments_of(self, 1).values()[0]
    }

    /// Whether the measure is a finite sum of atoms.
    pub fn is_atomic(&self) -> bool {
        match self {
            Measure::Atomic { .. } => true,
            Measure::Dilated { base, .. } => base.is_atomic(),
            Measure::FreePower { base, n } => *n == 1 && base.is_atomic(),
            Measure::Smoothed { base, variance } => *variance == 0.0 && base.is_atomic(),
            _ => false,
        }
    }

    /// `(G(z), G'(z))` for `Im z > 0`.
    pub fn cauchy(&self, z: C) -> Result<(C, C)> {
        match self {
            Measure::Atomic { atoms } => {
                let mut g = C::new(0.0, 0.0);
                let mut dg = C::new(0.0, 0.0);
                for (x, w) in atoms {
                    let inv = 1.0 / (z - x);
                    g += w * inv;
                    dg -= w * inv * inv;
                }
                Ok((g, dg))
            }
            Measure::GridDensity(grid) => {
                let mut g = C::new(0.0, 0.0);
                let mut dg = C::new(0.0, 0.0);
                let mut prev_log = (z - grid.a).ln();
                let mut prev_inv = 1.0 / (z - grid.a);
                for i in 0..grid.cells() {
                    let e = grid.edge(i + 1);
                    let log = (z - e).ln();
                    let inv = 1.0 / (z - e);
                    g += grid.values[i] * (prev_log - log);
                    dg += grid.values[i] * (prev_inv - inv);
                    prev_log = log;
                    prev_inv = inv;
                }
                Ok((g, dg))
            }
            Measure::Semicircular { mean, variance } => Ok(semicircle_cauchy(z - mean, *variance)),
            Measure::Uniform { a, b } => {
                let w = b - a;
                let g = ((z - a).ln() - (z - b).ln()) / w;
                let dg = (1.0 / (z - a) - 1.0 / (z - b)) / w;
                Ok((g, dg))
            }
            Measure::Smoothed { base, variance } => {
                if *variance == 0.0 {
                    return base.cauchy(z);
                }
                let v = *variance;
                // ω + v·G_base(ω) = z.
                let (lo, hi) = base.support_bound();
                let omega = subordinate(z, lo, hi, |w, zz| {
                    let (g, dg) = base.cauchy(w)?;
                    Ok((w + v * g - zz, 1.0 + v * dg))
                })?;
                let (g, dg) = base.cauchy(omega)?;
                let d_omega = 1.0 / (1.0 + v * dg);
                Ok((g, dg * d_omega))
            }
            Measure::FreePower { base, n } => {
                if *n == 1 {
                    return base.cauchy(z);
                }
                let nf = *n as f64;
                // n·ω − (n − 1)·F_base(ω) = z with F = 1/G.
                let (lo, hi) = base.support_bound();
                let residual = |w: C, zz: C| -> Result<(C, C)> {
                    let (g, dg) = base.cauchy(w)?;
                    let f = 1.0 / g;
                    let df = -dg * f * f;
                    Ok((nf * w - (nf - 1.0) * f - zz, nf - (nf - 1.0) * df))
                };
                let omega = subordinate(z, lo, hi, residual)?;
                let (g, dg) = base.cauchy(omega)?;
                let (_, dh) = residual(omega, z)?;
                Ok((g, dg / dh))
            }
            Measure::Dilated { base, alpha } => {
                let (g, dg) = base.cauchy(z / alpha)?;
                Ok((g / alpha, dg / (alpha * alpha)))
            }
        }
    }
}

/// Cauchy transform of the centered semicircle of variance `v` at `w`.
fn semicircle_cauchy(w: C, v: f64) -> (C, C) {
    if v == 0.0 {
        let g = 1.0 / w;
        return (g, -g * g);
    }
    let r = 2.0 * v.sqrt();
    // The product of principal roots picks the branch with G ~ 1/w.
    let root = (w - r).sqrt() * (w + r).sqrt();
    let g = (w - root) / (2.0 * v);
    let dg = g / (2.0 * v * g - w);
    (g, dg)
}

/// Solves `H(ω, z) = 0` for the subordination point at `z`, continuing from a
/// height where `ω ≈ z` down to `Im z`.
fn subordinate<F>(z: C, lo: f64, hi: f64, h: F) -> Result<C>
where
    F: Fn(C, C) -> Result<(C, C)>,
{
    let scale = 1.0 + (hi - lo).abs() + lo.abs().max(hi.abs());
    let top = 4.0 * scale;
    let mut heights = Vec::new();
    let mut y = z.im;
    while y < top {
        heights.push(y);
        y *= 3.0;
    }
    heights.push(y.max(z.im));
    heights.reverse();

    let mut omega = C::new(z.re, heights[0]);
    for &y in &heights {
        let zz = C::new(z.re, y);
        omega = newton(omega, zz, &h)?;
    }
    Ok(omega)
}

fn newton<F>(start: C, z: C, h: &F) -> Result<C>
where
    F: Fn(C, C) -> Result<(C, C)>,
{
    let mut omega = if start.im > 0.0 { start } else { C::new(start.re, z.im) };
    let tol = 1e-14 * (1.0 + z.norm());
    for _ in 0..100 {
        let (val, deriv) = h(omega, z)?;
        if val.norm() <= tol {
            return Ok(omega);
        }
        let step = val / deriv;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        let mut lambda = 1.0;
        loop {
            let cand = omega - lambda * step;
            if cand.im > 0.0 {
                if let Ok((cv, _)) = h(cand, z) {
                    if cv.norm() < val.norm() || lambda < 1e-6 {
                        omega = cand;
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::Numerical(format!(
                    "subordination solve stalled at z = {z}"
                )));
            }
        }
        if (lambda * step).norm() <= 1e-15 * (1.0 + omega.norm()) {
            return Ok(omega);
        }
    }
    let (val, _) = h(omega, z)?;
    if val.norm() <= 1e-9 * (1.0 + z.norm()) {
        Ok(omega)
    } else {
        Err(Error::Numerical(format!(
            "subordination solve did not converge at z = {z} (|H| = {:e})",
            val.norm()
        )))
    }
}

/// Moments `m_1..m_N` of a measure.
pub fn moments_of(mu: &Measure, order: usize) -> MomentSequence<f64> {
    match mu {
        Measure::Atomic { atoms } => MomentSequence::new(
            (1..=order)
                .map(|r| atoms.iter().map(|(x, w)| w * x.powi(r as i32)).sum())
                .collect(),
        ),
        Measure::GridDensity(g) => MomentSequence::new((1..=order).map(|r| g.moment(r)).collect()),
        Measure::Semicircular { mean, variance } => cumulants_to_moments(
            &crate::moments::laws::semicircular(*mean, *variance, order),
        ),
        Measure::Uniform { a, b } => MomentSequence::new(
            (1..=order)
                .map(|r| {
                    let p = (r + 1) as i32;
                    (b.powi(p) - a.powi(p)) / (p as f64 * (b - a))
                })
                .collect(),
        ),
        _ => cumulants_to_moments(&cumulants_of(mu, order)),
    }
}

/// Free cumulants `κ_1..κ_N` of a measure.
pub fn cumulants_of(mu: &Measure, order: usize) -> CumulantSequence<f64> {
    match mu {
        Measure::Semicircular { mean, variance } => {
            crate::moments::laws::semicircular(*mean, *variance, order)
        }
        Measure::Smoothed { base, variance } => cumulants_of(base, order)
            .add(&crate::moments::laws::semicircular(0.0, *variance, order)),
        Measure::FreePower { base, n } => cumulants_of(base, order).scaled(&(*n as f64)),
        Measure::Dilated { base, alpha } => cumulants_of(base, order).dilated(alpha),
        _ => moments_to_cumulants(&moments_of(mu, order)),
    }
}

/// Moments of `μ ⊞ ν` by cumulant additivity.
pub fn free_convolve_moments<S: Scalar>(
    a: &MomentSequence<S>,
    b: &MomentSequence<S>,
) -> MomentSequence<S> {
    let k = moments_to_cumulants(a).add(&moments_to_cumulants(b));
    cumulants_to_moments(&k)
}

/// Moments of `μ^{⊞n}`.
pub fn free_power_moments<S: Scalar>(a: &MomentSequence<S>, n: usize) -> Result<MomentSequence<S>> {
    if n == 0 {
        return Err(Error::Domain("free power needs n ≥ 1".into()));
    }
    let k = moments_to_cumulants(a).scaled(&S::from_i64(n as i64));
    Ok(cumulants_to_moments(&k))
}

/// Moments of the pushforward by `t ↦ αt`.
pub fn dilate_moments<S: Scalar>(a: &MomentSequence<S>, alpha: &S) -> Result<MomentSequence<S>> {
    if !(*alpha > S::zero()) {
        return Err(Error::Domain(format!("dilation needs α > 0, got {alpha}")));
    }
    let mut power = S::one();
    Ok(MomentSequence::new(
        a.values()
            .iter()
            .map(|m| {
                power = power.clone() * alpha;
                m.clone() * &power
            })
            .collect(),
    ))
}

pub fn free_convolve(mu: &Measure, nu: &Measure, order: usize) -> MomentSequence<f64> {
    free_convolve_moments(&moments_of(mu, order), &moments_of(nu, order))
}

pub fn free_power(mu: &Measure, n: usize, order: usize) -> Result<MomentSequence<f64>> {
    free_power_moments(&moments_of(mu, order), n)
}

/// `α_* μ`; atoms and grids are rescaled in place.
pub fn dilate(mu: &Measure, alpha: f64) -> Result<Measure> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("dilation needs α > 0, got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(mu.clone());
    }
    Ok(match mu {
        Measure::Atomic { atoms } => Measure::Atomic {
            atoms: atoms.iter().map(|(x, w)| (alpha * x, *w)).collect(),
        },
        Measure::GridDensity(g) => Measure::GridDensity(GridDensity {
            a: alpha * g.a,
            b: alpha * g.b,
            values: g.values.iter().map(|v| v / alpha).collect(),
        }),
        Measure::Semicircular { mean, variance } => Measure::Semicircular {
            mean: alpha * mean,
            variance: alpha * alpha * variance,
        },
        Measure::Uniform { a, b } => Measure::Uniform {
            a: alpha * a,
            b: alpha * b,
        },
        Measure::Dilated { base, alpha: inner } => Measure::Dilated {
            base: base.clone(),
            alpha: alpha * inner,
        },
        other => Measure::Dilated {
            base: Box::new(other.clone()),
            alpha,
        },
    })
}

/// How the Cauchy transform is obtained from truncated cumulant data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InversionMethod {
    /// Jacobi continued fraction with a semicircular tail.
    Jacobi,
    /// Damped fixed point `G = 1/(z − R(G))` with the truncated R-series.
    RSeries,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityOptions {
    pub cells: usize,
    /// Fixed window; estimated from the data when absent.
    pub window: Option<(f64, f64)>,
    pub eps: Vec<f64>,
    pub method: InversionMethod,
    pub damping: f64,
    pub max_iterations: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            cells: DEFAULT_CELLS,
            window: None,
            eps: DEFAULT_EPS.to_vec(),
            method: InversionMethod::Jacobi,
            damping: 0.5,
            max_iterations: 10_000,
        }
    }
}

/// A recovered density with the bookkeeping of its inversion.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveredDensity {
    pub density: GridDensity,
    /// Mass before renormalization.
    pub captured_mass: f64,
    /// `1 − captured_mass`.
    pub renormalization: f64,
    /// Negative values clamped to zero.
    pub clamped: usize,
    pub eps: Vec<f64>,
    pub method: Option<InversionMethod>,
    pub window_expansions: usize,
}

/// Three-term recurrence `t·π_k = π_{k+1} + a_k π_k + b_k π_{k−1}` from moments.
#[derive(Debug, Clone)]
pub struct JacobiCoefficients {
    pub a: Vec<f64>,
    /// `b[k]` is `b_{k+1}`.
    pub b: Vec<f64>,
}

/// Jacobi coefficients via the Stieltjes procedure on the moment functional,
/// exact for rational input. Fails with an atom error when the functional
/// vanishes on a nonzero polynomial.
pub fn jacobi_coefficients<S: Scalar>(moments: &MomentSequence<S>) -> Result<JacobiCoefficients> {
    let m = moments.with_unit();
    let top = moments.order();
    let levels = (top + 1) / 2;
    let pair = |p: &[S], q: &[S], shift: usize| -> S {
        let mut acc = S::zero();
        for (i, pi) in p.iter().enumerate() {
            if pi.is_zero() {
                continue;
            }
            for (j, qj) in q.iter().enumerate() {
                acc = acc + pi.clone() * qj * &m[i + j + shift];
            }
        }
        acc
    };
    let mut prev: Vec<S> = Vec::new();
    let mut cur: Vec<S> = vec![S::one()];
    let mut prev_norm = S::one();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for k in 0..levels {
        if 2 * k + 1 > top {
            break;
        }
        let norm = pair(&cur, &cur, 0);
        let vanishing = norm.is_zero() || norm.to_f64() <= 1e-13 * m[2 * k].to_f64().abs().max(1.0);
        if vanishing || norm < S::zero() {
            return Err(Error::Atom(format!(
                "moment functional is supported on {k} points"
            )));
        }
        if k > 0 {
            b.push((norm.clone() / &prev_norm).to_f64());
        }
        let ak = pair(&cur, &cur, 1) / &norm;
        a.push(ak.to_f64());
        if 2 * k + 2 > top {
            break;
        }
        // π_{k+1} = (t − a_k) π_k − b_k π_{k−1}.
        let bk = if k > 0 { norm.clone() / &prev_norm } else { S::zero() };
        let mut next = vec![S::zero(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] = next[i + 1].clone() + c;
            next[i] = next[i].clone() - ak.clone() * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] = next[i].clone() - bk.clone() * c;
        }
        prev = std::mem::replace(&mut cur, next);
        prev_norm = norm;
    }
    // One more b from the last computed polynomial when the data reaches it.
    if 2 * a.len() <= top && !cur.is_empty() && cur.len() == a.len() + 1 {
        let norm = pair(&cur, &cur, 0);
        if norm.is_zero() || norm.to_f64() <= 0.0 {
            return Err(Error::Atom(format!(
                "moment functional is supported on {} points",
                a.len()
            )));
        }
        b.push((norm / &prev_norm).to_f64());
    }
    Ok(JacobiCoefficients { a, b })
}

impl JacobiCoefficients {
    /// Continued fraction closed by a semicircular tail with the last coefficients.
    pub fn cauchy(&self, z: C) -> C {
        let a_inf = *self.a.last().unwrap_or(&0.0);
        let b_inf = self.b.last().copied().unwrap_or(0.0).max(0.0);
        let k = self.a.len();
        // Tail after level k − 1 is b_k·T with T the semicircle at (a_inf, b_inf).
        let mut tail = if self.b.len() >= k && k > 0 {
            let (t, _) = semicircle_cauchy(z - a_inf, b_inf);
            self.b[k - 1] * t
        } else {
            C::new(0.0, 0.0)
        };
        for level in (0..k).rev() {
            let g = 1.0 / (z - self.a[level] - tail);
            tail = if level > 0 { self.b[level - 1] * g } else { g };
        }
        tail
    }
}

fn r_series_cauchy(kappa: &[f64], z: C, damping: f64, max_iter: usize) -> Option<C> {
    let mut g = 1.0 / z;
    for _ in 0..max_iter {
        let mut r = C::new(0.0, 0.0);
        for k in kappa.iter().rev() {
            r = r * g + k;
        }
        let next = 1.0 / (z - r);
        let updated = (1.0 - damping) * g + damping * next;
        if (updated - g).norm() <= 1e-14 * g.norm().max(1e-300) {
            return Some(updated);
        }
        g = updated;
    }
    None
}

/// Polynomial extrapolation of `values[j] ≈ ρ(eps[j])` to `eps = 0`.
fn richardson(eps: &[f64], values: &[f64]) -> f64 {
    let mut p = values.to_vec();
    let n = p.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (eps[i] * p[i + 1] - eps[i + k] * p[i]) / (eps[i] - eps[i + k]);
        }
    }
    p[0]
}

/// Estimated window `κ_1 ± 2√(κ_2 N)` from the spec of the data.
fn heuristic_window(kappa: &CumulantSequence<f64>) -> (f64, f64) {
    let k1 = kappa.get(1).copied().unwrap_or(0.0);
    let k2 = kappa.get(2).copied().unwrap_or(0.0).max(0.0);
    let r = 2.0 * (k2 * kappa.order() as f64).sqrt();
    (k1 - r, k1 + r)
}

/// Stieltjes inversion of the truncated cumulant data on a grid.
pub fn density_from_cumulants<S: Scalar>(
    kappa: &CumulantSequence<S>,
    options: &DensityOptions,
) -> Result<RecoveredDensity> {
    let var = kappa
        .variance()
        .ok_or_else(|| Error::Domain("need at least two cumulants".into()))?;
    if !(var.to_f64() > 0.0) {
        return Err(Error::Degenerate("κ_2 must be positive".into()));
    }
    if options.eps.is_empty() || options.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Domain("ε sequence must be nonempty and positive".into()));
    }
    let kf = kappa.to_f64();
    let method = options.method;
    let jacobi = match method {
        InversionMethod::Jacobi => Some(jacobi_coefficients(&cumulants_to_moments(kappa))?),
        InversionMethod::RSeries => None,
    };
    let eps = options.eps.clone();
    let eval = |t: f64| -> std::result::Result<(f64, Vec<f64>), f64> {
        let mut vals = Vec::with_capacity(eps.len());
        for &e in &eps {
            let z = C::new(t, e);
            let g = match &jacobi {
                Some(j) => j.cauchy(z),
                None => r_series_cauchy(kf.values(), z, options.damping, options.max_iterations)
                    .ok_or(t)?,
            };
            vals.push(-g.im / std::f64::consts::PI);
        }
        Ok((richardson(&eps, &vals), vals))
    };
    let sample = |lo: f64, hi: f64, cells: usize| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let h = (hi - lo) / cells as f64;
        let results: Vec<_> = (0..cells)
            .into_par_iter()
            .map(|i| eval(lo + (i as f64 + 0.5) * h))
            .collect();
        let mut values = Vec::with_capacity(cells);
        let mut raw = Vec::with_capacity(cells);
        for r in results {
            match r {
                Ok((v, per_eps)) => {
                    values.push(v);
                    raw.push(per_eps);
                }
                Err(t) => {
                    return Err(Error::Numerical(format!(
                        "R-series fixed point did not converge at t = {t}"
                    )))
                }
            }
        }
        Ok((values, raw))
    };

    let (mut lo, mut hi) = options.window.unwrap_or_else(|| heuristic_window(&kf));
    let coarse = options.cells.min(800).max(50);
    let mut expansions = 0;
    if options.window.is_none() {
        let (vals, raw) = sample(lo, hi, coarse)?;
        check_atom_signature(&eps, &raw)?;
        if let Some((a, b)) = occupied(&vals, lo, hi) {
            let h = (hi - lo) / coarse as f64;
            lo = (a - 2.0 * h).max(lo);
            hi = (b + 2.0 * h).min(hi);
        }
    }
    loop {
        let (vals, raw) = sample(lo, hi, options.cells)?;
        check_atom_signature(&eps, &raw)?;
        let mut recovered = finish(lo, hi, vals)?;
        if recovered.captured_mass >= MASS_THRESHOLD && recovered.captured_mass <= 2.0 - MASS_THRESHOLD
            || options.window.is_some()
        {
            if (recovered.captured_mass - 1.0).abs() > 1.0 - MASS_THRESHOLD {
                return Err(Error::SupportWindow(format!(
                    "captured mass {} on the fixed window [{lo}, {hi}]",
                    recovered.captured_mass
                )));
            }
            recovered.eps = eps;
            recovered.method = Some(method);
            recovered.window_expansions = expansions;
            return Ok(recovered);
        }
        expansions += 1;
        if expansions > 10 {
            return Err(Error::SupportWindow(format!(
                "captured mass {} after {expansions} window expansions",
                recovered.captured_mass
            )));
        }
        let pad = 0.1 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
}

/// An atom shows up as `max ρ_ε` growing like `1/ε`.
fn check_atom_signature(eps: &[f64], raw: &[Vec<f64>]) -> Result<()> {
    if eps.len() < 2 {
        return Ok(());
    }
    let last = eps.len() - 1;
    let peak = |j: usize| raw.iter().map(|r| r[j]).fold(0.0, f64::max);
    let ratio = peak(last) / peak(0).max(f64::MIN_POSITIVE);
    let expected = eps[0] / eps[last];
    if expected > 1.5 && ratio > 0.75 * expected {
        return Err(Error::Atom(format!(
            "peak of −Im G/π grows by {ratio:.3} as ε shrinks by {expected:.3}"
        )));
    }
    Ok(())
}

/// Range of cells carrying density above a relative threshold.
fn occupied(values: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return None;
    }
    let thresh = 1e-9 * max;
    let first = values.iter().position(|v| *v > thresh)?;
    let last = values.iter().rposition(|v| *v > thresh)?;
    let h = (hi - lo) / values.len() as f64;
    Some((lo + first as f64 * h, lo + (last + 1) as f64 * h))
}

fn finish(lo: f64, hi: f64, mut values: Vec<f64>) -> Result<RecoveredDensity> {
    let mut clamped = 0;
    for v in values.iter_mut() {
        if !v.is_finite() {
            return Err(Error::Numerical("non-finite density value".into()));
        }
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    let h = (hi - lo) / values.len() as f64;
    let mass: f64 = values.iter().sum::<f64>() * h;
    if !(mass > 0.0) {
        return Err(Error::SupportWindow(format!("no mass captured on [{lo}, {hi}]")));
    }
    for v in values.iter_mut() {
        *v /= mass;
    }
    Ok(RecoveredDensity {
        density: GridDensity::new(lo, hi, values)?,
        captured_mass: mass,
        renormalization: 1.0 - mass,
        clamped,
        eps: Vec::new(),
        method: None,
        window_expansions: 0,
    })
}

const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Point density `−Im G(t + iε)/π` from the exact model, backing off in `ε`
/// when the solve fails right at a spectral edge.
pub fn model_density_at(mu: &Measure, t: f64) -> Result<f64> {
    let mut eps = MODEL_EPS;
    loop {
        match mu.cauchy(C::new(t, eps)) {
            Ok((g, _)) => return Ok((-g.im / std::f64::consts::PI).max(0.0)),
            Err(e) if eps >= 1e-5 => return Err(e),
            Err(_) => eps *= 10.0,
        }
    }
}

/// Cell averages of the density of a measure on `cells` cells.
///
/// Closed forms are used for the semicircle and the uniform law; other
/// measures go through their exact Cauchy model.
pub fn density_of(mu: &Measure, cells: usize) -> Result<RecoveredDensity> {
    mu.validate()?;
    if cells == 0 {
        return Err(Error::Domain("need at least one cell".into()));
    }
    if mu.is_atomic() {
        return Err(Error::Atom("measure is a finite sum of atoms".into()));
    }
    match mu {
        Measure::GridDensity(g) => {
            return Ok(RecoveredDensity {
                density: g.clone(),
                captured_mass: g.mass(),
                renormalization: 1.0 - g.mass(),
                clamped: 0,
                eps: Vec::new(),
                method: None,
                window_expansions: 0,
            })
        }
        Measure::Semicircular { mean, variance } => {
            if *variance <= 0.0 {
                return Err(Error::Atom("semicircular with zero variance is a point mass".into()));
            }
            let r = 2.0 * variance.sqrt();
            let cdf = |t: f64| {
                let x = ((t - mean) / r).clamp(-1.0, 1.0);
                0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / std::f64::consts::PI
            };
            return cdf_cells(mean - r, mean + r, cells, cdf);
        }
        Measure::Uniform { a, b } => {
            let (a, b) = (*a, *b);
            return cdf_cells(a, b, cells, |t| ((t - a) / (b - a)).clamp(0.0, 1.0));
        }
        _ => {}
    }

    let (blo, bhi) = mu.support_bound();
    let pad = 0.05 * (bhi - blo).max(1e-6);
    let (mut lo, mut hi) = (blo - pad, bhi + pad);
    let coarse = 600;
    let h = (hi - lo) / coarse as f64;
    let vals: Vec<f64> = (0..coarse)
        .into_par_iter()
        .map(|i| model_density_at(mu, lo + (i as f64 + 0.5) * h))
        .collect::<Result<_>>()?;
    if let Some((a, b)) = occupied(&vals, lo, hi) {
        lo = (a - 2.0 * h).max(lo);
        hi = (b + 2.0 * h).min(hi);
    }
    let mut expansions = 0;
    loop {
        let h = (hi - lo) / cells as f64;
        let vals: Vec<f64> = (0..cells)
            .into_par_iter()
            .map(|i| {
                let c = lo + (i as f64 + 0.5) * h;
                let mut acc = 0.0;
                for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    acc += w * model_density_at(mu, c + 0.5 * h * x)?;
                }
                Ok(0.5 * acc)
            })
            .collect::<Result<_>>()?;
        let mut recovered = finish(lo, hi, vals)?;
        if recovered.captured_mass >= MASS_THRESHOLD {
            recovered.eps = vec![MODEL_EPS];
            recovered.window_expansions = expansions;
            return Ok(recovered);
        }
        expansions += 1;
        if expansions > 10 {
            return Err(Error::SupportWindow(format!(
                "captured mass {} after {expansions} window expansions",
                recovered.captured_mass
            )));
        }
        let pad = 0.1 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
}

fn cdf_cells(lo: f64, hi: f64, cells: usize, cdf: impl Fn(f64) -> f64) -> Result<RecoveredDensity> {
    let h = (hi - lo) / cells as f64;
    let values = (0..cells)
        .map(|i| (cdf(lo + (i + 1) as f64 * h) - cdf(lo + i as f64 * h)) / h)
        .collect();
    finish(lo, hi, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::laws;
    use crate::scalar::Rational;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_moments() {
        let m = moments_of(&Measure::semicircular(0.0, 1.0), 6);
        assert_eq!(m.values(), &[0.0, 1.0, 0.0, 2.0, 0.0, 5.0]);
        let m = moments_of(&Measure::bernoulli(), 6);
        assert_eq!(m.values(), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let grid = GridDensity::new(-1.0, 1.0, vec![0.5; 1000]).unwrap();
        let m = moments_of(&Measure::GridDensity(grid), 2);
        assert!((m.values()[1] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn convolution_identities() {
        let sc = Measure::semicircular(0.0, 1.0);
        let m = free_convolve(&sc, &sc, 8);
        let target = moments_of(&Measure::semicircular(0.0, 2.0), 8);
        for (a, b) in m.values().iter().zip(target.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let bern = MomentSequence::new(
            (1..=10).map(|r| Rational::from_i64(if r % 2 == 0 { 1 } else { 0 })).collect(),
        );
        let arcsine = free_convolve_moments(&bern, &bern);
        let expected = [2, 6, 20, 70, 252];
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(arcsine.values()[2 * k + 1], Rational::from_i64(*e));
        }
        assert_eq!(free_power_moments(&bern, 1).unwrap(), bern);
    }

    #[test]
    fn dilation_rules() {
        let d = dilate(&Measure::semicircular(0.0, 1.0), 2f64.sqrt()).unwrap();
        match d {
            Measure::Semicircular { variance, .. } => assert!((variance - 2.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(dilate(&Measure::bernoulli(), 0.0).is_err());
        assert_eq!(dilate(&Measure::bernoulli(), 1.0).unwrap(), Measure::bernoulli());
    }

    #[test]
    fn cauchy_models_agree_with_closed_forms() {
        let z = C::new(0.3, 0.7);
        let (sc, _) = Measure::semicircular(0.0, 1.0).cauchy(z).unwrap();
        let closed = (z - (z * z - 4.0).sqrt()) / 2.0;
        assert!((sc - closed).norm() < 1e-12);

        // Bernoulli ⊞ Bernoulli is the arcsine law on [−2, 2].
        let arc = Measure::FreePower {
            base: Box::new(Measure::bernoulli()),
            n: 2,
        };
        let (g, _) = arc.cauchy(z).unwrap();
        let closed = 1.0 / ((z - 2.0).sqrt() * (z + 2.0).sqrt());
        assert!((g - closed).norm() < 1e-10, "{g} vs {closed}");

        // Smoothing a semicircle is another semicircle.
        let sm = Measure::semicircular(0.0, 1.0).smoothed(0.5);
        let (g, _) = sm.cauchy(z).unwrap();
        let (h, _) = Measure::semicircular(0.0, 1.5).cauchy(z).unwrap();
        assert!((g - h).norm() < 1e-10);
    }

    #[test]
    fn cauchy_expansion_at_infinity() {
        let mu = Measure::bernoulli().smoothed(0.5);
        let (lo, hi) = mu.support_bound();
        let radius = lo.abs().max(hi.abs());
        let m = moments_of(&mu, 10).with_unit();
        for angle in [0.3, 1.2, 2.5] {
            let z = C::from_polar(10.0 * radius, angle);
            let (g, _) = mu.cauchy(z).unwrap();
            assert!(g.im < 0.0);
            let series: C = m.iter().enumerate().map(|(k, mk)| mk / z.powi(k as i32 + 1)).sum();
            assert!((g - series).norm() < 1e-6, "{g} vs {series}");
        }
    }

    #[test]
    fn jacobi_recovers_known_densities() {
        let sc = laws::semicircular(Rational::from_i64(0), Rational::from_i64(1), 16);
        let rec = density_from_cumulants(&sc, &DensityOptions::default()).unwrap();
        assert!((rec.density.interpolate(0.0) - 1.0 / PI).abs() < 1e-3);

        let arcsine = laws::bernoulli::<Rational>(16).scaled(&Rational::from_i64(2));
        let rec = density_from_cumulants(&arcsine, &DensityOptions::default()).unwrap();
        let rho0 = rec.density.interpolate(0.0);
        assert!((rho0 - 0.5 / PI).abs() < 1e-3, "{rho0}");
        assert!(rec.captured_mass > 0.999);
    }

    #[test]
    fn atoms_are_detected() {
        let bern = laws::bernoulli::<Rational>(16);
        assert!(matches!(
            density_from_cumulants(&bern, &DensityOptions::default()),
            Err(Error::Atom(_))
        ));
        assert!(matches!(density_of(&Measure::bernoulli(), 100), Err(Error::Atom(_))));
    }

    #[test]
    fn model_density_matches_arcsine() {
        let arc = Measure::FreePower {
            base: Box::new(Measure::bernoulli()),
            n: 2,
        };
        let rho = model_density_at(&arc, 0.5).unwrap();
        let exact = 1.0 / (PI * (4.0f64 - 0.25).sqrt());
        assert!((rho - exact).abs() < 1e-8, "{rho} vs {exact}");
    }

    #[test]
    fn recovered_moments_match() {
        let mu = Measure::bernoulli().smoothed(0.5);
        let rec = density_of(&mu, 1500).unwrap();
        let m = moments_of(&mu, 8);
        for r in 1..=8 {
            let got = rec.density.moment(r);
            let want = m.values()[r - 1];
            assert!((got - want).abs() <= 2e-3 * want.abs().max(1.0), "m_{r}: {got} vs {want}");
        }
    }

    #[test]
    fn measure_json_round_trip() {
        let mu = Measure::FreePower {
            base: Box::new(Measure::bernoulli().smoothed(0.25)),
            n: 3,
        };
        let text = serde_json::to_string(&mu).unwrap();
        assert!(text.contains("\"type\":\"free_power\""));
        let back: Measure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, mu);
    }
}
