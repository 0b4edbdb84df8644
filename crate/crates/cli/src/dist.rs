//! Distribution arguments: named laws with exact cumulants, plus a float
//! `Measure` for the density, entropy and random-matrix paths.

use std::path::Path;

use freeprob::moments::laws;
use freeprob::scalar::parse_rational;
use freeprob::transforms::{cumulants_of, Measure};
use freeprob::{moments_to_cumulants, CumulantSequence, MomentSequence, Rational, Scalar};
use num::{One, Signed, Zero};

use crate::args::DistArgs;
use crate::error::{usage, CliError};

#[derive(Debug, Clone, PartialEq)]
enum Base {
    Semicircular { mean: Rational, var: Rational },
    Bernoulli,
    Uniform { a: Rational, b: Rational },
    Atomic(Vec<(Rational, Rational)>),
    /// A measure JSON file; only float data is available.
    File(Measure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    base: Base,
    smooth: Option<Rational>,
    /// Canonical text used in report headers.
    pub id: String,
}

/// Scalars a distribution can produce cumulants in.
pub trait DistScalar: Scalar {
    fn cumulants(d: &Dist, order: usize) -> CumulantSequence<Self>;
    fn from_rational(r: &Rational) -> Self;
}

impl DistScalar for Rational {
    fn cumulants(d: &Dist, order: usize) -> CumulantSequence<Self> {
        d.exact_cumulants(order)
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

impl DistScalar for f64 {
    fn cumulants(d: &Dist, order: usize) -> CumulantSequence<Self> {
        match &d.base {
            Base::File(_) => cumulants_of(&d.measure(), order),
            _ => d.exact_cumulants(order).to_f64(),
        }
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f64()
    }
}

fn number(s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|e| CliError::Usage(e.to_string()))
}

/// Splits `name(a,b)` into the name and its arguments.
fn call(s: &str) -> Result<(&str, Vec<&str>), CliError> {
    match s.split_once('(') {
        None => Ok((s, Vec::new())),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| CliError::Usage(format!("unbalanced parentheses in `{s}`")))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Ok((name.trim(), args))
        }
    }
}

fn read_atoms(path: &Path) -> Result<Vec<(Rational, Rational)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut atoms = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return usage(format!("{} line {}: expected `x w`", path.display(), no + 1));
        }
        atoms.push((number(fields[0])?, number(fields[1])?));
    }
    if atoms.is_empty() {
        return usage(format!("{} has no atoms", path.display()));
    }
    if atoms.iter().any(|(_, w)| !w.is_positive()) {
        return usage("atom weights must be positive");
    }
    let total: Rational = atoms.iter().map(|(_, w)| w.clone()).sum();
    if !total.is_one() {
        return usage(format!("atom weights sum to {total}, not 1"));
    }
    Ok(atoms)
}

fn parse_base(text: &str) -> Result<Base, CliError> {
    let text = text.trim();
    let (name, args) = call(text)?;
    let arity = |n: usize| -> Result<(), CliError> {
        if args.len() == n {
            Ok(())
        } else {
            usage(format!("`{name}` takes 0 or {n} arguments, got {}", args.len()))
        }
    };
    let base = match name.to_ascii_lowercase().as_str() {
        "semicircular" | "semicircle" | "sc" => {
            if args.is_empty() {
                Base::Semicircular { mean: Rational::zero(), var: Rational::one() }
            } else {
                arity(2)?;
                let var = number(args[1])?;
                if !var.is_positive() {
                    return usage("semicircular variance must be positive");
                }
                Base::Semicircular { mean: number(args[0])?, var }
            }
        }
        "bernoulli" => {
            arity(0)?;
            Base::Bernoulli
        }
        "uniform" => {
            let (a, b) = if args.is_empty() {
                (-Rational::one(), Rational::one())
            } else {
                arity(2)?;
                (number(args[0])?, number(args[1])?)
            };
            if a >= b {
                return usage("uniform(a,b) needs a < b");
            }
            Base::Uniform { a, b }
        }
        "atomic" => {
            arity(1)?;
            Base::Atomic(read_atoms(Path::new(args[0]))?)
        }
        _ if text.ends_with(".json") => {
            let raw = std::fs::read_to_string(text)
                .map_err(|e| CliError::Usage(format!("cannot read {text}: {e}")))?;
            let mu: Measure = serde_json::from_str(&raw)
                .map_err(|e| CliError::Usage(format!("{text}: {e}")))?;
            mu.validate()?;
            Base::File(mu)
        }
        _ => return usage(format!("unknown distribution `{text}`")),
    };
    Ok(base)
}

impl Dist {
    pub fn parse(text: &str, smooth: Option<&str>) -> Result<Self, CliError> {
        let base = parse_base(text)?;
        let smooth = match smooth {
            None => None,
            Some(s) => {
                let t = number(s)?;
                if t.is_negative() {
                    return usage("--smooth must be nonnegative");
                }
                (!t.is_zero()).then_some(t)
            }
        };
        let mut id = match &base {
            Base::Semicircular { mean, var } => format!("semicircular({mean},{var})"),
            Base::Bernoulli => "bernoulli".into(),
            Base::Uniform { a, b } => format!("uniform({a},{b})"),
            Base::Atomic(_) | Base::File(_) => text.trim().to_string(),
        };
        if let Some(t) = &smooth {
            id = format!("{id}+sc({t})");
        }
        Ok(Self { base, smooth, id })
    }

    pub fn from_args(args: &DistArgs) -> Result<Self, CliError> {
        Self::parse(&args.dist, args.smooth.as_deref())
    }

    fn base_moments(&self, order: usize) -> Option<MomentSequence<Rational>> {
        let atoms: Vec<(Rational, Rational)> = match &self.base {
            Base::Atomic(atoms) => atoms.clone(),
            Base::Uniform { a, b } => {
                let values = (1..=order)
                    .map(|r| {
                        let p = r as u32 + 1;
                        (b.pow_n(p) - a.pow_n(p)) / (Rational::from_i64(p as i64) * (b.clone() - a))
                    })
                    .collect();
                return Some(MomentSequence::new(values));
            }
            Base::File(mu) => {
                let m = freeprob::transforms::moments_of(mu, order);
                return Some(MomentSequence::new(m.values().iter().map(|v| Rational::from_f64(*v)).collect()));
            }
            _ => return None,
        };
        let values = (1..=order)
            .map(|r| atoms.iter().map(|(x, w)| w.clone() * x.pow_n(r as u32)).sum())
            .collect();
        Some(MomentSequence::new(values))
    }

    /// Free cumulants `κ_1..κ_order` in exact arithmetic. File measures are
    /// read as exact dyadics.
    pub fn exact_cumulants(&self, order: usize) -> CumulantSequence<Rational> {
        let base = match &self.base {
            Base::Semicircular { mean, var } => laws::semicircular(mean.clone(), var.clone(), order),
            Base::Bernoulli => laws::bernoulli(order),
            _ => moments_to_cumulants(&self.base_moments(order).expect("moment-defined law")),
        };
        match &self.smooth {
            Some(t) => base.add(&laws::semicircular(Rational::zero(), t.clone(), order)),
            None => base,
        }
    }

    pub fn cumulants<S: DistScalar>(&self, order: usize) -> CumulantSequence<S> {
        S::cumulants(self, order)
    }

    /// The law as a float measure.
    pub fn measure(&self) -> Measure {
        let base = match &self.base {
            Base::Semicircular { mean, var } => Measure::semicircular(mean.to_f64(), var.to_f64()),
            Base::Bernoulli => Measure::bernoulli(),
            Base::Uniform { a, b } => Measure::uniform(a.to_f64(), b.to_f64()),
            Base::Atomic(atoms) => Measure::Atomic {
                atoms: atoms.iter().map(|(x, w)| (x.to_f64(), w.to_f64())).collect(),
            },
            Base::File(mu) => mu.clone(),
        };
        match &self.smooth {
            Some(t) => base.smoothed(t.to_f64()),
            None => base,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use freeprob::cumulants_to_moments;

    fn q(p: i64, d: i64) -> Rational {
        Rational::ratio(p, d)
    }

    #[test]
    fn named_laws() {
        let sc = Dist::parse("semicircular(1/2, 2)", None).unwrap();
        assert_eq!(sc.exact_cumulants(3).values(), &[q(1, 2), q(2, 1), q(0, 1)]);
        assert_eq!(sc.id, "semicircular(1/2,2)");
        let b = Dist::parse("bernoulli", Some("0.5")).unwrap();
        assert_eq!(b.exact_cumulants(2).values(), &[q(0, 1), q(3, 2)]);
        assert_eq!(b.measure(), Measure::bernoulli().smoothed(0.5));
        assert!(Dist::parse("cauchy", None).is_err());
        assert!(Dist::parse("uniform(1,0)", None).is_err());
    }

    #[test]
    fn uniform_moments_are_exact() {
        let u = Dist::parse("uniform(0,1)", None).unwrap();
        let m = cumulants_to_moments(&u.exact_cumulants(4));
        assert_eq!(m.values(), &[q(1, 2), q(1, 3), q(1, 4), q(1, 5)]);
        assert_eq!(u.exact_cumulants(2).values()[1], q(1, 12));
    }

    #[test]
    fn atomic_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("atoms.txt");
        std::fs::write(&path, "# x w\n-1 1/2\n1 0.5\n").unwrap();
        let d = Dist::parse(&format!("atomic({})", path.display()), None).unwrap();
        assert_eq!(d.exact_cumulants(6), laws::bernoulli::<Rational>(6));
        std::fs::write(&path, "0 1/3\n1 1/3\n").unwrap();
        assert!(Dist::parse(&format!("atomic({})", path.display()), None).is_err());
    }
}
