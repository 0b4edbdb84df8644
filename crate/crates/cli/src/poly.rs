//! Polynomial arguments: infix text such as `x1*x2*x1 - 1/2*s3^2`, or a JSON
//! term list. A leading `@` reads either form from a file.

use freeprob::scalar::parse_rational;
use freeprob::{expand_sum, Label, NCPolynomial};

use crate::dist::DistScalar;
use crate::error::{usage, CliError};

const MAX_DEGREE: usize = 64;

pub fn parse<S: DistScalar>(text: &str) -> Result<NCPolynomial<S>, CliError> {
    let owned;
    let text = match text.trim().strip_prefix('@') {
        Some(path) => {
            owned = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
            owned.trim()
        }
        None => text.trim(),
    };
    if text.starts_with('[') || text.starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("polynomial JSON: {e}")))?;
        return NCPolynomial::from_json(&value).map_err(|e| CliError::Usage(e.to_string()));
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return p.fail("unexpected input");
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn fail<T>(&self, what: &str) -> Result<T, CliError> {
        let src = String::from_utf8_lossy(self.src);
        usage(format!("polynomial `{src}`: {what} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn expr<S: DistScalar>(&mut self) -> Result<NCPolynomial<S>, CliError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term<S: DistScalar>(&mut self) -> Result<NCPolynomial<S>, CliError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc.multiply(&self.unary()?);
            } else if self.eat(b'/') {
                let d: NCPolynomial<S> = self.unary()?;
                if d.degree() > 0 || d.is_zero() {
                    return self.fail("division by a non-constant or zero");
                }
                acc = acc.scale(&(S::one() / d.constant_term()));
            } else {
                break;
            }
            if acc.degree() > MAX_DEGREE {
                return self.fail("degree too large");
            }
        }
        Ok(acc)
    }

    fn unary<S: DistScalar>(&mut self) -> Result<NCPolynomial<S>, CliError> {
        if self.eat(b'-') {
            return Ok(self.unary::<S>()?.scale(&-S::one()));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power<S: DistScalar>(&mut self) -> Result<NCPolynomial<S>, CliError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let k: usize = match self.digits().parse() {
            Ok(k) => k,
            Err(_) => return self.fail("expected an integer exponent"),
        };
        if base.degree() * k > MAX_DEGREE {
            return self.fail("degree too large");
        }
        Ok(base.pow(k))
    }

    fn index(&mut self) -> Result<usize, CliError> {
        self.eat(b'_');
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<usize>() {
            Ok(k) if k >= 1 && k <= Label::MAX as usize => Ok(k),
            _ => self.fail("expected a positive index"),
        }
    }

    fn atom<S: DistScalar>(&mut self) -> Result<NCPolynomial<S>, CliError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return self.fail("expected `)`");
                }
                Ok(inner)
            }
            Some(b'x') => {
                self.pos += 1;
                Ok(NCPolynomial::letter(self.index()? as Label))
            }
            Some(b's') => {
                self.pos += 1;
                let k = self.index()?;
                Ok(expand_sum(k)?)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let text = self.digits().to_string();
                match parse_rational(&text) {
                    Ok(r) => Ok(NCPolynomial::constant(S::from_rational(&r))),
                    Err(_) => self.fail("bad number"),
                }
            }
            _ => self.fail("expected a number, letter or `(`"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use freeprob::{Rational, Scalar, Word};

    fn q(p: i64, d: i64) -> Rational {
        Rational::ratio(p, d)
    }

    #[test]
    fn infix_forms() {
        let p: NCPolynomial<Rational> = parse("x1*x2*x1 - 1/2*x2 + 3").unwrap();
        let expected = NCPolynomial::from_terms([
            (Word::new(vec![1, 2, 1]), q(1, 1)),
            (Word::new(vec![2]), q(-1, 2)),
            (Word::unit(), q(3, 1)),
        ]);
        assert_eq!(p, expected);
        let s: NCPolynomial<Rational> = parse("s2^2").unwrap();
        let x = expand_sum::<Rational>(2).unwrap();
        assert_eq!(s, x.multiply(&x));
        let neg: NCPolynomial<Rational> = parse("-(x1 - x_2)/4").unwrap();
        assert_eq!(neg.coefficient(&Word::new(vec![2])), q(1, 4));
        assert_eq!(parse::<Rational>("0.25*x1").unwrap().coefficient(&Word::new(vec![1])), q(1, 4));
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["x0", "x1/x2", "x1 +", "(x1", "y1", "x1^", "x1/0"] {
            assert!(parse::<Rational>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_terms() {
        let p: NCPolynomial<f64> = parse(r#"[{"word":[1,2],"coeff":"1/2"}]"#).unwrap();
        assert_eq!(p.coefficient(&Word::new(vec![1, 2])), 0.5);
    }
}
