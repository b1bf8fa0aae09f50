//! Exact linear combinations over a basis of rationally independent reals.
//!
//! A [`Basis`] always starts with the constant `1`; the remaining entries are
//! named symbols, each carrying a positive witness value that is only used for
//! numeric evaluation and ordering. Dependence questions (is `x` a rational
//! multiple of `y`?) are answered on coefficient vectors and never touch the
//! witnesses.

use std::cmp::Ordering;
use std::fmt;

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    names: Vec<String>,
    witnesses: Vec<Rational>,
}

impl Default for Basis {
    fn default() -> Self {
        Basis {
            names: vec!["1".to_string()],
            witnesses: vec![Rational::from(1)],
        }
    }
}

impl Basis {
    /// Adds an independent symbol; `witness` must be positive.
    pub fn push(&mut self, name: &str, witness: Rational) -> Result<usize> {
        if name == "1" || self.index_of(name).is_some() {
            return Err(Error::Symbol(format!("duplicate symbol {name:?}")));
        }
        if witness <= 0 {
            return Err(Error::Symbol(format!(
                "witness for {name:?} must be positive"
            )));
        }
        self.names.push(name.to_string());
        self.witnesses.push(witness);
        Ok(self.names.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn witness(&self, i: usize) -> &Rational {
        &self.witnesses[i]
    }

    /// Exact value of `x` when every symbol is replaced by its witness.
    pub fn witness_value(&self, x: &SymbolicReal) -> Rational {
        let mut acc = Rational::new();
        for (c, w) in x.coeffs.iter().zip(&self.witnesses) {
            if *c != 0 {
                acc += Rational::from(c * w);
            }
        }
        acc
    }

    pub fn eval(&self, x: &SymbolicReal, prec: u32) -> Interval {
        Interval::from_rational(prec, &self.witness_value(x))
    }

    /// Orders by witness value, breaking ties by coefficient vector so the
    /// order is total and deterministic.
    pub fn compare(&self, a: &SymbolicReal, b: &SymbolicReal) -> Ordering {
        self.witness_value(a)
            .cmp(&self.witness_value(b))
            .then_with(|| a.coeffs.cmp(&b.coeffs))
    }

    pub fn sign(&self, x: &SymbolicReal) -> Ordering {
        self.witness_value(x).cmp0()
    }

    pub fn display(&self, x: &SymbolicReal) -> String {
        let mut parts = Vec::new();
        for (i, c) in x.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let name = &self.names[i];
            let cs = fmt_rational(c);
            parts.push(if i == 0 {
                cs
            } else if *c == 1 {
                name.clone()
            } else if *c == -1 {
                format!("-{name}")
            } else {
                format!("{cs}*{name}")
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ").replace("+ -", "- ")
        }
    }
}

fn fmt_rational(q: &Rational) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Rational coefficient vector indexed by the positions of a [`Basis`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicReal {
    coeffs: Vec<Rational>,
}

impl SymbolicReal {
    pub fn zero(dim: usize) -> Self {
        SymbolicReal {
            coeffs: vec![Rational::new(); dim],
        }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        let mut z = Self::zero(dim);
        z.coeffs[0] = c;
        z
    }

    pub fn from_coeffs(coeffs: Vec<Rational>) -> Self {
        assert!(!coeffs.is_empty());
        SymbolicReal { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }

    pub fn add(&self, other: &SymbolicReal) -> SymbolicReal {
        debug_assert_eq!(self.dim(), other.dim());
        SymbolicReal {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| Rational::from(a + b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymbolicReal) -> SymbolicReal {
        debug_assert_eq!(self.dim(), other.dim());
        SymbolicReal {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| Rational::from(a - b))
                .collect(),
        }
    }

    pub fn scale(&self, q: &Rational) -> SymbolicReal {
        SymbolicReal {
            coeffs: self.coeffs.iter().map(|a| Rational::from(a * q)).collect(),
        }
    }

    pub fn neg(&self) -> SymbolicReal {
        self.scale(&Rational::from(-1))
    }

    /// Returns `q` with `self = q * other` exactly, if it exists.
    pub fn ratio_to(&self, other: &SymbolicReal) -> Option<Rational> {
        let pivot = other.coeffs.iter().position(|c| *c != 0)?;
        let q = Rational::from(&self.coeffs[pivot] / &other.coeffs[pivot]);
        (other.scale(&q) == *self).then_some(q)
    }

    /// Two reals are rationally dependent iff one is a rational multiple of the other.
    pub fn rationally_dependent(&self, other: &SymbolicReal) -> bool {
        self.is_zero() || other.is_zero() || self.ratio_to(other).is_some()
    }
}

/// Greatest common divisor of rationals: gcd of numerators over lcm of denominators.
pub fn rational_gcd<'a, I: IntoIterator<Item = &'a Rational>>(values: I) -> Rational {
    let mut num = Integer::new();
    let mut den = Integer::from(1);
    for q in values {
        if *q == 0 {
            continue;
        }
        num.gcd_mut(q.numer());
        den.lcm_mut(q.denom());
    }
    Rational::from((num, den))
}

impl fmt::Display for SymbolicReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs: Vec<String> = self.coeffs.iter().map(fmt_rational).collect();
        write!(f, "({})", cs.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn basis_with_s() -> Basis {
        let mut b = Basis::default();
        b.push("s", q(2236, 1000)).unwrap();
        b
    }

    #[test]
    fn dependence_is_exact() {
        let a = SymbolicReal::from_coeffs(vec![q(2, 1), q(0, 1)]);
        let b = SymbolicReal::from_coeffs(vec![q(3, 1), q(0, 1)]);
        let s = SymbolicReal::from_coeffs(vec![q(0, 1), q(1, 1)]);
        assert!(a.rationally_dependent(&b));
        assert_eq!(a.ratio_to(&b), Some(q(2, 3)));
        assert!(!a.rationally_dependent(&s));
        let mixed = SymbolicReal::from_coeffs(vec![q(1, 1), q(1, 2)]);
        assert_eq!(mixed.scale(&q(4, 1)).ratio_to(&mixed), Some(q(4, 1)));
        assert!(!mixed.rationally_dependent(&s));
    }

    #[test]
    fn witness_order_and_display() {
        let b = basis_with_s();
        let two = SymbolicReal::constant(2, q(2, 1));
        let s = SymbolicReal::from_coeffs(vec![q(0, 1), q(1, 1)]);
        assert_eq!(b.compare(&two, &s), Ordering::Less);
        assert_eq!(b.display(&s.sub(&two)), "-2 + s");
        assert!(b.eval(&s, 64).contains_f64(2.236) || b.eval(&s, 64).width_f64() < 1e-15);
    }

    #[test]
    fn gcd_of_rationals() {
        assert_eq!(rational_gcd(&[q(4, 1), q(6, 1), q(8, 1)]), q(2, 1));
        assert_eq!(rational_gcd(&[q(1, 2), q(1, 3)]), q(1, 6));
        assert_eq!(rational_gcd(&[q(0, 1)]), q(0, 1));
    }

    #[test]
    fn duplicate_symbol_rejected() {
        let mut b = basis_with_s();
        assert!(b.push("s", q(1, 1)).is_err());
        assert!(b.push("t", q(-1, 1)).is_err());
    }
}
