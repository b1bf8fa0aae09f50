//! Closed intervals with MPFR endpoints and directed rounding.
//!
//! Every operation rounds the lower endpoint toward −∞ and the upper
//! endpoint toward +∞, so the true value of any expression evaluated on
//! contained inputs is contained in the result.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::{AssignRound, Pow};
use rug::{Assign, Float, Rational};

use crate::error::{Error, Result};

/// Default mantissa width in bits.
pub const DEFAULT_PRECISION: u32 = 128;

#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

fn down<T>(prec: u32, v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Down).0
}

fn up<T>(prec: u32, v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Up).0
}

impl Interval {
    /// Builds an interval from endpoints; panics if `lo > hi` or either is NaN.
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: {lo} > {hi}");
        Interval { lo, hi }
    }

    pub fn zero(prec: u32) -> Self {
        Interval {
            lo: Float::new(prec),
            hi: Float::new(prec),
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(prec, 1)
    }

    pub fn from_int(prec: u32, v: i64) -> Self {
        Interval {
            lo: down(prec, v),
            hi: up(prec, v),
        }
    }

    pub fn from_rational(prec: u32, q: &Rational) -> Self {
        Interval {
            lo: down(prec, q),
            hi: up(prec, q),
        }
    }

    /// Encloses an `f64` value exactly (the binary value, not its decimal reading).
    pub fn from_f64(prec: u32, v: f64) -> Self {
        assert!(v.is_finite());
        Interval {
            lo: down(prec, v),
            hi: up(prec, v),
        }
    }

    /// Parses a decimal literal such as `0.6`, `-1.25e-3` or `7/3` exactly.
    pub fn from_decimal(prec: u32, s: &str) -> Result<Self> {
        let q = parse_decimal_rational(s)?;
        Ok(Self::from_rational(prec, &q))
    }

    pub fn hull_of(prec: u32, a: f64, b: f64) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Interval {
            lo: down(prec, a),
            hi: up(prec, b),
        }
    }

    /// Re-rounds the endpoints outward to `prec` bits.
    pub fn with_prec(self, prec: u32) -> Interval {
        if prec == self.prec() {
            return self;
        }
        Interval {
            lo: down(prec, &self.lo),
            hi: up(prec, &self.hi),
        }
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    pub fn mid(&self) -> Float {
        let prec = self.prec() + 2;
        let s = Float::with_val(prec, &self.lo + &self.hi);
        s / 2u32
    }

    pub fn width(&self) -> Float {
        up(self.prec(), &self.hi - &self.lo)
    }

    pub fn width_f64(&self) -> f64 {
        self.width().to_f64_round(Round::Up)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_sign_positive() && !self.lo.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_sign_negative() && !self.hi.is_zero()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo.is_zero() || self.lo.is_sign_positive()
    }

    pub fn contains_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }

    pub fn contains_f64(&self, v: f64) -> bool {
        self.lo <= v && self.hi >= v
    }

    pub fn contains_float(&self, v: &Float) -> bool {
        &self.lo <= v && &self.hi >= v
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && self.hi >= other.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// `true` when every point of `self` is below every point of `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_lt_f64(&self, v: f64) -> bool {
        self.hi < v
    }

    pub fn certainly_gt_f64(&self, v: f64) -> bool {
        self.lo > v
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        let lo = if self.lo <= other.lo {
            self.lo.clone()
        } else {
            other.lo.clone()
        };
        let hi = if self.hi >= other.hi {
            self.hi.clone()
        } else {
            other.hi.clone()
        };
        Interval { lo, hi }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo >= other.lo {
            &self.lo
        } else {
            &other.lo
        };
        let hi = if self.hi <= other.hi {
            &self.hi
        } else {
            &other.hi
        };
        (lo <= hi).then(|| Interval {
            lo: lo.clone(),
            hi: hi.clone(),
        })
    }

    /// Widens both endpoints by `r` (absolute).
    pub fn inflate(&self, r: f64) -> Interval {
        let prec = self.prec();
        Interval {
            lo: down(prec, &self.lo - r),
            hi: up(prec, &self.hi + r),
        }
    }

    pub fn abs(&self) -> Interval {
        if self.is_nonnegative() {
            self.clone()
        } else if !self.hi.is_sign_positive() || self.hi.is_zero() {
            -self
        } else {
            let m = if -self.lo.clone() >= self.hi {
                -self.lo.clone()
            } else {
                self.hi.clone()
            };
            Interval {
                lo: Float::new(self.prec()),
                hi: m,
            }
        }
    }

    pub fn mag(&self) -> Float {
        self.abs().hi
    }

    pub fn exp(&self) -> Interval {
        let prec = self.prec();
        Interval {
            lo: down(prec, self.lo.exp_ref()),
            hi: up(prec, self.hi.exp_ref()),
        }
    }

    pub fn ln(&self) -> Result<Interval> {
        if !self.is_positive() {
            return Err(Error::Domain(format!(
                "logarithm of non-positive interval {self}"
            )));
        }
        let prec = self.prec();
        Ok(Interval {
            lo: down(prec, self.lo.ln_ref()),
            hi: up(prec, self.hi.ln_ref()),
        })
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.is_negative() {
            return Err(Error::Domain(format!(
                "square root of negative interval {self}"
            )));
        }
        let prec = self.prec();
        let lo = if self.lo.is_sign_negative() {
            Float::new(prec)
        } else {
            down(prec, self.lo.sqrt_ref())
        };
        Ok(Interval {
            lo,
            hi: up(prec, self.hi.sqrt_ref()),
        })
    }

    pub fn recip(&self) -> Result<Interval> {
        Interval::one(self.prec()).checked_div(self)
    }

    pub fn checked_div(&self, other: &Interval) -> Result<Interval> {
        if other.contains_zero() {
            return Err(Error::Domain(format!(
                "division by interval containing zero {other}"
            )));
        }
        Ok(self.div_nonzero(other))
    }

    fn div_nonzero(&self, o: &Interval) -> Interval {
        let prec = self.prec().max(o.prec());
        let cands = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let lo = cands
            .iter()
            .map(|(a, b)| down(prec, *a / *b))
            .reduce(min_f)
            .unwrap();
        let hi = cands
            .iter()
            .map(|(a, b)| up(prec, *a / *b))
            .reduce(max_f)
            .unwrap();
        Interval { lo, hi }
    }

    pub fn powi(&self, n: u32) -> Interval {
        let mut acc = Interval::one(self.prec());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        if n.is_multiple_of(2) && self.contains_zero() {
            acc.lo = Float::new(acc.prec());
        }
        acc
    }

    pub fn mul_rational(&self, q: &Rational) -> Interval {
        self * &Interval::from_rational(self.prec(), q)
    }

    pub fn max(&self, other: &Interval) -> Interval {
        Interval {
            lo: max_f(self.lo.clone(), other.lo.clone()),
            hi: max_f(self.hi.clone(), other.hi.clone()),
        }
    }

    pub fn min(&self, other: &Interval) -> Interval {
        Interval {
            lo: min_f(self.lo.clone(), other.lo.clone()),
            hi: min_f(self.hi.clone(), other.hi.clone()),
        }
    }

    /// Accumulates `self += a * b` for nonnegative operands without allocating.
    pub(crate) fn add_mul_nonneg(&mut self, a: &Interval, b: &Interval, scratch: &mut Float) {
        scratch.assign(&a.lo);
        scratch.mul_add_round(&b.lo, &self.lo, Round::Down);
        std::mem::swap(scratch, &mut self.lo);
        scratch.assign(&a.hi);
        scratch.mul_add_round(&b.hi, &self.hi, Round::Up);
        std::mem::swap(scratch, &mut self.hi);
    }

    pub(crate) fn set_zero(&mut self) {
        self.lo.assign(0);
        self.hi.assign(0);
    }

    /// Decimal endpoints rounded outward to `digits` significant digits.
    pub fn to_decimal_pair(&self, digits: usize) -> [String; 2] {
        [
            format_float(&self.lo, digits, Round::Down),
            format_float(&self.hi, digits, Round::Up),
        ]
    }
}

fn min_f(a: Float, b: Float) -> Float {
    if a <= b {
        a
    } else {
        b
    }
}

fn max_f(a: Float, b: Float) -> Float {
    if a >= b {
        a
    } else {
        b
    }
}

/// Renders a float as a plain decimal string rounded in the given direction.
pub fn format_float(x: &Float, digits: usize, round: Round) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() {
            "-inf".into()
        } else {
            "inf".into()
        };
    }
    let (neg, mantissa, exp) = x.to_sign_string_exp_round(10, Some(digits), round);
    let exp = exp.unwrap_or(0);
    let mantissa = mantissa.trim_end_matches('0');
    let mantissa = if mantissa.is_empty() { "0" } else { mantissa };
    let body = if (-6..=21).contains(&exp) {
        if exp <= 0 {
            format!("0.{}{}", "0".repeat((-exp) as usize), mantissa)
        } else if (exp as usize) >= mantissa.len() {
            format!("{}{}", mantissa, "0".repeat(exp as usize - mantissa.len()))
        } else {
            let (a, b) = mantissa.split_at(exp as usize);
            format!("{a}.{b}")
        }
    } else {
        let (a, b) = mantissa.split_at(1);
        let b = if b.is_empty() { "0" } else { b };
        format!("{a}.{b}e{}", exp - 1)
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Parses `p/q`, integers and decimal literals (with optional exponent) exactly.
pub fn parse_decimal_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Schema(format!("not a rational or decimal literal: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: rug::Integer = p.trim().parse().map_err(|_| bad())?;
        let q: rug::Integer = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational::from((p, q)));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let n: rug::Integer = if digits.is_empty() {
        rug::Integer::new()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let scale = exp - frac_part.len() as i32;
    let ten = rug::Integer::from(10);
    let mut q = Rational::from(n);
    if scale >= 0 {
        q *= Rational::from(ten.pow(scale as u32));
    } else {
        q /= Rational::from(ten.pow((-scale) as u32));
    }
    if neg {
        q = -q;
    }
    Ok(q)
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.to_decimal_pair(17);
        write!(f, "[{a}, {b}]")
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, o: &Interval) -> Interval {
        let prec = self.prec().max(o.prec());
        Interval {
            lo: down(prec, &self.lo + &o.lo),
            hi: up(prec, &self.hi + &o.hi),
        }
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, o: &Interval) -> Interval {
        let prec = self.prec().max(o.prec());
        Interval {
            lo: down(prec, &self.lo - &o.hi),
            hi: up(prec, &self.hi - &o.lo),
        }
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, o: &Interval) -> Interval {
        let prec = self.prec().max(o.prec());
        if self.is_nonnegative() && o.is_nonnegative() {
            return Interval {
                lo: down(prec, &self.lo * &o.lo),
                hi: up(prec, &self.hi * &o.hi),
            };
        }
        let cands = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let lo = cands
            .iter()
            .map(|(a, b)| down(prec, *a * *b))
            .reduce(min_f)
            .unwrap();
        let hi = cands
            .iter()
            .map(|(a, b)| up(prec, *a * *b))
            .reduce(max_f)
            .unwrap();
        Interval { lo, hi }
    }
}

impl Div for &Interval {
    type Output = Interval;
    /// Panics when the divisor contains zero; use [`Interval::checked_div`] otherwise.
    fn div(self, o: &Interval) -> Interval {
        self.checked_div(o).expect("interval division by zero")
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        -&self
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Interval {
            type Output = Interval;
            fn $m(self, o: Interval) -> Interval {
                (&self).$m(&o)
            }
        }
        impl $tr<&Interval> for Interval {
            type Output = Interval;
            fn $m(self, o: &Interval) -> Interval {
                (&self).$m(o)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
owned_binop!(Div, div);
