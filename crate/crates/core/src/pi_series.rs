//! Exact finite sums `Σ q_s · π^s` with rational `q_s` and integer `s`.
//!
//! Every volume and closed-form expectation in this crate has that shape, so
//! equality between them can be decided exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A Laurent polynomial in π with rational coefficients, kept in canonical
/// form (no zero coefficients) so that `==` is symbolic equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PiSeries {
    terms: BTreeMap<i32, BigRational>,
}

impl PiSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::term(BigRational::one(), 0)
    }

    /// `coeff · π^power`.
    pub fn term(coeff: BigRational, power: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(power, coeff);
        }
        Self { terms }
    }

    /// `(num / den) · π^power`. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64, power: i32) -> Self {
        Self::term(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            power,
        )
    }

    pub fn integer(value: i64) -> Self {
        Self::ratio(value, 1, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The single `(coefficient, power)` pair when the series is a monomial.
    pub fn as_monomial(&self) -> Option<(&BigRational, i32)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(p, q)| (q, *p))
        } else {
            None
        }
    }

    pub fn coefficient(&self, power: i32) -> BigRational {
        self.terms.get(&power).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &BigRational)> {
        self.terms.iter().map(|(p, q)| (*p, q))
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(p, q)| q.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(*p))
            .sum()
    }

    fn insert_add(&mut self, power: i32, coeff: BigRational) {
        let entry = self.terms.entry(power).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&power);
        }
    }
}

impl Add for PiSeries {
    type Output = PiSeries;

    fn add(mut self, rhs: PiSeries) -> PiSeries {
        for (p, q) in rhs.terms {
            self.insert_add(p, q);
        }
        self
    }
}

impl Neg for PiSeries {
    type Output = PiSeries;

    fn neg(self) -> PiSeries {
        PiSeries {
            terms: self.terms.into_iter().map(|(p, q)| (p, -q)).collect(),
        }
    }
}

impl Mul for &PiSeries {
    type Output = PiSeries;

    fn mul(self, rhs: &PiSeries) -> PiSeries {
        let mut out = PiSeries::zero();
        for (pa, qa) in &self.terms {
            for (pb, qb) in &rhs.terms {
                out.insert_add(pa + pb, qa * qb);
            }
        }
        out
    }
}

impl Mul for PiSeries {
    type Output = PiSeries;

    fn mul(self, rhs: PiSeries) -> PiSeries {
        &self * &rhs
    }
}

fn superscript(mut k: u32) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    if k == 1 {
        return String::new();
    }
    let mut out = Vec::new();
    while k > 0 {
        out.push(DIGITS[(k % 10) as usize]);
        k /= 10;
    }
    out.iter().rev().collect()
}

fn fmt_term(power: i32, coeff: &BigRational) -> String {
    let num = coeff.numer().abs();
    let den = coeff.denom().clone();
    let pi = |k: u32| format!("π{}", superscript(k));
    match power.cmp(&0) {
        std::cmp::Ordering::Equal => {
            if den.is_one() {
                format!("{num}")
            } else {
                format!("{num}/{den}")
            }
        }
        std::cmp::Ordering::Greater => {
            let head = if num.is_one() {
                pi(power as u32)
            } else {
                format!("{num}{}", pi(power as u32))
            };
            if den.is_one() {
                head
            } else {
                format!("{head}/{den}")
            }
        }
        std::cmp::Ordering::Less => {
            let k = power.unsigned_abs();
            if den.is_one() {
                format!("{num}/{}", pi(k))
            } else {
                format!("{num}/({den}{})", pi(k))
            }
        }
    }
}

impl fmt::Display for PiSeries {
    /// Terms in ascending power of π, e.g. `2/π + π/2` or `1 + π/4`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let ordered: Vec<(i32, &BigRational)> = self.terms().collect();
        for (i, (p, q)) in ordered.iter().enumerate() {
            let negative = q.is_negative();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { "-" } else { "+" })?;
            }
            write!(f, "{}", fmt_term(*p, q))?;
        }
        Ok(())
    }
}
