//! Exact rational arithmetic and the number-theoretic classification of
//! branch-regularizability in the equation of state `w`.
//!
//! Everything here is exact: regularizability is decided by membership of
//! `gamma = p/q` in a measure-zero set, so floating-point input is rejected
//! at the API boundary and all decisions run on canonical `p/q` pairs.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// An exact rational in canonical form: `den > 0`, `gcd(|num|, den) = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rational {
    num: BigInt,
    den: BigInt,
}

impl Rational {
    /// Canonicalizing constructor. Rejects a zero denominator.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        Self::from_bigints(BigInt::from(num), BigInt::from(den))
    }

    pub fn from_bigints(num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let mut num = num;
        let mut den = den;
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        if num.is_zero() {
            return Ok(Rational {
                num,
                den: BigInt::from(1),
            });
        }
        let g = num.abs().gcd(&den);
        Ok(Rational {
            num: num / &g,
            den: den / g,
        })
    }

    pub fn from_integer(n: i64) -> Self {
        Rational {
            num: BigInt::from(n),
            den: BigInt::from(1),
        }
    }

    pub fn zero() -> Self {
        Self::from_integer(0)
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn numer_i64(&self) -> Option<i64> {
        self.num.to_i64()
    }

    pub fn denom_i64(&self) -> Option<i64> {
        self.den.to_i64()
    }

    pub fn is_integer(&self) -> bool {
        self.den == BigInt::from(1)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        // Exact for the small fractions this crate handles; falls back to
        // the big-integer quotient otherwise.
        match (self.num.to_f64(), self.den.to_f64()) {
            (Some(n), Some(d)) => n / d,
            _ => 0.0,
        }
    }

    pub fn recip(&self) -> Result<Self> {
        Self::from_bigints(self.den.clone(), self.num.clone())
    }

    /// Rationalize a float by Stern-Brocot search, only up to an explicit
    /// denominator bound. There is deliberately no bound-free version: a
    /// float carries no exactness, so the caller must own the rounding.
    pub fn from_f64_with_max_denominator(x: f64, max_den: u64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite value {x}")));
        }
        if max_den == 0 {
            return Err(Error::InvalidInput("denominator bound must be >= 1".into()));
        }
        let neg = x < 0.0;
        let x = x.abs();
        // Stern-Brocot walk with mediants, capped by the denominator bound.
        let (mut pl, mut ql, mut pr, mut qr) = (0u64, 1u64, 1u64, 0u64);
        let (mut best_p, mut best_q) = (x.round() as u64, 1u64);
        let mut best_err = (x - best_p as f64).abs();
        loop {
            let (pm, qm) = (pl + pr, ql + qr);
            if qm > max_den {
                break;
            }
            let m = pm as f64 / qm as f64;
            let err = (x - m).abs();
            if err < best_err {
                best_err = err;
                best_p = pm;
                best_q = qm;
            }
            if m == x {
                break;
            } else if m < x {
                pl = pm;
                ql = qm;
            } else {
                pr = pm;
                qr = qm;
            }
        }
        let num = if neg {
            -BigInt::from(best_p)
        } else {
            BigInt::from(best_p)
        };
        Self::from_bigints(num, BigInt::from(best_q))
    }

    fn cmp_rational(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }

    pub fn cmp_int(&self, n: i64) -> Ordering {
        self.num.cmp(&(&self.den * BigInt::from(n)))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_rational(other)
    }
}

macro_rules! rational_binop {
    ($trait:ident, $method:ident, $num:expr) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                let f: fn(&Rational, &Rational) -> (BigInt, BigInt) = $num;
                let (num, den) = f(self, rhs);
                Rational::from_bigints(num, den).expect("nonzero denominator")
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
    };
}

rational_binop!(Add, add, |a, b| (
    &a.num * &b.den + &b.num * &a.den,
    &a.den * &b.den
));
rational_binop!(Sub, sub, |a, b| (
    &a.num * &b.den - &b.num * &a.den,
    &a.den * &b.den
));
rational_binop!(Mul, mul, |a, b| (&a.num * &b.num, &a.den * &b.den));

impl Div for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational::from_bigints(&self.num * &rhs.den, &self.den * &rhs.num)
            .expect("nonzero denominator")
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        (&self) / (&rhs)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Parses `"p/q"` or `"n"`, optional leading minus, canonical output.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidRational(s.to_string());
        let parse_int = |t: &str| -> Result<BigInt> {
            let t = t.trim();
            if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit() || c == '-') {
                return Err(bad());
            }
            t.parse::<BigInt>().map_err(|_| bad())
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let num = parse_int(n)?;
                let den = parse_int(d)?;
                if den.is_zero() {
                    return Err(Error::ZeroDenominator);
                }
                Self::from_bigints(num, den)
            }
            None => Ok(Rational {
                num: parse_int(s)?,
                den: BigInt::from(1),
            }),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parity of the canonical numerator of `gamma`, which fixes the sign rule of
/// the branch extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: &BigInt) -> Parity {
        if n.is_even() {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityKind {
    AlwaysRegularizable,
    BranchRegularizable,
    NotBranchRegularizable,
}

/// Outcome of the branch-regularizability classification for one `w`.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityClass {
    pub kind: RegularityKind,
    pub gamma: Rational,
    #[serde(rename = "parity", skip_serializing_if = "Option::is_none")]
    pub p_parity: Option<Parity>,
    pub reason: String,
    /// Set for `w < -1`, where the theorem statements disagree on whether the
    /// always-regularizable case reads `|w| <= 1` or `w <= 1`. We classify by
    /// the regime split at `w = 1` and flag instead of silently deciding.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl RegularityClass {
    pub fn is_regularizable(&self) -> bool {
        !matches!(self.kind, RegularityKind::NotBranchRegularizable)
    }
}

/// Exponent triple of the blow-up transformation, exact and as floats.
///
/// Invariants: `gamma * (1 + beta) = 1` and `beta = alpha / 2` exactly.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentTriple {
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
}

impl ExponentTriple {
    pub fn alpha_f(&self) -> f64 {
        self.alpha.to_f64()
    }

    pub fn beta_f(&self) -> f64 {
        self.beta.to_f64()
    }

    pub fn gamma_f(&self) -> f64 {
        self.gamma.to_f64()
    }
}

/// Blow-up exponents for equation of state `w`: `(4, 2, 1/3)` for `w <= 1`,
/// and `alpha = 3(1+w) - 2`, `beta = alpha/2`, `gamma = (1+beta)^-1` above.
pub fn exponents_of(w: &Rational) -> ExponentTriple {
    if w.cmp_int(1) != Ordering::Greater {
        ExponentTriple {
            alpha: Rational::from_integer(4),
            beta: Rational::from_integer(2),
            gamma: Rational::new(1, 3).unwrap(),
        }
    } else {
        let one = Rational::one();
        let alpha = Rational::from_integer(3) * (&one + w).clone() - Rational::from_integer(2);
        let beta = &alpha / &Rational::from_integer(2);
        let gamma = (&one + &beta).recip().expect("beta > 2 so 1 + beta != 0");
        ExponentTriple { alpha, beta, gamma }
    }
}

/// Membership in the set of admissible exponent pairs:
/// `0 < p < q`, `gcd(p, q) = 1`, `q` odd.
pub fn in_script_p(p: i64, q: i64) -> bool {
    in_script_p_big(&BigInt::from(p), &BigInt::from(q))
}

pub fn in_script_p_big(p: &BigInt, q: &BigInt) -> bool {
    p.is_positive() && p < q && p.gcd(q) == BigInt::from(1) && q.is_odd()
}

/// Classifies branch-regularizability of the singularity for exact `w`.
///
/// `w <= 1` is always regularizable with `gamma = 1/3`; for `w > 1` the
/// singularity is regularizable iff the canonical `gamma = p/q` has odd `q`.
pub fn classify(w: &Rational) -> RegularityClass {
    let exps = exponents_of(w);
    let warning = if w.cmp_int(-1) == Ordering::Less {
        Some(
            "w < -1: treated as always-regularizable per the w <= 1 regime split; \
             the |w| <= 1 reading would exclude it"
                .to_string(),
        )
    } else {
        None
    };
    if w.cmp_int(1) != Ordering::Greater {
        return RegularityClass {
            kind: RegularityKind::AlwaysRegularizable,
            gamma: exps.gamma,
            p_parity: Some(Parity::Odd), // gamma = 1/3, p = 1
            reason: "w<=1".to_string(),
            warning,
        };
    }
    let gamma = exps.gamma;
    if in_script_p_big(gamma.numer(), gamma.denom()) {
        RegularityClass {
            kind: RegularityKind::BranchRegularizable,
            p_parity: Some(Parity::of(gamma.numer())),
            reason: "gamma-in-Qgamma".to_string(),
            gamma,
            warning,
        }
    } else {
        // For w > 1, gamma is automatically in (0, 1/3) and canonical, so the
        // only way to fall outside the admissible set is an even denominator.
        RegularityClass {
            kind: RegularityKind::NotBranchRegularizable,
            p_parity: None,
            reason: "q-even".to_string(),
            gamma,
            warning,
        }
    }
}

/// The equation of state realizing `gamma = p/q`: `w = (2/3)(q/p) - 1`.
pub fn w_from_pq(p: i64, q: i64) -> Result<Rational> {
    if !in_script_p(p, q) {
        return Err(Error::InvalidInput(format!(
            "(p, q) = ({p}, {q}) is not an admissible exponent pair \
             (need 0 < p < q, coprime, q odd)"
        )));
    }
    let qp = Rational::new(q, p)?;
    Ok(Rational::new(2, 3).unwrap() * qp - Rational::one())
}

/// Pure power-law block-regularizability: `beta = 1 - 1/n` for a positive
/// integer `n`. All models in scope have `beta >= 2` and return false.
pub fn block_regularizable_pure_power(beta: &Rational) -> bool {
    let rem = Rational::one() - beta.clone();
    // rem must be 1/n: positive with canonical numerator 1.
    rem.numer() == &BigInt::from(1)
}
