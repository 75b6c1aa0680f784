//! Exact arithmetic in the Laurent ring `Q[q^(1/N), q^(-1/N)]` with rational
//! exponents, plus the quantum integers and binomials built on top of it.
//!
//! A [`Scalar`] is a finite sum of monomials `c * q^x` with `c, x` exact
//! rationals. Exponent denominators are tracked lazily: nothing fixes a global
//! `N` up front, operations simply work with whatever denominators appear.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational number used everywhere in the crate.
pub type Q = BigRational;

/// Convenience constructor for small rationals.
pub fn rat(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `n` as an exact rational.
pub fn int(n: i64) -> Q {
    Q::from(BigInt::from(n))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScalarError {
    /// Inversion is only defined for single-monomial scalars.
    #[error("not a unit: only monomials c*q^x are invertible in the Laurent ring")]
    NotAUnit,
    /// Exact division failed (the divisor does not divide the dividend).
    #[error("inexact division in the Laurent ring")]
    InexactDivision,
    #[error("quantum binomial domain error: need 0 <= k <= n, got n={n}, k={k}")]
    BinomialDomain { n: i64, k: i64 },
}

/// Element of `Q[q^(1/N), q^(-1/N)]`, stored as a sorted map exponent -> coefficient.
///
/// Invariant: no stored coefficient is zero, so equality of the maps is
/// equality in the ring.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Scalar {
    terms: BTreeMap<Q, Q>,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Scalar::monomial(Q::one(), Q::zero())
    }

    /// The constant scalar `c`.
    pub fn from_q(c: Q) -> Self {
        Scalar::monomial(c, Q::zero())
    }

    pub fn from_int(c: i64) -> Self {
        Scalar::from_q(int(c))
    }

    /// `c * q^x`.
    pub fn monomial(c: Q, x: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(x, c);
        }
        Scalar { terms }
    }

    /// `q^x`.
    pub fn qpow(x: Q) -> Self {
        Scalar::monomial(Q::one(), x)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Q::zero())
                .map(|c| c.is_one())
                .unwrap_or(false)
    }

    /// True when the scalar is a single monomial (a unit of the Laurent ring).
    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Q, &Q)> {
        self.terms.iter()
    }

    fn add_term(&mut self, x: Q, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(x) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// Multiply by the monomial `q^x`.
    pub fn mul_qpow(&self, x: &Q) -> Scalar {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            terms.insert(e + x, c.clone());
        }
        Scalar { terms }
    }

    /// Multiply by a rational constant.
    pub fn mul_q(&self, c: &Q) -> Scalar {
        if c.is_zero() {
            return Scalar::zero();
        }
        let mut terms = BTreeMap::new();
        for (e, co) in &self.terms {
            terms.insert(e.clone(), co * c);
        }
        Scalar { terms }
    }

    /// Inverse of a monomial; errors on anything else.
    pub fn invert(&self) -> Result<Scalar, ScalarError> {
        if self.terms.len() != 1 {
            return Err(ScalarError::NotAUnit);
        }
        let (x, c) = self.terms.iter().next().unwrap();
        Ok(Scalar::monomial(c.recip(), -x))
    }

    /// Exact division; errors when `self` is not a multiple of `d`.
    pub fn div_exact(&self, d: &Scalar) -> Result<Scalar, ScalarError> {
        if d.is_zero() {
            return Err(ScalarError::InexactDivision);
        }
        if d.is_monomial() {
            let inv = d.invert().expect("monomial");
            return Ok(self * &inv);
        }
        let (d_lo, d_lo_c) = d.terms.iter().next().unwrap();
        let d_hi = d.terms.keys().next_back().unwrap();
        let mut rem = self.clone();
        let mut quot = Scalar::zero();
        // Quotient exponents are bounded by (hi(self) - hi(d)); use that to
        // detect a non-terminating (inexact) division.
        let bound = match rem.terms.keys().next_back() {
            Some(hi) => hi - d_lo + (d_hi - d_lo),
            None => return Ok(Scalar::zero()),
        };
        while !rem.is_zero() {
            let (r_lo, r_lo_c) = rem.terms.iter().next().unwrap();
            let e = r_lo - d_lo;
            if e > bound {
                return Err(ScalarError::InexactDivision);
            }
            let t = Scalar::monomial(r_lo_c / d_lo_c, e);
            rem = &rem - &(&t * d);
            quot = &quot + &t;
        }
        Ok(quot)
    }

    pub fn pow(&self, n: u32) -> Scalar {
        let mut acc = Scalar::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// The classical limit q -> 1: substitutes every monomial by its coefficient.
    pub fn specialize_one(&self) -> Q {
        let mut acc = Q::zero();
        for c in self.terms.values() {
            acc += c;
        }
        acc
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        let mut out = self.clone();
        for (x, c) in &rhs.terms {
            out.add_term(x.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        let mut out = self.clone();
        for (x, c) in &rhs.terms {
            out.add_term(x.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        let mut terms = BTreeMap::new();
        for (x, c) in &self.terms {
            terms.insert(x.clone(), -c.clone());
        }
        Scalar { terms }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        let mut out = Scalar::zero();
        for (x1, c1) in &self.terms {
            for (x2, c2) in &rhs.terms {
                out.add_term(x1 + x2, c1 * c2);
            }
        }
        out
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        for (x, c) in &rhs.terms {
            self.add_term(x.clone(), c.clone());
        }
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        for (x, c) in &rhs.terms {
            self.add_term(x.clone(), -c.clone());
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        // print highest exponent first
        for (x, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let ac = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if x.is_zero() {
                write!(f, "{}", ac)?;
            } else if ac.is_one() {
                write!(f, "q^({})", x)?;
            } else {
                write!(f, "{}*q^({})", ac, x)?;
            }
        }
        Ok(())
    }
}

fn q_to_i64_pair(x: &Q) -> Result<(i64, i64), String> {
    let n = x
        .numer()
        .to_i64()
        .ok_or_else(|| format!("numerator {} does not fit i64", x.numer()))?;
    let d = x
        .denom()
        .to_i64()
        .ok_or_else(|| format!("denominator {} does not fit i64", x.denom()))?;
    Ok((n, d))
}

/// Serialized as a JSON array of `[num, den, exp_num, exp_den]` quadruples,
/// sorted by exponent.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut quads: Vec<[i64; 4]> = Vec::with_capacity(self.terms.len());
        for (x, c) in &self.terms {
            let (cn, cd) = q_to_i64_pair(c).map_err(serde::ser::Error::custom)?;
            let (xn, xd) = q_to_i64_pair(x).map_err(serde::ser::Error::custom)?;
            quads.push([cn, cd, xn, xd]);
        }
        quads.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let quads: Vec<[i64; 4]> = Vec::deserialize(deserializer)?;
        let mut s = Scalar::zero();
        for [cn, cd, xn, xd] in quads {
            if cd == 0 || xd == 0 {
                return Err(D::Error::custom("zero denominator in scalar quadruple"));
            }
            s.add_term(rat(xn, xd), rat(cn, cd));
        }
        Ok(s)
    }
}

/// Fraction of Laurent-ring scalars.
///
/// The dualization maps divide by Gram determinants and the generator pairing
/// constant is `-1/(q_a - q_a^-1)`, neither of which lives in the Laurent
/// ring itself, so the engine computes in this field and reduces back to
/// [`Scalar`] at output boundaries. Normalization collapses the denominator
/// to 1 whenever the division is exact, which keeps almost every value in
/// the pipeline an honest Laurent polynomial.
#[derive(Clone)]
pub struct Frac {
    num: Scalar,
    den: Scalar,
}

impl Frac {
    pub fn new(num: Scalar, den: Scalar) -> Frac {
        assert!(!den.is_zero(), "zero denominator");
        Frac { num, den }.normalized()
    }

    pub fn from_scalar(s: Scalar) -> Frac {
        Frac {
            num: s,
            den: Scalar::one(),
        }
    }

    pub fn zero() -> Frac {
        Frac::from_scalar(Scalar::zero())
    }

    pub fn one() -> Frac {
        Frac::from_scalar(Scalar::one())
    }

    pub fn qpow(x: Q) -> Frac {
        Frac::from_scalar(Scalar::qpow(x))
    }

    fn normalized(mut self) -> Frac {
        if self.num.is_zero() {
            self.den = Scalar::one();
            return self;
        }
        // make the denominator's lowest term equal to 1
        let (x, c) = self
            .den
            .terms()
            .next()
            .map(|(x, c)| (x.clone(), c.clone()))
            .expect("nonzero");
        let minv = Scalar::monomial(c.recip(), -x);
        self.num = &self.num * &minv;
        self.den = &self.den * &minv;
        if self.den.is_one() {
            return self;
        }
        if let Ok(q) = self.num.div_exact(&self.den) {
            self.num = q;
            self.den = Scalar::one();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn numerator(&self) -> &Scalar {
        &self.num
    }

    pub fn denominator(&self) -> &Scalar {
        &self.den
    }

    /// The value as a Laurent scalar, when it is one.
    pub fn to_scalar(&self) -> Result<Scalar, ScalarError> {
        if self.den.is_one() {
            Ok(self.num.clone())
        } else {
            self.num.div_exact(&self.den)
        }
    }

    pub fn add(&self, o: &Frac) -> Frac {
        Frac::new(
            &(&self.num * &o.den) + &(&o.num * &self.den),
            &self.den * &o.den,
        )
    }

    pub fn sub(&self, o: &Frac) -> Frac {
        Frac::new(
            &(&self.num * &o.den) - &(&o.num * &self.den),
            &self.den * &o.den,
        )
    }

    pub fn mul(&self, o: &Frac) -> Frac {
        if self.is_zero() || o.is_zero() {
            return Frac::zero();
        }
        Frac::new(&self.num * &o.num, &self.den * &o.den)
    }

    pub fn neg(&self) -> Frac {
        Frac {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn recip(&self) -> Frac {
        assert!(!self.is_zero(), "division by zero");
        Frac::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &Frac) -> Frac {
        self.mul(&o.recip())
    }

    pub fn mul_scalar(&self, s: &Scalar) -> Frac {
        Frac::new(&self.num * s, self.den.clone())
    }

    pub fn specialize_one(&self) -> Q {
        let d = self.den.specialize_one();
        assert!(!d.is_zero(), "pole at q=1");
        self.num.specialize_one() / d
    }
}

impl PartialEq for Frac {
    fn eq(&self, o: &Frac) -> bool {
        &self.num * &o.den == &o.num * &self.den
    }
}

/// Serialized as `{"num": <scalar>, "den": <scalar>}`; the denominator is
/// omitted when it is 1.
impl Serialize for Frac {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("num", &self.num)?;
        if !self.den.is_one() {
            m.serialize_entry("den", &self.den)?;
        }
        m.end()
    }
}

impl Eq for Frac {}

impl fmt::Debug for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

/// Quantum integer `[n]_d = (q_d^n - q_d^-n)/(q_d - q_d^-1)` where `q_d = q^d`.
/// Expanded as a sum of monomials, so no division is involved.
pub fn qint(n: i64, d: &Q) -> Scalar {
    if n == 0 {
        return Scalar::zero();
    }
    if n < 0 {
        return -&qint(-n, d);
    }
    let mut s = Scalar::zero();
    for k in 0..n {
        s += &Scalar::qpow(d * int(n - 1 - 2 * k));
    }
    s
}

/// Quantum factorial `[n]_d!`.
pub fn qfact(n: i64, d: &Q) -> Scalar {
    let mut acc = Scalar::one();
    for k in 1..=n {
        acc = &acc * &qint(k, d);
    }
    acc
}

/// Quantum binomial coefficient `[n k]_d`, computed from quantum factorials
/// by exact division.
pub fn qbinom(n: i64, k: i64, d: &Q) -> Result<Scalar, ScalarError> {
    if k < 0 || k > n {
        return Err(ScalarError::BinomialDomain { n, k });
    }
    let num = qfact(n, d);
    let den = &qfact(k, d) * &qfact(n - k, d);
    num.div_exact(&den)
}

/// q -> 1 specialization, the sanity oracle for quantum combinatorics.
pub fn specialize_classical(a: &Scalar) -> Q {
    a.specialize_one()
}
