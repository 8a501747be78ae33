//! Fixed-precision p-adic scalars.
//!
//! A nonzero scalar is stored as `p^val * unit` with the unit known modulo
//! `p^rel`; its absolute precision is `val + rel`. A scalar that is
//! indistinguishable from zero keeps only the modulus it is known to vanish
//! to, so downstream verdicts can tell "exactly zero" from "zero so far".

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    ExactZero,
    /// `p^val * unit`, `unit` a unit modulo `p^rel`, `rel >= 1`.
    Unit { val: i64, rel: u32, unit: BigUint },
    /// Congruent to 0 modulo `p^bound`; true valuation is `>= bound`.
    ZeroTo { bound: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicScalar {
    p: u64,
    repr: Repr,
}

/// Valuation of a scalar, as far as it can be certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(i64),
    /// Indistinguishable from zero: all that is known is a lower bound.
    AtLeast(i64),
    /// Exact zero.
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Certified lower bound (`i64::MAX` for exact zero).
    pub fn lower_bound(self) -> i64 {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => v,
            Valuation::Infinite => i64::MAX,
        }
    }

    pub fn min(self, other: Valuation) -> Valuation {
        match (self, other) {
            (Valuation::Infinite, o) | (o, Valuation::Infinite) => o,
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a.min(b)),
            (Valuation::Finite(a), Valuation::AtLeast(b))
            | (Valuation::AtLeast(a), Valuation::Finite(b))
            | (Valuation::AtLeast(a), Valuation::AtLeast(b)) => {
                if a <= b {
                    // ambiguous which representation wins; keep the weaker claim
                    Valuation::AtLeast(a.min(b))
                } else {
                    Valuation::AtLeast(a.min(b))
                }
            }
        }
    }
}

fn pow_p(p: u64, k: u32) -> BigUint {
    BigUint::from(p).pow(k)
}

fn vp_biguint(p: u64, n: &BigUint) -> u32 {
    debug_assert!(!n.is_zero());
    let p = BigUint::from(p);
    let mut n = n.clone();
    let mut v = 0u32;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// Modular inverse of `u` modulo `p^rel` (u must be a unit).
fn modinv(u: &BigUint, modulus: &BigUint) -> BigUint {
    let u = BigInt::from(u.clone());
    let m = BigInt::from(modulus.clone());
    let ext = u.extended_gcd(&m);
    debug_assert!(ext.gcd.is_one());
    let mut x = ext.x % &m;
    if x.is_negative() {
        x += &m;
    }
    x.to_biguint().expect("normalized inverse is nonnegative")
}

impl PadicScalar {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exact_zero(p: u64) -> Self {
        PadicScalar { p, repr: Repr::ExactZero }
    }

    pub fn zero_to(p: u64, bound: i64) -> Self {
        PadicScalar { p, repr: Repr::ZeroTo { bound } }
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_i64(p, 1, prec)
    }

    pub fn from_i64(p: u64, n: i64, prec: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(n), prec)
    }

    pub fn from_bigint(p: u64, n: &BigInt, prec: u32) -> Self {
        if n.is_zero() {
            return Self::exact_zero(p);
        }
        let mag = n.magnitude().clone();
        let v = vp_biguint(p, &mag);
        let modulus = pow_p(p, prec);
        let mut unit = (mag / pow_p(p, v)) % &modulus;
        if n.is_negative() {
            unit = (&modulus - unit) % &modulus;
        }
        debug_assert!(!unit.is_zero());
        PadicScalar {
            p,
            repr: Repr::Unit { val: v as i64, rel: prec.max(1), unit },
        }
    }

    /// Exact rational `num/den`, truncated to relative precision `prec`.
    pub fn from_ratio(p: u64, num: &BigInt, den: &BigInt, prec: u32) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::BadInput("zero denominator".into()));
        }
        if num.is_zero() {
            return Ok(Self::exact_zero(p));
        }
        let a = Self::from_bigint(p, num, prec);
        let b = Self::from_bigint(p, den, prec);
        a.mul(&b.inv()?)
    }

    pub fn valuation(&self) -> Valuation {
        match &self.repr {
            Repr::ExactZero => Valuation::Infinite,
            Repr::Unit { val, .. } => Valuation::Finite(*val),
            Repr::ZeroTo { bound } => Valuation::AtLeast(*bound),
        }
    }

    /// Absolute precision: the modulus `p^a` the scalar is known to.
    /// `None` means infinite (exact zero).
    pub fn abs_prec(&self) -> Option<i64> {
        match &self.repr {
            Repr::ExactZero => None,
            Repr::Unit { val, rel, .. } => Some(val + *rel as i64),
            Repr::ZeroTo { bound } => Some(*bound),
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::ExactZero)
    }

    /// True when no nonzero digit is visible at the known precision.
    pub fn is_zero_at_prec(&self) -> bool {
        !matches!(self.repr, Repr::Unit { .. })
    }

    /// Unit part modulo `p^rel` (empty for zeros).
    pub fn unit_digits(&self) -> Option<(&BigUint, u32)> {
        match &self.repr {
            Repr::Unit { unit, rel, .. } => Some((unit, *rel)),
            _ => None,
        }
    }

    fn check_p(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(Error::FieldMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_p(other)?;
        let p = self.p;
        Ok(match (&self.repr, &other.repr) {
            (Repr::ExactZero, _) => other.clone(),
            (_, Repr::ExactZero) => self.clone(),
            (Repr::ZeroTo { bound: b1 }, Repr::ZeroTo { bound: b2 }) => {
                Self::zero_to(p, *b1.min(b2))
            }
            (Repr::ZeroTo { bound }, Repr::Unit { val, rel, unit })
            | (Repr::Unit { val, rel, unit }, Repr::ZeroTo { bound }) => {
                let a = (*bound).min(val + *rel as i64);
                if *val >= a {
                    Self::zero_to(p, a)
                } else {
                    let rel = (a - val) as u32;
                    let unit = unit % pow_p(p, rel);
                    debug_assert!(!unit.is_zero());
                    PadicScalar { p, repr: Repr::Unit { val: *val, rel, unit } }
                }
            }
            (
                Repr::Unit { val: v1, rel: r1, unit: u1 },
                Repr::Unit { val: v2, rel: r2, unit: u2 },
            ) => {
                let a = (v1 + *r1 as i64).min(v2 + *r2 as i64);
                let v = *v1.min(v2);
                if v >= a {
                    return Ok(Self::zero_to(p, a));
                }
                let digits = (a - v) as u32;
                let modulus = pow_p(p, digits);
                let t1 = (u1 * pow_p(p, (v1 - v) as u32)) % &modulus;
                let t2 = (u2 * pow_p(p, (v2 - v) as u32)) % &modulus;
                let s = (t1 + t2) % &modulus;
                if s.is_zero() {
                    Self::zero_to(p, a)
                } else {
                    let w = vp_biguint(p, &s);
                    if w as i64 + v >= a {
                        Self::zero_to(p, a)
                    } else {
                        let val = v + w as i64;
                        let rel = (a - val) as u32;
                        let unit = (s / pow_p(p, w)) % pow_p(p, rel);
                        PadicScalar { p, repr: Repr::Unit { val, rel, unit } }
                    }
                }
            }
        })
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Unit { val, rel, unit } => {
                let modulus = pow_p(self.p, *rel);
                let unit = (&modulus - unit) % &modulus;
                PadicScalar { p: self.p, repr: Repr::Unit { val: *val, rel: *rel, unit } }
            }
            _ => self.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_p(other)?;
        let p = self.p;
        Ok(match (&self.repr, &other.repr) {
            (Repr::ExactZero, _) | (_, Repr::ExactZero) => Self::exact_zero(p),
            (Repr::ZeroTo { bound: b1 }, Repr::ZeroTo { bound: b2 }) => {
                Self::zero_to(p, b1 + b2)
            }
            (Repr::ZeroTo { bound }, Repr::Unit { val, .. })
            | (Repr::Unit { val, .. }, Repr::ZeroTo { bound }) => Self::zero_to(p, bound + val),
            (
                Repr::Unit { val: v1, rel: r1, unit: u1 },
                Repr::Unit { val: v2, rel: r2, unit: u2 },
            ) => {
                let rel = (*r1).min(*r2);
                let unit = (u1 * u2) % pow_p(p, rel);
                PadicScalar { p, repr: Repr::Unit { val: v1 + v2, rel, unit } }
            }
        })
    }

    pub fn inv(&self) -> Result<Self> {
        match &self.repr {
            Repr::ExactZero => Err(Error::DivisionByZeroAtPrecision(i64::MAX)),
            Repr::ZeroTo { bound } => Err(Error::DivisionByZeroAtPrecision(*bound)),
            Repr::Unit { val, rel, unit } => {
                let modulus = pow_p(self.p, *rel);
                let unit = modinv(unit, &modulus);
                Ok(PadicScalar { p: self.p, repr: Repr::Unit { val: -val, rel: *rel, unit } })
            }
        }
    }

    pub fn pow(&self, k: i64) -> Result<Self> {
        if k == 0 {
            let prec = match &self.repr {
                Repr::Unit { rel, .. } => *rel,
                _ => 1,
            };
            return Ok(Self::one(self.p, prec));
        }
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut acc = base.clone();
        for _ in 1..k.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
        Ok(acc)
    }

    /// Multiply by `p^k` (exact valuation shift).
    pub fn shift(&self, k: i64) -> Self {
        match &self.repr {
            Repr::ExactZero => self.clone(),
            Repr::ZeroTo { bound } => Self::zero_to(self.p, bound + k),
            Repr::Unit { val, rel, unit } => PadicScalar {
                p: self.p,
                repr: Repr::Unit { val: val + k, rel: *rel, unit: unit.clone() },
            },
        }
    }

    /// Fold in an unknown error term of valuation `>= bound`.
    pub fn add_unknown(&self, bound: i64) -> Self {
        let p = self.p;
        match &self.repr {
            Repr::ExactZero => Self::zero_to(p, bound),
            Repr::ZeroTo { bound: b } => Self::zero_to(p, (*b).min(bound)),
            Repr::Unit { val, rel, unit } => {
                let a = bound.min(val + *rel as i64);
                if *val >= a {
                    Self::zero_to(p, a)
                } else {
                    let rel = (a - val) as u32;
                    PadicScalar {
                        p,
                        repr: Repr::Unit { val: *val, rel, unit: unit % pow_p(p, rel) },
                    }
                }
            }
        }
    }

    /// Valuation of `self - other`; `Infinite` when both are exactly equal zeros.
    pub fn defect(&self, other: &Self) -> Result<Valuation> {
        Ok(self.sub(other)?.valuation())
    }

    /// Canonical integer representative in `[0, p^rel)` of the unit part,
    /// together with the valuation: the scalar is `p^val * digits`.
    pub fn to_decimal_parts(&self) -> (String, Option<i64>, i64) {
        match &self.repr {
            Repr::ExactZero => ("0".into(), None, i64::MAX),
            Repr::ZeroTo { bound } => ("0".into(), Some(*bound), *bound),
            Repr::Unit { val, rel, unit } => {
                (unit.to_string(), Some(val + *rel as i64), *val)
            }
        }
    }

    /// Rational reconstruction helper for tests: value as i128 when the scalar
    /// has nonnegative valuation and fits.
    pub fn to_i128_mod(&self, digits: u32) -> Option<i128> {
        match &self.repr {
            Repr::ExactZero => Some(0),
            Repr::ZeroTo { .. } => Some(0),
            Repr::Unit { val, rel, unit } => {
                if *val < 0 || (*rel as i64) < digits as i64 - val {
                    return None;
                }
                let modulus = pow_p(self.p, digits);
                let x = (unit * pow_p(self.p, *val as u32)) % modulus;
                x.to_i128()
            }
        }
    }
}

impl std::fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.repr {
            Repr::ExactZero => write!(f, "0"),
            Repr::ZeroTo { bound } => write!(f, "O({}^{})", self.p, bound),
            Repr::Unit { val, rel, unit } => {
                write!(f, "{}^{}*{} + O({}^{})", self.p, val, unit, self.p, val + *rel as i64)
            }
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(n: i64) -> PadicScalar {
        PadicScalar::from_i64(5, n, 20)
    }

    #[test]
    fn add_carries_valuation() {
        // 2 + 3 = 5 has valuation 1 over Q_5
        let r = s(2).add(&s(3)).unwrap();
        assert_eq!(r.valuation(), Valuation::Finite(1));
    }

    #[test]
    fn invert_two_mod_five() {
        // 1/2 = 3 mod 5, i.e. ...13 in base 5
        let r = s(2).inv().unwrap();
        let prod = r.mul(&s(2)).unwrap();
        assert!(prod.sub(&s(1)).unwrap().is_zero_at_prec());
        let digits = r.unit_digits().unwrap().0 % BigUint::from(5u32);
        assert_eq!(digits, BigUint::from(3u32));
    }

    #[test]
    fn invert_five_has_negative_valuation() {
        let r = s(5).inv().unwrap();
        assert_eq!(r.valuation(), Valuation::Finite(-1));
        assert!(r.mul(&s(5)).unwrap().sub(&s(1)).unwrap().is_zero_at_prec());
    }

    #[test]
    fn valuation_of_twelve_over_q2() {
        let r = PadicScalar::from_i64(2, 12, 20);
        assert_eq!(r.valuation(), Valuation::Finite(2));
    }

    #[test]
    fn zero_at_precision_is_not_exact_zero() {
        let r = s(1).sub(&s(1)).unwrap();
        assert!(r.is_zero_at_prec());
        assert!(!r.is_exact_zero());
        assert_eq!(r.abs_prec(), Some(20));
        assert!(r.inv().is_err());
    }

    #[test]
    fn ratio_matches_extended_gcd_oracle() {
        // oracle: extended gcd mod 5^20
        let r = PadicScalar::from_ratio(5, &BigInt::from(7), &BigInt::from(3), 20).unwrap();
        let back = r.mul(&s(3)).unwrap();
        assert!(back.sub(&s(7)).unwrap().is_zero_at_prec());
    }

    proptest! {
        #[test]
        fn valuation_additive_under_mul(a in -1000i64..1000, b in -1000i64..1000) {
            prop_assume!(a != 0 && b != 0);
            let (x, y) = (s(a), s(b));
            let va = x.valuation().finite().unwrap();
            let vb = y.valuation().finite().unwrap();
            let prod = x.mul(&y).unwrap();
            prop_assert_eq!(prod.valuation().finite().unwrap(), va + vb);
        }

        #[test]
        fn valuation_ultrametric(a in -1000i64..1000, b in -1000i64..1000) {
            prop_assume!(a != 0 && b != 0 && a + b != 0);
            let sum = s(a).add(&s(b)).unwrap();
            let va = s(a).valuation().finite().unwrap();
            let vb = s(b).valuation().finite().unwrap();
            let vs = sum.valuation().lower_bound();
            prop_assert!(vs >= va.min(vb));
            if va != vb {
                prop_assert_eq!(vs, va.min(vb));
            }
        }

        #[test]
        fn inverse_roundtrip(a in -1000i64..1000) {
            prop_assume!(a != 0);
            let x = s(a);
            let prod = x.mul(&x.inv().unwrap()).unwrap();
            let defect = prod.sub(&s(1)).unwrap();
            prop_assert!(defect.is_zero_at_prec());
            prop_assert!(defect.abs_prec().unwrap_or(i64::MAX) >= 20 - 2 * x.valuation().finite().unwrap().abs());
        }

        #[test]
        fn higher_precision_refines(a in -10_000i64..10_000, b in -10_000i64..10_000) {
            prop_assume!(a != 0 && b != 0);
            // recomputing at higher precision agrees on the shared digits
            let lo = PadicScalar::from_i64(7, a, 20).mul(&PadicScalar::from_i64(7, b, 20)).unwrap();
            let hi = PadicScalar::from_i64(7, a, 30).mul(&PadicScalar::from_i64(7, b, 30)).unwrap();
            let d = hi.sub(&lo).unwrap();
            prop_assert!(d.valuation().lower_bound() >= lo.abs_prec().unwrap());
        }
    }
}
