//! Exact polynomials over Q, used for the characteristic-zero squarefree
//! decomposition of rational-form denominators before any p-adic truncation
//! enters.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub type QPoly = Vec<BigRational>;

pub fn from_ints(cs: &[BigInt]) -> QPoly {
    cs.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

pub fn from_i64s(cs: &[i64]) -> QPoly {
    cs.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect()
}

pub fn trim(mut a: QPoly) -> QPoly {
    while a.len() > 1 && a.last().map(|c| c.is_zero()).unwrap_or(false) {
        a.pop();
    }
    if a.is_empty() {
        a.push(BigRational::zero());
    }
    a
}

pub fn is_zero(a: &QPoly) -> bool {
    a.iter().all(|c| c.is_zero())
}

pub fn degree(a: &QPoly) -> usize {
    trim(a.to_vec()).len() - 1
}

pub fn add(a: &QPoly, b: &QPoly) -> QPoly {
    let n = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); n];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] += c;
    }
    trim(out)
}

pub fn sub(a: &QPoly, b: &QPoly) -> QPoly {
    let neg: QPoly = b.iter().map(|c| -c.clone()).collect();
    add(a, &neg)
}

pub fn mul(a: &QPoly, b: &QPoly) -> QPoly {
    if is_zero(a) || is_zero(b) {
        return vec![BigRational::zero()];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

pub fn scale(a: &QPoly, c: &BigRational) -> QPoly {
    trim(a.iter().map(|x| x * c).collect())
}

pub fn derivative(a: &QPoly) -> QPoly {
    if a.len() <= 1 {
        return vec![BigRational::zero()];
    }
    trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
            .collect(),
    )
}

pub fn divrem(a: &QPoly, b: &QPoly) -> Result<(QPoly, QPoly)> {
    let b = trim(b.to_vec());
    if is_zero(&b) {
        return Err(Error::BadInput("division by zero polynomial".into()));
    }
    let db = b.len() - 1;
    let lc = b.last().unwrap().clone();
    let mut r = trim(a.to_vec());
    let mut q = vec![BigRational::zero(); r.len().saturating_sub(db) + 1];
    while !is_zero(&r) && r.len() - 1 >= db {
        let k = r.len() - 1 - db;
        let f = r.last().unwrap() / &lc;
        q[k] = f.clone();
        let mut s = vec![BigRational::zero(); k];
        s.extend(scale(&b, &f));
        r = sub(&r, &s);
        if r.len() - 1 > k + db || (r.len() - 1 == k + db && !r.last().unwrap().is_zero()) {
            unreachable!("exact division always cancels the leading term");
        }
        r = trim(r);
        if r.len() - 1 < db {
            break;
        }
        if k == 0 {
            break;
        }
    }
    Ok((trim(q), trim(r)))
}

/// Monic gcd over Q.
pub fn gcd(a: &QPoly, b: &QPoly) -> Result<QPoly> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    loop {
        if is_zero(&b) {
            if is_zero(&a) {
                return Ok(a);
            }
            let lc = a.last().unwrap().clone();
            return Ok(scale(&a, &lc.recip()));
        }
        let (_, r) = divrem(&a, &b)?;
        a = b;
        b = r;
    }
}

pub fn exact_div(a: &QPoly, b: &QPoly) -> Result<QPoly> {
    let (q, r) = divrem(a, b)?;
    if !is_zero(&r) {
        return Err(Error::BadInput("inexact polynomial division".into()));
    }
    Ok(q)
}

/// Yun's squarefree decomposition: `a = c * prod_i S_i^i` with the `S_i`
/// monic, squarefree and pairwise coprime. Returns `(c, [(S_i, i)])`,
/// omitting trivial factors.
pub fn squarefree_decompose(a: &QPoly) -> Result<(BigRational, Vec<(QPoly, u32)>)> {
    let a = trim(a.to_vec());
    if is_zero(&a) {
        return Err(Error::BadInput("zero polynomial".into()));
    }
    let lc = a.last().unwrap().clone();
    let f = scale(&a, &lc.recip());
    if f.len() == 1 {
        return Ok((lc, vec![]));
    }
    let fp = derivative(&f);
    let g = gcd(&f, &fp)?;
    let mut c = exact_div(&f, &g)?;
    let mut d = sub(&exact_div(&fp, &g)?, &derivative(&c));
    let mut out = Vec::new();
    let mut i = 1u32;
    loop {
        if c.len() == 1 {
            break;
        }
        let s = gcd(&c, &d)?;
        if degree(&s) > 0 {
            out.push((s.clone(), i));
        }
        c = exact_div(&c, &s)?;
        d = sub(&exact_div(&d, &s)?, &derivative(&c));
        i += 1;
    }
    Ok((lc, out))
}

pub fn eval(a: &QPoly, x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in a.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// p-adic valuation of a rational number (`None` for zero).
pub fn vp_rational(p: u64, r: &BigRational) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    fn vp(p: &BigInt, n: &BigInt) -> i64 {
        let mut n = n.abs();
        let mut v = 0i64;
        while (&n % p).is_zero() {
            n /= p;
            v += 1;
        }
        v
    }
    let p = BigInt::from(p);
    Some(vp(&p, r.numer()) - vp(&p, r.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn p(cs: &[i64]) -> QPoly {
        from_i64s(cs)
    }

    #[test]
    fn yun_on_square() {
        // (t-5)^2: one factor with multiplicity 2
        let (c, parts) = squarefree_decompose(&p(&[25, -10, 1])).unwrap();
        assert!(c.is_one());
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].1, 2);
        assert_eq!(parts[0].0, p(&[-5, 1]));
    }

    #[test]
    fn yun_on_mixed_product() {
        // t(t^2-5): squarefree, one part of multiplicity 1
        let (_, parts) = squarefree_decompose(&p(&[0, -5, 0, 1])).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].1, 1);
        assert_eq!(parts[0].0, p(&[0, -5, 0, 1]));
    }

    #[test]
    fn yun_reconstructs_input() {
        // gcd(b, b') oracle: rebuild and compare
        let b = mul(&mul(&p(&[-5, 1]), &p(&[-5, 1])), &p(&[2, 0, 3]));
        let (c, parts) = squarefree_decompose(&b).unwrap();
        let mut acc = vec![BigRational::from_integer(1.into())];
        for (s, m) in &parts {
            for _ in 0..*m {
                acc = mul(&acc, s);
            }
        }
        acc = scale(&acc, &c);
        assert_eq!(trim(acc), trim(b));
    }

    #[test]
    fn vp_of_rationals() {
        let r = BigRational::new(50.into(), 3.into());
        assert_eq!(vp_rational(5, &r), Some(2));
        let r = BigRational::new(3.into(), 25.into());
        assert_eq!(vp_rational(5, &r), Some(-2));
    }
}
