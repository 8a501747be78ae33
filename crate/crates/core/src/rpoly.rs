//! Dense polynomials with coefficients in a [`Ring`] level, used for
//! extended-gcd inversion inside quotients and for squarefree certificates.
//!
//! Coefficients that are indistinguishable from zero are treated as zero when
//! deciding degrees; the verification suites catch the (bounded) error this
//! introduces.

use crate::error::{Error, Result};
use crate::field::{Ring, RingElem};

pub type RPoly = Vec<RingElem>;

pub fn trim(mut a: RPoly) -> RPoly {
    while a.len() > 1 && a.last().map(|c| c.is_zero_at_prec()).unwrap_or(false) {
        a.pop();
    }
    a
}

pub fn degree(a: &RPoly) -> usize {
    a.len().saturating_sub(1)
}

pub fn is_zero(a: &RPoly) -> bool {
    a.iter().all(|c| c.is_zero_at_prec())
}

pub fn add(a: &RPoly, b: &RPoly) -> Result<RPoly> {
    let ring = a[0].ring().clone();
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(|| ring.zero());
        let y = b.get(i).cloned().unwrap_or_else(|| ring.zero());
        out.push(x.add(&y)?);
    }
    Ok(trim(out))
}

pub fn neg(a: &RPoly) -> RPoly {
    a.iter().map(|c| c.neg()).collect()
}

pub fn sub(a: &RPoly, b: &RPoly) -> Result<RPoly> {
    add(a, &neg(b))
}

pub fn mul(a: &RPoly, b: &RPoly) -> Result<RPoly> {
    let ring = a[0].ring().clone();
    let mut out = vec![ring.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_exact_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&x.mul(y)?)?;
        }
    }
    Ok(trim(out))
}

pub fn scale(a: &RPoly, c: &RingElem) -> Result<RPoly> {
    Ok(trim(a.iter().map(|x| x.mul(c)).collect::<Result<Vec<_>>>()?))
}

pub fn derivative(a: &RPoly) -> RPoly {
    let ring = a[0].ring().clone();
    if a.len() <= 1 {
        return vec![ring.zero()];
    }
    let mut out = Vec::with_capacity(a.len() - 1);
    for (i, c) in a.iter().enumerate().skip(1) {
        out.push(c.mul(&ring.from_i64(i as i64)).expect("same ring"));
    }
    trim(out)
}

pub fn eval(a: &RPoly, x: &RingElem) -> Result<RingElem> {
    let mut acc = x.ring().zero();
    for c in a.iter().rev() {
        acc = acc.mul(x)?.add(&x.ring().embed_deep(c).or_else(|_| {
            if c.ring().compatible(x.ring()) {
                Ok(c.clone())
            } else {
                Err(Error::FieldMismatch)
            }
        })?)?;
    }
    Ok(acc)
}

/// Division with remainder by a divisor whose leading coefficient must be
/// invertible in the coefficient field.
pub fn divrem(a: &RPoly, b: &RPoly) -> Result<(RPoly, RPoly)> {
    let b = trim(b.clone());
    if is_zero(&b) {
        return Err(Error::DivisionByZeroAtPrecision(i64::MIN));
    }
    let ring = a[0].ring().clone();
    let lc_inv = b.last().unwrap().inv()?;
    let db = degree(&b);
    let mut r = a.clone();
    let mut q = vec![ring.zero(); a.len().saturating_sub(db).max(1)];
    while !is_zero(&r) && degree(&trim(r.clone())) >= db && r.len() > db {
        let r_t = trim(r.clone());
        if degree(&r_t) < db {
            r = r_t;
            break;
        }
        let k = degree(&r_t) - db;
        let f = r_t.last().unwrap().mul(&lc_inv)?;
        q[k] = q[k].add(&f)?;
        let mut sub_poly = vec![ring.zero(); k];
        sub_poly.extend(scale(&b, &f)?);
        r = sub(&r_t, &sub_poly)?;
        if degree(&trim(r.clone())) >= db + k && !is_zero(&r) {
            // cancellation failed to reduce the degree: precision exhausted
            return Err(Error::PrecisionLoss("polynomial division stalled".into()));
        }
    }
    Ok((trim(q), trim(r)))
}

/// Monic gcd by the Euclidean algorithm over the coefficient field.
pub fn gcd(a: &RPoly, b: &RPoly) -> Result<RPoly> {
    let mut a = trim(a.clone());
    let mut b = trim(b.clone());
    loop {
        if is_zero(&b) {
            if is_zero(&a) {
                return Ok(a);
            }
            let lc_inv = a.last().unwrap().inv()?;
            return scale(&a, &lc_inv);
        }
        let (_, r) = divrem(&a, &b)?;
        a = b;
        b = r;
    }
}

/// Extended gcd: returns `(g, s, t)` with `s*a + t*b = g`, `g` monic.
pub fn ext_gcd(a: &RPoly, b: &RPoly) -> Result<(RPoly, RPoly, RPoly)> {
    let ring = a[0].ring().clone();
    let one = vec![ring.one()];
    let zero = vec![ring.zero()];
    let mut r0 = trim(a.clone());
    let mut r1 = trim(b.clone());
    let (mut s0, mut s1) = (one.clone(), zero.clone());
    let (mut t0, mut t1) = (zero, one);
    while !is_zero(&r1) {
        let (q, r) = divrem(&r0, &r1)?;
        let s2 = sub(&s0, &mul(&q, &s1)?)?;
        let t2 = sub(&t0, &mul(&q, &t1)?)?;
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s2;
        t0 = t1;
        t1 = t2;
    }
    if is_zero(&r0) {
        return Ok((r0, s0, t0));
    }
    let lc_inv = r0.last().unwrap().inv()?;
    Ok((scale(&r0, &lc_inv)?, scale(&s0, &lc_inv)?, scale(&t0, &lc_inv)?))
}

/// Full modulus polynomial of a quotient ring (monic, leading 1 appended).
pub fn modulus_poly(ring: &Ring) -> Result<RPoly> {
    let m = ring.modulus().ok_or(Error::FieldMismatch)?;
    let base = ring.base_ring().unwrap();
    let mut out: RPoly = m.to_vec();
    out.push(base.one());
    Ok(out)
}

/// Inverse of a quotient element by extended gcd against the modulus.
pub fn invert_mod(a: &RingElem) -> Result<RingElem> {
    let ring = a.ring().clone();
    let base = ring.base_ring().ok_or(Error::FieldMismatch)?;
    if a.is_zero_at_prec() {
        return Err(Error::DivisionByZeroAtPrecision(a.min_abs_prec().unwrap_or(i64::MAX)));
    }
    let rep: RPoly = trim(a.coords().to_vec());
    let mp = modulus_poly(&ring)?;
    let (g, s, _) = ext_gcd(&rep, &mp)?;
    if degree(&trim(g.clone())) != 0 || g[0].is_zero_at_prec() {
        // non-trivial common factor with the modulus: zero divisor (or the
        // element is indistinguishable from one at this precision)
        return Err(Error::DivisionByZeroAtPrecision(
            a.min_abs_prec().unwrap_or(i64::MAX),
        ));
    }
    // g is monic 1 after normalization inside ext_gcd
    let mut coords = vec![base.zero(); ring.degree()];
    for (i, c) in s.iter().enumerate() {
        if i < coords.len() {
            coords[i] = c.clone();
        } else {
            // reduce s mod modulus if ext_gcd returned a long cofactor
            let (_, r) = divrem(&s, &mp)?;
            coords = vec![base.zero(); ring.degree()];
            for (j, c) in r.iter().enumerate() {
                coords[j] = c.clone();
            }
            break;
        }
    }
    ring.from_coords(coords)
}

/// Certify that `P` is squarefree at working precision: gcd(P, P') must be a
/// unit of the coefficient field.
pub fn certify_squarefree(p: &RPoly) -> Result<()> {
    let d = derivative(p);
    let g = gcd(p, &d).map_err(|e| match e {
        Error::DivisionByZeroAtPrecision(_) => Error::NotSquarefree,
        other => other,
    })?;
    if degree(&trim(g.clone())) != 0 {
        return Err(Error::NotSquarefree);
    }
    Ok(())
}
