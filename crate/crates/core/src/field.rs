//! The coefficient tower: the p-adic base field, certified finite extensions
//! of it, and étale algebras `K[x]/(P)` for squarefree `P`.
//!
//! Every level is a quotient of the polynomial ring over the level below by a
//! monic modulus. Elements are coordinate vectors in the power basis; traces
//! and norms go through multiplication matrices, and the normalized valuation
//! of a field level is `e * v_base(N(a)) / d`.

use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::padic::{is_prime, PadicScalar, Valuation};

/// How the quotient's uniformizer is expressed, recorded instead of a
/// materialized element to keep the ring definition acyclic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnifSpec {
    /// The base uniformizer `p` (unramified levels).
    BaseP,
    /// The class of `x` (Eisenstein levels).
    X,
    /// `x^s * p^u` with `s*v(x) + u*d = 1` (single-segment Newton polygon).
    XsPu { s: i64, u: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// Base field itself.
    BaseField,
    Eisenstein,
    IrreducibleModP,
    NewtonPolygon,
    /// Caller asserted irreducibility; ramification data is best-effort.
    Trusted,
    /// Squarefree but not certified irreducible: a product of fields.
    Etale,
}

impl Certificate {
    pub fn is_field(self) -> bool {
        !matches!(self, Certificate::Etale)
    }
    pub fn as_str(self) -> &'static str {
        match self {
            Certificate::BaseField => "base",
            Certificate::Eisenstein => "eisenstein",
            Certificate::IrreducibleModP => "unramified",
            Certificate::NewtonPolygon => "newton-polygon",
            Certificate::Trusted => "trusted",
            Certificate::Etale => "etale",
        }
    }
}

#[derive(Debug)]
pub enum RingDef {
    Base {
        p: u64,
        prec: u32,
    },
    Quotient {
        base: Ring,
        /// Coefficients of `x^0..x^{d-1}`; the leading coefficient 1 is implicit.
        modulus: Vec<RingElem>,
        cert: Certificate,
        e: u32,
        f0: u32,
        unif: UnifSpec,
    },
}

#[derive(Debug, Clone)]
pub struct Ring(Rc<RingDef>);

#[derive(Debug, Clone)]
enum Data {
    Scalar(PadicScalar),
    Poly(Vec<RingElem>),
}

#[derive(Debug, Clone)]
pub struct RingElem {
    ring: Ring,
    data: Data,
}

impl Ring {
    pub fn base(p: u64, prec: u32) -> Result<Ring> {
        if !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        Ok(Ring(Rc::new(RingDef::Base { p, prec })))
    }

    pub fn p(&self) -> u64 {
        match &*self.0 {
            RingDef::Base { p, .. } => *p,
            RingDef::Quotient { base, .. } => base.p(),
        }
    }

    pub fn prec(&self) -> u32 {
        match &*self.0 {
            RingDef::Base { prec, .. } => *prec,
            RingDef::Quotient { base, .. } => base.prec(),
        }
    }

    /// Degree over the immediate base.
    pub fn degree(&self) -> usize {
        match &*self.0 {
            RingDef::Base { .. } => 1,
            RingDef::Quotient { modulus, .. } => modulus.len(),
        }
    }

    /// Degree over the prime field.
    pub fn abs_degree(&self) -> usize {
        match &*self.0 {
            RingDef::Base { .. } => 1,
            RingDef::Quotient { base, modulus, .. } => base.abs_degree() * modulus.len(),
        }
    }

    pub fn base_ring(&self) -> Option<Ring> {
        match &*self.0 {
            RingDef::Base { .. } => None,
            RingDef::Quotient { base, .. } => Some(base.clone()),
        }
    }

    pub fn certificate(&self) -> Certificate {
        match &*self.0 {
            RingDef::Base { .. } => Certificate::BaseField,
            RingDef::Quotient { cert, .. } => *cert,
        }
    }

    pub fn ramification(&self) -> (u32, u32) {
        match &*self.0 {
            RingDef::Base { .. } => (1, 1),
            RingDef::Quotient { e, f0, .. } => (*e, *f0),
        }
    }

    /// Absolute ramification index over the prime field.
    pub fn e_abs(&self) -> u32 {
        match &*self.0 {
            RingDef::Base { .. } => 1,
            RingDef::Quotient { base, e, .. } => base.e_abs() * e.max(&1),
        }
    }

    pub fn modulus(&self) -> Option<&[RingElem]> {
        match &*self.0 {
            RingDef::Base { .. } => None,
            RingDef::Quotient { modulus, .. } => Some(modulus),
        }
    }

    pub fn is_field(&self) -> bool {
        self.certificate().is_field()
    }

    pub fn compatible(&self, other: &Ring) -> bool {
        if Rc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (&*self.0, &*other.0) {
            (RingDef::Base { p: p1, prec: r1 }, RingDef::Base { p: p2, prec: r2 }) => {
                p1 == p2 && r1 == r2
            }
            (
                RingDef::Quotient { base: b1, modulus: m1, .. },
                RingDef::Quotient { base: b2, modulus: m2, .. },
            ) => {
                b1.compatible(b2)
                    && m1.len() == m2.len()
                    && m1.iter().zip(m2).all(|(a, b)| {
                        a.sub(b).map(|d| d.is_zero_at_prec()).unwrap_or(false)
                    })
            }
            _ => false,
        }
    }

    pub fn zero(&self) -> RingElem {
        match &*self.0 {
            RingDef::Base { p, .. } => RingElem {
                ring: self.clone(),
                data: Data::Scalar(PadicScalar::exact_zero(*p)),
            },
            RingDef::Quotient { base, modulus, .. } => RingElem {
                ring: self.clone(),
                data: Data::Poly(vec![base.zero(); modulus.len()]),
            },
        }
    }

    pub fn one(&self) -> RingElem {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> RingElem {
        self.from_bigint(&BigInt::from(n))
    }

    pub fn from_bigint(&self, n: &BigInt) -> RingElem {
        match &*self.0 {
            RingDef::Base { p, prec } => RingElem {
                ring: self.clone(),
                data: Data::Scalar(PadicScalar::from_bigint(*p, n, *prec)),
            },
            RingDef::Quotient { base, modulus, .. } => {
                let mut coords = vec![base.zero(); modulus.len()];
                coords[0] = base.from_bigint(n);
                RingElem { ring: self.clone(), data: Data::Poly(coords) }
            }
        }
    }

    pub fn from_ratio(&self, num: &BigInt, den: &BigInt) -> Result<RingElem> {
        match &*self.0 {
            RingDef::Base { p, prec } => Ok(RingElem {
                ring: self.clone(),
                data: Data::Scalar(PadicScalar::from_ratio(*p, num, den, *prec)?),
            }),
            RingDef::Quotient { .. } => {
                let base = self.base_ring().unwrap();
                self.embed(&base.from_ratio(num, den)?)
            }
        }
    }

    pub fn from_scalar(&self, s: PadicScalar) -> Result<RingElem> {
        match &*self.0 {
            RingDef::Base { p, .. } => {
                if s.p() != *p {
                    return Err(Error::FieldMismatch);
                }
                Ok(RingElem { ring: self.clone(), data: Data::Scalar(s) })
            }
            RingDef::Quotient { .. } => {
                let base = self.base_ring().unwrap();
                self.embed(&base.from_scalar(s)?)
            }
        }
    }

    /// Lift an element of the immediate base into this quotient.
    pub fn embed(&self, a: &RingElem) -> Result<RingElem> {
        match &*self.0 {
            RingDef::Base { .. } => {
                if !a.ring.compatible(self) {
                    return Err(Error::FieldMismatch);
                }
                Ok(a.clone())
            }
            RingDef::Quotient { base, modulus, .. } => {
                if !a.ring.compatible(base) {
                    return Err(Error::FieldMismatch);
                }
                let mut coords = vec![base.zero(); modulus.len()];
                coords[0] = a.clone();
                Ok(RingElem { ring: self.clone(), data: Data::Poly(coords) })
            }
        }
    }

    /// Lift an element of any lower level into this ring.
    pub fn embed_deep(&self, a: &RingElem) -> Result<RingElem> {
        if a.ring.compatible(self) {
            return Ok(a.clone());
        }
        match self.base_ring() {
            Some(base) => {
                let lower = base.embed_deep(a)?;
                self.embed(&lower)
            }
            None => Err(Error::FieldMismatch),
        }
    }

    /// The class of `x` in a quotient level.
    pub fn gen(&self) -> Result<RingElem> {
        match &*self.0 {
            RingDef::Base { .. } => Err(Error::FieldMismatch),
            RingDef::Quotient { base, modulus, .. } => {
                let d = modulus.len();
                let mut coords = vec![base.zero(); d];
                if d == 1 {
                    // x = -a_0 in a linear quotient
                    coords[0] = modulus[0].neg();
                } else {
                    coords[1] = base.one();
                }
                Ok(RingElem { ring: self.clone(), data: Data::Poly(coords) })
            }
        }
    }

    pub fn from_coords(&self, coords: Vec<RingElem>) -> Result<RingElem> {
        match &*self.0 {
            RingDef::Base { .. } => Err(Error::FieldMismatch),
            RingDef::Quotient { base, modulus, .. } => {
                if coords.len() != modulus.len()
                    || coords.iter().any(|c| !c.ring.compatible(base))
                {
                    return Err(Error::FieldMismatch);
                }
                Ok(RingElem { ring: self.clone(), data: Data::Poly(coords) })
            }
        }
    }

    /// Uniformizer of a certified field level under the normalized valuation.
    pub fn uniformizer(&self) -> Result<RingElem> {
        match &*self.0 {
            RingDef::Base { p, .. } => Ok(self.from_i64(*p as i64)),
            RingDef::Quotient { base, unif, .. } => match unif {
                UnifSpec::BaseP => self.embed(&base.uniformizer()?),
                UnifSpec::X => self.gen(),
                UnifSpec::XsPu { s, u } => {
                    let x = self.gen()?.pow(*s)?;
                    let pk = self.embed(&base.uniformizer()?)?.pow(*u)?;
                    x.mul(&pk)
                }
            },
        }
    }

    /// Low-level quotient constructor; callers are responsible for the
    /// certificate they pass.
    pub fn quotient(
        base: Ring,
        modulus: Vec<RingElem>,
        cert: Certificate,
        e: u32,
        f0: u32,
        unif: UnifSpec,
    ) -> Result<Ring> {
        if modulus.is_empty() || modulus.iter().any(|c| !c.ring.compatible(&base)) {
            return Err(Error::FieldMismatch);
        }
        Ok(Ring(Rc::new(RingDef::Quotient { base, modulus, cert, e, f0, unif })))
    }
}

impl RingElem {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn coords(&self) -> &[RingElem] {
        match &self.data {
            Data::Poly(c) => c,
            Data::Scalar(_) => std::slice::from_ref(self),
        }
    }

    pub fn scalar(&self) -> Option<&PadicScalar> {
        match &self.data {
            Data::Scalar(s) => Some(s),
            Data::Poly(_) => None,
        }
    }

    pub fn is_zero_at_prec(&self) -> bool {
        match &self.data {
            Data::Scalar(s) => s.is_zero_at_prec(),
            Data::Poly(c) => c.iter().all(|x| x.is_zero_at_prec()),
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        match &self.data {
            Data::Scalar(s) => s.is_exact_zero(),
            Data::Poly(c) => c.iter().all(|x| x.is_exact_zero()),
        }
    }

    /// Minimum absolute precision across all prime-field coordinates
    /// (`None` = infinite, every coordinate exactly zero).
    pub fn min_abs_prec(&self) -> Option<i64> {
        match &self.data {
            Data::Scalar(s) => s.abs_prec(),
            Data::Poly(c) => c.iter().filter_map(|x| x.min_abs_prec()).min(),
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if !self.ring.compatible(&other.ring) {
            return Err(Error::FieldMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        match (&self.data, &other.data) {
            (Data::Scalar(a), Data::Scalar(b)) => Ok(RingElem {
                ring: self.ring.clone(),
                data: Data::Scalar(a.add(b)?),
            }),
            (Data::Poly(a), Data::Poly(b)) => {
                let coords = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| x.add(y))
                    .collect::<Result<Vec<_>>>()?;
                Ok(RingElem { ring: self.ring.clone(), data: Data::Poly(coords) })
            }
            _ => Err(Error::FieldMismatch),
        }
    }

    pub fn neg(&self) -> Self {
        match &self.data {
            Data::Scalar(s) => RingElem { ring: self.ring.clone(), data: Data::Scalar(s.neg()) },
            Data::Poly(c) => RingElem {
                ring: self.ring.clone(),
                data: Data::Poly(c.iter().map(|x| x.neg()).collect()),
            },
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        match (&self.data, &other.data) {
            (Data::Scalar(a), Data::Scalar(b)) => Ok(RingElem {
                ring: self.ring.clone(),
                data: Data::Scalar(a.mul(b)?),
            }),
            (Data::Poly(a), Data::Poly(b)) => {
                let modulus = self.ring.modulus().unwrap();
                let base = self.ring.base_ring().unwrap();
                let d = a.len();
                // schoolbook product, then reduce by the monic modulus
                let mut prod = vec![base.zero(); 2 * d - 1];
                for (i, x) in a.iter().enumerate() {
                    if x.is_exact_zero() {
                        continue;
                    }
                    for (j, y) in b.iter().enumerate() {
                        prod[i + j] = prod[i + j].add(&x.mul(y)?)?;
                    }
                }
                for k in (d..2 * d - 1).rev() {
                    let c = prod[k].clone();
                    if c.is_exact_zero() {
                        continue;
                    }
                    for i in 0..d {
                        prod[k - d + i] = prod[k - d + i].sub(&c.mul(&modulus[i])?)?;
                    }
                }
                prod.truncate(d);
                Ok(RingElem { ring: self.ring.clone(), data: Data::Poly(prod) })
            }
            _ => Err(Error::FieldMismatch),
        }
    }

    pub fn scale_i64(&self, n: i64) -> Result<Self> {
        self.mul(&self.ring.from_i64(n))
    }

    pub fn inv(&self) -> Result<Self> {
        match &self.data {
            Data::Scalar(s) => Ok(RingElem {
                ring: self.ring.clone(),
                data: Data::Scalar(s.inv()?),
            }),
            Data::Poly(_) => crate::rpoly::invert_mod(self),
        }
    }

    pub fn pow(&self, k: i64) -> Result<Self> {
        if k == 0 {
            return Ok(self.ring.one());
        }
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut acc = base.clone();
        for _ in 1..k.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
        Ok(acc)
    }

    /// Columns of the multiplication-by-self matrix over the immediate base.
    pub fn mult_matrix(&self) -> Result<Vec<Vec<RingElem>>> {
        match &self.data {
            Data::Scalar(_) => Ok(vec![vec![self.clone()]]),
            Data::Poly(_) => {
                let d = self.ring.degree();
                let x = self.ring.gen()?;
                let mut cols = Vec::with_capacity(d);
                let mut cur = self.clone();
                for i in 0..d {
                    cols.push(cur.coords().to_vec());
                    if i + 1 < d {
                        cur = cur.mul(&x)?;
                    }
                }
                Ok(cols)
            }
        }
    }

    /// Trace down one level of the tower.
    pub fn trace_step(&self) -> Result<RingElem> {
        match &self.data {
            Data::Scalar(_) => Ok(self.clone()),
            Data::Poly(_) => {
                let cols = self.mult_matrix()?;
                let base = self.ring.base_ring().unwrap();
                let mut tr = base.zero();
                for (i, col) in cols.iter().enumerate() {
                    tr = tr.add(&col[i])?;
                }
                Ok(tr)
            }
        }
    }

    /// Trace all the way to the prime field.
    pub fn trace_to_prime(&self) -> Result<PadicScalar> {
        let mut cur = self.clone();
        while cur.scalar().is_none() {
            cur = cur.trace_step()?;
        }
        Ok(cur.scalar().unwrap().clone())
    }

    /// Trace down to a declared subfield level of the tower.
    pub fn trace_to(&self, sub: &Ring) -> Result<RingElem> {
        let mut cur = self.clone();
        loop {
            if cur.ring.compatible(sub) {
                return Ok(cur);
            }
            if cur.scalar().is_some() {
                return Err(Error::FieldMismatch);
            }
            cur = cur.trace_step()?;
        }
    }

    /// Norm down one level of the tower (determinant of the multiplication matrix).
    pub fn norm_step(&self) -> Result<RingElem> {
        match &self.data {
            Data::Scalar(_) => Ok(self.clone()),
            Data::Poly(_) => {
                let cols = self.mult_matrix()?;
                let base = self.ring.base_ring().unwrap();
                let d = cols.len();
                let rows: Vec<Vec<RingElem>> = (0..d)
                    .map(|i| (0..d).map(|j| cols[j][i].clone()).collect())
                    .collect();
                laplace_det(&base, &rows)
            }
        }
    }

    /// Normalized valuation of this level: `v(uniformizer) = 1`.
    pub fn valuation(&self) -> Result<Valuation> {
        match &self.data {
            Data::Scalar(s) => Ok(s.valuation()),
            Data::Poly(_) => {
                if !self.ring.is_field() {
                    return Err(Error::PrecisionLoss(
                        "normalized valuation undefined on an étale algebra".into(),
                    ));
                }
                let d = self.ring.degree() as i64;
                let (e, _) = self.ring.ramification();
                let nrm = self.norm_step()?;
                match nrm.valuation()? {
                    Valuation::Infinite => Ok(Valuation::Infinite),
                    Valuation::Finite(v) => {
                        let num = (e as i64) * v;
                        if num % d != 0 {
                            return Err(Error::PrecisionLoss(format!(
                                "norm valuation {v} not divisible as expected (e={e}, d={d})"
                            )));
                        }
                        Ok(Valuation::Finite(num / d))
                    }
                    Valuation::AtLeast(b) => {
                        Ok(Valuation::AtLeast(((e as i64) * b).div_euclid(d)))
                    }
                }
            }
        }
    }

    /// Lower bound on the normalized valuation that never errors: minimum of
    /// the coordinate bounds, scaled by the ramification index.
    pub fn valuation_floor(&self) -> i64 {
        match &self.data {
            Data::Scalar(s) => s.valuation().lower_bound(),
            Data::Poly(c) => {
                let (e, _) = self.ring.ramification();
                let base_floor = c.iter().map(|x| x.valuation_floor()).min().unwrap_or(i64::MAX);
                if base_floor == i64::MAX {
                    i64::MAX
                } else {
                    base_floor.saturating_mul(e.max(1) as i64)
                }
            }
        }
    }

    /// Fold an unknown error of (prime-field) valuation `>= bound` into every
    /// coordinate.
    pub fn add_unknown(&self, bound: i64) -> Self {
        match &self.data {
            Data::Scalar(s) => RingElem {
                ring: self.ring.clone(),
                data: Data::Scalar(s.add_unknown(bound)),
            },
            Data::Poly(c) => RingElem {
                ring: self.ring.clone(),
                data: Data::Poly(c.iter().map(|x| x.add_unknown(bound)).collect()),
            },
        }
    }
}

/// Determinant by cofactor expansion; avoids divisions entirely so the only
/// precision behaviour is that of add/mul.
pub fn laplace_det(ring: &Ring, rows: &[Vec<RingElem>]) -> Result<RingElem> {
    let n = rows.len();
    if n == 0 {
        return Ok(ring.one());
    }
    if n == 1 {
        return Ok(rows[0][0].clone());
    }
    let mut det = ring.zero();
    for j in 0..n {
        if rows[0][j].is_exact_zero() {
            continue;
        }
        let minor: Vec<Vec<RingElem>> = rows[1..]
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let cof = rows[0][j].mul(&laplace_det(ring, &minor)?)?;
        det = if j % 2 == 0 { det.add(&cof)? } else { det.sub(&cof)? };
    }
    Ok(det)
}

/// Gram matrix of the trace pairing on `basis`, over the immediate base of
/// the basis elements' ring.
pub fn trace_gram(basis: &[RingElem]) -> Result<Vec<Vec<RingElem>>> {
    let n = basis.len();
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(basis[i].mul(&basis[j])?.trace_step()?);
        }
        g.push(row);
    }
    Ok(g)
}

/// Solve `G x = rhs` by Cramer's rule; errors with `DegenerateAtPrecision`
/// when the determinant is indistinguishable from zero.
pub fn solve_gram(ring: &Ring, g: &[Vec<RingElem>], rhs: &[RingElem]) -> Result<Vec<RingElem>> {
    let n = g.len();
    let det = laplace_det(ring, g)?;
    if det.is_zero_at_prec() {
        return Err(Error::DegenerateAtPrecision);
    }
    let det_inv = det.inv()?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let cols: Vec<Vec<RingElem>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if j == k { rhs[i].clone() } else { g[i][j].clone() })
                    .collect()
            })
            .collect();
        out.push(laplace_det(ring, &cols)?.mul(&det_inv)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Certified field construction
// ---------------------------------------------------------------------------

fn vp_int(p: u64, n: &BigInt) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0u32;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    Some(v)
}

mod fp {
    //! Tiny F_p[x] helpers for the mod-p irreducibility certificate.

    pub fn rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        if m.len() <= 1 {
            return vec![0];
        }
        let d = m.len() - 1;
        while a.len() > d {
            let c = *a.last().unwrap() % p;
            let k = a.len() - 1 - d;
            if c != 0 {
                let lc_inv = inv_mod(m[d], p);
                let f = c * lc_inv % p;
                for i in 0..=d {
                    let idx = k + i;
                    a[idx] = (a[idx] + p - f * m[i] % p) % p;
                }
            }
            a.pop();
        }
        trim(a)
    }

    pub fn trim(mut a: Vec<u64>) -> Vec<u64> {
        while a.len() > 1 && *a.last().unwrap() == 0 {
            a.pop();
        }
        if a.is_empty() {
            a.push(0);
        }
        a
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(out)
    }

    pub fn inv_mod(a: u64, p: u64) -> u64 {
        // p is prime and small
        let mut acc = 1u64;
        let mut base = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc
    }

    pub fn gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
        loop {
            if b.len() == 1 && b[0] == 0 {
                return a;
            }
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
    }

    /// x^(p^k) mod m, by repeated Frobenius-style powering.
    pub fn x_pow_p_pow(m: &[u64], p: u64, k: u32) -> Vec<u64> {
        let mut cur = vec![0, 1]; // x
        for _ in 0..k {
            cur = pow_mod(&cur, p, m, p);
        }
        cur
    }

    fn pow_mod(a: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut base = rem(a, m, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = rem(&mul(&acc, &base, p), m, p);
            }
            base = rem(&mul(&base, &base, p), m, p);
            e >>= 1;
        }
        acc
    }

    pub fn is_irreducible(f: &[u64], p: u64) -> bool {
        let d = f.len() - 1;
        if d == 0 {
            return false;
        }
        if d == 1 {
            return true;
        }
        // x^(p^d) == x mod f
        let xpd = x_pow_p_pow(f, p, d as u32);
        let mut diff = xpd;
        if diff.len() < 2 {
            diff.resize(2, 0);
        }
        diff[1] = (diff[1] + p - 1) % p;
        if trim(rem(&diff, f, p)) != vec![0] {
            return false;
        }
        // gcd(x^(p^(d/q)) - x, f) must be constant for every prime q | d
        let mut q = 2;
        let mut dd = d;
        let mut prime_divs = Vec::new();
        while q * q <= dd {
            if dd % q == 0 {
                prime_divs.push(q);
                while dd % q == 0 {
                    dd /= q;
                }
            }
            q += 1;
        }
        if dd > 1 {
            prime_divs.push(dd);
        }
        for q in prime_divs {
            let mut g = x_pow_p_pow(f, p, (d / q) as u32);
            if g.len() < 2 {
                g.resize(2, 0);
            }
            g[1] = (g[1] + p - 1) % p;
            let g = gcd(f.to_vec(), trim(g), p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}

pub(crate) fn egcd_i64(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd_i64(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Result of building a coefficient field, with the certificate that
/// succeeded echoed for reporting.
pub struct FieldBuild {
    pub ring: Ring,
    pub certificate: Certificate,
    pub trusted: bool,
}

/// Build the coefficient field `Q_p[x]/(g)` from an integer monic polynomial,
/// certifying irreducibility by Eisenstein, irreducibility mod p, or a
/// single-segment Newton polygon with coprime endpoints.
pub fn field_make(p: u64, poly: &[BigInt], prec: u32, trust: bool) -> Result<FieldBuild> {
    if !is_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    if prec == 0 {
        return Err(Error::BadInput("precision must be >= 1".into()));
    }
    if poly.is_empty() || poly.last().map(|c| c != &BigInt::from(1)).unwrap_or(true) {
        return Err(Error::BadInput("defining polynomial must be monic".into()));
    }
    let d = poly.len() - 1;
    let base = Ring::base(p, prec)?;
    if d == 0 {
        return Err(Error::BadInput("defining polynomial must be nonconstant".into()));
    }
    if d == 1 {
        return Ok(FieldBuild { ring: base, certificate: Certificate::BaseField, trusted: false });
    }
    let vals: Vec<Option<u32>> = poly[..d].iter().map(|c| vp_int(p, c)).collect();
    let v0 = vals[0];

    // Eisenstein: all lower coefficients in (p), constant term exactly v=1.
    let eisenstein = v0 == Some(1)
        && vals.iter().all(|v| v.map(|x| x >= 1).unwrap_or(true))
        && !poly[0].is_zero();
    if eisenstein {
        let modulus = poly[..d].iter().map(|c| base.from_bigint(c)).collect();
        let ring = Ring::quotient(base, modulus, Certificate::Eisenstein, d as u32, 1, UnifSpec::X)?;
        return Ok(FieldBuild { ring, certificate: Certificate::Eisenstein, trusted: false });
    }

    // Unramified: irreducible mod p.
    let fp_poly: Vec<u64> = poly
        .iter()
        .map(|c| {
            let r = ((c % BigInt::from(p)) + BigInt::from(p)) % BigInt::from(p);
            r.to_string().parse::<u64>().unwrap()
        })
        .collect();
    if fp_poly.last() == Some(&1) && fp::is_irreducible(&fp_poly, p) {
        let modulus = poly[..d].iter().map(|c| base.from_bigint(c)).collect();
        let ring =
            Ring::quotient(base, modulus, Certificate::IrreducibleModP, 1, d as u32, UnifSpec::BaseP)?;
        return Ok(FieldBuild { ring, certificate: Certificate::IrreducibleModP, trusted: false });
    }

    // Newton polygon: one segment from (0, v0) to (d, 0), gcd(v0, d) = 1.
    if let Some(h) = v0 {
        let d_i = d as i64;
        let h_i = h as i64;
        let single_segment = h >= 1
            && (1..d).all(|i| match vals[i] {
                None => true,
                Some(vi) => d_i * vi as i64 >= h_i * (d_i - i as i64),
            });
        if single_segment && egcd_i64(h_i, d_i).0 == 1 {
            let (_, mut s, _) = egcd_i64(h_i, d_i);
            s = s.rem_euclid(d_i);
            if s == 0 {
                s = d_i;
            }
            let u = (1 - s * h_i) / d_i;
            let modulus = poly[..d].iter().map(|c| base.from_bigint(c)).collect();
            let ring = Ring::quotient(
                base,
                modulus,
                Certificate::NewtonPolygon,
                d as u32,
                1,
                UnifSpec::XsPu { s, u },
            )?;
            return Ok(FieldBuild { ring, certificate: Certificate::NewtonPolygon, trusted: false });
        }
    }

    if trust {
        // Best-effort ramification data from the Newton polygon's slope
        // denominators; recorded as trusted in outputs.
        let modulus: Vec<RingElem> = poly[..d].iter().map(|c| base.from_bigint(c)).collect();
        let (e, unif) = match v0 {
            Some(h) if h >= 1 => {
                let g = egcd_i64(h as i64, d as i64).0;
                let e = (d as i64) / g;
                if e == 1 {
                    (1, UnifSpec::BaseP)
                } else {
                    let hh = (h as i64) / g;
                    let (_, mut s, _) = egcd_i64(hh, e);
                    s = s.rem_euclid(e);
                    if s == 0 {
                        s = e;
                    }
                    let u = (1 - s * hh) / e;
                    (e as u32, UnifSpec::XsPu { s, u })
                }
            }
            _ => (1, UnifSpec::BaseP),
        };
        let f0 = d as u32 / e;
        let ring = Ring::quotient(base, modulus, Certificate::Trusted, e, f0, unif)?;
        return Ok(FieldBuild { ring, certificate: Certificate::Trusted, trusted: true });
    }

    Err(Error::NotIrreducibleCertified)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q5() -> Ring {
        Ring::base(5, 20).unwrap()
    }

    fn q5_sqrt2() -> Ring {
        field_make(5, &[BigInt::from(-2), BigInt::from(0), BigInt::from(1)], 20, false)
            .unwrap()
            .ring
    }

    fn q5_sqrt5() -> Ring {
        field_make(5, &[BigInt::from(-5), BigInt::from(0), BigInt::from(1)], 20, false)
            .unwrap()
            .ring
    }

    #[test]
    fn trivial_field_is_base() {
        let b = field_make(5, &[BigInt::from(0), BigInt::from(1)], 20, false).unwrap();
        assert_eq!(b.ring.degree(), 1);
        assert_eq!(b.ring.ramification(), (1, 1));
        let pi = b.ring.uniformizer().unwrap();
        assert_eq!(pi.valuation().unwrap(), Valuation::Finite(1));
    }

    #[test]
    fn unramified_quadratic_certificate() {
        // oracle: x^2 - 2 has no root mod 5 (2 is a non-square mod 5)
        assert!((0..5).all(|x| (x * x) % 5 != 2));
        let k = q5_sqrt2();
        assert_eq!(k.certificate(), Certificate::IrreducibleModP);
        assert_eq!(k.ramification(), (1, 2));
    }

    #[test]
    fn eisenstein_quadratic_certificate() {
        // oracle: x^2 - 5 satisfies the Eisenstein criterion at 5
        let k = q5_sqrt5();
        assert_eq!(k.certificate(), Certificate::Eisenstein);
        assert_eq!(k.ramification(), (2, 1));
        let pi = k.uniformizer().unwrap();
        assert_eq!(pi.valuation().unwrap(), Valuation::Finite(1));
    }

    #[test]
    fn no_certificate_without_trust() {
        // x^2 - 4 is reducible; nothing certifies it
        let r = field_make(5, &[BigInt::from(-4), BigInt::from(0), BigInt::from(1)], 20, false);
        assert!(matches!(r, Err(Error::NotIrreducibleCertified)));
    }

    #[test]
    fn norm_form_product() {
        // (1 + sqrt2)(1 - sqrt2) = -1
        let k = q5_sqrt2();
        let x = k.gen().unwrap();
        let a = k.one().add(&x).unwrap();
        let b = k.one().sub(&x).unwrap();
        let prod = a.mul(&b).unwrap();
        assert!(prod.sub(&k.from_i64(-1)).unwrap().is_zero_at_prec());
    }

    #[test]
    fn defining_relation_sqrt5() {
        let k = q5_sqrt5();
        let x = k.gen().unwrap();
        let sq = x.mul(&x).unwrap();
        assert!(sq.sub(&k.from_i64(5)).unwrap().is_zero_at_prec());
    }

    #[test]
    fn invert_sqrt5() {
        let k = q5_sqrt5();
        let x = k.gen().unwrap();
        let inv = x.inv().unwrap();
        // sqrt5 / 5
        let expected = x.mul(&k.from_i64(5).inv().unwrap()).unwrap();
        assert!(inv.sub(&expected).unwrap().is_zero_at_prec());
        assert_eq!(inv.valuation().unwrap(), Valuation::Finite(-1));
    }

    #[test]
    fn valuation_examples() {
        let k = q5_sqrt5();
        let x = k.gen().unwrap();
        assert_eq!(x.valuation().unwrap(), Valuation::Finite(1));

        // e = 1 field: v(5 + sqrt2 * 5^2) = 1 over the unramified field
        // (the 5^2 term cannot lower the valuation)
        let k2 = q5_sqrt2();
        let x2 = k2.gen().unwrap();
        let a = k2.from_i64(5).add(&x2.mul(&k2.from_i64(25)).unwrap()).unwrap();
        assert_eq!(a.valuation().unwrap(), Valuation::Finite(1));
    }

    #[test]
    fn traces() {
        let k = q5_sqrt2();
        let x = k.gen().unwrap();
        // oracle: multiplication matrix of sqrt2 is [[0,2],[1,0]], trace 0
        assert!(x.trace_step().unwrap().is_zero_at_prec());
        assert!(k
            .one()
            .trace_step()
            .unwrap()
            .sub(&q5().from_i64(2))
            .unwrap()
            .is_zero_at_prec());

        let k5 = q5_sqrt5();
        let a = k5.from_i64(3).add(&k5.gen().unwrap()).unwrap();
        assert!(a
            .trace_step()
            .unwrap()
            .sub(&q5().from_i64(6))
            .unwrap()
            .is_zero_at_prec());
    }

    #[test]
    fn gram_matrices() {
        let b = q5();
        let k = q5_sqrt2();
        let basis = vec![k.one(), k.gen().unwrap()];
        let g = trace_gram(&basis).unwrap();
        // oracle: [[2,0],[0,4]]
        assert!(g[0][0].sub(&b.from_i64(2)).unwrap().is_zero_at_prec());
        assert!(g[0][1].is_zero_at_prec());
        assert!(g[1][1].sub(&b.from_i64(4)).unwrap().is_zero_at_prec());
        let det = laplace_det(&b, &g).unwrap();
        assert_eq!(det.valuation().unwrap(), Valuation::Finite(0));

        let k5 = q5_sqrt5();
        let basis = vec![k5.one(), k5.gen().unwrap()];
        let g = trace_gram(&basis).unwrap();
        // oracle: [[2,0],[0,10]], det valuation 1
        assert!(g[1][1].sub(&b.from_i64(10)).unwrap().is_zero_at_prec());
        let det = laplace_det(&b, &g).unwrap();
        assert_eq!(det.valuation().unwrap(), Valuation::Finite(1));
    }

    #[test]
    fn gram_solve_roundtrip() {
        let b = q5();
        let k = q5_sqrt2();
        let basis = vec![k.one(), k.gen().unwrap()];
        let g = trace_gram(&basis).unwrap();
        let rhs = vec![b.from_i64(7), b.from_i64(3)];
        let x = solve_gram(&b, &g, &rhs).unwrap();
        for i in 0..2 {
            let mut acc = b.zero();
            for j in 0..2 {
                acc = acc.add(&g[i][j].mul(&x[j]).unwrap()).unwrap();
            }
            assert!(acc.sub(&rhs[i]).unwrap().is_zero_at_prec());
        }
    }

    #[test]
    fn trace_transitivity_through_tower() {
        // k_P over K over Q_5: trace composed equals trace of the absolute
        // multiplication matrix, spot-checked on a generator.
        let k = q5_sqrt2();
        let x = k.gen().unwrap();
        let modulus = vec![x.neg(), k.zero()]; // y^2 - sqrt2
        let top = Ring::quotient(k.clone(), modulus, Certificate::Trusted, 1, 2, UnifSpec::BaseP)
            .unwrap();
        let y = top.gen().unwrap();
        let a = y.add(&top.embed(&x).unwrap()).unwrap();
        let via_steps = a.trace_to_prime().unwrap();
        // absolute trace of a = y + sqrt2 over Q5 with basis {1, y, s, sy}:
        // Tr(y) = 0, Tr(sqrt2) = 0 + ... compute by summing diagonal of the
        // absolute multiplication action on the flattened basis.
        // Here we only check consistency: trace of y is 0 both ways.
        let t_y = y.trace_to_prime().unwrap();
        assert!(t_y.is_zero_at_prec());
        let t_x_in_top = top.embed(&x).unwrap().trace_to_prime().unwrap();
        // Tr_{top/Q5}(sqrt2) = 2 * Tr_{K/Q5}(sqrt2) = 0
        assert!(t_x_in_top.is_zero_at_prec());
        assert!(via_steps.is_zero_at_prec());
    }

    #[test]
    fn newton_polygon_certificate() {
        // x^3 - 25: Newton polygon segment (0,2)-(3,0), gcd(2,3)=1
        let b = field_make(
            5,
            &[BigInt::from(-25), BigInt::from(0), BigInt::from(0), BigInt::from(1)],
            20,
            false,
        )
        .unwrap();
        assert_eq!(b.certificate, Certificate::NewtonPolygon);
        assert_eq!(b.ring.ramification(), (3, 1));
        let pi = b.ring.uniformizer().unwrap();
        assert_eq!(pi.valuation().unwrap(), Valuation::Finite(1));
    }
}
