//! Truncated Laurent series over a coefficient algebra: the model of
//! `O_K[[t]]` and of the equal-characteristic completions `k_P((t_P))`.
//!
//! Truncation orders are exclusive and every operation returns the achieved
//! (not the requested) truncation. Weierstrass preparation factors a nonzero
//! power series over `O_K` as `pi^m * unit * P` with `P` distinguished.

use crate::error::{Error, Result};
use crate::field::{Ring, RingElem};
use crate::qpoly::{self, QPoly};
use crate::rpoly::{self, RPoly};

/// Sentinel truncation for exact polynomials; large enough that window
/// arithmetic never saturates in practice.
pub const EXACT_NMAX: i64 = 1 << 40;

#[derive(Debug, Clone)]
pub struct Series {
    ring: Ring,
    /// Lower degree: coefficients below `n0` are exactly zero.
    n0: i64,
    /// Exclusive truncation order: the series is known modulo `O(t^nmax)`.
    nmax: i64,
    /// `coeffs[i]` is the coefficient of `t^(n0+i)`.
    coeffs: Vec<RingElem>,
    /// When set, coefficients at and above `nmax` are exactly zero (finite
    /// support at the top) rather than merely unknown past the truncation.
    exact_above: bool,
}

impl Series {
    pub fn new(ring: Ring, n0: i64, coeffs: Vec<RingElem>, nmax: i64) -> Result<Self> {
        if (nmax - n0) as usize != coeffs.len() {
            return Err(Error::BadInput("coefficient count must match window".into()));
        }
        Ok(Series { ring, n0, nmax, coeffs, exact_above: false }.normalized())
    }

    /// Mark the top as exact: the series has no support at or above `nmax`.
    pub fn into_exact_above(mut self) -> Self {
        self.exact_above = true;
        self
    }

    pub fn is_exact_above(&self) -> bool {
        self.exact_above
    }

    pub fn zero(ring: Ring, nmax: i64) -> Self {
        Series { ring, n0: nmax, nmax, coeffs: vec![], exact_above: true }
    }

    pub fn from_poly(ring: Ring, coeffs: &[RingElem], nmax: i64) -> Result<Self> {
        let mut cs: Vec<RingElem> = coeffs.to_vec();
        let nmax = nmax.max(cs.len() as i64);
        while (cs.len() as i64) < nmax {
            cs.push(ring.zero());
        }
        Ok(Series::new(ring, 0, cs, nmax)?.into_exact_above())
    }

    /// Exact rational polynomial as a series, padded with exact zeros up to
    /// the requested truncation.
    pub fn from_qpoly(ring: &Ring, poly: &QPoly, nmax: i64) -> Result<Self> {
        let mut coeffs = poly
            .iter()
            .map(|c| ring.from_ratio(c.numer(), c.denom()))
            .collect::<Result<Vec<_>>>()?;
        let nmax = nmax.max(coeffs.len() as i64);
        while (coeffs.len() as i64) < nmax {
            coeffs.push(ring.zero());
        }
        Ok(Series::new(ring.clone(), 0, coeffs, nmax)?.into_exact_above())
    }

    pub fn monomial(ring: &Ring, n: i64, c: RingElem, nmax: i64) -> Result<Self> {
        let mut coeffs = vec![c];
        while (coeffs.len() as i64) < nmax - n {
            coeffs.push(ring.zero());
        }
        Ok(Series::new(ring.clone(), n, coeffs, nmax.max(n + 1))?.into_exact_above())
    }

    fn normalized(mut self) -> Self {
        while !self.coeffs.is_empty() && self.coeffs[0].is_exact_zero() {
            self.coeffs.remove(0);
            self.n0 += 1;
        }
        self
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn lower(&self) -> i64 {
        self.n0
    }

    pub fn truncation(&self) -> i64 {
        self.nmax
    }

    pub fn is_zero_at_prec(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero_at_prec())
    }

    /// Minimum absolute p-adic precision over all known coefficients.
    pub fn min_abs_prec(&self) -> Option<i64> {
        self.coeffs.iter().filter_map(|c| c.min_abs_prec()).min()
    }

    pub fn coeff_at(&self, n: i64) -> Result<RingElem> {
        if n >= self.nmax {
            if self.exact_above {
                return Ok(self.ring.zero());
            }
            return Err(Error::TruncationExhausted { needed: n, have: self.nmax });
        }
        if n < self.n0 {
            return Ok(self.ring.zero());
        }
        Ok(self.coeffs[(n - self.n0) as usize].clone())
    }

    /// Iterate known `(exponent, coefficient)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &RingElem)> {
        let n0 = self.n0;
        self.coeffs.iter().enumerate().map(move |(i, c)| (n0 + i as i64, c))
    }

    pub fn truncate_to(&self, nmax: i64) -> Self {
        if nmax >= self.nmax {
            return self.clone();
        }
        let keep = ((nmax - self.n0).max(0)) as usize;
        Series {
            ring: self.ring.clone(),
            n0: self.n0.min(nmax),
            nmax,
            coeffs: self.coeffs[..keep].to_vec(),
            // the dropped coefficients need not be zero
            exact_above: false,
        }
    }

    pub fn shift(&self, k: i64) -> Self {
        Series {
            ring: self.ring.clone(),
            n0: self.n0 + k,
            nmax: self.nmax.saturating_add(k).min(EXACT_NMAX),
            coeffs: self.coeffs.clone(),
            exact_above: self.exact_above,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.ring.compatible(&other.ring) {
            return Err(Error::FieldMismatch);
        }
        // an exact top contributes zeros beyond its own truncation
        let nmax = match (self.exact_above, other.exact_above) {
            (true, true) => self.nmax.max(other.nmax),
            (true, false) => other.nmax,
            (false, true) => self.nmax,
            (false, false) => self.nmax.min(other.nmax),
        };
        let n0 = self.n0.min(other.n0).min(nmax);
        let mut coeffs = Vec::with_capacity((nmax - n0) as usize);
        for n in n0..nmax {
            let a = self.coeff_at(n)?;
            let b = other.coeff_at(n)?;
            coeffs.push(a.add(&b)?);
        }
        let mut out = Series::new(self.ring.clone(), n0, coeffs, nmax)?;
        out.exact_above = self.exact_above && other.exact_above;
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        Series {
            ring: self.ring.clone(),
            n0: self.n0,
            nmax: self.nmax,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
            exact_above: self.exact_above,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &RingElem) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|x| x.mul(c)).collect::<Result<Vec<_>>>()?;
        Ok(Series {
            ring: self.ring.clone(),
            n0: self.n0,
            nmax: self.nmax,
            coeffs,
            exact_above: self.exact_above,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if !self.ring.compatible(&other.ring) {
            return Err(Error::FieldMismatch);
        }
        // cross terms against the unknown region above a factor's truncation
        // limit the result; a factor with exact top contributes no such terms
        let mut nmax = EXACT_NMAX;
        if !other.exact_above {
            nmax = nmax.min(self.n0.saturating_add(other.nmax));
        }
        if !self.exact_above {
            nmax = nmax.min(other.n0.saturating_add(self.nmax));
        }
        if self.exact_above && other.exact_above {
            nmax = nmax.min((self.nmax - 1).saturating_add(other.nmax).min(EXACT_NMAX));
        }
        let exact = self.exact_above && other.exact_above;
        let n0 = (self.n0 + other.n0).min(nmax);
        let mut coeffs = vec![self.ring.zero(); (nmax - n0) as usize];
        for (i, a) in self.iter() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in other.iter() {
                let n = i + j;
                if n >= nmax {
                    break;
                }
                let idx = (n - n0) as usize;
                coeffs[idx] = coeffs[idx].add(&a.mul(b)?)?;
            }
        }
        let mut out = Series::new(self.ring.clone(), n0, coeffs, nmax)?;
        out.exact_above = exact;
        Ok(out)
    }

    /// Termwise derivative d/dt.
    pub fn derivative(&self) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (n, c) in self.iter() {
            coeffs.push(c.mul(&self.ring.from_i64(n))?);
        }
        let mut out = Series::new(self.ring.clone(), self.n0 - 1, coeffs, self.nmax - 1)?;
        out.exact_above = self.exact_above;
        Ok(out)
    }

    /// Index and inverse of the first coefficient that is a unit of the
    /// coefficient algebra; coefficients before it must be indistinguishable
    /// from zero (their bounds are folded into the result as precision loss).
    fn pivot(&self) -> Result<(i64, RingElem, Option<i64>)> {
        let mut unknown: Option<i64> = None;
        for (n, c) in self.iter() {
            if c.is_zero_at_prec() {
                if !c.is_exact_zero() {
                    let b = c.min_abs_prec().unwrap_or(i64::MAX);
                    unknown = Some(unknown.map_or(b, |u: i64| u.min(b)));
                }
                continue;
            }
            let inv = c.inv().map_err(|e| match e {
                Error::DivisionByZeroAtPrecision(_) => Error::NonUnitLeadingCoefficient,
                other => other,
            })?;
            return Ok((n, inv, unknown));
        }
        Err(Error::ZeroAtPrecision)
    }

    /// Multiplicative inverse; the leading coefficient must be invertible.
    pub fn invert(&self) -> Result<Self> {
        let (v, lead_inv, unknown) = self.pivot()?;
        // window length available for the inverse
        let len = (self.nmax - v).max(1);
        let mut inv_coeffs: Vec<RingElem> = Vec::with_capacity(len as usize);
        inv_coeffs.push(lead_inv.clone());
        for k in 1..len {
            // b_k = -lead_inv * sum_{j=1..k} a_{v+j} b_{k-j}
            let mut acc = self.ring.zero();
            for j in 1..=k {
                let a = self.coeff_at(v + j)?;
                if a.is_exact_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(&inv_coeffs[(k - j) as usize])?)?;
            }
            inv_coeffs.push(acc.neg().mul(&lead_inv)?);
        }
        let mut out = Series::new(self.ring.clone(), -v, inv_coeffs, -v + len)?;
        if let Some(bound) = unknown {
            out = out.add_unknown(bound);
        }
        Ok(out)
    }

    pub fn add_unknown(&self, bound: i64) -> Self {
        Series {
            ring: self.ring.clone(),
            n0: self.n0,
            nmax: self.nmax,
            coeffs: self.coeffs.iter().map(|c| c.add_unknown(bound)).collect(),
            exact_above: self.exact_above,
        }
    }

    /// t-adic valuation certified at precision: the exponent of the first
    /// coefficient that is visibly nonzero.
    pub fn t_valuation(&self) -> Result<i64> {
        for (n, c) in self.iter() {
            if !c.is_zero_at_prec() {
                return Ok(n);
            }
        }
        Err(Error::ZeroAtPrecision)
    }

    /// Substitute `w` (a series of positive t-valuation or a unit) into a
    /// polynomial with coefficients in (a subring of) this ring.
    pub fn eval_poly(poly: &RPoly, w: &Series) -> Result<Series> {
        let ring = w.ring.clone();
        let mut acc = Series::zero(ring.clone(), w.nmax.saturating_add(poly.len() as i64).min(EXACT_NMAX));
        for c in poly.iter().rev() {
            let c_up = ring.embed_deep(c)?;
            acc = acc.mul(w)?.add(&Series::monomial(&ring, 0, c_up, w.nmax)?)?;
        }
        Ok(acc)
    }

    /// Substitute the series `w` into the Laurent series `self` (w must have
    /// t-valuation 1); used by the uniformizer-independence check.
    pub fn compose(&self, w: &Series) -> Result<Series> {
        if w.t_valuation()? != 1 {
            return Err(Error::BadInput("substitution requires t-valuation 1".into()));
        }
        let w_inv = w.invert()?;
        let nmax = self.nmax.min(w.nmax);
        let mut acc = Series::zero(self.ring.clone(), nmax);
        // positive part by Horner from the top, negative part via w^-1 powers
        let mut pos = Series::zero(self.ring.clone(), nmax);
        for n in (0.max(self.n0)..self.nmax).rev() {
            let c = self.coeff_at(n)?;
            pos = pos.mul(w)?.add(&Series::monomial(&self.ring, 0, c, nmax)?)?;
        }
        acc = acc.add(&pos)?;
        if self.n0 < 0 {
            let mut wpow = w_inv.clone();
            for n in 1..=(-self.n0) {
                let c = self.coeff_at(-n)?;
                if !c.is_exact_zero() {
                    acc = acc.add(&wpow.scale(&c)?)?;
                }
                if n < -self.n0 {
                    wpow = wpow.mul(&w_inv)?;
                }
            }
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Weierstrass structure
// ---------------------------------------------------------------------------

/// Monic `t^l + a_1 t^{l-1} + ... + a_l` with every `a_i` in the maximal
/// ideal of `O_K`. `coeffs` are the lower coefficients `a_l..a_1` ascending
/// by exponent; an exact rational preimage is kept when one is known.
#[derive(Debug, Clone)]
pub struct DistinguishedPolynomial {
    ring: Ring,
    coeffs: Vec<RingElem>,
    exact: Option<QPoly>,
}

impl DistinguishedPolynomial {
    pub fn new(ring: Ring, coeffs: Vec<RingElem>, exact: Option<QPoly>) -> Result<Self> {
        for c in &coeffs {
            if c.valuation()?.lower_bound() < 1 {
                return Err(Error::BadInput(
                    "distinguished coefficients must lie in the maximal ideal".into(),
                ));
            }
        }
        Ok(DistinguishedPolynomial { ring, coeffs, exact })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn lower_coeffs(&self) -> &[RingElem] {
        &self.coeffs
    }

    pub fn exact(&self) -> Option<&QPoly> {
        self.exact.as_ref()
    }

    /// Full monic coefficient vector `a_l, ..., a_1, 1`.
    pub fn to_rpoly(&self) -> RPoly {
        let mut out = self.coeffs.clone();
        out.push(self.ring.one());
        out
    }

    pub fn to_series(&self, nmax: i64) -> Result<Series> {
        Series::from_poly(self.ring.clone(), &self.to_rpoly(), nmax)
    }

    /// t^l exactly (`l = 0` is the unit polynomial 1).
    pub fn is_trivial(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct PreparationResult {
    /// Exponent of `pi_K` pulled out front (may be negative for rational
    /// coefficient input with `p` in denominators).
    pub pi_power: i64,
    pub unit: Series,
    pub dist: DistinguishedPolynomial,
}

/// Split a series `h` at exponent `l`: `h = low + t^l * high`.
fn split_at(h: &Series, l: i64) -> Result<(Series, Series)> {
    let mut low_coeffs = Vec::new();
    let low_n0 = h.lower().min(l);
    for n in low_n0..l {
        low_coeffs.push(h.coeff_at(n)?);
    }
    // the low part has no support at or above t^l
    let low = Series::new(h.ring().clone(), low_n0, low_coeffs, l)?.into_exact_above();
    let mut high_coeffs = Vec::new();
    for n in l..h.truncation() {
        high_coeffs.push(h.coeff_at(n)?);
    }
    let high = Series::new(h.ring().clone(), 0, high_coeffs, h.truncation() - l)?;
    Ok((low, high))
}

/// Generalized Weierstrass division: `f = q*g + r` with `deg r < l`, where
/// `g` has Weierstrass degree `l` (unit coefficient at `t^l`, lower
/// coefficients in the maximal ideal). Converges pi-adically: each pass
/// multiplies the residual by the sub-`t^l` part of `g`.
fn wdivide_general(f: &Series, g: &Series, l: i64) -> Result<(Series, RPoly)> {
    let ring = f.ring().clone();
    let prec = ring.prec() as i64;
    let (g_low, g_high) = split_at(g, l)?;
    let g_high_inv = g_high.invert()?;
    let mut q = Series::zero(ring.clone(), f.truncation().saturating_sub(l).min(EXACT_NMAX));
    let mut r: RPoly = vec![ring.zero(); l.max(1) as usize];
    let mut h = f.clone();
    for _ in 0..=(prec + 2) {
        if h.is_zero_at_prec() {
            break;
        }
        let (h_low, h_high) = split_at(&h, l)?;
        for (n, c) in h_low.iter() {
            if n >= 0 && (n as usize) < r.len() {
                r[n as usize] = r[n as usize].add(c)?;
            }
        }
        let step = h_high.mul(&g_high_inv)?;
        q = q.add(&step)?;
        h = g_low.mul(&step)?.neg();
    }
    Ok((q, rpoly::trim(r)))
}

/// Weierstrass division of a power series by a distinguished polynomial:
/// `g = q*P + r`, `deg r < deg P`, unique at the working bimodulus.
pub fn weierstrass_divide(
    g: &Series,
    p_poly: &DistinguishedPolynomial,
) -> Result<(Series, RPoly)> {
    if g.truncation() <= p_poly.degree() as i64 {
        return Err(Error::TruncationExhausted {
            needed: p_poly.degree() as i64 + 1,
            have: g.truncation(),
        });
    }
    let divisor = p_poly.to_series(g.truncation().saturating_add(1).min(EXACT_NMAX))?;
    wdivide_general(g, &divisor, p_poly.degree() as i64)
}

/// Weierstrass preparation: `g = pi^m * unit * P` with `P` distinguished.
pub fn weierstrass_prepare(g: &Series) -> Result<PreparationResult> {
    let ring = g.ring().clone();
    // pi-content
    let mut m: Option<i64> = None;
    for (_, c) in g.iter() {
        if c.is_zero_at_prec() {
            continue;
        }
        if let Some(v) = c.valuation()?.finite() {
            m = Some(m.map_or(v, |cur: i64| cur.min(v)));
        }
    }
    let m = m.ok_or(Error::ZeroAtPrecision)?;
    let pi = ring.uniformizer()?;
    let g1 = g.scale(&pi.pow(-m)?)?;
    // Weierstrass degree: order of vanishing of the residue reduction
    let mut l: Option<i64> = None;
    for (n, c) in g1.iter() {
        if c.is_zero_at_prec() {
            continue;
        }
        match c.valuation()? {
            v if v.lower_bound() >= 1 => continue,
            _ => {
                l = Some(n);
                break;
            }
        }
    }
    let l = l.ok_or(Error::TruncationExhausted { needed: g1.truncation(), have: g1.truncation() })?;
    if l == 0 {
        let dist = DistinguishedPolynomial::new(ring.clone(), vec![], None)?;
        return Ok(PreparationResult { pi_power: m, unit: g1, dist });
    }
    let t_l = Series::monomial(&ring, l, ring.one(), g1.truncation())?;
    let (q, r) = wdivide_general(&t_l, &g1, l)?;
    // P = t^l - r = q * g1, so unit = q^{-1}
    let mut coeffs = Vec::with_capacity(l as usize);
    for i in 0..l {
        let c = r.get(i as usize).cloned().unwrap_or_else(|| ring.zero());
        coeffs.push(c.neg());
    }
    let dist = DistinguishedPolynomial::new(ring.clone(), coeffs, None)?;
    let unit = q.invert()?;
    Ok(PreparationResult { pi_power: m, unit, dist })
}

// ---------------------------------------------------------------------------
// Squarefree splitting of denominators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SplitResult {
    /// `b = pi^pi_power * unit * prod_i P_i^{mult_i}`.
    pub pi_power: i64,
    pub unit: Series,
    pub factors: Vec<(DistinguishedPolynomial, u32)>,
}

/// Squarefree splitting of an exact polynomial over `K[t]`: characteristic
/// zero gcd (Yun) first, then Weierstrass normalization of each squarefree
/// part to distinguished form. Factors that are units of `O_K[[t]]`
/// contribute no prime.
pub fn squarefree_split(b: &QPoly, ring: &Ring, nmax: i64) -> Result<SplitResult> {
    if qpoly::is_zero(b) {
        return Err(Error::BadInput("zero denominator".into()));
    }
    let (lc, parts) = qpoly::squarefree_decompose(b)?;
    let (e, _) = ring.ramification();
    let v_lc = qpoly::vp_rational(ring.p(), &lc).expect("nonzero") * e as i64;
    let pi = ring.uniformizer()?;
    let lc_unit = ring
        .from_ratio(lc.numer(), lc.denom())?
        .mul(&pi.pow(-v_lc)?)?;
    let mut pi_power = v_lc;
    let mut unit = Series::monomial(ring, 0, lc_unit, nmax)?;
    let mut factors = Vec::new();
    for (s_poly, mult) in parts {
        let series = Series::from_qpoly(ring, &s_poly, nmax.max(s_poly.len() as i64 + 1))?;
        let prep = weierstrass_prepare(&series)?;
        pi_power += prep.pi_power * mult as i64;
        let u = prep.unit.truncate_to(nmax);
        for _ in 0..mult {
            unit = unit.mul(&u)?;
        }
        if prep.dist.is_trivial() {
            continue;
        }
        // squarefree at precision: gcd(P, P') must be a unit
        rpoly::certify_squarefree(&prep.dist.to_rpoly())?;
        let exact = if prep.dist.degree() == qpoly::degree(&s_poly) && prep.pi_power == 0 {
            Some(s_poly.clone())
        } else {
            None
        };
        let dist = DistinguishedPolynomial::new(
            ring.clone(),
            prep.dist.lower_coeffs().to_vec(),
            exact,
        )?;
        factors.push((dist, mult));
    }
    Ok(SplitResult { pi_power, unit, factors })
}
