//! Two-dimensional local fields and their relative residue maps.
//!
//! Equal-characteristic completions `k_P((t_P))` are plain truncated Laurent
//! series over the first-level field (or étale algebra) `k_P`; the residue of
//! `f dt_P` is the trace of the `t_P^{-1}` coefficient. The mixed-
//! characteristic completion `K{{t}}` at the special prime is a Laurent body
//! in `1/t`: finitely many exponents are carried exactly and the infinite
//! tail toward `t^{-infinity}` is tracked by a valuation profile. Its
//! standard residue of `f dt` is minus the `t^{-1}` coefficient.

use crate::error::{Error, Result};
use crate::field::{Ring, RingElem};
use crate::series::Series;

/// Residue of `f dt_P` on an equal-characteristic completion, relative to
/// the coefficient field `target`: `Tr_{k_P/target}(a_{-1})`. For an étale
/// algebra this is the algebra trace, i.e. the sum over the factors.
pub fn res_equal(f: &Series, target: &Ring) -> Result<RingElem> {
    let a = f.coeff_at(-1)?;
    a.trace_to(target)
}

/// Affine lower bound on coefficient valuations below a window: for
/// exponents `n < start`, `v(a_n) >= base + ceil((start - n) / den)`.
/// A geometric expansion of `1/P` with `deg P = den` produces exactly this
/// shape.
#[derive(Debug, Clone, Copy)]
pub struct TailProfile {
    pub start: i64,
    pub den: i64,
    pub base: i64,
}

impl TailProfile {
    pub fn bound_at(&self, n: i64) -> i64 {
        debug_assert!(n < self.start);
        let gap = self.start - n;
        self.base + (gap + self.den - 1).div_euclid(self.den)
    }
}

/// Move a profile's start down to `lo` (when it sits above the window a
/// product produced). Lowering the start by `d` lowers the bound at every
/// exponent by at most `ceil(d / den)`, so subtracting that keeps the
/// profile a valid lower bound.
fn clamp_profile(p: TailProfile, lo: i64) -> TailProfile {
    if p.start <= lo {
        return p;
    }
    let d = p.start - lo;
    TailProfile { start: lo, den: p.den, base: p.base - (d + p.den - 1).div_euclid(p.den) }
}

/// Element of the mixed-characteristic field `K{{t}}` at working precision:
/// a finite window of computed coefficients (exactly zero above it) plus
/// valuation profiles bounding the uncomputed tail below it. No profile
/// means the element is a genuine Laurent polynomial.
#[derive(Debug, Clone)]
pub struct MixedElem {
    window: Series,
    tails: Vec<TailProfile>,
}

impl MixedElem {
    pub fn new(window: Series, tails: Vec<TailProfile>) -> Result<Self> {
        for t in &tails {
            if t.start > window.lower() {
                return Err(Error::BadInput("tail profile overlaps the window".into()));
            }
            if t.den < 1 {
                return Err(Error::BadInput("tail profile slope must be positive".into()));
            }
        }
        Ok(MixedElem { window, tails })
    }

    pub fn from_series(window: Series) -> Self {
        MixedElem { window, tails: vec![] }
    }

    pub fn zero(ring: Ring) -> Self {
        MixedElem { window: Series::zero(ring, 0), tails: vec![] }
    }

    pub fn ring(&self) -> &Ring {
        self.window.ring()
    }

    pub fn window(&self) -> &Series {
        &self.window
    }

    pub fn tails(&self) -> &[TailProfile] {
        &self.tails
    }

    fn tail_start(&self) -> i64 {
        self.tails.iter().map(|t| t.start).min().unwrap_or(self.window.lower())
    }

    /// Valuation lower bound for the coefficient below the window (`None`
    /// if the element has no tail there).
    fn tail_bound(&self, n: i64) -> Option<i64> {
        let mut best: Option<i64> = None;
        for t in &self.tails {
            if n < t.start {
                let b = t.bound_at(n);
                best = Some(best.map_or(b, |x| x.min(b)));
            }
        }
        best
    }

    /// Coefficient of `t^n`. Above the window it is exactly zero; inside it
    /// is the computed value; below it, a zero-at-precision element carrying
    /// the tail bound (or an error when no tail profile covers `n`).
    pub fn coeff_at(&self, n: i64) -> Result<RingElem> {
        if n >= self.window.lower() {
            return self.window.coeff_at(n);
        }
        match self.tail_bound(n) {
            Some(b) => Ok(self
                .ring()
                .zero()
                .add_unknown(b.div_euclid(self.ring().e_abs() as i64))),
            None if self.tails.is_empty() => Ok(self.ring().zero()),
            None => Err(Error::TruncationExhausted { needed: n, have: self.window.lower() }),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let merged = self.window.add(&other.window)?;
        let lo = merged.lower();
        let hi = merged.truncation();
        // where one side's window has not started yet, its tail uncertainty
        // still contributes to the merged coefficient
        let e = self.ring().e_abs() as i64;
        let mut coeffs = Vec::with_capacity((hi - lo).max(0) as usize);
        for n in lo..hi {
            let mut c = merged.coeff_at(n)?;
            for side in [self, other] {
                if n < side.window.lower() {
                    if let Some(b) = side.tail_bound(n) {
                        c = c.add_unknown(b.div_euclid(e));
                    }
                }
            }
            coeffs.push(c);
        }
        let mut window = Series::new(self.ring().clone(), lo, coeffs, hi)?;
        if merged.is_exact_above() {
            window = window.into_exact_above();
        }
        let tails = self
            .tails
            .iter()
            .chain(other.tails.iter())
            .map(|t| clamp_profile(*t, lo))
            .collect();
        MixedElem::new(window, tails)
    }

    pub fn neg(&self) -> Self {
        MixedElem { window: self.window.neg(), tails: self.tails.clone() }
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        MixedElem {
            window: self.window.shift(k),
            tails: self
                .tails
                .iter()
                .map(|t| TailProfile { start: t.start + k, ..*t })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &RingElem) -> Result<Self> {
        let shift = c.valuation_floor();
        let tails = self
            .tails
            .iter()
            .map(|t| TailProfile { base: t.base + shift, ..*t })
            .collect();
        Ok(MixedElem { window: self.window.scale(c)?, tails })
    }

    /// d/dt. Multiplying a coefficient by its exponent never lowers its
    /// valuation, so tail bounds shift with the exponents unchanged.
    pub fn derivative(&self) -> Result<Self> {
        let tails = self
            .tails
            .iter()
            .map(|t| TailProfile { start: t.start - 1, ..*t })
            .collect();
        Ok(MixedElem { window: self.window.derivative()?, tails })
    }

    /// Product. Window-by-window terms are computed; every cross term that
    /// touches a tail is folded into the result coefficients as a bounded
    /// unknown, so precision loss is explicit rather than silent.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let window = self.window.mul(&other.window)?;
        let lo = window.lower();
        let hi = window.truncation();
        let mut coeffs = Vec::with_capacity((hi - lo) as usize);
        // tail bounds live in pi_K units; unknown folding wants prime-field
        // valuations
        let e = self.ring().e_abs() as i64;
        for n in lo..hi {
            let mut c = window.coeff_at(n)?;
            if let Some(b) = self.cross_bound(other, n) {
                c = c.add_unknown(b.div_euclid(e));
            }
            coeffs.push(c);
        }
        let mut window = Series::new(self.ring().clone(), lo, coeffs, hi)?;
        if self.window.is_exact_above() && other.window.is_exact_above() {
            window = window.into_exact_above();
        }
        let mut tails = Vec::new();
        // tail of one factor against the window of the other
        for (t, w) in [(&self.tails, &other.window), (&other.tails, &self.window)] {
            if w.is_zero_at_prec() {
                continue;
            }
            let vb = w
                .iter()
                .filter(|(_, c)| !c.is_exact_zero())
                .map(|(_, c)| c.valuation_floor())
                .min()
                .unwrap_or(0);
            // every decomposition n = i + j with j in the tail has
            // i >= w.lower(), so the combined bound keeps the tail's slope
            // with its start shifted by the window's lowest exponent
            for p in t.iter() {
                tails.push(clamp_profile(
                    TailProfile {
                        start: p.start + w.lower(),
                        den: p.den,
                        base: p.base + vb,
                    },
                    window.lower(),
                ));
            }
        }
        // tail against tail: combined slope bounded by the shallower one
        for a in &self.tails {
            for b in &other.tails {
                tails.push(clamp_profile(
                    TailProfile {
                        start: a.start + b.start,
                        den: a.den.max(b.den),
                        base: a.base + b.base - 1,
                    },
                    window.lower(),
                ));
            }
        }
        MixedElem::new(window, tails)
    }

    /// Minimal valuation bound over all decompositions `n = i + j` in which
    /// at least one factor index falls in a tail.
    fn cross_bound(&self, other: &Self, n: i64) -> Option<i64> {
        let mut best: Option<i64> = None;
        let mut push = |b: i64| {
            best = Some(best.map_or(b, |x: i64| x.min(b)));
        };
        // self window x other tail
        for (i, a) in self.window.iter() {
            if a.is_exact_zero() {
                continue;
            }
            let j = n - i;
            if j < other.tail_start() {
                if let Some(tb) = other.tail_bound(j) {
                    push(a.valuation_floor() + tb);
                }
            }
        }
        // self tail x other window
        for (j, b) in other.window.iter() {
            if b.is_exact_zero() {
                continue;
            }
            let i = n - j;
            if i < self.tail_start() {
                if let Some(tb) = self.tail_bound(i) {
                    push(b.valuation_floor() + tb);
                }
            }
        }
        // tail x tail
        if !self.tails.is_empty() && !other.tails.is_empty() {
            let i_hi = self.tail_start();
            let i_lo = n - other.tail_start() + 1;
            // bounds grow linearly away from the window, so scan the range
            // (it is at most a few window widths wide before both bounds
            // exceed anything representable)
            let span = 4 * (self.window.truncation() - self.window.lower()
                + other.window.truncation()
                - other.window.lower())
                .max(8);
            for i in (i_hi - span..i_hi).rev() {
                let j = n - i;
                if i >= i_lo - span {
                    if let (Some(a), Some(b)) = (self.tail_bound(i), other.tail_bound(j)) {
                        push(a + b);
                    }
                }
            }
        }
        best
    }
}

/// Standard residue of `f dt` on the mixed-characteristic field: minus the
/// coefficient of `t^{-1}`. The sign makes the two-dimensional reciprocity
/// sum vanish against the equal-characteristic residues.
pub fn res_mixed(f: &MixedElem) -> Result<RingElem> {
    Ok(f.coeff_at(-1)?.neg())
}

/// Residue of `g d(t_P)` recomputed through the change of uniformizer
/// `t_P = w(s)`: returns `res(g(w(s)) w'(s) ds)`. Used to certify that the
/// residue does not depend on the chosen uniformizer.
pub fn res_equal_after_substitution(g: &Series, w: &Series, target: &Ring) -> Result<RingElem> {
    let composed = g.compose(w)?;
    let integrand = composed.mul(&w.derivative()?)?;
    res_equal(&integrand, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_make;
    use num_bigint::BigInt;

    fn q5() -> Ring {
        Ring::base(5, 20).unwrap()
    }

    fn laurent(r: &Ring, n0: i64, cs: &[i64], nmax: i64) -> Series {
        let mut coeffs: Vec<RingElem> = cs.iter().map(|&c| r.from_i64(c)).collect();
        while (coeffs.len() as i64) < nmax - n0 {
            coeffs.push(r.zero());
        }
        Series::new(r.clone(), n0, coeffs, nmax).unwrap()
    }

    #[test]
    fn equal_char_residue_reads_minus_one_coefficient() {
        let r = q5();
        // (3 t^-2 + 7 t^-1 + 1) dt has residue 7
        let f = laurent(&r, -2, &[3, 7, 1], 4);
        let res = res_equal(&f, &r).unwrap();
        assert!(res.sub(&r.from_i64(7)).unwrap().is_zero_at_prec());
    }

    #[test]
    fn equal_char_residue_traces_down() {
        // over K = Q5(sqrt(2)): res of (x t^-1) dt is Tr(x) = 0,
        // res of ((1+x) t^-1) dt is 2
        let k = field_make(5, &[BigInt::from(-2), BigInt::from(0), BigInt::from(1)], 20, false)
            .unwrap()
            .ring;
        let base = q5();
        let x = k.gen().unwrap();
        let f = Series::monomial(&k, -1, x.clone(), 4).unwrap();
        assert!(res_equal(&f, &base).unwrap().is_zero_at_prec());
        let f = Series::monomial(&k, -1, k.one().add(&x).unwrap(), 4).unwrap();
        assert!(res_equal(&f, &base)
            .unwrap()
            .sub(&base.from_i64(2))
            .unwrap()
            .is_zero_at_prec());
    }

    #[test]
    fn mixed_residue_sign_convention() {
        let r = q5();
        // expansion of 1/(t-5) at the special prime: sum 5^n t^{-1-n}
        let mut cs = Vec::new();
        let n0 = -20i64;
        for n in n0..0 {
            // coefficient of t^n is 5^(-1-n)
            let e = (-1 - n) as u32;
            cs.push(r.from_i64(5).pow(e as i64).unwrap());
        }
        let f = MixedElem::from_series(Series::new(r.clone(), n0, cs, 0).unwrap());
        let res = res_mixed(&f).unwrap();
        assert!(res.add(&r.one()).unwrap().is_zero_at_prec());
    }

    #[test]
    fn reciprocity_for_dt_over_t_minus_5() {
        // the worked pair: res at (t-5) is +1, at the special prime -1
        let r = q5();
        let f_eq = Series::monomial(&r, -1, r.one(), 8).unwrap();
        let a = res_equal(&f_eq, &r).unwrap();
        let mut cs = Vec::new();
        for n in -20i64..0 {
            cs.push(r.from_i64(5).pow(-1 - n).unwrap());
        }
        let f_mx = MixedElem::from_series(Series::new(r.clone(), -20, cs, 0).unwrap());
        let b = res_mixed(&f_mx).unwrap();
        assert!(a.add(&b).unwrap().is_zero_at_prec());
    }

    #[test]
    fn tail_profile_bounds_fold_into_products() {
        let r = q5();
        let tail = TailProfile { start: -3, den: 1, base: 3 };
        assert_eq!(tail.bound_at(-4), 4);
        assert_eq!(tail.bound_at(-6), 6);
        let a = MixedElem::new(laurent(&r, -3, &[1, 0, 2, 1], 2), vec![tail]).unwrap();
        let b = MixedElem::from_series(laurent(&r, 0, &[1, 1], 4));
        let p = a.mul(&b).unwrap();
        // coefficient at -3 sees b's t^0 against a's known -3 coefficient and
        // b's t^1 against a's tail at -4 (bound 4): value 1 + O(5^4)
        let c = p.coeff_at(-3).unwrap();
        assert!(!c.is_zero_at_prec());
        let prec = c.min_abs_prec().unwrap();
        assert!(prec >= 4 && prec < 20, "unknown tail must cap precision, got {prec}");
    }

    #[test]
    fn residue_independent_of_uniformizer() {
        let r = q5();
        // g = t^-1 + 3 t^-2; w = s + s^2 (another uniformizer)
        let g = laurent(&r, -2, &[3, 1], 6);
        let w = laurent(&r, 1, &[1, 1], 8);
        let direct = res_equal(&g, &r).unwrap();
        let subst = res_equal_after_substitution(&g, &w, &r).unwrap();
        assert!(direct.sub(&subst).unwrap().is_zero_at_prec());
    }
}
