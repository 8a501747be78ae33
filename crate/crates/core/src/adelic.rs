//! Finite-support adeles over `B = O_K[[t]]`, the residue pairing
//! `(f, omega) -> sum_p Res_p(f_p omega_p)`, the reciprocity verifier, and
//! the finite-depth duality machinery: the depth-`i` residue formula, the
//! coefficient reconstruction of a cluster component from the special
//! component, the special-prime tail identity, and the annihilator witness
//! search over monomial multipliers `t^n P^{-i}`.

use std::rc::Rc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::completion::{
    inverse_dist_power, local_expansion, mixed_expand, residue_at_special, Cluster, RationalForm,
    Support,
};
use crate::error::{Error, Result};
use crate::field::{trace_gram, solve_gram, Ring, RingElem};
use crate::fields2d::{res_equal, res_mixed, MixedElem};
use crate::qpoly::{self, QPoly};
use crate::series::Series;

/// An adelic differential form with finite support: one `g_p dt_P`
/// coefficient per listed cluster of the carrier support, and a `g dt`
/// coefficient at the special prime. Unlisted components are integral and
/// pair to zero against integral adeles.
#[derive(Debug, Clone)]
pub struct AdelicForm {
    sup: Rc<Support>,
    cluster: Vec<Option<Series>>,
    special: Option<MixedElem>,
}

/// An adele with finite support on the same carrier.
#[derive(Debug, Clone)]
pub struct AdeleElement {
    sup: Rc<Support>,
    cluster: Vec<Option<Series>>,
    special: Option<MixedElem>,
}

impl AdelicForm {
    pub fn empty(sup: Rc<Support>) -> Self {
        let n = sup.clusters().len();
        AdelicForm { sup, cluster: vec![None; n], special: None }
    }

    /// Diagonal image of a rational form: every listed component is the
    /// completion of `omega` at that prime.
    pub fn diagonal(form: &RationalForm, sup: Rc<Support>) -> Result<Self> {
        let k = sup.ring().clone();
        let mut cluster = Vec::new();
        for cl in sup.clusters() {
            cluster.push(Some(local_expansion(form, cl, &k)?));
        }
        let special = Some(mixed_expand(form, &sup)?);
        Ok(AdelicForm { sup, cluster, special })
    }

    pub fn support(&self) -> &Rc<Support> {
        &self.sup
    }

    pub fn cluster_part(&self, idx: usize) -> Option<&Series> {
        self.cluster[idx].as_ref()
    }

    pub fn special_part(&self) -> Option<&MixedElem> {
        self.special.as_ref()
    }

    pub fn set_cluster(&mut self, idx: usize, g: Series) {
        self.cluster[idx] = Some(g);
    }

    pub fn set_special(&mut self, g: MixedElem) {
        self.special = Some(g);
    }

    /// Add `delta * t_P^j` to the listed cluster component.
    pub fn perturb_cluster(&mut self, idx: usize, j: i64, delta: RingElem) -> Result<()> {
        let kp = self.sup.clusters()[idx].kp().clone();
        let bump = Series::monomial(&kp, j, delta, j + 1)?;
        let cur = match &self.cluster[idx] {
            Some(g) => g.add(&bump)?,
            None => bump,
        };
        self.cluster[idx] = Some(cur);
        Ok(())
    }
}

impl AdeleElement {
    pub fn empty(sup: Rc<Support>) -> Self {
        let n = sup.clusters().len();
        AdeleElement { sup, cluster: vec![None; n], special: None }
    }

    /// The constant adele 1 listed at every support component.
    pub fn one(sup: Rc<Support>) -> Result<Self> {
        let k = sup.ring().clone();
        let mut cluster = Vec::new();
        for cl in sup.clusters() {
            let kp = cl.kp().clone();
            cluster.push(Some(Series::monomial(&kp, 0, kp.one(), sup.nmax_s())?));
        }
        let w = Series::monomial(&k, 0, k.one(), 8)?;
        Ok(AdeleElement { sup, cluster, special: Some(MixedElem::from_series(w)) })
    }

    pub fn set_cluster(&mut self, idx: usize, g: Series) {
        self.cluster[idx] = Some(g);
    }

    pub fn set_special(&mut self, g: MixedElem) {
        self.special = Some(g);
    }

    /// Diagonal image of the rational monomial `t^n P^{-i}` where `P` is the
    /// `pi_idx`-th distinguished factor of the support. At `P`'s own cluster
    /// this is `tau^n t_P^{-i}` exactly; at the others `P(tau)` is a unit
    /// series; at the special prime it is the truncated geometric expansion.
    pub fn monomial(sup: Rc<Support>, pi_idx: usize, n: u32, i: u32) -> Result<Self> {
        let k = sup.ring().clone();
        let dist = sup.clusters()[pi_idx].dist().clone();
        let p_r = dist.to_rpoly();
        let mut cluster = Vec::new();
        for (q, cl) in sup.clusters().iter().enumerate() {
            let mut g = Series::monomial(cl.kp(), 0, cl.kp().one(), sup.nmax_s())?;
            for _ in 0..n {
                g = g.mul(cl.tau())?;
            }
            if i > 0 {
                if q == pi_idx {
                    g = g.shift(-(i as i64));
                } else {
                    let p_tau_inv = Series::eval_poly(&p_r, cl.tau())?.invert()?;
                    for _ in 0..i {
                        g = g.mul(&p_tau_inv)?;
                    }
                }
            }
            cluster.push(Some(g));
        }
        let kmax = (k.prec() as i64) * (k.e_abs() as i64);
        let special = if i > 0 {
            let q = inverse_dist_power(&dist, i, kmax)?;
            q.shift(n as i64)
        } else {
            MixedElem::from_series(Series::monomial(&k, n as i64, k.one(), n as i64 + 8)?)
        };
        Ok(AdeleElement { sup, cluster, special: Some(special) })
    }
}

/// The residue pairing over the union of listed supports. A prime listed on
/// only one side contributes nothing: the unlisted side is integral, and the
/// pairing is used with at least one integral side at such primes.
pub fn pairing(f: &AdeleElement, w: &AdelicForm) -> Result<RingElem> {
    if !Rc::ptr_eq(&f.sup, &w.sup) {
        return Err(Error::CarrierMismatch);
    }
    let k = w.sup.ring().clone();
    let mut total = k.zero();
    for idx in 0..w.cluster.len() {
        if let (Some(a), Some(b)) = (&f.cluster[idx], &w.cluster[idx]) {
            total = total.add(&res_equal(&a.mul(b)?, &k)?)?;
        }
    }
    if let (Some(a), Some(b)) = (&f.special, &w.special) {
        total = total.add(&res_mixed(&a.mul(b)?)?)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    ZeroAtPrecision,
    Violation { valuation: i64 },
}

#[derive(Debug, Clone)]
pub struct ReciprocityReport {
    /// `(label, residue)` per listed prime, special prime last.
    pub residues: Vec<(String, RingElem)>,
    pub total: RingElem,
    pub precision: i64,
    pub loss: i64,
    pub verdict: Verdict,
}

impl ReciprocityReport {
    pub fn ok(&self) -> bool {
        self.verdict == Verdict::ZeroAtPrecision
    }
}

/// Verify the reciprocity law for a rational form: the sum of its relative
/// residues over all height-one primes vanishes at working precision.
pub fn reciprocity_check(form: &RationalForm, sup: &Support) -> Result<ReciprocityReport> {
    let k = sup.ring().clone();
    let mut residues = Vec::new();
    let mut total = k.zero();
    for (idx, cl) in sup.clusters().iter().enumerate() {
        let r = crate::completion::residue_at_cluster(form, sup, idx)?;
        total = total.add(&r)?;
        residues.push((cl.label(), r));
    }
    let r0 = residue_at_special(form, sup)?;
    total = total.add(&r0)?;
    residues.push(("(pi)".into(), r0));
    let precision = k.prec() as i64;
    let abs = total.min_abs_prec().unwrap_or(precision);
    let loss = (precision - abs).max(0);
    let verdict = if total.is_zero_at_prec() {
        Verdict::ZeroAtPrecision
    } else {
        let v = total.valuation_floor();
        Verdict::Violation { valuation: v }
    };
    Ok(ReciprocityReport { residues, total, precision, loss, verdict })
}

/// `Res_p(P^{-i-1} t^n omega_p)` for an integral cluster component
/// `omega_p = sum_j a_j t_P^j dt_P`, evaluated two ways: directly on the
/// series, and by the closed triangular formula
/// `sum_{j<=i} Tr(gamma_{n, i-j} a_j)` with `gamma_{n,m}` the `t_P^m`
/// coefficient of `tau^n` (so `gamma_{n,0} = c0^n`).
pub fn residue_formula_at_depth(
    w_p: &Series,
    cl: &Cluster,
    k: &Ring,
    n: u32,
    i: i64,
) -> Result<(RingElem, RingElem)> {
    if w_p.lower() < 0 {
        return Err(Error::BadInput("cluster component must be integral".into()));
    }
    // direct: multiply by tau^n t_P^{-i-1} and read the residue
    let mut g = w_p.clone();
    for _ in 0..n {
        g = g.mul(cl.tau())?;
    }
    let direct = res_equal(&g.shift(-i - 1), k)?;
    // closed triangular form
    let mut closed = k.zero();
    for j in 0..=i {
        let a_j = w_p.coeff_at(j)?;
        if a_j.is_exact_zero() {
            continue;
        }
        let gamma = cl.tau_power_coeff(n, i - j)?;
        closed = closed.add(&gamma.mul(&a_j)?.trace_to(k)?)?;
    }
    Ok((direct, closed))
}

/// Reconstruct the Taylor coefficients `a_0..a_k` of the cluster component
/// at `P` from the special component alone, by the inductive argument of
/// the duality proof: for each depth `i` and each `n < deg P`,
/// `Tr(c0^n a_i) = -Res_{p0}(P^{-i-1} t^n omega_{p0}) - sum_{j<i}
/// Tr(gamma_{n,i-j} a_j)`, then invert the trace pairing on the basis
/// `{1, c0, ..., c0^{deg P - 1}}` through its Gram matrix.
pub fn reconstruct_at_prime(
    w_p0: &MixedElem,
    cl: &Cluster,
    k: &Ring,
    depth: u32,
) -> Result<Vec<RingElem>> {
    let kp = cl.kp().clone();
    let d = kp.degree();
    let c0 = cl.c0()?;
    let mut basis = Vec::with_capacity(d);
    let mut pow = kp.one();
    for _ in 0..d {
        basis.push(pow.clone());
        pow = pow.mul(&c0)?;
    }
    let gram = trace_gram(&basis)?;
    let kmax = (k.prec() as i64) * (k.e_abs() as i64);
    let mut out: Vec<RingElem> = Vec::with_capacity(depth as usize + 1);
    for i in 0..=depth {
        let mut rhs = Vec::with_capacity(d);
        let q = inverse_dist_power(cl.dist(), i + 1, kmax)?;
        for n in 0..d as u32 {
            let shifted = w_p0.shift(n as i64);
            let r_p0 = res_mixed(&shifted.mul(&q)?)?;
            let mut val = r_p0.neg();
            for (j, a_j) in out.iter().enumerate() {
                let gamma = cl.tau_power_coeff(n, i as i64 - j as i64)?;
                val = val.sub(&gamma.mul(a_j)?.trace_to(k)?)?;
            }
            rhs.push(val);
        }
        let coords = solve_gram(k, &gram, &rhs)?;
        let mut a_i = kp.zero();
        for (x, b) in coords.iter().zip(&basis) {
            a_i = a_i.add(&b.mul(&kp.embed_deep(x)?)?)?;
        }
        out.push(a_i);
    }
    Ok(out)
}

/// Tail identity at the special prime: for `i >= 1`, the coefficient
/// `a_{-i, p0}` equals `Res_{(t)}(t^{i-1} omega_{(t)})`, read off the
/// `(t)`-cluster component.
pub fn p0_tail_from_t(w_t: &Series, cl: &Cluster, k: &Ring, depth: u32) -> Result<Vec<RingElem>> {
    let mut out = Vec::with_capacity(depth as usize);
    for i in 1..=depth as i64 {
        let mut g = w_t.clone();
        for _ in 0..(i - 1) {
            g = g.mul(cl.tau())?;
        }
        out.push(res_equal(&g, k)?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Witness {
    /// Index of the distinguished factor whose inverse powers appear.
    pub cluster: usize,
    pub n: u32,
    pub i: u32,
    /// Uniformizer exponent of the witness monomial; the search keeps `m=0`
    /// since scaling by `pi^m` is K-linear and creates no new annihilation.
    pub m: i64,
    pub pairing: RingElem,
}

#[derive(Debug, Clone)]
pub enum WitnessOutcome {
    Found(Witness),
    NoneFound { n_bar: u32, i_bar: u32 },
}

/// Search the deterministic monomial grid `t^n P^{-i}` (increasing total
/// degree `n+i`, then lexicographic in `(n, i)`, factors in support order)
/// for a multiplier with nonzero pairing against `omega`.
pub fn annihilator_witness(w: &AdelicForm, n_bar: u32, i_bar: u32) -> Result<WitnessOutcome> {
    let sup = w.support().clone();
    let n_clusters = sup.clusters().len();
    for total in 0..=(n_bar + i_bar) {
        for n in 0..=total.min(n_bar) {
            let i = total - n;
            if i > i_bar {
                continue;
            }
            // i = 0 monomials are independent of the factor choice
            let reps = if i == 0 { 1 } else { n_clusters };
            for c in 0..reps.max(1) {
                let f = AdeleElement::monomial(sup.clone(), c.min(n_clusters.saturating_sub(1)), n, i)?;
                let val = pairing(&f, w)?;
                if !val.is_zero_at_prec() {
                    return Ok(WitnessOutcome::Found(Witness {
                        cluster: c,
                        n,
                        i,
                        m: 0,
                        pairing: val,
                    }));
                }
            }
        }
    }
    Ok(WitnessOutcome::NoneFound { n_bar, i_bar })
}

/// Deterministic random rational form: numerator and denominator with
/// integer coefficients in `[-p^3, p^3]`, the numerator scaled by a power
/// of `p` drawn from `pi_range`, and a denominator that admits a nonzero
/// squarefree split at the working precision.
pub fn random_rational_form(
    ring: &Ring,
    seed: u64,
    degree_bound: usize,
    pi_range: (i64, i64),
) -> Result<RationalForm> {
    let p = ring.p() as i64;
    let bound = p.pow(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_poly = |rng: &mut ChaCha8Rng, deg: usize, monic_ok: bool| -> QPoly {
        let mut cs: Vec<BigRational> = (0..=deg)
            .map(|_| BigRational::from_integer(BigInt::from(rng.gen_range(-bound..=bound))))
            .collect();
        if monic_ok {
            // keep the leading coefficient nonzero so the degree is as drawn
            let lead = rng.gen_range(1..=bound);
            let s = if rng.gen_bool(0.5) { lead } else { -lead };
            *cs.last_mut().unwrap() = BigRational::from_integer(BigInt::from(s));
        }
        qpoly::trim(cs)
    };
    let num_deg = rng.gen_range(0..=degree_bound);
    let mut num = draw_poly(&mut rng, num_deg, false);
    if qpoly::is_zero(&num) {
        num = qpoly::from_i64s(&[1]);
    }
    let m = rng.gen_range(pi_range.0..=pi_range.1);
    let scale = BigRational::from_integer(BigInt::from(p)).pow(m as i32);
    num = qpoly::scale(&num, &scale);
    // retry until the denominator splits cleanly at precision
    for _ in 0..64 {
        let den_deg = rng.gen_range(1..=degree_bound);
        let den = draw_poly(&mut rng, den_deg, true);
        if qpoly::is_zero(&den) {
            continue;
        }
        if crate::series::squarefree_split(&den, ring, 16).is_ok() {
            return RationalForm::new(num, den);
        }
    }
    Err(Error::BadInput("no usable denominator found for seed".into()))
}
