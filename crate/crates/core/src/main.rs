//! Command-line harness: single-file JSON scenarios in, machine-readable
//! JSON reports out. Exit codes: 0 success / reciprocity verdict zero,
//! 1 verdict violation, 2 input or schema error, 3 arithmetic or precision
//! error. All p-adic coordinates are emitted as decimal strings; key order
//! is canonical (sorted), so identical scenarios yield byte-identical output.

use std::process::ExitCode;
use std::rc::Rc;

use clap::Parser;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;
use serde_json::{json, Value};

use residue2d::adelic::{
    annihilator_witness, reciprocity_check, random_rational_form, AdelicForm, Verdict,
    WitnessOutcome,
};
use residue2d::completion::{
    local_expansion, mixed_expand, residue_at_special, RationalForm, Support,
};
use residue2d::field::{Ring, RingElem};
use residue2d::fields2d::MixedElem;
use residue2d::qpoly::{self, QPoly};
use residue2d::series::{squarefree_split, Series};
use residue2d::Error;

#[derive(Parser)]
#[command(name = "residue2d", version, about = "Residues over two-dimensional local fields")]
struct Cli {
    /// residue | reciprocity | reconstruct | witness | weierstrass | expand
    command: String,
    /// Path to a JSON scenario file
    #[arg(long)]
    scenario: std::path::PathBuf,
    /// Override the p-adic working precision N
    #[arg(long)]
    precision: Option<u32>,
    /// Override the t-adic truncation window
    #[arg(long)]
    tmax: Option<i64>,
    /// Override the corpus seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the corpus size
    #[arg(long)]
    count: Option<u32>,
    /// Also write the report to this path
    #[arg(long)]
    json_out: Option<std::path::PathBuf>,
}

#[derive(Deserialize)]
struct FieldSpec {
    p: u64,
    precision: u32,
    #[serde(default = "default_tmax")]
    tmax: i64,
}

fn default_tmax() -> i64 {
    32
}

#[derive(Deserialize)]
struct FormSpec {
    num: Vec<i64>,
    den: Vec<i64>,
    #[serde(default)]
    pi_exp: i64,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum PrimeSpec {
    Special,
    Cluster { poly: Vec<i64> },
}

#[derive(Deserialize)]
struct CorpusSpec {
    seed: u64,
    count: u32,
    #[serde(default = "default_degree")]
    degree: usize,
}

fn default_degree() -> usize {
    6
}

#[derive(Deserialize)]
struct GridSpec {
    n: u32,
    i: u32,
}

#[derive(Deserialize)]
struct PerturbSpec {
    #[serde(default)]
    cluster: usize,
    #[serde(default)]
    exponent: i64,
}

#[derive(Deserialize)]
struct Scenario {
    field: FieldSpec,
    #[serde(default)]
    command: Option<String>,
    #[serde(default)]
    form: Option<FormSpec>,
    #[serde(default)]
    prime: Option<PrimeSpec>,
    #[serde(default)]
    depth: Option<u32>,
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default)]
    perturb: Option<PerturbSpec>,
    #[serde(default)]
    poly: Option<Vec<i64>>,
    #[serde(default)]
    corpus: Option<CorpusSpec>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, code)) => {
            let text = serde_json::to_string_pretty(&report).expect("report serialization");
            if let Some(path) = &cli.json_out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            println!("{text}");
            ExitCode::from(code)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Arithmetic(e)) => {
            eprintln!("arithmetic error ({}): {e}", variant_name(&e));
            ExitCode::from(3)
        }
    }
}

enum CliError {
    Input(String),
    Arithmetic(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BadInput(m) => CliError::Input(m),
            Error::InvalidPrime(p) => CliError::Input(format!("{p} is not prime")),
            other => CliError::Arithmetic(other),
        }
    }
}

fn variant_name(e: &Error) -> &'static str {
    match e {
        Error::InvalidPrime(_) => "InvalidPrime",
        Error::NotIrreducibleCertified => "NotIrreducibleCertified",
        Error::FieldMismatch => "FieldMismatch",
        Error::DivisionByZeroAtPrecision(_) => "DivisionByZeroAtPrecision",
        Error::PrecisionLoss(_) => "PrecisionLoss",
        Error::DegenerateAtPrecision => "DegenerateAtPrecision",
        Error::NonUnitLeadingCoefficient => "NonUnitLeadingCoefficient",
        Error::TruncationExhausted { .. } => "TruncationExhausted",
        Error::ZeroAtPrecision => "ZeroAtPrecision",
        Error::NotSquarefree => "NotSquarefree",
        Error::CarrierMismatch => "CarrierMismatch",
        Error::BadInput(_) => "BadInput",
    }
}

fn run(cli: &Cli) -> Result<(Value, u8), CliError> {
    let text = std::fs::read_to_string(&cli.scenario)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", cli.scenario.display())))?;
    let mut sc: Scenario =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad scenario: {e}")))?;
    if let Some(cmd) = &sc.command {
        if cmd != &cli.command {
            return Err(CliError::Input(format!(
                "scenario command '{cmd}' does not match requested '{}'",
                cli.command
            )));
        }
    }
    if let Some(n) = cli.precision {
        sc.field.precision = n;
    }
    if let Some(t) = cli.tmax {
        sc.field.tmax = t;
    }
    if let Some(c) = sc.corpus.as_mut() {
        if let Some(s) = cli.seed {
            c.seed = s;
        }
        if let Some(n) = cli.count {
            c.count = n;
        }
    }
    let ring = Ring::base(sc.field.p, sc.field.precision)?;
    let (result, code) = match cli.command.as_str() {
        "residue" => cmd_residue(&sc, &ring)?,
        "reciprocity" => cmd_reciprocity(&sc, &ring)?,
        "reconstruct" => cmd_reconstruct(&sc, &ring)?,
        "witness" => cmd_witness(&sc, &ring)?,
        "weierstrass" => cmd_weierstrass(&sc, &ring)?,
        "expand" => cmd_expand(&sc, &ring)?,
        other => return Err(CliError::Input(format!("unknown command '{other}'"))),
    };
    let report = json!({
        "command": cli.command,
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario_echo(&sc),
        "result": result,
    });
    Ok((report, code))
}

fn scenario_echo(sc: &Scenario) -> Value {
    let mut v = json!({
        "field": {"p": sc.field.p, "precision": sc.field.precision, "tmax": sc.field.tmax},
    });
    let map = v.as_object_mut().unwrap();
    if let Some(f) = &sc.form {
        map.insert("form".into(), json!({"num": f.num, "den": f.den, "pi_exp": f.pi_exp}));
    }
    if let Some(p) = &sc.prime {
        map.insert("prime".into(), prime_echo(p));
    }
    if let Some(d) = sc.depth {
        map.insert("depth".into(), json!(d));
    }
    if let Some(g) = &sc.grid {
        map.insert("grid".into(), json!({"n": g.n, "i": g.i}));
    }
    if let Some(p) = &sc.perturb {
        map.insert("perturb".into(), json!({"cluster": p.cluster, "exponent": p.exponent}));
    }
    if let Some(p) = &sc.poly {
        map.insert("poly".into(), json!(p));
    }
    if let Some(c) = &sc.corpus {
        map.insert("corpus".into(), json!({"seed": c.seed, "count": c.count, "degree": c.degree}));
    }
    v
}

fn prime_echo(p: &PrimeSpec) -> Value {
    match p {
        PrimeSpec::Special => json!({"kind": "special"}),
        PrimeSpec::Cluster { poly } => json!({"kind": "cluster", "poly": poly}),
    }
}

fn form_of(sc: &Scenario, ring: &Ring) -> Result<RationalForm, CliError> {
    let f = sc
        .form
        .as_ref()
        .ok_or_else(|| CliError::Input("scenario is missing 'form'".into()))?;
    let mut num = qpoly::from_i64s(&f.num);
    let scale =
        BigRational::from_integer(BigInt::from(ring.p())).pow(f.pi_exp as i32);
    num = qpoly::scale(&num, &scale);
    let den = qpoly::from_i64s(&f.den);
    Ok(RationalForm::new(num, den)?)
}

/// Serialize a ring element: base scalars as `p^val * digits` decimal parts,
/// extension elements by their coordinate vector.
fn elem_json(e: &RingElem) -> Value {
    if let Some(s) = e.scalar() {
        let (digits, abs, val) = s.to_decimal_parts();
        json!({
            "abs_prec": abs,
            "digits": digits,
            "val": if val == i64::MAX { Value::Null } else { json!(val) },
        })
    } else {
        json!({"coords": e.coords().iter().map(elem_json).collect::<Vec<_>>()})
    }
}

fn loss_of(e: &RingElem, ring: &Ring) -> i64 {
    let n = ring.prec() as i64;
    (n - e.min_abs_prec().unwrap_or(n)).max(0)
}

fn series_json(s: &Series, cap: i64) -> Value {
    // report the band of exponents around 0; deep mixed windows are shown
    // only where they are informative
    let lo = s.lower().max(-cap);
    let hi = s.truncation().min(cap.max(lo));
    let coeffs: Vec<Value> = (lo..hi)
        .map(|n| json!({"exp": n, "coeff": elem_json(&s.coeff_at(n).unwrap())}))
        .collect();
    json!({"lower": s.lower(), "truncation": s.truncation(), "coeffs": coeffs})
}

fn mixed_json(f: &MixedElem, cap: i64) -> Value {
    let tails: Vec<Value> = f
        .tails()
        .iter()
        .map(|t| json!({"start": t.start, "den": t.den, "base": t.base}))
        .collect();
    json!({"window": series_json(f.window(), cap), "tails": tails})
}

/// Match a requested cluster polynomial against the support's distinguished
/// factors (after monic normalization over Q).
fn find_cluster(sup: &Support, poly: &[i64]) -> Result<Option<usize>, CliError> {
    let q = qpoly::from_i64s(poly);
    if qpoly::is_zero(&q) || qpoly::degree(&q) == 0 {
        return Err(CliError::Input("cluster polynomial must be nonconstant".into()));
    }
    let lead = q.last().unwrap().clone();
    let monic = qpoly::scale(&q, &lead.recip());
    for (idx, cl) in sup.clusters().iter().enumerate() {
        if cl.dist().exact() == Some(&monic) {
            return Ok(Some(idx));
        }
    }
    Ok(None)
}

fn cmd_residue(sc: &Scenario, ring: &Ring) -> Result<(Value, u8), CliError> {
    let form = form_of(sc, ring)?;
    let prime = sc
        .prime
        .as_ref()
        .ok_or_else(|| CliError::Input("scenario is missing 'prime'".into()))?;
    let sup = Support::build(&form.den, ring, sc.field.tmax)?;
    let residue = match prime {
        PrimeSpec::Special => residue_at_special(&form, &sup)?,
        PrimeSpec::Cluster { poly } => match find_cluster(&sup, poly)? {
            Some(idx) => residue2d::completion::residue_at_cluster(&form, &sup, idx)?,
            // the form is integral at this prime, so the residue vanishes
            None => ring.zero(),
        },
    };
    let val = residue.valuation()?.finite();
    let result = json!({
        "residue": elem_json(&residue),
        "valuation": val,
        "loss": loss_of(&residue, ring),
    });
    Ok((result, 0))
}

fn reciprocity_report_json(
    rep: &residue2d::adelic::ReciprocityReport,
) -> (Value, bool) {
    let residues: Vec<Value> = rep
        .residues
        .iter()
        .map(|(label, r)| json!({"prime": label, "residue": elem_json(r)}))
        .collect();
    let verdict = match &rep.verdict {
        Verdict::ZeroAtPrecision => json!("zero-at-precision"),
        Verdict::Violation { valuation } => json!({"violation": {"valuation": valuation}}),
    };
    (
        json!({
            "residues": residues,
            "total": elem_json(&rep.total),
            "precision": rep.precision,
            "loss": rep.loss,
            "verdict": verdict,
        }),
        rep.ok(),
    )
}

fn cmd_reciprocity(sc: &Scenario, ring: &Ring) -> Result<(Value, u8), CliError> {
    if let Some(corpus) = &sc.corpus {
        let mut cases = Vec::new();
        let mut passed = 0u32;
        let mut max_loss = 0i64;
        for k in 0..corpus.count {
            let seed = corpus.seed.wrapping_add(k as u64);
            let form = random_rational_form(ring, seed, corpus.degree, (-2, 2))?;
            let sup = Support::build(&form.den, ring, sc.field.tmax)?;
            let rep = reciprocity_check(&form, &sup)?;
            if rep.ok() {
                passed += 1;
            }
            max_loss = max_loss.max(rep.loss);
            cases.push(json!({
                "seed": seed,
                "num": qpoly_strings(&form.num),
                "den": qpoly_strings(&form.den),
                "loss": rep.loss,
                "ok": rep.ok(),
            }));
        }
        let all_ok = passed == corpus.count;
        let result = json!({
            "cases": cases,
            "passed": passed,
            "count": corpus.count,
            "max_loss": max_loss,
        });
        return Ok((result, if all_ok { 0 } else { 1 }));
    }
    let form = form_of(sc, ring)?;
    let sup = Support::build(&form.den, ring, sc.field.tmax)?;
    let rep = reciprocity_check(&form, &sup)?;
    let (result, ok) = reciprocity_report_json(&rep);
    Ok((result, if ok { 0 } else { 1 }))
}

fn qpoly_strings(q: &QPoly) -> Vec<String> {
    q.iter().map(|c| c.to_string()).collect()
}

fn cmd_reconstruct(sc: &Scenario, ring: &Ring) -> Result<(Value, u8), CliError> {
    let form = form_of(sc, ring)?;
    let poly = match &sc.prime {
        Some(PrimeSpec::Cluster { poly }) => poly.clone(),
        _ => return Err(CliError::Input("reconstruct needs a cluster prime".into())),
    };
    let depth = sc.depth.unwrap_or(0);
    let sup_own = Support::build(&form.den, ring, sc.field.tmax)?;
    let w_p0 = mixed_expand(&form, &sup_own)?;
    let p_q = qpoly::from_i64s(&poly);
    let sup_p = Support::build(&p_q, ring, sc.field.tmax)?;
    let cl = sup_p
        .clusters()
        .first()
        .ok_or_else(|| CliError::Input("cluster polynomial is a unit".into()))?;
    let recon = residue2d::adelic::reconstruct_at_prime(&w_p0, cl, ring, depth)?;
    let truth = local_expansion(&form, cl, ring)?;
    let mut rows = Vec::new();
    let mut all_match = true;
    for (i, a) in recon.iter().enumerate() {
        let want = truth.coeff_at(i as i64)?;
        let diff = a.sub(&want)?;
        let ok = diff.is_zero_at_prec();
        all_match &= ok;
        rows.push(json!({
            "depth": i,
            "reconstructed": elem_json(a),
            "direct": elem_json(&want),
            "defect_valuation": if diff.is_zero_at_prec() && diff.is_exact_zero() {
                Value::Null
            } else {
                json!(diff.valuation_floor())
            },
            "match": ok,
        }));
    }
    let result = json!({"coefficients": rows, "match": all_match});
    Ok((result, if all_match { 0 } else { 1 }))
}

fn cmd_witness(sc: &Scenario, ring: &Ring) -> Result<(Value, u8), CliError> {
    let form = form_of(sc, ring)?;
    let grid = sc
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Input("scenario is missing 'grid'".into()))?;
    let sup = Rc::new(Support::build(&form.den, ring, sc.field.tmax)?);
    let mut w = AdelicForm::diagonal(&form, sup.clone())?;
    if let Some(p) = &sc.perturb {
        if p.cluster >= sup.clusters().len() {
            return Err(CliError::Input(format!(
                "perturbation cluster {} out of range",
                p.cluster
            )));
        }
        let kp = sup.clusters()[p.cluster].kp().clone();
        w.perturb_cluster(p.cluster, p.exponent, kp.one())?;
    }
    let result = match annihilator_witness(&w, grid.n, grid.i)? {
        WitnessOutcome::Found(wit) => json!({
            "witness": {
                "cluster": wit.cluster,
                "monomial": [wit.n, wit.i, wit.m],
                "pairing": elem_json(&wit.pairing),
            }
        }),
        WitnessOutcome::NoneFound { n_bar, i_bar } => json!({
            "witness": Value::Null,
            "searched": {"n": n_bar, "i": i_bar},
        }),
    };
    Ok((result, 0))
}

fn cmd_weierstrass(sc: &Scenario, ring: &Ring) -> Result<(Value, u8), CliError> {
    let poly = sc
        .poly
        .as_ref()
        .ok_or_else(|| CliError::Input("scenario is missing 'poly'".into()))?;
    let q = qpoly::from_i64s(poly);
    let split = squarefree_split(&q, ring, sc.field.tmax)?;
    let factors: Vec<Value> = split
        .factors
        .iter()
        .map(|(dist, mult)| {
            let poly = dist
                .exact()
                .map(|e| json!(qpoly_strings(e)))
                .unwrap_or(Value::Null);
            json!({"degree": dist.degree(), "mult": mult, "poly": poly})
        })
        .collect();
    let result = json!({
        "pi_power": split.pi_power,
        "factors": factors,
        "unit": series_json(&split.unit, sc.field.tmax),
    });
    Ok((result, 0))
}

fn cmd_expand(sc: &Scenario, ring: &Ring) -> Result<(Value, u8), CliError> {
    let form = form_of(sc, ring)?;
    let prime = sc
        .prime
        .as_ref()
        .ok_or_else(|| CliError::Input("scenario is missing 'prime'".into()))?;
    let sup = Support::build(&form.den, ring, sc.field.tmax)?;
    let result = match prime {
        PrimeSpec::Special => {
            let f = mixed_expand(&form, &sup)?;
            json!({"expansion": mixed_json(&f, sc.field.tmax)})
        }
        PrimeSpec::Cluster { poly } => {
            let g = match find_cluster(&sup, poly)? {
                Some(idx) => local_expansion(&form, &sup.clusters()[idx], ring)?,
                None => {
                    // prime off the denominator's support: build it standalone
                    let p_q = qpoly::from_i64s(poly);
                    let sup_p = Support::build(&p_q, ring, sc.field.tmax)?;
                    let cl = sup_p
                        .clusters()
                        .first()
                        .ok_or_else(|| CliError::Input("cluster polynomial is a unit".into()))?;
                    local_expansion(&form, cl, ring)?
                }
            };
            json!({"expansion": series_json(&g, sc.field.tmax)})
        }
    };
    Ok((result, 0))
}
