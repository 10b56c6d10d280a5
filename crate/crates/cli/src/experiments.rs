//! The computations behind each subcommand. Every experiment has canonical
//! JSON parameters (the cache key) and produces a JSON result.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use asnp_core::arith::{factor_u64, fmt_rational, is_prime_u64, rational_mod_p};
use asnp_core::cyclo::ExtRational;
use asnp_core::fields::{FieldDesc, FqElem, ENUMERATION_CAP};
use asnp_core::gnp;
use asnp_core::lfun::{self, cached_field, LOptions, LPolynomial, LfunError, PolyOverFq, SubfieldScan};
use asnp_core::polygon::{lower_hull, NewtonPolygon};
use asnp_core::zeta::{self, CurveSpec, ZetaError};
use asnp_core::{dwork, genpoly};

use crate::record::{Kind, Outcome};

/// Rough single-core cost of one trace evaluation, for cap diagnostics.
const NS_PER_ELEMENT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Full,
    OneParam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaMethod {
    Direct,
    Product,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Gnp { d: usize, p: u64, family: Family },
    SameNp { f: Vec<BigRational>, p: u64, b: usize },
    Main { f: Vec<BigRational>, p: u64, b: usize, ell: usize },
    OneParam { d: usize, a: BigRational, p: u64 },
    Counterexample2,
    Membership { f: Vec<BigRational> },
    /// `alpha = None` scans every α in F_q^*.
    Lfun { f: Vec<BigRational>, p: u64, b: usize, alpha: Option<BigRational> },
    Zeta { f: Vec<BigRational>, p: u64, b: usize, ell: usize, method: ZetaMethod },
    Key2 { d: usize, p: u64 },
    Leading { d: usize, p: u64 },
    Transform { p: u64, t: usize, count: usize, seed: u64 },
}

/// The options every L computation in the harness uses: the degree check
/// runs up to the enumeration cap.
pub fn harness_options() -> LOptions {
    LOptions { degree_check_cap: ENUMERATION_CAP, ..LOptions::default() }
}

fn rats(f: &[BigRational]) -> Value {
    Value::Array(f.iter().map(|a| json!(fmt_rational(a))).collect())
}

fn elem_json(x: &FqElem) -> Value {
    json!(x.coeffs())
}

impl Experiment {
    pub fn kind(&self) -> Kind {
        match self {
            Experiment::Gnp { .. } => Kind::Gnp,
            Experiment::SameNp { .. } | Experiment::Main { .. } | Experiment::OneParam { .. } | Experiment::Counterexample2 => {
                Kind::Verify
            }
            Experiment::Membership { .. } => Kind::Membership,
            Experiment::Lfun { .. } => Kind::Lfun,
            Experiment::Zeta { .. } => Kind::Zeta,
            Experiment::Key2 { .. } | Experiment::Leading { .. } | Experiment::Transform { .. } => Kind::DworkCheck,
        }
    }

    pub fn params(&self) -> Value {
        match self {
            Experiment::Gnp { d, p, family } => json!({ "d": d, "p": p, "family": family }),
            Experiment::SameNp { f, p, b } => json!({ "theorem": "sameNP", "f": rats(f), "d": f.len(), "p": p, "b": b }),
            Experiment::Main { f, p, b, ell } => {
                json!({ "theorem": "main", "f": rats(f), "d": f.len(), "p": p, "b": b, "ell": ell })
            }
            Experiment::OneParam { d, a, p } => json!({ "theorem": "one-param", "d": d, "a": fmt_rational(a), "p": p }),
            Experiment::Counterexample2 => json!({ "theorem": "counterexample2" }),
            Experiment::Membership { f } => json!({ "f": rats(f), "d": f.len() }),
            Experiment::Lfun { f, p, b, alpha } => json!({
                "f": rats(f), "d": f.len(), "p": p, "b": b,
                "alpha": alpha.as_ref().map(|a| json!(fmt_rational(a))).unwrap_or(json!("scan")),
            }),
            Experiment::Zeta { f, p, b, ell, method } => {
                json!({ "f": rats(f), "d": f.len(), "p": p, "b": b, "ell": ell, "method": method })
            }
            Experiment::Key2 { d, p } => json!({ "check": "key2", "d": d, "p": p }),
            Experiment::Leading { d, p } => json!({ "check": "leading", "d": d, "p": p }),
            Experiment::Transform { p, t, count, seed } => {
                json!({ "check": "transform", "p": p, "t": t, "count": count, "seed": seed })
            }
        }
    }

    /// Runs the experiment. Enumerations beyond the cap produce an
    /// `infeasible` result with a cost estimate instead of an error.
    pub fn run(&self) -> Result<Outcome> {
        let computed = match self {
            Experiment::Gnp { d, p, family } => run_gnp(*d, *p, *family),
            Experiment::SameNp { f, p, b } => run_same_np(f, *p, *b),
            Experiment::Main { f, p, b, ell } => run_main(f, *p, *b, *ell),
            Experiment::OneParam { d, a, p } => run_one_param(*d, a, *p),
            Experiment::Counterexample2 => run_counterexample2(),
            Experiment::Membership { f } => run_membership(f),
            Experiment::Lfun { f, p, b, alpha } => run_lfun(f, *p, *b, alpha.as_ref()),
            Experiment::Zeta { f, p, b, ell, method } => run_zeta(f, *p, *b, *ell, *method),
            Experiment::Key2 { d, p } => run_key2(*d, *p),
            Experiment::Leading { d, p } => run_leading(*d, *p),
            Experiment::Transform { p, t, count, seed } => run_transform(*p, *t, *count, *seed),
        };
        let (mut result, mismatch) = match computed {
            Ok(x) => x,
            Err(e) => match cap_exceeded(&e) {
                Some((p, n)) => (infeasible(p, n), false),
                None => return Err(e),
            },
        };
        if let Value::Object(m) = &mut result {
            m.entry("status").or_insert(json!("ok"));
        }
        Ok(Outcome { kind: self.kind(), params: self.params(), result, mismatch })
    }
}

fn cap_exceeded(e: &anyhow::Error) -> Option<(u64, usize)> {
    if let Some(LfunError::CapExceeded { p, n }) = e.downcast_ref::<LfunError>() {
        return Some((*p, *n));
    }
    match e.downcast_ref::<ZetaError>() {
        Some(ZetaError::CapExceeded { p, n }) | Some(ZetaError::Lfun(LfunError::CapExceeded { p, n })) => Some((*p, *n)),
        _ => None,
    }
}

/// Diagnostic for a field too large to enumerate.
pub fn infeasible(p: u64, n: usize) -> Value {
    let elements = (p as f64).powi(n as i32);
    let hours = elements * NS_PER_ELEMENT * 1e-9 / 3600.0;
    json!({
        "status": "infeasible",
        "field": { "p": p, "n": n },
        "diagnostic": format!(
            "F_{p}^{n} has about {elements:.3e} elements, above the 2^40 enumeration cap; \
             one pass would take roughly {hours:.1} CPU-hours"
        ),
    })
}

fn check_prime(p: u64) -> Result<()> {
    if !is_prime_u64(p) {
        bail!("p = {p} is not prime");
    }
    Ok(())
}

/// Reduces rational coefficients into F_p ⊆ F_{p^b}.
pub fn reduce_coeffs(field: &FieldDesc, f: &[BigRational]) -> Result<Vec<FqElem>> {
    let p = field.p();
    f.iter()
        .map(|a| match rational_mod_p(a, p) {
            Some(r) => Ok(field.constant(r)),
            None => bail!("coefficient {} is not {p}-integral", fmt_rational(a)),
        })
        .collect()
}

fn poly_over(f: &[BigRational], p: u64, b: usize) -> Result<PolyOverFq> {
    check_prime(p)?;
    let field = cached_field(p, b)?;
    Ok(PolyOverFq::new(&field, reduce_coeffs(&field, f)?)?)
}

/// Structural facts about one L-polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LStructure {
    pub degree_verified: Vec<usize>,
    pub degree_skipped: Vec<usize>,
    pub functional_equation: bool,
    pub endpoint: bool,
    pub open_unit: bool,
    pub above_hodge: bool,
    pub above_gnp: bool,
}

pub fn l_structure(l: &LPolynomial, np: &NewtonPolygon, d: usize) -> Result<LStructure> {
    let m = d - 1;
    let b = BigInt::from(l.b);
    let endpoint = match l.coeffs[m].valuation() {
        ExtRational::Finite(v) => v / BigRational::from_integer(b) == BigRational::new(BigInt::from(m), BigInt::from(2)),
        ExtRational::Infinity => false,
    };
    let slopes = np.slopes();
    let open_unit = slopes.entries().iter().all(|(s, _)| s.is_positive() && *s < BigRational::one());
    // A linear f has L = 1; its polygons are the origin.
    let gnp_ref = if d >= 2 { gnp::gnp_full(d, l.p)?.polygon } else { gnp::hodge(d) };
    Ok(LStructure {
        degree_verified: l.degree_check.verified.clone(),
        degree_skipped: l.degree_check.skipped.clone(),
        functional_equation: lfun::check_functional_equation(l).is_ok(),
        endpoint,
        open_unit,
        above_hodge: np.lies_above(&gnp::hodge(d))?,
        above_gnp: np.lies_above(&gnp_ref)?,
    })
}

/// Counts over a batch of L-polynomials; each field counts how many passed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSummary {
    pub count: usize,
    /// c_d, c_{d+1} and c_{d+2} all computed and zero.
    pub degree_exact: usize,
    /// Index n of c_n mapped to how many L's could not check it.
    pub skipped: BTreeMap<usize, usize>,
    pub functional_equation: usize,
    pub endpoint: usize,
    pub open_unit: usize,
    pub above_hodge: usize,
    pub above_gnp: usize,
}

impl StructureSummary {
    pub fn add(&mut self, s: &LStructure, d: usize) {
        self.count += 1;
        self.degree_exact += usize::from(s.degree_verified == vec![d, d + 1, d + 2]);
        for &n in &s.degree_skipped {
            *self.skipped.entry(n).or_default() += 1;
        }
        self.functional_equation += usize::from(s.functional_equation);
        self.endpoint += usize::from(s.endpoint);
        self.open_unit += usize::from(s.open_unit);
        self.above_hodge += usize::from(s.above_hodge);
        self.above_gnp += usize::from(s.above_gnp);
    }

    pub fn merge(&mut self, other: &StructureSummary) {
        self.count += other.count;
        self.degree_exact += other.degree_exact;
        for (n, c) in &other.skipped {
            *self.skipped.entry(*n).or_default() += c;
        }
        self.functional_equation += other.functional_equation;
        self.endpoint += other.endpoint;
        self.open_unit += other.open_unit;
        self.above_hodge += other.above_hodge;
        self.above_gnp += other.above_gnp;
    }

    pub fn all_pass(&self) -> bool {
        let c = self.count;
        self.degree_exact == c
            && self.functional_equation == c
            && self.endpoint == c
            && self.open_unit == c
            && self.above_hodge == c
            && self.above_gnp == c
    }

    /// One-line description of every failing count.
    pub fn failures(&self) -> Vec<String> {
        let c = self.count;
        let mut out = Vec::new();
        let mut note = |name: &str, k: usize| {
            if k != c {
                out.push(format!("{name}: {k}/{c}"));
            }
        };
        note("degree exact", self.degree_exact);
        note("functional equation", self.functional_equation);
        note("endpoint", self.endpoint);
        note("slopes in (0,1)", self.open_unit);
        note("above HP", self.above_hodge);
        note("above GNP", self.above_gnp);
        for (n, k) in &self.skipped {
            out.push(format!("c_{n} not computed for {k} L's"));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("json")
    }
}

/// Reads a polygon back from its `{"vertices": ...}` JSON form.
pub fn polygon_from_json(v: &Value) -> Option<NewtonPolygon> {
    let pts = v.get("vertices")?.as_array()?;
    let mut out = Vec::with_capacity(pts.len());
    for pt in pts {
        let pair = pt.as_array()?;
        let parse = |x: &Value| -> Option<BigRational> {
            match x {
                Value::Number(n) => Some(BigRational::from_integer(BigInt::from(n.as_i64()?))),
                Value::String(s) => asnp_core::arith::parse_rational(s).ok(),
                _ => None,
            }
        };
        out.push((parse(pair.first()?)?, parse(pair.get(1)?)?));
    }
    lower_hull(out).ok()
}

fn epsilon_json(d: usize, r: u64) -> Value {
    match gnp::epsilon_slopes(d, r) {
        Ok(e) => json!(e),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn run_gnp(d: usize, p: u64, family: Family) -> Result<(Value, bool)> {
    let g = match family {
        Family::Full => gnp::gnp_full(d, p)?,
        Family::OneParam => gnp::gnp_one_param(d, p)?,
    };
    let hp = gnp::hodge(d);
    let equals_hodge = g.polygon == hp;
    let r = p % d as u64;
    let points: Vec<Value> = g.points.iter().map(|(x, y)| json!([x.to_integer().to_i64(), fmt_rational(y)])).collect();
    let mut result = json!({
        "r": r,
        "m_values": g.m_values,
        "points": points,
        "polygon": g.polygon.to_json(),
        "degenerate": g.degenerate,
        "equals_hodge": equals_hodge,
        "plots": { format!("GNP d={d} p={p}"): g.polygon.to_json(), "HP": hp.to_json() },
    });
    let mut mismatch = false;
    if family == Family::Full {
        let criterion = equals_hodge == (r == 1);
        result["epsilon"] = epsilon_json(d, r);
        result["hodge_criterion_holds"] = json!(criterion);
        mismatch = !criterion;
    }
    Ok((result, mismatch))
}

/// One α of a scan.
struct AlphaResult {
    alpha: Value,
    np: NewtonPolygon,
    structure: LStructure,
}

fn scan_alphas(f: &PolyOverFq, ell: usize) -> Result<Vec<AlphaResult>> {
    let scan = SubfieldScan::new(f, ell, &harness_options())?;
    let d = f.degree();
    scan.alphas()
        .into_par_iter()
        .map(|alpha| {
            let l = scan.l_poly(&alpha)?;
            let np = lfun::np_of_l(&l)?;
            let structure = l_structure(&l, &np, d)?;
            Ok(AlphaResult { alpha: elem_json(&alpha), np, structure })
        })
        .collect()
}

/// Compares every scanned polygon with a reference.
fn scan_report(results: &[AlphaResult], reference: &NewtonPolygon, d: usize) -> (Value, bool) {
    let mut summary = StructureSummary::default();
    let mut distinct: Vec<(NewtonPolygon, usize)> = Vec::new();
    let mut mismatched = Vec::new();
    for r in results {
        summary.add(&r.structure, d);
        match distinct.iter_mut().find(|(np, _)| *np == r.np) {
            Some((_, c)) => *c += 1,
            None => distinct.push((r.np.clone(), 1)),
        }
        if r.np != *reference {
            mismatched.push(r.alpha.clone());
        }
    }
    let all_equal = mismatched.is_empty();
    let distinct: Vec<Value> = distinct.iter().map(|(np, c)| json!({ "polygon": np.to_json(), "count": c })).collect();
    let mut plots = serde_json::Map::new();
    plots.insert("reference".into(), reference.to_json());
    if let Some(first) = results.first() {
        plots.insert("NP(L) first alpha".into(), first.np.to_json());
    }
    let report = json!({
        "alphas": results.len(),
        "all_equal": all_equal,
        "mismatched_alphas": mismatched,
        "distinct": distinct,
        "reference": reference.to_json(),
        "structure": summary.to_json(),
        "plots": plots,
    });
    (report, !all_equal)
}

fn run_same_np(f: &[BigRational], p: u64, b: usize) -> Result<(Value, bool)> {
    let poly = poly_over(f, p, b)?;
    let d = poly.degree();
    let reference = gnp::gnp_full(d, p)?.polygon;
    let results = scan_alphas(&poly, b)?;
    Ok(scan_report(&results, &reference, d))
}

fn run_one_param(d: usize, a: &BigRational, p: u64) -> Result<(Value, bool)> {
    check_prime(p)?;
    if d < 2 {
        bail!("need d >= 2");
    }
    let floor = (d as u64 - 1).pow(3) + 1;
    if p <= floor {
        bail!("one-param needs p > (d-1)^3 + 1 = {floor}, got p = {p}");
    }
    if let Some(den) = a.denom().to_u64() {
        if let Some(&(q, _)) = factor_u64(den).last() {
            if p <= q {
                bail!("one-param needs p above the largest prime {q} in the denominator of a");
            }
        }
    } else {
        bail!("denominator of a is too large");
    }
    if a.is_zero() || rational_mod_p(a, p) == Some(0) {
        bail!("a must be nonzero mod p");
    }
    let mut f = vec![BigRational::zero(); d];
    f[0] = a.clone();
    f[d - 1] = BigRational::one();
    let poly = poly_over(&f, p, 1)?;
    let reference = gnp::gnp_one_param(d, p)?.polygon;
    let results = scan_alphas(&poly, 1)?;
    Ok(scan_report(&results, &reference, d))
}

fn run_main(f: &[BigRational], p: u64, b: usize, ell: usize) -> Result<(Value, bool)> {
    check_prime(p)?;
    let field = cached_field(p, b)?;
    let curve = CurveSpec::new(&field, &reduce_coeffs(&field, f)?, ell)?;
    let d = curve.degree();
    let prod = zeta::zeta_slopes_product(&curve, &harness_options())?;
    let mut summary = StructureSummary::default();
    for a in &prod.per_alpha {
        summary.add(&l_structure(&a.l, &a.np, d)?, d);
    }
    let report = zeta::ordinary_report(&curve, prod.slopes.clone())?;
    let result = json!({
        "genus": curve.genus(),
        "l_count": prod.per_alpha.len(),
        "np_slopes": report.np.to_json(),
        "reference": report.reference,
        "reference_slopes": report.gnp_ref.to_json(),
        "achieves": report.achieves,
        "lies_above": report.lies_above,
        "structure": summary.to_json(),
        "plots": { "NP(X)": report.np.to_polygon().to_json(), "GNP copies": report.gnp_ref.to_polygon().to_json() },
    });
    Ok((result, !report.achieves))
}

fn run_counterexample2() -> Result<(Value, bool)> {
    let (p, b, d) = (2u64, 2usize, 11usize);
    let field = cached_field(p, b)?;
    let mut f = vec![field.zero(); d];
    for e in [5, 9, 11] {
        f[e - 1] = field.one();
    }
    let omega = field.theta();
    let wf: Vec<FqElem> = f.iter().map(|a| &omega * a).collect();
    let opts = harness_options();

    let curve = CurveSpec::new(&field, &f, 1)?;
    let curve_w = CurveSpec::new(&field, &wf, 1)?;
    let direct = zeta::zeta_numerator_direct(&curve)?.slopes()?;
    let product = zeta::zeta_slopes_product(&curve, &opts)?;
    let product_w = zeta::zeta_slopes_product(&curve_w, &opts)?;

    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let straight = product.slopes.entries() == [(half.clone(), BigRational::from_integer(BigInt::from(10)))];
    let other_slope = product_w.slopes.entries().iter().any(|(s, _)| *s != half);
    let poly = PolyOverFq::new(&field, f.clone())?;
    let l_f = lfun::l_poly(&poly, &field.one(), &opts)?;
    let l_w = lfun::l_poly(&poly, &omega, &opts)?;
    let np_f = lfun::np_of_l(&l_f)?;
    let np_w = lfun::np_of_l(&l_w)?;
    let differ = np_f != np_w;
    let oracles_agree = direct == product.slopes;

    let mut summary = StructureSummary::default();
    summary.add(&l_structure(&l_f, &np_f, d)?, d);
    summary.add(&l_structure(&l_w, &np_w, d)?, d);
    let ok = straight && other_slope && differ && oracles_agree;
    let result = json!({
        "f": "x^11 + x^9 + x^5 over F_4",
        "omega": elem_json(&omega),
        "np_x_f": product.slopes.to_json(),
        "np_x_f_direct": direct.to_json(),
        "np_x_omega_f": product_w.slopes.to_json(),
        "np_l_f": np_f.to_json(),
        "np_l_omega_f": np_w.to_json(),
        "straight_line": straight,
        "omega_has_other_slope": other_slope,
        "l_polygons_differ": differ,
        "direct_equals_product": oracles_agree,
        "structure": summary.to_json(),
        "plots": { "NP(L_f)": np_f.to_json(), "NP(L_wf)": np_w.to_json() },
    });
    Ok((result, !ok))
}

fn run_membership(f: &[BigRational]) -> Result<(Value, bool)> {
    let report = genpoly::membership_u(f)?;
    let values: Vec<Value> = report
        .values
        .iter()
        .map(|v| json!({ "r": v.r, "factor": v.label.to_string(), "value": fmt_rational(&v.value) }))
        .collect();
    let height = match genpoly::height_bound(f) {
        Ok(h) => json!({
            "floor": h.floor,
            "bad_primes": h.bad_primes.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
            "bound": h.bound.to_string(),
            "complete": h.complete,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let result = json!({
        "d": report.d,
        "in_u": report.in_u,
        "failing": report.failing.map(|(r, l)| json!({ "r": r, "factor": l.to_string() })),
        "values": values,
        "height": height,
    });
    Ok((result, false))
}

fn l_json(l: &LPolynomial, np: &NewtonPolygon, structure: &LStructure) -> Value {
    let coeffs: Vec<Value> = l
        .coeffs
        .iter()
        .map(|c| Value::Array(c.coords().iter().map(|x| json!(fmt_rational(x))).collect()))
        .collect();
    let vals: Vec<Value> = l.coeffs.iter().map(|c| json!(c.valuation().to_string())).collect();
    json!({
        "coeffs": coeffs,
        "valuations": vals,
        "np": np.to_json(),
        "degree_check": { "verified": structure.degree_verified, "skipped": structure.degree_skipped },
        "functional_equation": structure.functional_equation,
        "endpoint": structure.endpoint,
        "slopes_in_open_unit": structure.open_unit,
        "above_hodge": structure.above_hodge,
        "above_gnp": structure.above_gnp,
    })
}

fn run_lfun(f: &[BigRational], p: u64, b: usize, alpha: Option<&BigRational>) -> Result<(Value, bool)> {
    let poly = poly_over(f, p, b)?;
    let d = poly.degree();
    let opts = harness_options();
    let entries: Vec<(Value, LPolynomial)> = match alpha {
        Some(a) => {
            let field = poly.field().clone();
            let alpha = reduce_coeffs(&field, std::slice::from_ref(a))?.remove(0);
            vec![(elem_json(&alpha), lfun::l_poly(&poly, &alpha, &opts)?)]
        }
        None => {
            let scan = SubfieldScan::new(&poly, b, &opts)?;
            scan.alphas()
                .into_par_iter()
                .map(|a| Ok((elem_json(&a), scan.l_poly(&a)?)))
                .collect::<Result<_, LfunError>>()?
        }
    };
    let mut summary = StructureSummary::default();
    let mut out = Vec::with_capacity(entries.len());
    let mut plots = serde_json::Map::new();
    for (a, l) in &entries {
        let np = lfun::np_of_l(l)?;
        let s = l_structure(l, &np, d)?;
        summary.add(&s, d);
        let mut v = l_json(l, &np, &s);
        v["alpha"] = a.clone();
        if plots.len() < 4 {
            plots.insert(format!("alpha={a}"), np.to_json());
        }
        out.push(v);
    }
    plots.insert("HP".into(), gnp::hodge(d).to_json());
    Ok((json!({ "l": out, "structure": summary.to_json(), "plots": plots }), false))
}

fn run_zeta(f: &[BigRational], p: u64, b: usize, ell: usize, method: ZetaMethod) -> Result<(Value, bool)> {
    check_prime(p)?;
    let field = cached_field(p, b)?;
    let curve = CurveSpec::new(&field, &reduce_coeffs(&field, f)?, ell)?;
    let mut result = json!({ "genus": curve.genus(), "reduced_degree": curve.degree() });
    let mut direct = None;
    let mut product = None;
    if matches!(method, ZetaMethod::Direct | ZetaMethod::Both) {
        let z = zeta::zeta_numerator_direct(&curve)?;
        let slopes = z.slopes()?;
        result["direct"] = json!({
            "numerator": z.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "slopes": slopes.to_json(),
        });
        result["plots"]["direct"] = slopes.to_polygon().to_json();
        direct = Some(slopes);
    }
    if matches!(method, ZetaMethod::Product | ZetaMethod::Both) {
        let prod = zeta::zeta_slopes_product(&curve, &harness_options())?;
        let d = curve.degree();
        let mut summary = StructureSummary::default();
        for a in &prod.per_alpha {
            summary.add(&l_structure(&a.l, &a.np, d)?, d);
        }
        result["product"] = json!({ "slopes": prod.slopes.to_json(), "structure": summary.to_json() });
        result["plots"]["product"] = prod.slopes.to_polygon().to_json();
        product = Some(prod.slopes);
    }
    let mut mismatch = false;
    if let (Some(a), Some(b)) = (&direct, &product) {
        result["agree"] = json!(a == b);
        mismatch = a != b;
    }
    Ok((result, mismatch))
}

fn run_key2(d: usize, p: u64) -> Result<(Value, bool)> {
    let mut table = Vec::new();
    let mut all = true;
    for i in 1..d {
        for j in 1..d {
            let ok = genpoly::check_key2(d, p, i, j)?;
            all &= ok;
            table.push(json!({ "i": i, "j": j, "holds": ok }));
        }
    }
    Ok((json!({ "floor": genpoly::prime_floor(d), "all_hold": all, "pairs": table }), !all))
}

fn run_leading(d: usize, p: u64) -> Result<(Value, bool)> {
    check_prime(p)?;
    let mut table = Vec::new();
    let mut all = true;
    for i in 1..d {
        for j in 1..d {
            let n = (p * i as u64) as i64 - j as i64;
            let (c, lead) = dwork::g_n_leading(d, p, n)?;
            let k = genpoly::k_tilde(d, p, i, j)?;
            let ok = lead == k && c == (n + d as i64 - 1) / d as i64;
            all &= ok;
            table.push(json!({ "i": i, "j": j, "n": n, "c": c, "leading": lead.to_string(), "matches": ok }));
        }
    }
    Ok((json!({ "all_match": all, "pairs": table }), !all))
}

fn run_transform(p: u64, t: usize, count: usize, seed: u64) -> Result<(Value, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut equal = 0usize;
    for k in 0..count {
        let g = dwork::generate_transform_matrix(p, t, &mut rng)?;
        let rep = dwork::np_transform_check(&g.matrix, &g.h, &g.delta)?;
        if rep.hypotheses_hold && rep.equal {
            equal += 1;
        } else {
            failures.push(json!({
                "index": k,
                "h": rats(&g.h),
                "failure": rep.failure,
                "np_det": rep.np_det.to_json(),
                "np_q": rep.np_q.to_json(),
            }));
        }
    }
    let ok = equal == count;
    Ok((json!({ "count": count, "equal": equal, "failures": failures }), !ok))
}
