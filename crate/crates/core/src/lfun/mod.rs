//! Exponential sums S_f(k, χ) and their L-functions with exact coefficients
//! in Z[ζ_p].

pub mod histogram;

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::arith::{big_pow, checked_pow, rational_mod_p};
use crate::cyclo::{CycNum, ExtRational};
use crate::fields::{build_field, FieldDesc, FieldError, FqElem, ENUMERATION_CAP};
use crate::polygon::{hull_from_values, NewtonPolygon};

pub use histogram::{Engine, EvalOptions, TraceHistogram};

/// Default bound on q^k for the optional degree-check sums S_d..S_{d+2}.
pub const DEFAULT_DEGREE_CHECK_CAP: u128 = 1 << 32;

#[derive(Debug, Error)]
pub enum LfunError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid polynomial: {0}")]
    InvalidPoly(String),
    #[error("F_{{{p}^{n}}} exceeds the enumeration cap")]
    CapExceeded { p: u64, n: usize },
    #[error("division by {n} not exact in the recurrence")]
    InexactDivision { n: usize },
    #[error("degree check failed: c_{n} != 0")]
    DegreeCheck { n: usize },
    #[error("functional equation fails at j={j}")]
    FunctionalEquation { j: usize },
    #[error("Newton polygon endpoint is not (d-1, (d-1)/2)")]
    Endpoint,
    #[error("trivial character")]
    TrivialCharacter,
    #[error("F_{{{p}^{ell}}} is not a subfield of F_{{{p}^{b}}}")]
    NotSubfield { p: u64, ell: usize, b: usize },
    #[error("element does not lie in the expected field")]
    WrongField,
}

/// Shared field descriptors keyed by (p, n).
pub fn cached_field(p: u64, n: usize) -> Result<FieldDesc, FieldError> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), FieldDesc>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(f) = cache.lock().unwrap().get(&(p, n)) {
        return Ok(f.clone());
    }
    let f = build_field(p, n)?;
    Ok(cache.lock().unwrap().entry((p, n)).or_insert(f).clone())
}

/// f(x) = a_0 + a_1 x + ... + a_d x^d over F_q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyOverFq {
    field: FieldDesc,
    /// Index i holds a_i; index 0 is the constant term.
    coeffs: Vec<FqElem>,
}

impl PolyOverFq {
    /// From a_1..a_d (no constant term). Requires a_d != 0.
    pub fn new(field: &FieldDesc, coeffs: Vec<FqElem>) -> Result<Self, LfunError> {
        if coeffs.iter().any(|a| a.field() != field) {
            return Err(LfunError::WrongField);
        }
        let mut all = Vec::with_capacity(coeffs.len() + 1);
        all.push(field.zero());
        all.extend(coeffs);
        let f = PolyOverFq { field: field.clone(), coeffs: all };
        f.validate()?;
        Ok(f)
    }

    /// Coefficients a_1..a_d given by their coordinate vectors.
    pub fn from_coords(field: &FieldDesc, coeffs: &[Vec<u64>]) -> Result<Self, LfunError> {
        Self::new(field, coeffs.iter().map(|c| field.element(c)).collect())
    }

    /// Prime-field coefficients a_1..a_d given as rationals, reduced mod p.
    pub fn from_rationals(field: &FieldDesc, coeffs: &[BigRational]) -> Result<Self, LfunError> {
        let p = field.p();
        let elems = coeffs
            .iter()
            .map(|a| {
                rational_mod_p(a, p)
                    .map(|r| field.constant(r))
                    .ok_or_else(|| LfunError::InvalidPoly(format!("coefficient {a} has denominator divisible by {p}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(field, elems)
    }

    /// Reduces a polynomial of arbitrary degree to one defining the same
    /// Artin-Schreier cover y^{p^ell} - y = f: terms a·x^{j p^ell} are
    /// replaced by a^{1/p^ell}·x^j until no exponent is divisible by p^ell.
    /// The constant term is dropped.
    pub fn artin_schreier(field: &FieldDesc, coeffs: &[FqElem], ell: usize) -> Result<Self, LfunError> {
        let p = field.p();
        let pl = checked_pow(p, ell as u32).ok_or_else(|| LfunError::InvalidPoly("p^ell too large".into()))?;
        let mut all: Vec<FqElem> = vec![field.zero()];
        all.extend(coeffs.iter().cloned());
        for i in (1..all.len()).rev() {
            if all[i].is_zero() || (i as u64) % pl != 0 {
                continue;
            }
            let mut j = i;
            let mut a = all[i].clone();
            while (j as u64) % pl == 0 {
                j /= pl as usize;
                for _ in 0..ell {
                    a = a.pth_root();
                }
            }
            all[i] = field.zero();
            all[j] = &all[j] + &a;
        }
        let d = all.iter().rposition(|a| !a.is_zero()).unwrap_or(0);
        if d == 0 {
            return Err(LfunError::InvalidPoly("polynomial reduces to a constant".into()));
        }
        all.truncate(d + 1);
        let f = Self::new(field, all[1..].to_vec())?;
        f.require_tame()?;
        Ok(f)
    }

    fn validate(&self) -> Result<(), LfunError> {
        let d = self.coeffs.len().saturating_sub(1);
        if d == 0 || self.coeffs[d].is_zero() {
            return Err(LfunError::InvalidPoly("leading coefficient must be nonzero".into()));
        }
        Ok(())
    }

    /// The L-function has degree d-1 only when p does not divide d.
    pub fn require_tame(&self) -> Result<(), LfunError> {
        let d = self.degree();
        if d as u64 % self.field.p() == 0 {
            return Err(LfunError::InvalidPoly(format!("degree {d} divisible by p={}", self.field.p())));
        }
        Ok(())
    }

    /// Same polynomial plus a constant term.
    pub fn with_constant(&self, a0: FqElem) -> Result<Self, LfunError> {
        if a0.field() != &self.field {
            return Err(LfunError::WrongField);
        }
        let mut g = self.clone();
        g.coeffs[0] = a0;
        Ok(g)
    }

    /// α·f.
    pub fn scale(&self, alpha: &FqElem) -> Result<Self, LfunError> {
        if alpha.field() != &self.field || alpha.is_zero() {
            return Err(LfunError::WrongField);
        }
        let coeffs = self.coeffs.iter().map(|a| alpha * a).collect();
        Ok(PolyOverFq { field: self.field.clone(), coeffs })
    }

    pub fn field(&self) -> &FieldDesc {
        &self.field
    }

    pub fn p(&self) -> u64 {
        self.field.p()
    }

    /// b with q = p^b.
    pub fn b(&self) -> usize {
        self.field.degree()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients a_0..a_d.
    pub fn coeffs(&self) -> &[FqElem] {
        &self.coeffs
    }

    pub fn eval(&self, x: &FqElem) -> FqElem {
        let mut acc = self.field.zero();
        for a in self.coeffs.iter().rev() {
            acc = &(&acc * x) + a;
        }
        acc
    }

    /// Evaluation at x in an extension, via an embedding of the base field.
    fn eval_embedded(&self, coeffs: &[FqElem], x: &FqElem) -> FqElem {
        let mut acc = x.field().zero();
        for a in coeffs.iter().rev() {
            acc = &(&acc * x) + a;
        }
        acc
    }
}

/// Options shared by every L-function computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LOptions {
    pub eval: EvalOptions,
    /// Largest q^k enumerated for the degree-check sums S_d..S_{d+2}.
    pub degree_check_cap: u128,
}

impl Default for LOptions {
    fn default() -> Self {
        LOptions { eval: EvalOptions::default(), degree_check_cap: DEFAULT_DEGREE_CHECK_CAP }
    }
}

/// Histograms of (Tr(c_1 f(x)), ..., Tr(c_m f(x))) over F_{q^k}, for k = 1..=kmax.
///
/// Sums with k < `required` must be enumerable; later ones are `None` once
/// q^k passes `optional_cap`.
pub fn trace_histograms(
    f: &PolyOverFq,
    functionals: &[FqElem],
    required: usize,
    kmax: usize,
    optional_cap: u128,
    opts: EvalOptions,
) -> Result<Vec<Option<TraceHistogram>>, LfunError> {
    let p = f.p();
    let b = f.b();
    if functionals.iter().any(|c| c.field() != f.field()) {
        return Err(LfunError::WrongField);
    }
    let mut out = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let n = b * k;
        let order = checked_pow(p, n as u32).map(|q| q as u128);
        let limit = if k <= required { ENUMERATION_CAP } else { optional_cap.min(ENUMERATION_CAP) };
        match order {
            Some(q) if q <= limit => {}
            _ if k <= required => return Err(LfunError::CapExceeded { p, n }),
            _ => {
                out.push(None);
                continue;
            }
        }
        let big = cached_field(p, n)?;
        let emb = f.field().embedding_into(&big)?;
        let coeffs: Vec<FqElem> = f.coeffs().iter().map(|a| emb.map(a)).collect();
        let funcs: Vec<FqElem> = functionals.iter().map(|c| emb.map(c)).collect();
        let prep = histogram::prepare(&big, &coeffs, &funcs);
        out.push(Some(histogram::run(&prep, opts)));
    }
    Ok(out)
}

/// S_f(k, χ_1) for α f, i.e. Σ_{x ∈ F_{q^k}} ζ_p^{Tr(α f(x))}.
pub fn exp_sum(f: &PolyOverFq, k: usize, alpha: &FqElem, opts: EvalOptions) -> Result<CycNum, LfunError> {
    if alpha.is_zero() {
        return Err(LfunError::TrivialCharacter);
    }
    let hists = trace_histograms(f, std::slice::from_ref(alpha), k, k, 0, opts)?;
    let h = hists[k - 1].as_ref().expect("required sum computed");
    Ok(CycNum::from_counts(f.p(), &h.counts))
}

/// Which of c_d, c_{d+1}, c_{d+2} were checked to vanish.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DegreeCheck {
    pub verified: Vec<usize>,
    pub skipped: Vec<usize>,
}

/// L(s) = 1 + c_1 s + ... + c_{d-1} s^{d-1} over F_q, q = p^b.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LPolynomial {
    pub p: u64,
    pub b: usize,
    pub coeffs: Vec<CycNum>,
    pub degree_check: DegreeCheck,
}

impl LPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn q(&self) -> BigInt {
        big_pow(self.p, self.b as u32)
    }
}

/// Solves n c_n = Σ_{k=1}^n S_k c_{n-k} for the degree-(d-1) L-polynomial.
///
/// `sums[k-1]` holds S_k. S_1..S_{d-1} are required; S_d..S_{d+2}, when
/// present, must make c_d, c_{d+1}, c_{d+2} vanish.
pub fn l_from_power_sums(p: u64, b: usize, d: usize, sums: &[Option<CycNum>]) -> Result<LPolynomial, LfunError> {
    let mut c: Vec<CycNum> = vec![CycNum::one(p)];
    let mut check = DegreeCheck::default();
    for n in 1..=d + 2 {
        let available = sums.len() >= n && sums[..n].iter().all(Option::is_some);
        if !available {
            if n < d {
                return Err(LfunError::CapExceeded { p, n: b * n });
            }
            check.skipped.push(n);
            continue;
        }
        let mut acc = CycNum::zero(p);
        for k in 1..=n {
            let s = sums[k - 1].as_ref().unwrap();
            acc = &acc + &(s * &c[n - k]);
        }
        let cn = acc.scale(&BigRational::new(BigInt::one(), BigInt::from(n)));
        if !cn.is_integral() {
            return Err(LfunError::InexactDivision { n });
        }
        if n < d {
            c.push(cn);
        } else {
            if !cn.is_zero() {
                return Err(LfunError::DegreeCheck { n });
            }
            check.verified.push(n);
            c.push(cn);
        }
    }
    c.truncate(d);
    let l = LPolynomial { p, b, coeffs: c, degree_check: check };
    check_functional_equation(&l)?;
    Ok(l)
}

/// σ_{-1}(c_j)·c_{d-1} = q^j·c_{d-1-j} for all j.
pub fn check_functional_equation(l: &LPolynomial) -> Result<(), LfunError> {
    let m = l.degree();
    let q = l.q();
    let top = &l.coeffs[m];
    let mut qj = BigInt::one();
    for j in 0..=m {
        let lhs = &l.coeffs[j].galois(l.p - 1) * top;
        let rhs = l.coeffs[m - j].scale_int(&qj);
        if lhs != rhs {
            return Err(LfunError::FunctionalEquation { j });
        }
        qj *= &q;
    }
    Ok(())
}

/// L-function of α f with the character ζ_p^{Tr(·)}.
pub fn l_poly(f: &PolyOverFq, alpha: &FqElem, opts: &LOptions) -> Result<LPolynomial, LfunError> {
    if alpha.is_zero() {
        return Err(LfunError::TrivialCharacter);
    }
    f.require_tame()?;
    let d = f.degree();
    let hists = trace_histograms(f, std::slice::from_ref(alpha), d - 1, d + 2, opts.degree_check_cap, opts.eval)?;
    let sums: Vec<Option<CycNum>> = hists
        .iter()
        .map(|h| h.as_ref().map(|h| CycNum::from_counts(f.p(), &h.counts)))
        .collect();
    l_from_power_sums(f.p(), f.b(), d, &sums)
}

/// Result of the rank-ℓ reduction.
#[derive(Debug, Clone)]
pub struct RankEllL {
    pub l: LPolynomial,
    /// α = Σ n_i c_i in the base field.
    pub alpha: FqElem,
}

/// L_f(χ_ℓ, s) for the character of F_{p^ℓ} with χ_ℓ(c_i^*) = ζ^{n_i}, where
/// (c_i^*) is the trace-dual basis of `basis`.
///
/// `basis` lies in F_{p^ℓ} (its own descriptor); it is embedded into the base
/// field of f. The reduction identity L_f(χ_ℓ, s) = L_{αf}(χ_1, s) is used.
pub fn l_poly_rank_ell(
    f: &PolyOverFq,
    basis: &[FqElem],
    n: &[u64],
    opts: &LOptions,
) -> Result<RankEllL, LfunError> {
    let alpha = rank_ell_alpha(f, basis, n)?;
    let l = l_poly(f, &alpha, opts)?;
    Ok(RankEllL { l, alpha })
}

/// α = Σ n_i c_i, embedded into the base field of f, after checking that
/// ζ^{Tr(α c_j^*)} = ζ^{n_j} on the dual basis.
pub fn rank_ell_alpha(f: &PolyOverFq, basis: &[FqElem], n: &[u64]) -> Result<FqElem, LfunError> {
    let p = f.p();
    let sub = basis.first().map(|c| c.field().clone()).ok_or(LfunError::TrivialCharacter)?;
    let ell = sub.degree();
    if basis.len() != ell || n.len() != ell || basis.iter().any(|c| c.field() != &sub) {
        return Err(LfunError::InvalidPoly("basis and exponents must have length ell".into()));
    }
    if f.b() % ell != 0 {
        return Err(LfunError::NotSubfield { p, ell, b: f.b() });
    }
    if n.iter().all(|&x| x % p == 0) {
        return Err(LfunError::TrivialCharacter);
    }
    let dual = sub.dual_basis(basis)?;
    let mut alpha = sub.zero();
    for (c, &ni) in basis.iter().zip(n) {
        alpha = &alpha + &c.scale(ni % p);
    }
    for (cj, &nj) in dual.iter().zip(n) {
        assert_eq!((&alpha * cj).trace_abs(), nj % p, "character values on the dual basis");
    }
    let emb = sub.embedding_into(f.field())?;
    Ok(emb.map(&alpha))
}

/// S_f(k, χ_ℓ) evaluated literally: z = Tr_{F_{q^k}/F_{p^ℓ}} f(x) is expanded
/// in the dual basis as Σ Tr(c_i z) c_i^*, and χ_ℓ(z) = Π ζ^{n_i Tr(c_i z)}.
///
/// Independent of the α-reduction; intended for small fields.
pub fn exp_sum_dual_form(f: &PolyOverFq, k: usize, basis: &[FqElem], n: &[u64]) -> Result<CycNum, LfunError> {
    let p = f.p();
    let sub = basis.first().map(|c| c.field().clone()).ok_or(LfunError::TrivialCharacter)?;
    let ell = sub.degree();
    let big_n = f.b() * k;
    if big_n % ell != 0 {
        return Err(LfunError::NotSubfield { p, ell, b: f.b() });
    }
    let big = cached_field(p, big_n)?;
    let emb_base = f.field().embedding_into(&big)?;
    let emb_sub = sub.embedding_into(&big)?;
    let coeffs: Vec<FqElem> = f.coeffs().iter().map(|a| emb_base.map(a)).collect();
    let cs: Vec<FqElem> = basis.iter().map(|c| emb_sub.map(c)).collect();
    let mut counts = vec![0u64; p as usize];
    for x in big.elements()? {
        let y = f.eval_embedded(&coeffs, &x);
        // Relative trace: Σ_j y^{p^{ℓ j}}.
        let mut z = big.zero();
        let mut t = y;
        for _ in 0..big_n / ell {
            z = &z + &t;
            for _ in 0..ell {
                t = t.frobenius();
            }
        }
        let mut e = 0u64;
        for (c, &ni) in cs.iter().zip(n) {
            // Tr_{F_{p^ℓ}/F_p}(c z) as Σ_{j<ℓ} (c z)^{p^j}.
            let w = c * &z;
            let mut s = big.zero();
            let mut u = w;
            for _ in 0..ell {
                s = &s + &u;
                u = u.frobenius();
            }
            let v = s.as_prime_field().expect("absolute trace lies in F_p");
            e = (e + v * (ni % p)) % p;
        }
        counts[e as usize] += 1;
    }
    Ok(CycNum::from_counts(p, &counts))
}

/// Normalized Newton polygon: points (i, v_p(c_i)/b).
pub fn np_of_l(l: &LPolynomial) -> Result<NewtonPolygon, LfunError> {
    let b = BigInt::from(l.b);
    let pts: Vec<(BigRational, ExtRational)> = l
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let v = match c.valuation() {
                ExtRational::Finite(v) => ExtRational::Finite(v / &b),
                ExtRational::Infinity => ExtRational::Infinity,
            };
            (BigRational::from_integer(BigInt::from(i)), v)
        })
        .collect();
    let np = hull_from_values(&pts).map_err(|_| LfunError::Endpoint)?;
    let m = l.degree();
    let expected = (BigRational::from_integer(BigInt::from(m)), BigRational::new(BigInt::from(m), BigInt::from(2)));
    if np.end() != &expected {
        return Err(LfunError::Endpoint);
    }
    Ok(np)
}

/// Histograms for all functionals of a subfield F_{p^ℓ} ⊆ F_q at once, so
/// that L_{αf} for every α ∈ F_{p^ℓ}^* is a cheap projection.
#[derive(Debug, Clone)]
pub struct SubfieldScan {
    f: PolyOverFq,
    sub: FieldDesc,
    hists: Vec<Option<TraceHistogram>>,
    embedded: Vec<FqElem>,
}

impl SubfieldScan {
    pub fn new(f: &PolyOverFq, ell: usize, opts: &LOptions) -> Result<Self, LfunError> {
        let p = f.p();
        if ell == 0 || f.b() % ell != 0 {
            return Err(LfunError::NotSubfield { p, ell, b: f.b() });
        }
        f.require_tame()?;
        let sub = cached_field(p, ell)?;
        let emb = sub.embedding_into(f.field())?;
        let basis: Vec<FqElem> = (0..ell)
            .map(|m| {
                let mut c = vec![0u64; ell];
                c[m] = 1;
                emb.map(&sub.element(&c))
            })
            .collect();
        let d = f.degree();
        let hists = trace_histograms(f, &basis, d - 1, d + 2, opts.degree_check_cap, opts.eval)?;
        let q_sub = sub.order().expect("small subfield");
        let embedded = (1..q_sub).map(|i| emb.map(&sub.element_at(i))).collect();
        Ok(SubfieldScan { f: f.clone(), sub, hists, embedded })
    }

    pub fn subfield(&self) -> &FieldDesc {
        &self.sub
    }

    pub fn poly(&self) -> &PolyOverFq {
        &self.f
    }

    /// Nonzero α ∈ F_{p^ℓ} in enumeration order.
    pub fn alphas(&self) -> Vec<FqElem> {
        let q = self.sub.order().expect("small subfield");
        (1..q).map(|i| self.sub.element_at(i)).collect()
    }

    /// Image of the i-th nonzero subfield element in the base field.
    pub fn embedded_alpha(&self, i: usize) -> &FqElem {
        &self.embedded[i]
    }

    pub fn histograms(&self) -> &[Option<TraceHistogram>] {
        &self.hists
    }

    /// S_{αf}(k) for α in the subfield (given in its own coordinates).
    pub fn power_sum(&self, k: usize, alpha: &FqElem) -> Option<CycNum> {
        let h = self.hists.get(k - 1)?.as_ref()?;
        Some(CycNum::from_counts(self.f.p(), &h.project(alpha.coeffs())))
    }

    pub fn l_poly(&self, alpha: &FqElem) -> Result<LPolynomial, LfunError> {
        if alpha.field() != &self.sub {
            return Err(LfunError::WrongField);
        }
        if alpha.is_zero() {
            return Err(LfunError::TrivialCharacter);
        }
        let sums: Vec<Option<CycNum>> = (1..=self.hists.len()).map(|k| self.power_sum(k, alpha)).collect();
        l_from_power_sums(self.f.p(), self.f.b(), self.f.degree(), &sums)
    }

    /// Number of x ∈ F_{q^k} with Tr_{F_{q^k}/F_{p^ℓ}} f(x) = 0.
    pub fn relative_trace_zeros(&self, k: usize) -> Option<u64> {
        self.hists.get(k - 1)?.as_ref().map(|h| h.counts[0])
    }
}
