//! Artin-Hasse coefficients, leading terms of the Dwork series G_n, the
//! auxiliary polynomial Q_M and finite checks of the Newton polygon transform.
//!
//! The uniformiser γ (a root of log E with v_p(γ) = 1/(p-1)) is never
//! expanded. Entries are polynomials in γ over Q(ζ_p) valued by the Gauss
//! valuation min_k (k/(p-1) + v_p(c_k)), which is multiplicative.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::arith::{is_prime_u64, rat};
use crate::cyclo::{CycNum, ExtRational};
use crate::multipoly::{Monomial, MultiPoly};
use crate::polygon::{hull_of_sequence, NewtonPolygon};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DworkError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("the minimal stratum of G_{n} has an exponent >= p = {p}")]
    Stratum { n: i64, p: u64 },
    #[error("Artin-Hasse coefficient e_{m} failed the {what} check")]
    ArtinHasse { m: usize, what: &'static str },
}

/// Coefficients e_0..e_N of the Artin-Hasse exponential at p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtinHasseSeries {
    pub p: u64,
    pub coeffs: Vec<BigRational>,
}

impl ArtinHasseSeries {
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, m: usize) -> &BigRational {
        &self.coeffs[m]
    }
}

/// E(x) = exp(Σ_k x^{p^k}/p^k) to order N, from n e_n = Σ_{p^k <= n} e_{n-p^k}.
pub fn artin_hasse_coeffs(p: u64, n: usize) -> Result<ArtinHasseSeries, DworkError> {
    if !is_prime_u64(p) {
        return Err(DworkError::NotPrime(p));
    }
    if n == 0 {
        return Err(DworkError::Parameter("truncation must be at least 1".into()));
    }
    let mut powers = Vec::new();
    let mut pk = 1usize;
    while pk <= n {
        powers.push(pk);
        pk = match pk.checked_mul(p as usize) {
            Some(v) => v,
            None => break,
        };
    }
    let mut e = vec![BigRational::one()];
    for m in 1..=n {
        let mut acc = BigRational::zero();
        for &q in &powers {
            if q > m {
                break;
            }
            acc += &e[m - q];
        }
        e.push(acc / BigRational::from_integer(BigInt::from(m)));
    }
    let pb = BigInt::from(p);
    let mut fact = BigInt::one();
    for (m, c) in e.iter().enumerate() {
        if m > 0 {
            fact *= m;
        }
        if (c.denom() % &pb).is_zero() {
            return Err(DworkError::ArtinHasse { m, what: "p-integrality" });
        }
        if (m as u64) < p && *c != BigRational::new(BigInt::one(), fact.clone()) {
            return Err(DworkError::ArtinHasse { m, what: "1/m!" });
        }
    }
    Ok(ArtinHasseSeries { p, coeffs: e })
}

/// The lowest γ-power c = ⌈n/d⌉ of G_n and its coefficient, so that
/// G_n ≡ γ^c · lead (mod γ^{c+1}).
pub fn g_n_leading(d: usize, p: u64, n: i64) -> Result<(i64, MultiPoly), DworkError> {
    if d < 1 || n < 1 {
        return Err(DworkError::Parameter(format!("need d >= 1 and n >= 1, got d={d}, n={n}")));
    }
    let c = (n + d as i64 - 1) / d as i64;
    let ah = artin_hasse_coeffs(p, c as usize)?;
    // Dynamic programme over variables A_d, A_{d-1}, ..., A_1 with state
    // (x-degree, γ-degree). Each step multiplies by the truncated E(A_k γ x^k).
    let mut states: HashMap<(i64, i64), MultiPoly> = HashMap::new();
    states.insert((0, 0), MultiPoly::one(d));
    for k in (1..=d).rev() {
        let kk = k as i64;
        let mut next: HashMap<(i64, i64), MultiPoly> = HashMap::new();
        for ((w, g), poly) in &states {
            let mut m = 0i64;
            while w + kk * m <= n && g + m <= c {
                let (w2, g2) = (w + kk * m, g + m);
                // Variables A_1..A_{k-1} add at most (k-1) per unit of γ.
                if n - w2 <= (kk - 1) * (c - g2) {
                    let mut e = vec![0u32; d];
                    e[k - 1] = m as u32;
                    let term = poly.mul_monomial(&Monomial(e)).scale(ah.coeff(m as usize));
                    let slot = next.entry((w2, g2)).or_insert_with(|| MultiPoly::zero(d));
                    *slot = &*slot + &term;
                }
                m += 1;
            }
        }
        states = next;
    }
    let lead = states.remove(&(n, c)).unwrap_or_else(|| MultiPoly::zero(d));
    if lead.terms().any(|(m, _)| m.exponents().iter().any(|&e| e as u64 >= p)) {
        return Err(DworkError::Stratum { n, p });
    }
    Ok((c, lead))
}

/// Σ_k c_k γ^k with c_k ∈ Q(ζ_p).
#[derive(Clone, PartialEq, Eq)]
pub struct GammaScaled {
    p: u64,
    terms: BTreeMap<u32, CycNum>,
}

impl GammaScaled {
    pub fn zero(p: u64) -> GammaScaled {
        GammaScaled { p, terms: BTreeMap::new() }
    }

    pub fn one(p: u64) -> GammaScaled {
        GammaScaled::monomial(0, CycNum::one(p))
    }

    /// value · γ^exp.
    pub fn monomial(exp: u32, value: CycNum) -> GammaScaled {
        let p = value.p();
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(exp, value);
        }
        GammaScaled { p, terms }
    }

    pub fn gamma_power(p: u64, exp: u32) -> GammaScaled {
        GammaScaled::monomial(exp, CycNum::one(p))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&u32, &CycNum)> {
        self.terms.iter()
    }

    /// Gauss valuation with v_p(γ) = 1/(p-1).
    pub fn valuation(&self) -> ExtRational {
        let mut best = ExtRational::Infinity;
        for (&k, c) in &self.terms {
            let v = &ExtRational::Finite(rat(k as i64, self.p as i64 - 1)) + &c.valuation();
            if v < best {
                best = v;
            }
        }
        best
    }

    fn add_term(&mut self, k: u32, c: CycNum) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&k) {
            Some(old) => &old + &c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(k, sum);
        }
    }
}

impl<'a> std::ops::Add<&'a GammaScaled> for &'a GammaScaled {
    type Output = GammaScaled;
    fn add(self, rhs: &GammaScaled) -> GammaScaled {
        assert_eq!(self.p, rhs.p, "mismatched p");
        let mut out = self.clone();
        for (&k, c) in &rhs.terms {
            out.add_term(k, c.clone());
        }
        out
    }
}

impl std::ops::Neg for &GammaScaled {
    type Output = GammaScaled;
    fn neg(self) -> GammaScaled {
        GammaScaled { p: self.p, terms: self.terms.iter().map(|(&k, c)| (k, -c)).collect() }
    }
}

impl<'a> std::ops::Sub<&'a GammaScaled> for &'a GammaScaled {
    type Output = GammaScaled;
    fn sub(self, rhs: &GammaScaled) -> GammaScaled {
        self + &(-rhs)
    }
}

impl<'a> std::ops::Mul<&'a GammaScaled> for &'a GammaScaled {
    type Output = GammaScaled;
    fn mul(self, rhs: &GammaScaled) -> GammaScaled {
        assert_eq!(self.p, rhs.p, "mismatched p");
        let mut out = GammaScaled::zero(self.p);
        for (&a, x) in &self.terms {
            for (&b, y) in &rhs.terms {
                out.add_term(a + b, x * y);
            }
        }
        out
    }
}

impl fmt::Debug for GammaScaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(k, c)| format!("({c:?})γ^{k}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Leading t x t block of a nuclear matrix, with the declared bound on
/// rows beyond t.
#[derive(Debug, Clone)]
pub struct TruncatedMatrix {
    pub p: u64,
    pub entries: Vec<Vec<GammaScaled>>,
    /// Lower bound h_{t+1} for the valuations of every row past t.
    pub tail_bound: BigRational,
}

impl TruncatedMatrix {
    pub fn new(p: u64, entries: Vec<Vec<GammaScaled>>, tail_bound: BigRational) -> Result<TruncatedMatrix, DworkError> {
        let t = entries.len();
        if t == 0 || entries.iter().any(|row| row.len() != t) {
            return Err(DworkError::Parameter("matrix must be square and nonempty".into()));
        }
        if entries.iter().flatten().any(|e| e.p() != p) {
            return Err(DworkError::Parameter("entries over different cyclotomic fields".into()));
        }
        Ok(TruncatedMatrix { p, entries, tail_bound })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn identity(p: u64, t: usize) -> TruncatedMatrix {
        let entries = (0..t)
            .map(|i| (0..t).map(|j| if i == j { GammaScaled::one(p) } else { GammaScaled::zero(p) }).collect())
            .collect();
        TruncatedMatrix { p, entries, tail_bound: BigRational::one() }
    }

    pub fn diagonal(p: u64, diag: Vec<GammaScaled>) -> TruncatedMatrix {
        let t = diag.len();
        let mut entries: Vec<Vec<GammaScaled>> = (0..t).map(|_| (0..t).map(|_| GammaScaled::zero(p)).collect()).collect();
        for (i, x) in diag.into_iter().enumerate() {
            entries[i][i] = x;
        }
        TruncatedMatrix { p, entries, tail_bound: BigRational::one() }
    }

    /// Determinant of the submatrix on the given rows and columns.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> GammaScaled {
        det(&rows.iter().map(|&i| cols.iter().map(|&j| self.entries[i][j].clone()).collect()).collect::<Vec<_>>(), self.p)
    }
}

/// Determinant by cofactor expansion along the first row.
fn det(m: &[Vec<GammaScaled>], p: u64) -> GammaScaled {
    let n = m.len();
    if n == 0 {
        return GammaScaled::one(p);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = GammaScaled::zero(p);
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let sub: Vec<Vec<GammaScaled>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][c] * &det(&sub, p);
        acc = if c % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// Q_M(s) = 1 + Σ_{n=1}^{t} det(m_ij)_{1<=i,j<=n} s^n, as coefficients of s^0..s^t.
pub fn q_aux_poly(m: &TruncatedMatrix) -> Vec<GammaScaled> {
    let mut out = vec![GammaScaled::one(m.p)];
    for n in 1..=m.size() {
        let idx: Vec<usize> = (0..n).collect();
        out.push(m.minor(&idx, &idx));
    }
    out
}

/// det(1 - Ms) = Σ c_n s^n with (-1)^n c_n the sum of the n x n principal minors.
pub fn char_series(m: &TruncatedMatrix) -> Vec<GammaScaled> {
    let t = m.size();
    let mut out = vec![GammaScaled::zero(m.p); t + 1];
    for mask in 0u32..1 << t {
        let idx: Vec<usize> = (0..t).filter(|&i| mask >> i & 1 == 1).collect();
        let minor = m.minor(&idx, &idx);
        let k = idx.len();
        out[k] = if k % 2 == 0 { &out[k] + &minor } else { &out[k] - &minor };
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformReport {
    pub hypotheses_hold: bool,
    /// Human-readable reason when a hypothesis fails.
    pub failure: Option<String>,
    pub np_det: NewtonPolygon,
    pub np_q: NewtonPolygon,
    pub equal: bool,
}

fn np_of(coeffs: &[GammaScaled]) -> NewtonPolygon {
    let vals: Vec<ExtRational> = coeffs.iter().map(GammaScaled::valuation).collect();
    hull_of_sequence(&vals).expect("constant term is 1")
}

/// Checks the hypotheses of the transform proposition for the t x t block
/// (b = 1), then compares NP^{<1}(det(1 - Ms)) with NP(Q_M).
///
/// `h` holds h_1..h_t. The hypotheses are: h strictly increasing with gaps
/// >= δ, h_t < 1 <= tail_bound with tail_bound - h_t >= δ, v(m_ij) >= h_i,
/// and v(det of the leading n x n block) < h_1 + ... + h_n + δ/2.
pub fn np_transform_check(m: &TruncatedMatrix, h: &[BigRational], delta: &BigRational) -> Result<TransformReport, DworkError> {
    let t = m.size();
    if h.len() != t {
        return Err(DworkError::Parameter(format!("need {t} bounds h_i, got {}", h.len())));
    }
    if !delta.is_positive() {
        return Err(DworkError::Parameter("δ must be positive".into()));
    }
    let one = BigRational::one();
    let mut failure = None;
    let mut bounds = h.to_vec();
    bounds.push(m.tail_bound.clone());
    for i in 0..t {
        if &bounds[i + 1] - &bounds[i] < *delta {
            failure = Some(format!("gap h_{} - h_{} is below δ", i + 2, i + 1));
            break;
        }
    }
    if failure.is_none() && (h[t - 1] >= one || m.tail_bound < one) {
        failure = Some("need h_t < 1 <= h_{t+1}".into());
    }
    if failure.is_none() {
        'rows: for (i, row) in m.entries.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if x.valuation() < ExtRational::Finite(h[i].clone()) {
                    failure = Some(format!("v(m_{},{}) < h_{}", i + 1, j + 1, i + 1));
                    break 'rows;
                }
            }
        }
    }
    let q = q_aux_poly(m);
    if failure.is_none() {
        let mut sum = BigRational::zero();
        let half = delta / BigRational::from_integer(BigInt::from(2));
        for n in 1..=t {
            sum += &h[n - 1];
            if q[n].valuation() >= ExtRational::Finite(&sum + &half) {
                failure = Some(format!("leading {n}x{n} minor is too divisible"));
                break;
            }
        }
    }
    let np_det = np_of(&char_series(m)).truncate_lt_one();
    let np_q = np_of(&q);
    let hypotheses_hold = failure.is_none();
    let equal = hypotheses_hold && np_det == np_q;
    Ok(TransformReport { hypotheses_hold, failure, np_det, np_q, equal })
}

/// A random matrix satisfying the transform hypotheses, with its bounds.
#[derive(Debug, Clone)]
pub struct GeneratedMatrix {
    pub matrix: TruncatedMatrix,
    pub h: Vec<BigRational>,
    pub delta: BigRational,
}

fn random_integer(p: u64, rng: &mut impl Rng, spread: i64) -> CycNum {
    let coords: Vec<BigRational> = (0..p - 1).map(|_| rat(rng.gen_range(-spread..=spread), 1)).collect();
    CycNum::from_coords(p, &coords)
}

/// Random t x t block over Q(ζ_p)[γ] with h_i = e_i/(p-1) for random
/// increasing e_1 < ... < e_t < p-1 and h_{t+1} = 1. Row i is γ^{e_i} times
/// an integral element plus random higher γ-terms. Candidates whose leading
/// minors lose valuation are redrawn, so every output satisfies the hypotheses.
pub fn generate_transform_matrix(p: u64, t: usize, rng: &mut impl Rng) -> Result<GeneratedMatrix, DworkError> {
    if !is_prime_u64(p) {
        return Err(DworkError::NotPrime(p));
    }
    if t == 0 || t as u64 > p - 1 {
        return Err(DworkError::Parameter(format!("need 1 <= t <= p-1, got t={t}")));
    }
    loop {
        let mut exps: Vec<u32> = (0..(p - 1) as u32).collect();
        while exps.len() > t {
            let k = rng.gen_range(0..exps.len());
            exps.remove(k);
        }
        let h: Vec<BigRational> = exps.iter().map(|&e| rat(e as i64, p as i64 - 1)).collect();
        let mut gaps: Vec<u32> = exps.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.push((p - 1) as u32 - exps[t - 1]);
        let delta = rat(*gaps.iter().min().expect("t >= 1") as i64, p as i64 - 1);
        let entries: Vec<Vec<GammaScaled>> = exps
            .iter()
            .map(|&e| {
                (0..t)
                    .map(|_| {
                        let mut x = GammaScaled::monomial(e, random_integer(p, rng, 3));
                        for extra in 1..=2u32 {
                            if rng.gen_bool(0.5) {
                                x = &x + &GammaScaled::monomial(e + extra, random_integer(p, rng, 2));
                            }
                        }
                        x
                    })
                    .collect()
            })
            .collect();
        let matrix = TruncatedMatrix::new(p, entries, BigRational::one())?;
        let report = np_transform_check(&matrix, &h, &delta)?;
        if report.hypotheses_hold {
            return Ok(GeneratedMatrix { matrix, h, delta });
        }
    }
}
