//! Global generic polynomials over Q.
//!
//! For r ∈ (Z/dZ)^* the factors of Ψ̃_r are A_d, the H̃_ij (1 <= i, j <= d-1)
//! and the f̃_n (1 <= n <= d-2). A point a ∈ Q^d lies in U when every factor
//! of every Ψ̃_r is nonzero at a. Mod p, for p ≡ r (mod d) large enough,
//! K̃_ij agrees with v_i A_d^{⌈(pi-j)/d⌉-d} H̃_ij, which is what links the
//! factors to the leading γ-terms of the Dwork matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{ceil_div, factor_bounded, factorial, inv_mod, is_prime_u64, mul_mod, rat};
use crate::fields::{FieldDesc, FqElem};
use crate::gnp::{assignment_min, next_permutation, residue_tables};
use crate::multipoly::{Monomial, MultiPoly};

/// Trial-division bound used when factoring factor values.
pub const TRIAL_DIVISION_BOUND: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenpolyError {
    #[error("degree {0} is out of range (need d >= 2)")]
    Degree(usize),
    #[error("residue {r} is not a unit mod {d}")]
    BadResidue { d: usize, r: u64 },
    #[error("index {what} = {value} is out of range 1..={max}")]
    Index { what: &'static str, value: usize, max: usize },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p = {p} is below the required bound {bound}")]
    PrimeTooSmall { p: u64, bound: u64 },
    #[error("a denominator of {poly} is divisible by p = {p}")]
    NonUnitDenominator { poly: String, p: u64 },
    #[error("the layered construction of σ_0 did not produce a permutation")]
    Sigma0NotPermutation,
    #[error("{0}")]
    Invariant(String),
    #[error("the point is not in U: factor {label} of Ψ̃_{r} vanishes")]
    NotInU { r: u64, label: FactorLabel },
    #[error("expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
}

fn check_d(d: usize) -> Result<(), GenpolyError> {
    if d < 2 {
        return Err(GenpolyError::Degree(d));
    }
    Ok(())
}

fn check_r(d: usize, r: u64) -> Result<u64, GenpolyError> {
    check_d(d)?;
    let r = r % d as u64;
    if r.gcd(&(d as u64)) != 1 {
        return Err(GenpolyError::BadResidue { d, r });
    }
    Ok(r)
}

fn check_index(what: &'static str, value: usize, max: usize) -> Result<(), GenpolyError> {
    if value == 0 || value > max {
        return Err(GenpolyError::Index { what, value, max });
    }
    Ok(())
}

/// r_ij = (-(ri - j)) mod d.
pub fn r_ij(d: usize, r: u64, i: usize, j: usize) -> i64 {
    (-(r as i64 * i as i64 - j as i64)).rem_euclid(d as i64)
}

/// δ_ij = ⌈(pi-1)/d⌉ - ⌈(pi-j)/d⌉ for any p ≡ r (mod d). It is 1 exactly
/// when r'_i1 = (ri - 1) mod d is nonzero and j >= r'_i1 + 1.
pub fn delta_ij(d: usize, r: u64, i: usize, j: usize) -> u32 {
    let rp = (r as i64 * i as i64 - 1).rem_euclid(d as i64);
    u32::from(rp != 0 && j as i64 >= rp + 1)
}

/// Exponent vectors m ∈ Z_{>=0}^d with Σ_{k<d} (d-k) m_k = target and Σ m_k = d.
pub fn m_set(d: usize, target: i64) -> Vec<Monomial> {
    fn rec(d: usize, k: usize, weight: i64, count: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if k == d {
            if weight == 0 {
                let mut m = cur.clone();
                m.push(d as u32 - count);
                out.push(Monomial(m));
            }
            return;
        }
        let w = (d - k) as i64;
        let mut mk = 0u32;
        while w * mk as i64 <= weight && count + mk <= d as u32 {
            cur.push(mk);
            rec(d, k + 1, weight - w * mk as i64, count + mk, cur, out);
            cur.pop();
            mk += 1;
        }
    }
    let mut out = Vec::new();
    rec(d, 1, target, 0, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Exponent vectors with Σ k m_k = n and Σ m_k = c.
pub fn weighted_compositions(d: usize, n: i64, c: i64) -> Vec<Monomial> {
    fn rec(d: usize, k: usize, n: i64, c: i64, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if k == d {
            if n == d as i64 * c {
                let mut m = cur.clone();
                m.push(c as u32);
                out.push(Monomial(m));
            }
            return;
        }
        let kk = k as i64;
        let dd = d as i64;
        for mk in 0..=c {
            let (n2, c2) = (n - kk * mk, c - mk);
            if n2 < 0 {
                break;
            }
            // The remaining variables have weights k+1..d.
            if n2 < (kk + 1) * c2 || n2 > dd * c2 {
                continue;
            }
            cur.push(mk as u32);
            rec(d, k + 1, n2, c2, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n >= 0 && c >= 0 {
        rec(d, 1, n, c, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

/// h_{m,i,j} = Π_{l=0}^{Σ_{k<d} m_k + δ_ij - 1} ((r_i1 - 1)/d - l) / Π_{k<d} m_k!.
pub fn h_coefficient(d: usize, r: u64, i: usize, j: usize, m: &Monomial) -> BigRational {
    let base = rat(r_ij(d, r, i, 1) - 1, d as i64);
    let s: u32 = m.0[..d - 1].iter().sum();
    let len = s + delta_ij(d, r, i, j);
    let mut num = BigRational::one();
    for l in 0..len {
        num *= &base - rat(l as i64, 1);
    }
    let den: BigInt = m.0[..d - 1].iter().map(|&e| factorial(e as u64)).product();
    num / BigRational::from_integer(den)
}

/// H̃_ij for residue class r.
pub fn h_tilde(d: usize, r: u64, i: usize, j: usize) -> Result<MultiPoly, GenpolyError> {
    let r = check_r(d, r)?;
    check_index("i", i, d - 1)?;
    check_index("j", j, d - 1)?;
    let support = m_set(d, r_ij(d, r, i, j));
    let mut h = MultiPoly::zero(d);
    for m in &support {
        let c = h_coefficient(d, r, i, j, m);
        if c.is_zero() {
            return Err(GenpolyError::Invariant(format!("h coefficient vanishes at {:?} (i={i}, j={j})", m.0)));
        }
        h.add_term(m.clone(), c);
    }
    if h.len() != support.len() || h.homogeneous_degree() != Some(d as u32) {
        return Err(GenpolyError::Invariant(format!("H̃_{i}{j} is not supported on M_ij in degree {d}")));
    }
    Ok(h)
}

/// The (n x n) matrix of H̃_ij, 0-based.
fn h_matrix(d: usize, r: u64, n: usize) -> Result<Vec<Vec<MultiPoly>>, GenpolyError> {
    (1..=n).map(|i| (1..=n).map(|j| h_tilde(d, r, i, j)).collect()).collect()
}

fn sign(perm: &[usize]) -> i32 {
    let mut seen = vec![false; perm.len()];
    let mut s = 1;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = perm[k];
            len += 1;
        }
        if len % 2 == 0 {
            s = -s;
        }
    }
    s
}

fn signed_product(hs: &[Vec<MultiPoly>], perm: &[usize]) -> MultiPoly {
    let d = hs[0][0].nvars();
    let mut acc = MultiPoly::one(d);
    for (i, &j) in perm.iter().enumerate() {
        acc = &acc * &hs[i][j];
    }
    if sign(perm) < 0 {
        -&acc
    } else {
        acc
    }
}

/// Minimisers of Σ r_{i,σ(i)} over S_n, 0-based.
pub fn s_min(d: usize, r: u64, n: usize) -> Result<Vec<Vec<usize>>, GenpolyError> {
    let r = check_r(d, r)?;
    check_index("n", n, d - 1)?;
    Ok(assignment_min(&residue_tables(d, r, n).full).minimizers)
}

/// f̃_n = Σ_{σ ∈ S_n^min} sgn(σ) Π H̃_{i,σ(i)}.
pub fn f_tilde(d: usize, r: u64, n: usize) -> Result<MultiPoly, GenpolyError> {
    let mins = s_min(d, r, n)?;
    let hs = h_matrix(d, r, n)?;
    let parts: Vec<MultiPoly> = mins.par_iter().map(|s| signed_product(&hs, s)).collect();
    let mut f = MultiPoly::zero(d);
    for part in &parts {
        f = &f + part;
    }
    if f.is_zero() {
        return Err(GenpolyError::Invariant(format!("f̃_{n} vanishes for d={d}, r={r}")));
    }
    if f.homogeneous_degree() != Some((n * d) as u32) {
        return Err(GenpolyError::Invariant(format!("f̃_{n} is not homogeneous of degree {}", n * d)));
    }
    Ok(f)
}

/// det(H̃_ij)_{n x n} by Laplace expansion over column subsets.
pub fn det_h(d: usize, r: u64, n: usize) -> Result<MultiPoly, GenpolyError> {
    let r = check_r(d, r)?;
    check_index("n", n, d - 1)?;
    let hs = h_matrix(d, r, n)?;
    // minors[mask] is the determinant of rows 0..popcount(mask) on the columns in mask.
    let mut minors: HashMap<u32, MultiPoly> = HashMap::new();
    minors.insert(0, MultiPoly::one(d));
    for row in 0..n {
        let masks: Vec<u32> = (0u32..1 << n).filter(|m| m.count_ones() as usize == row + 1).collect();
        let next: Vec<(u32, MultiPoly)> = masks
            .par_iter()
            .map(|&mask| {
                let mut acc = MultiPoly::zero(d);
                // Columns of mask in increasing order; removing the k-th one
                // from the last row's position gives sign (-1)^(row + k).
                let cols: Vec<usize> = (0..n).filter(|&c| mask >> c & 1 == 1).collect();
                for (k, &c) in cols.iter().enumerate() {
                    let term = &hs[row][c] * &minors[&(mask & !(1 << c))];
                    if (row + k) % 2 == 0 {
                        acc = &acc + &term;
                    } else {
                        acc = &acc - &term;
                    }
                }
                (mask, acc)
            })
            .collect();
        minors.retain(|m, _| m.count_ones() as usize == row + 1);
        minors.extend(next);
    }
    Ok(minors.remove(&((1u32 << n) - 1)).expect("full minor"))
}

/// The layered permutation σ_0 and its monomial Ξ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sigma0 {
    /// 0-based: perm[i] = σ_0(i+1) - 1.
    pub perm: Vec<usize>,
    /// #S_k for k = 0..d-1.
    pub layer_sizes: Vec<usize>,
    /// A_d^{(d-1)n + #S_0} A_{d-1}^{#S_1} ... A_1^{#S_{d-1}}.
    pub xi: Monomial,
}

pub fn sigma0(d: usize, r: u64, n: usize) -> Result<Sigma0, GenpolyError> {
    let r = check_r(d, r)?;
    check_index("n", n, d - 1)?;
    let mut perm = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    let mut layer_sizes = vec![0usize; d];
    for (k, size) in layer_sizes.iter_mut().enumerate() {
        let layer: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| perm[i] == usize::MAX && !col_used[j] && r_ij(d, r, i + 1, j + 1) == k as i64)
            .collect();
        for &(i, j) in &layer {
            if perm[i] != usize::MAX || col_used[j] {
                return Err(GenpolyError::Sigma0NotPermutation);
            }
            perm[i] = j;
            col_used[j] = true;
        }
        *size = layer.len();
    }
    if perm.contains(&usize::MAX) {
        return Err(GenpolyError::Sigma0NotPermutation);
    }
    let mut xi = vec![0u32; d];
    xi[d - 1] = ((d - 1) * n + layer_sizes[0]) as u32;
    for k in 1..d {
        xi[d - 1 - k] = layer_sizes[k] as u32;
    }
    Ok(Sigma0 { perm, layer_sizes, xi: Monomial(xi) })
}

/// Outcome of the leading-monomial certificate for one (d, r, n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeadCertificate {
    pub d: usize,
    pub r: u64,
    pub n: usize,
    pub sigma0: Sigma0,
    /// σ_0 attains the minimum of Σ r_{i,σ(i)}.
    pub sigma0_minimal: bool,
    /// Among the σ-summands of det(H̃), only σ_0 reaches the top monomial.
    pub unique_in_expansion: bool,
    pub det_leading: Option<Monomial>,
    pub f_leading: Option<Monomial>,
    pub holds: bool,
}

/// Checks that det(H̃)_{n x n} has a lex-top monomial reached by σ_0 alone,
/// that it equals the closed form Ξ, and that it survives in f̃_n.
pub fn lead_certificate(d: usize, r: u64, n: usize) -> Result<LeadCertificate, GenpolyError> {
    let r = check_r(d, r)?;
    let s0 = sigma0(d, r, n)?;
    let mins = s_min(d, r, n)?;
    let sigma0_minimal = mins.contains(&s0.perm);
    let hs = h_matrix(d, r, n)?;

    for (i, row) in hs.iter().enumerate() {
        for (j, h) in row.iter().enumerate() {
            let mut delta = vec![0u32; d];
            delta[d - 1] = d as u32 - 1;
            delta[d - 1 - r_ij(d, r, i + 1, j + 1) as usize] += 1;
            if h.leading_term().map(|t| t.0) != Some(&Monomial(delta)) {
                return Err(GenpolyError::Invariant(format!("unexpected leading monomial of H̃_{}{}", i + 1, j + 1)));
            }
        }
    }

    let mut top: Option<Monomial> = None;
    let mut attained = 0usize;
    let mut attained_by_s0 = false;
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let mut e = vec![0u32; d];
        for (i, &j) in perm.iter().enumerate() {
            for (acc, x) in e.iter_mut().zip(hs[i][j].leading_term().expect("nonzero").0.exponents()) {
                *acc += x;
            }
        }
        let m = Monomial(e);
        match top.as_ref().map(|t| m.cmp(t)) {
            None | Some(std::cmp::Ordering::Greater) => {
                top = Some(m);
                attained = 1;
                attained_by_s0 = perm == s0.perm;
            }
            Some(std::cmp::Ordering::Equal) => {
                attained += 1;
                attained_by_s0 |= perm == s0.perm;
            }
            Some(std::cmp::Ordering::Less) => {}
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let unique_in_expansion = attained == 1 && attained_by_s0 && top.as_ref() == Some(&s0.xi);

    let det = det_h(d, r, n)?;
    let f = f_tilde(d, r, n)?;
    let det_leading = det.leading_term().map(|t| t.0.clone());
    let f_leading = f.leading_term().map(|t| t.0.clone());
    let lead_coeff_agrees = det.leading_term().map(|t| t.1.clone()) == f.leading_term().map(|t| t.1.clone());
    let holds = sigma0_minimal
        && unique_in_expansion
        && det_leading.as_ref() == Some(&s0.xi)
        && f_leading.as_ref() == Some(&s0.xi)
        && lead_coeff_agrees;
    Ok(LeadCertificate { d, r, n, sigma0: s0, sigma0_minimal, unique_in_expansion, det_leading, f_leading, holds })
}

/// Label of a factor of Ψ̃_r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorLabel {
    Ad,
    H { i: usize, j: usize },
    F { n: usize },
}

impl fmt::Display for FactorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorLabel::Ad => write!(f, "A_d"),
            FactorLabel::H { i, j } => write!(f, "H_{i},{j}"),
            FactorLabel::F { n } => write!(f, "f_{n}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Factor {
    pub label: FactorLabel,
    pub poly: MultiPoly,
}

/// Factors of Ψ̃_r in the order A_d, H̃_11, H̃_12, ..., H̃_{d-1,d-1}, f̃_1, ..., f̃_{d-2}.
#[derive(Debug, Clone)]
pub struct FactorSet {
    pub d: usize,
    pub r: u64,
    pub factors: Vec<Factor>,
}

impl FactorSet {
    /// The full product Ψ̃_r. Only sensible for small d.
    pub fn product(&self) -> MultiPoly {
        let mut acc = MultiPoly::one(self.d);
        for f in &self.factors {
            acc = &acc * &f.poly;
        }
        acc
    }

    pub fn get(&self, label: FactorLabel) -> Option<&MultiPoly> {
        self.factors.iter().find(|f| f.label == label).map(|f| &f.poly)
    }
}

fn factor_cache() -> &'static Mutex<HashMap<(usize, u64), Arc<FactorSet>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<FactorSet>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn psi_factors(d: usize, r: u64) -> Result<Arc<FactorSet>, GenpolyError> {
    let r = check_r(d, r)?;
    if let Some(fs) = factor_cache().lock().expect("cache poisoned").get(&(d, r)) {
        return Ok(fs.clone());
    }
    let mut factors = vec![Factor { label: FactorLabel::Ad, poly: MultiPoly::var(d, d) }];
    for i in 1..d {
        for j in 1..d {
            factors.push(Factor { label: FactorLabel::H { i, j }, poly: h_tilde(d, r, i, j)? });
        }
    }
    let fs: Vec<Result<Factor, GenpolyError>> = (1..d.saturating_sub(1))
        .into_par_iter()
        .map(|n| Ok(Factor { label: FactorLabel::F { n }, poly: f_tilde(d, r, n)? }))
        .collect();
    for f in fs {
        factors.push(f?);
    }
    let set = Arc::new(FactorSet { d, r, factors });
    factor_cache().lock().expect("cache poisoned").insert((d, r), set.clone());
    Ok(set)
}

/// Units of Z/dZ in increasing order.
pub fn unit_residues(d: usize) -> Vec<u64> {
    (1..d as u64).filter(|r| r.gcd(&(d as u64)) == 1).collect()
}

/// K̃_ij = Σ_{m ∈ N_ij} A^m / Π m_k!, with N_ij the exponent vectors of
/// weight pi - j and size ⌈(pi-j)/d⌉.
pub fn k_tilde(d: usize, p: u64, i: usize, j: usize) -> Result<MultiPoly, GenpolyError> {
    check_d(d)?;
    if !is_prime_u64(p) {
        return Err(GenpolyError::NotPrime(p));
    }
    if d as u64 % p == 0 {
        return Err(GenpolyError::BadResidue { d, r: p % d as u64 });
    }
    check_index("i", i, d - 1)?;
    check_index("j", j, d - 1)?;
    let n = p as i64 * i as i64 - j as i64;
    let c = ceil_div(n, d as i64);
    let mut k = MultiPoly::zero(d);
    for m in weighted_compositions(d, n, c) {
        let den: BigInt = m.0.iter().map(|&e| factorial(e as u64)).product();
        k.add_term(m, BigRational::new(BigInt::one(), den));
    }
    if k.homogeneous_degree() != Some(c as u32) {
        return Err(GenpolyError::Invariant(format!("K̃_{i}{j} is not homogeneous of degree {c}")));
    }
    Ok(k)
}

/// The bound (d^2+1)(d-1).
pub fn prime_floor(d: usize) -> u64 {
    let d = d as u64;
    (d * d + 1) * (d - 1)
}

fn reduce(poly: &MultiPoly, p: u64, name: &str) -> Result<BTreeMap<Monomial, u64>, GenpolyError> {
    poly.reduce_mod_p(p).ok_or_else(|| GenpolyError::NonUnitDenominator { poly: name.to_string(), p })
}

/// Compares K̃_ij with v_i A_d^{⌈(pi-j)/d⌉-d} H̃_ij mod p, where
/// v_i = 1/⌈(pi-1)/d⌉! and r = p mod d.
pub fn check_key2(d: usize, p: u64, i: usize, j: usize) -> Result<bool, GenpolyError> {
    check_d(d)?;
    if !is_prime_u64(p) {
        return Err(GenpolyError::NotPrime(p));
    }
    if p < prime_floor(d) {
        return Err(GenpolyError::PrimeTooSmall { p, bound: prime_floor(d) });
    }
    let r = p % d as u64;
    let k = k_tilde(d, p, i, j)?;
    let h = h_tilde(d, r, i, j)?;
    let pi = p as i64 * i as i64;
    let c = ceil_div(pi - j as i64, d as i64);
    let c1 = ceil_div(pi - 1, d as i64) as u64;
    let mut fact = 1u64;
    for t in 1..=c1 {
        fact = mul_mod(fact, t % p, p);
    }
    if fact == 0 {
        return Err(GenpolyError::NonUnitDenominator { poly: format!("v_{i}"), p });
    }
    let v = inv_mod(fact, p);
    let mut shift = vec![0u32; d];
    shift[d - 1] = (c - d as i64) as u32;
    let shift = Monomial(shift);
    let lhs = reduce(&k, p, &format!("K_{i},{j}"))?;
    let rhs: BTreeMap<Monomial, u64> = reduce(&h.mul_monomial(&shift), p, &format!("H_{i},{j}"))?
        .into_iter()
        .map(|(m, a)| (m, mul_mod(a, v, p)))
        .filter(|&(_, a)| a != 0)
        .collect();
    Ok(lhs == rhs)
}

/// Value of one factor at a rational point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorValue {
    pub r: u64,
    pub label: FactorLabel,
    pub value: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipReport {
    pub d: usize,
    pub in_u: bool,
    pub failing: Option<(u64, FactorLabel)>,
    pub values: Vec<FactorValue>,
}

/// Evaluates every factor of every Ψ̃_r at a = (a_1, ..., a_d).
pub fn membership_u(coeffs: &[BigRational]) -> Result<MembershipReport, GenpolyError> {
    let d = coeffs.len();
    check_d(d)?;
    let mut values = Vec::new();
    for r in unit_residues(d) {
        let set = psi_factors(d, r)?;
        let vals: Vec<BigRational> = set.factors.par_iter().map(|f| f.poly.eval(coeffs)).collect();
        for (f, value) in set.factors.iter().zip(vals) {
            values.push(FactorValue { r, label: f.label, value });
        }
    }
    let failing = values.iter().find(|v| v.value.is_zero()).map(|v| (v.r, v.label));
    Ok(MembershipReport { d, in_u: failing.is_none(), failing, values })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightReport {
    pub floor: u64,
    /// Primes violating integrality or the unit condition, increasing.
    pub bad_primes: Vec<BigUint>,
    pub bound: BigUint,
    /// False when some value could not be fully factored; the leftover
    /// cofactor is then folded into `bound`.
    pub complete: bool,
}

/// An upper bound for ht(f): the floor (d^2+1)(d-1) or the largest prime
/// that breaks p-integrality of f or the unit condition on a factor value.
pub fn height_bound(coeffs: &[BigRational]) -> Result<HeightReport, GenpolyError> {
    let report = membership_u(coeffs)?;
    if let Some((r, label)) = report.failing {
        return Err(GenpolyError::NotInU { r, label });
    }
    let d = coeffs.len();
    let floor = prime_floor(d);
    let mut bad: BTreeSet<BigUint> = BTreeSet::new();
    let mut complete = true;
    let mut bound = BigUint::from(floor);

    let mut absorb = |n: &BigInt, residue: Option<u64>, bad: &mut BTreeSet<BigUint>, complete: &mut bool| {
        if n.is_one() {
            return;
        }
        let fac = factor_bounded(n, TRIAL_DIVISION_BOUND);
        for q in fac.primes {
            let keep = match residue {
                None => true,
                Some(r) => (&q % BigUint::from(d as u64)).to_u64() == Some(r),
            };
            if keep {
                bad.insert(q);
            }
        }
        if !fac.complete {
            *complete = false;
            if fac.cofactor > bound {
                bound = fac.cofactor.clone();
            }
        }
    };

    for a in coeffs {
        absorb(a.denom(), None, &mut bad, &mut complete);
    }
    for v in &report.values {
        let val = v.value.abs();
        absorb(val.numer(), Some(v.r), &mut bad, &mut complete);
        absorb(val.denom(), Some(v.r), &mut bad, &mut complete);
    }
    let mut bound = bound_max(bound, &bad);
    if bound < BigUint::from(floor) {
        bound = BigUint::from(floor);
    }
    Ok(HeightReport { floor, bad_primes: bad.into_iter().collect(), bound, complete })
}

fn bound_max(bound: BigUint, bad: &BTreeSet<BigUint>) -> BigUint {
    match bad.iter().next_back() {
        Some(q) if *q > bound => q.clone(),
        _ => bound,
    }
}

/// Mod-p certificate that the residues ā satisfy the unit conditions: ā_d,
/// every H̃_ij(ā) and every f̃_n(ā) (n <= d-2) are nonzero in F_q, with the
/// factors of Ψ̃_r for r = p mod d.
pub fn ordinary_certificate(d: usize, field: &FieldDesc, abar: &[FqElem]) -> Result<bool, GenpolyError> {
    check_d(d)?;
    if abar.len() != d {
        return Err(GenpolyError::Dimension { expected: d, got: abar.len() });
    }
    let p = field.p();
    if p < prime_floor(d) {
        return Err(GenpolyError::PrimeTooSmall { p, bound: prime_floor(d) });
    }
    let set = psi_factors(d, p % d as u64)?;
    for f in &set.factors {
        let v = f
            .poly
            .eval_fq(field, abar)
            .ok_or_else(|| GenpolyError::NonUnitDenominator { poly: f.label.to_string(), p })?;
        if v.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Same certificate for a point of F_p given by residues.
pub fn ordinary_certificate_mod_p(d: usize, p: u64, abar: &[u64]) -> Result<bool, GenpolyError> {
    check_d(d)?;
    if abar.len() != d {
        return Err(GenpolyError::Dimension { expected: d, got: abar.len() });
    }
    if !is_prime_u64(p) {
        return Err(GenpolyError::NotPrime(p));
    }
    if p < prime_floor(d) {
        return Err(GenpolyError::PrimeTooSmall { p, bound: prime_floor(d) });
    }
    let set = psi_factors(d, p % d as u64)?;
    for f in &set.factors {
        let v = f
            .poly
            .eval_mod_p(p, abar)
            .ok_or_else(|| GenpolyError::NonUnitDenominator { poly: f.label.to_string(), p })?;
        if v == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests;
