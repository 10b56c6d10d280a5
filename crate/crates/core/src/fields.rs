//! Finite fields F_{p^n} as F_p[x]/(g(x)) with a canonical defining polynomial.
//!
//! The defining polynomial is the lexicographically least monic irreducible
//! of degree `n`, comparing coefficient vectors `(c_0, c_1, ..., c_{n-1})`
//! from the constant term upwards. Two independent constructions with the
//! same `(p, n)` therefore produce identical descriptors.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use thiserror::Error;

use crate::arith::{add_mod, factor_u64, inv_mod, is_prime_u64, mul_mod, sub_mod};

/// Largest number of elements any enumeration is allowed to visit.
pub const ENUMERATION_CAP: u128 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("polynomial is not irreducible of the requested degree")]
    Reducible,
    #[error("field with {p}^{n} elements exceeds the enumeration cap of 2^40")]
    CapExceeded { p: u64, n: usize },
    #[error("no embedding of F_{p}^{from} into F_{p}^{to}")]
    NoEmbedding { p: u64, from: usize, to: usize },
    #[error("elements belong to different fields")]
    FieldMismatch,
    #[error("the given vectors are not a basis over F_p")]
    NotABasis,
    #[error("division by zero")]
    DivisionByZero,
    #[error("group order too large to factor")]
    OrderTooLarge,
}

struct FieldInner {
    p: u64,
    n: usize,
    defpoly: Vec<u64>,
    traces: Vec<u64>,
    primitive: OnceLock<Result<Vec<u64>, FieldError>>,
}

/// Shared handle on a field descriptor. Cloning is cheap.
#[derive(Clone)]
pub struct FieldDesc(Arc<FieldInner>);

impl PartialEq for FieldDesc {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.defpoly == other.0.defpoly)
    }
}

impl Eq for FieldDesc {}

impl fmt::Debug for FieldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.0.p, self.0.n, self.0.defpoly)
    }
}

/// Builds F_{p^n} with the canonical defining polynomial.
pub fn build_field(p: u64, n: usize) -> Result<FieldDesc, FieldError> {
    if !is_prime_u64(p) {
        return Err(FieldError::NotPrime(p));
    }
    if n == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let defpoly = if n == 1 {
        vec![0, 1]
    } else {
        least_irreducible(p, n)
    };
    Ok(FieldDesc::from_parts(p, defpoly))
}

/// Builds a field from an explicit monic defining polynomial (low to high).
pub fn build_field_with_poly(p: u64, defpoly: Vec<u64>) -> Result<FieldDesc, FieldError> {
    if !is_prime_u64(p) {
        return Err(FieldError::NotPrime(p));
    }
    if defpoly.len() < 2 || *defpoly.last().unwrap() != 1 {
        return Err(FieldError::Reducible);
    }
    if defpoly.iter().any(|&c| c >= p) || !is_irreducible(&defpoly, p) {
        return Err(FieldError::Reducible);
    }
    Ok(FieldDesc::from_parts(p, defpoly))
}

fn least_irreducible(p: u64, n: usize) -> Vec<u64> {
    // Odometer over (c_0, ..., c_{n-1}) with c_0 most significant; c_0 = 0
    // is skipped since x then divides the polynomial.
    let mut c = vec![0u64; n];
    c[0] = 1;
    loop {
        let mut cand = c.clone();
        cand.push(1);
        if is_irreducible(&cand, p) {
            return cand;
        }
        let mut k = n - 1;
        loop {
            c[k] += 1;
            if c[k] < p {
                break;
            }
            c[k] = 0;
            assert!(k > 0, "no irreducible polynomial found");
            k -= 1;
        }
    }
}

/// Rabin's test: x^{p^n} = x mod f and gcd(x^{p^{n/r}} - x, f) = 1 for
/// every prime r dividing n.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let n = f.len() - 1;
    if n == 1 {
        return true;
    }
    if f[0] == 0 {
        return false;
    }
    let x = vec![0, 1];
    let mut frob = Vec::with_capacity(n + 1);
    let mut cur = x.clone();
    frob.push(cur.clone());
    for _ in 0..n {
        cur = poly::powmod(&cur, p as u128, f, p);
        frob.push(cur.clone());
    }
    if poly::trim(poly::sub(&frob[n], &x, p)) != Vec::<u64>::new() {
        return false;
    }
    for (r, _) in factor_u64(n as u64) {
        let k = n / r as usize;
        let diff = poly::trim(poly::sub(&frob[k], &x, p));
        let g = poly::gcd(diff, f.to_vec(), p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

impl FieldDesc {
    fn from_parts(p: u64, defpoly: Vec<u64>) -> Self {
        let n = defpoly.len() - 1;
        let mut inner = FieldInner {
            p,
            n,
            defpoly,
            traces: Vec::new(),
            primitive: OnceLock::new(),
        };
        inner.traces = compute_traces(&inner);
        FieldDesc(Arc::new(inner))
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> usize {
        self.0.n
    }

    /// Monic defining polynomial, coefficients low to high.
    pub fn defpoly(&self) -> &[u64] {
        &self.0.defpoly
    }

    /// Tr(θ^k) for k < n, where θ is the class of x.
    pub fn trace_vector(&self) -> &[u64] {
        &self.0.traces
    }

    /// Number of elements, if it fits in 128 bits.
    pub fn order(&self) -> Option<u128> {
        (self.0.p as u128).checked_pow(self.0.n as u32)
    }

    pub fn order_big(&self) -> BigUint {
        num_traits::pow(BigUint::from(self.0.p), self.0.n)
    }

    pub fn is_enumerable(&self) -> bool {
        self.order().is_some_and(|q| q <= ENUMERATION_CAP)
    }

    pub fn zero(&self) -> FqElem {
        FqElem { field: self.clone(), c: vec![0; self.0.n] }
    }

    pub fn one(&self) -> FqElem {
        self.constant(1)
    }

    pub fn constant(&self, a: u64) -> FqElem {
        let mut c = vec![0; self.0.n];
        c[0] = a % self.0.p;
        FqElem { field: self.clone(), c }
    }

    /// The class of x. For n = 1 this is 0, since the defining polynomial is x.
    pub fn theta(&self) -> FqElem {
        if self.0.n == 1 {
            return self.zero();
        }
        let mut c = vec![0; self.0.n];
        c[1] = 1;
        FqElem { field: self.clone(), c }
    }

    pub fn element(&self, coeffs: &[u64]) -> FqElem {
        assert!(coeffs.len() <= self.0.n, "too many coordinates");
        let mut c = vec![0; self.0.n];
        for (dst, &src) in c.iter_mut().zip(coeffs) {
            *dst = src % self.0.p;
        }
        FqElem { field: self.clone(), c }
    }

    /// Element with the given index in odometer order (coordinate 0 fastest).
    pub fn element_at(&self, mut idx: u128) -> FqElem {
        let p = self.0.p as u128;
        let mut c = vec![0; self.0.n];
        for x in c.iter_mut() {
            *x = (idx % p) as u64;
            idx /= p;
        }
        FqElem { field: self.clone(), c }
    }

    /// Multiplies coordinate vectors, reducing modulo the defining polynomial.
    pub fn mul_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = self.0.n;
        let p = self.0.p;
        if p < 1 << 28 && n <= 64 {
            return self.mul_raw_small(a, b);
        }
        let mut prod = vec![0u128; 2 * n - 1];
        let pm = p as u128;
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u128 * y as u128) % pm;
            }
        }
        let g = &self.0.defpoly;
        for k in (n..2 * n - 1).rev() {
            let t = prod[k] % pm;
            if t == 0 {
                continue;
            }
            prod[k] = 0;
            for i in 0..n {
                // x^k = x^{k-n} * x^n and x^n = -sum g_i x^i
                let idx = k - n + i;
                prod[idx] = (prod[idx] + (pm - g[i] as u128) * t) % pm;
            }
        }
        prod[..n].iter().map(|&v| (v % pm) as u64).collect()
    }

    /// Delayed reduction: with p < 2^28 and n <= 64 every accumulator stays
    /// below 2n(p-1)^2 < 2^63.
    fn mul_raw_small(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = self.0.n;
        let p = self.0.p;
        let mut prod = vec![0u64; 2 * n - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        let g = &self.0.defpoly;
        for k in (n..2 * n - 1).rev() {
            let t = prod[k] % p;
            if t == 0 {
                continue;
            }
            for i in 0..n {
                prod[k - n + i] += (p - g[i]) * t;
            }
        }
        prod.truncate(n);
        for v in &mut prod {
            *v %= p;
        }
        prod
    }

    pub fn trace_raw(&self, a: &[u64]) -> u64 {
        let p = self.0.p;
        a.iter()
            .zip(&self.0.traces)
            .fold(0u64, |acc, (&x, &t)| add_mod(acc, mul_mod(x, t, p), p))
    }

    /// Iterates all elements in odometer order. Fails beyond the 2^40 cap.
    pub fn elements(&self) -> Result<Elements, FieldError> {
        if !self.is_enumerable() {
            return Err(FieldError::CapExceeded { p: self.0.p, n: self.0.n });
        }
        Ok(Elements { field: self.clone(), next: Some(vec![0; self.0.n]) })
    }

    /// Deterministic generator of the multiplicative group.
    ///
    /// Candidates are scanned in odometer order starting at θ (or at 2 for
    /// prime fields), so low-degree generators are preferred.
    pub fn primitive_element(&self) -> Result<FqElem, FieldError> {
        let res = self.0.primitive.get_or_init(|| self.find_primitive());
        res.clone().map(|c| FqElem { field: self.clone(), c })
    }

    fn find_primitive(&self) -> Result<Vec<u64>, FieldError> {
        let q = self.order().filter(|&q| q <= 1u128 << 62).ok_or(FieldError::OrderTooLarge)?;
        let m = (q - 1) as u64;
        if m == 1 {
            return Ok(self.one().c);
        }
        let exps: Vec<u64> = factor_u64(m).into_iter().map(|(r, _)| m / r).collect();
        let start: u128 = if self.0.n == 1 { 1 } else { self.0.p as u128 };
        for idx in start..q {
            let g = self.element_at(idx);
            if exps.iter().all(|&e| !g.pow(e as u128).is_one()) {
                return Ok(g.c);
            }
        }
        unreachable!("multiplicative group is cyclic")
    }

    /// Embedding of this field into `target`, which must have the same
    /// characteristic and a degree divisible by ours.
    pub fn embedding_into(&self, target: &FieldDesc) -> Result<Embedding, FieldError> {
        let (p, m, n) = (self.0.p, self.0.n, target.0.n);
        if p != target.0.p || n % m != 0 {
            return Err(FieldError::NoEmbedding { p, from: m, to: n });
        }
        let image = if m == 1 {
            target.zero()
        } else if self == target {
            target.theta()
        } else {
            let g = target.primitive_element()?;
            let q_big = target.order().ok_or(FieldError::OrderTooLarge)?;
            let q_small = self.order().ok_or(FieldError::OrderTooLarge)?;
            let h = g.pow((q_big - 1) / (q_small - 1));
            let mut z = h.clone();
            let mut found = None;
            for _ in 1..q_small - 1 {
                if eval_poly_u64(&self.0.defpoly, &z).is_zero() {
                    found = Some(z.clone());
                    break;
                }
                z = &z * &h;
            }
            found.expect("subfield generator must have a root of the defining polynomial")
        };
        let mut powers = Vec::with_capacity(m);
        let mut cur = target.one();
        for _ in 0..m {
            powers.push(cur.clone());
            cur = &cur * &image;
        }
        Ok(Embedding { source: self.clone(), target: target.clone(), powers })
    }

    /// Dual basis with respect to the absolute trace form.
    pub fn dual_basis(&self, basis: &[FqElem]) -> Result<Vec<FqElem>, FieldError> {
        let n = self.0.n;
        let p = self.0.p;
        if basis.len() != n || basis.iter().any(|b| &b.field != self) {
            return Err(FieldError::NotABasis);
        }
        let gram: Vec<Vec<u64>> = basis
            .iter()
            .map(|bi| basis.iter().map(|bj| (bi * bj).trace_abs()).collect())
            .collect();
        let inv = invert_mod_p(gram, p).ok_or(FieldError::NotABasis)?;
        Ok((0..n)
            .map(|j| {
                let mut acc = self.zero();
                for (k, b) in basis.iter().enumerate() {
                    acc = &acc + &b.scale(inv[k][j]);
                }
                acc
            })
            .collect())
    }
}

fn compute_traces(f: &FieldInner) -> Vec<u64> {
    let n = f.n;
    let p = f.p;
    let tmp = FieldDesc(Arc::new(FieldInner {
        p,
        n,
        defpoly: f.defpoly.clone(),
        traces: Vec::new(),
        primitive: OnceLock::new(),
    }));
    let mut out = Vec::with_capacity(n);
    let mut pow_theta = tmp.one().c;
    let theta = tmp.theta().c;
    for k in 0..n {
        if k > 0 {
            pow_theta = tmp.mul_raw(&pow_theta, &theta);
        }
        // Tr(z) = z + z^p + ... + z^{p^{n-1}}; the sum lies in F_p.
        let mut z = FqElem { field: tmp.clone(), c: pow_theta.clone() };
        let mut acc = 0u64;
        for _ in 0..n {
            acc = add_mod(acc, z.c[0], p);
            z = z.pow(p as u128);
        }
        out.push(acc);
    }
    out
}

fn eval_poly_u64(coeffs: &[u64], x: &FqElem) -> FqElem {
    let f = &x.field;
    let mut acc = f.zero();
    for &c in coeffs.iter().rev() {
        acc = &(&acc * x) + &f.constant(c);
    }
    acc
}

fn invert_mod_p(mut a: Vec<Vec<u64>>, p: u64) -> Option<Vec<Vec<u64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..n).map(|j| u64::from(i == j)).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let s = inv_mod(a[col][col], p);
        for j in 0..n {
            a[col][j] = mul_mod(a[col][j], s, p);
            inv[col][j] = mul_mod(inv[col][j], s, p);
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let t = a[r][col];
                for j in 0..n {
                    a[r][j] = sub_mod(a[r][j], mul_mod(t, a[col][j], p), p);
                    inv[r][j] = sub_mod(inv[r][j], mul_mod(t, inv[col][j], p), p);
                }
            }
        }
    }
    Some(inv)
}

/// Field element stored as coordinates in the power basis 1, θ, ..., θ^{n-1}.
#[derive(Clone, PartialEq, Eq)]
pub struct FqElem {
    field: FieldDesc,
    c: Vec<u64>,
}

impl fmt::Debug for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.c)
    }
}

impl FqElem {
    pub fn field(&self) -> &FieldDesc {
        &self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    pub fn is_one(&self) -> bool {
        self.c[0] == 1 && self.c[1..].iter().all(|&x| x == 0)
    }

    /// Returns the F_p value when the element lies in the prime field.
    pub fn as_prime_field(&self) -> Option<u64> {
        self.c[1..].iter().all(|&x| x == 0).then_some(self.c[0])
    }

    pub fn scale(&self, k: u64) -> FqElem {
        let p = self.field.p();
        FqElem {
            field: self.field.clone(),
            c: self.c.iter().map(|&x| mul_mod(x, k % p, p)).collect(),
        }
    }

    pub fn pow(&self, mut e: u128) -> FqElem {
        let mut acc = self.field.one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn pow_big(&self, e: &BigUint) -> FqElem {
        let mut acc = self.field.one();
        for bit in (0..e.bits()).rev() {
            acc = &acc * &acc;
            if e.bit(bit) {
                acc = &acc * self;
            }
        }
        acc
    }

    pub fn frobenius(&self) -> FqElem {
        self.pow(self.field.p() as u128)
    }

    /// Absolute trace to F_p.
    pub fn trace_abs(&self) -> u64 {
        self.field.trace_raw(&self.c)
    }

    pub fn inv(&self) -> Result<FqElem, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let p = self.field.p();
        let a = poly::trim(self.c.clone());
        let (g, s) = poly::xgcd_inverse(a, self.field.defpoly().to_vec(), p);
        debug_assert_eq!(g.len(), 1);
        let gi = inv_mod(g[0], p);
        let mut c = vec![0; self.field.degree()];
        for (i, &v) in s.iter().enumerate() {
            c[i] = mul_mod(v, gi, p);
        }
        Ok(FqElem { field: self.field.clone(), c })
    }

    /// p-th root, the inverse of Frobenius.
    pub fn pth_root(&self) -> FqElem {
        let n = self.field.degree();
        let mut z = self.clone();
        for _ in 1..n {
            z = z.frobenius();
        }
        z
    }
}

impl<'a> std::ops::Add<&'a FqElem> for &'a FqElem {
    type Output = FqElem;
    fn add(self, rhs: &FqElem) -> FqElem {
        assert!(self.field == rhs.field, "field mismatch");
        let p = self.field.p();
        FqElem {
            field: self.field.clone(),
            c: self.c.iter().zip(&rhs.c).map(|(&a, &b)| add_mod(a, b, p)).collect(),
        }
    }
}

impl<'a> std::ops::Sub<&'a FqElem> for &'a FqElem {
    type Output = FqElem;
    fn sub(self, rhs: &FqElem) -> FqElem {
        assert!(self.field == rhs.field, "field mismatch");
        let p = self.field.p();
        FqElem {
            field: self.field.clone(),
            c: self.c.iter().zip(&rhs.c).map(|(&a, &b)| sub_mod(a, b, p)).collect(),
        }
    }
}

impl<'a> std::ops::Mul<&'a FqElem> for &'a FqElem {
    type Output = FqElem;
    fn mul(self, rhs: &FqElem) -> FqElem {
        assert!(self.field == rhs.field, "field mismatch");
        FqElem { field: self.field.clone(), c: self.field.mul_raw(&self.c, &rhs.c) }
    }
}

impl std::ops::Neg for &FqElem {
    type Output = FqElem;
    fn neg(self) -> FqElem {
        let p = self.field.p();
        FqElem {
            field: self.field.clone(),
            c: self.c.iter().map(|&a| sub_mod(0, a, p)).collect(),
        }
    }
}

/// Field homomorphism F_{p^m} -> F_{p^n} determined by the image of θ.
#[derive(Clone, Debug)]
pub struct Embedding {
    source: FieldDesc,
    target: FieldDesc,
    powers: Vec<FqElem>,
}

impl Embedding {
    pub fn source(&self) -> &FieldDesc {
        &self.source
    }

    pub fn target(&self) -> &FieldDesc {
        &self.target
    }

    pub fn map(&self, x: &FqElem) -> FqElem {
        assert!(x.field == self.source, "element not in the source field");
        let mut acc = self.target.zero();
        for (&k, pw) in x.c.iter().zip(&self.powers) {
            if k != 0 {
                acc = &acc + &pw.scale(k);
            }
        }
        acc
    }
}

/// Odometer iterator over all field elements.
pub struct Elements {
    field: FieldDesc,
    next: Option<Vec<u64>>,
}

impl Iterator for Elements {
    type Item = FqElem;
    fn next(&mut self) -> Option<FqElem> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let p = self.field.p();
        let mut k = 0;
        loop {
            if k == succ.len() {
                break;
            }
            succ[k] += 1;
            if succ[k] < p {
                self.next = Some(succ);
                break;
            }
            succ[k] = 0;
            k += 1;
        }
        Some(FqElem { field: self.field.clone(), c: cur })
    }
}

/// Dense polynomials over F_p, coefficients low to high.
pub(crate) mod poly {
    use crate::arith::{add_mod, inv_mod, mul_mod, sub_mod};

    pub fn trim(mut a: Vec<u64>) -> Vec<u64> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| sub_mod(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0), p))
            .collect()
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = add_mod(out[i + j], mul_mod(x, y, p), p);
            }
        }
        trim(out)
    }

    /// Returns (quotient, remainder).
    pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        let b = trim(b.to_vec());
        let mut r = trim(a.to_vec());
        assert!(!b.is_empty(), "polynomial division by zero");
        if r.len() < b.len() {
            return (Vec::new(), r);
        }
        let lead_inv = inv_mod(*b.last().unwrap(), p);
        let mut q = vec![0; r.len() - b.len() + 1];
        while r.len() >= b.len() {
            let shift = r.len() - b.len();
            let t = mul_mod(*r.last().unwrap(), lead_inv, p);
            q[shift] = t;
            for (i, &bi) in b.iter().enumerate() {
                r[shift + i] = sub_mod(r[shift + i], mul_mod(t, bi, p), p);
            }
            r = trim(r);
        }
        (trim(q), r)
    }

    pub fn powmod(base: &[u64], mut e: u128, m: &[u64], p: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut b = divrem(base, m, p).1;
        while e > 0 {
            if e & 1 == 1 {
                acc = divrem(&mul(&acc, &b, p), m, p).1;
            }
            b = divrem(&mul(&b, &b, p), m, p).1;
            e >>= 1;
        }
        acc
    }

    pub fn gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
        a = trim(a);
        b = trim(b);
        while !b.is_empty() {
            let r = divrem(&a, &b, p).1;
            a = b;
            b = r;
        }
        a
    }

    /// For coprime `a`, `m`: returns (g, s) with s*a = g mod m, g a nonzero constant.
    pub fn xgcd_inverse(a: Vec<u64>, m: Vec<u64>, p: u64) -> (Vec<u64>, Vec<u64>) {
        let (mut r0, mut r1) = (m.clone(), trim(a));
        let (mut s0, mut s1): (Vec<u64>, Vec<u64>) = (Vec::new(), vec![1]);
        while r1.len() > 1 {
            let (q, r) = divrem(&r0, &r1, p);
            let s = trim(sub(&s0, &mul(&q, &s1, p), p));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        let s1 = divrem(&s1, &m, p).1;
        (r1, s1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_defining_polynomials() {
        assert_eq!(build_field(2, 2).unwrap().defpoly(), &[1, 1, 1]);
        assert_eq!(build_field(3, 2).unwrap().defpoly(), &[1, 0, 1]);
        assert_eq!(build_field(7, 1).unwrap().defpoly(), &[0, 1]);
        // (1,0,1) precedes (1,1,0) when compared from the constant term up.
        assert_eq!(build_field(2, 3).unwrap().defpoly(), &[1, 0, 1, 1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(build_field(4, 2).unwrap_err(), FieldError::NotPrime(4));
        assert_eq!(build_field(5, 0).unwrap_err(), FieldError::ZeroDegree);
        assert!(build_field(2, 50).unwrap().elements().is_err());
        assert!(build_field_with_poly(2, vec![1, 0, 1]).is_err());
    }

    #[test]
    fn f4_multiplication_table() {
        let f = build_field(2, 2).unwrap();
        let w = f.theta();
        let w2 = &w * &w;
        assert_eq!(w2, f.element(&[1, 1]));
        assert!((&w2 * &w).is_one());
        assert_eq!(w.trace_abs(), 1);
        assert_eq!(f.one().trace_abs(), 0);
    }

    #[test]
    fn f4_dual_basis() {
        let f = build_field(2, 2).unwrap();
        let basis = vec![f.one(), f.theta()];
        let dual = f.dual_basis(&basis).unwrap();
        assert_eq!(dual[0], &f.theta() * &f.theta());
        assert_eq!(dual[1], f.one());
    }

    #[test]
    fn inverses_and_roots() {
        let f = build_field(5, 3).unwrap();
        for x in f.elements().unwrap().skip(1) {
            assert!((&x * &x.inv().unwrap()).is_one());
            assert_eq!(x.pth_root().frobenius(), x);
        }
    }

    #[test]
    fn embedding_is_a_ring_map() {
        let small = build_field(3, 2).unwrap();
        let big = build_field(3, 4).unwrap();
        let e = small.embedding_into(&big).unwrap();
        let xs: Vec<FqElem> = small.elements().unwrap().collect();
        for a in &xs {
            for b in &xs {
                assert_eq!(e.map(&(a * b)), &e.map(a) * &e.map(b));
                assert_eq!(e.map(&(a + b)), &e.map(a) + &e.map(b));
            }
            // Image is fixed by the q-power Frobenius.
            let img = e.map(a);
            assert_eq!(img.pow(9), img);
        }
        assert!(build_field(3, 3).unwrap().embedding_into(&big).is_err());
    }

    #[test]
    fn primitive_element_generates() {
        let f = build_field(2, 6).unwrap();
        let g = f.primitive_element().unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut z = f.one();
        for _ in 0..63 {
            assert!(seen.insert(z.coeffs().to_vec()));
            z = &z * &g;
        }
        assert!(z.is_one());
    }
}
