//! Exact arithmetic in Q(ζ_p) and the normalised valuation at the prime
//! above p.
//!
//! Elements are stored in the basis 1, ζ, ..., ζ^{p-2} as integer
//! numerators over one positive common denominator. The valuation satisfies
//! v(p) = 1 and v(1 - ζ) = 1/(p - 1), and is computed from the p-adic order of
//! the norm: v(a) = v_p(N(a)) / (p - 1).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{bigint_mod_u64, inv_mod, is_prime_u64, mul_mod, pow_mod, vp_int};

/// A rational number or +∞, ordered with ∞ above every finite value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRational {
    Finite(BigRational),
    Infinity,
}

impl ExtRational {
    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            ExtRational::Finite(x) => Some(x),
            ExtRational::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRational::Infinity)
    }
}

impl PartialOrd for ExtRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => a.cmp(b),
            (ExtRational::Finite(_), ExtRational::Infinity) => Ordering::Less,
            (ExtRational::Infinity, ExtRational::Finite(_)) => Ordering::Greater,
            (ExtRational::Infinity, ExtRational::Infinity) => Ordering::Equal,
        }
    }
}

impl std::ops::Add for &ExtRational {
    type Output = ExtRational;
    fn add(self, rhs: &ExtRational) -> ExtRational {
        match (self, rhs) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => ExtRational::Finite(a + b),
            _ => ExtRational::Infinity,
        }
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::Finite(x) => write!(f, "{}/{}", x.numer(), x.denom()),
            ExtRational::Infinity => write!(f, "inf"),
        }
    }
}

/// Element of Q(ζ_p).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycNum {
    p: u64,
    num: Vec<BigInt>,
    den: BigInt,
}

impl fmt::Debug for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})/{}", self.num.iter().map(|x| x.to_string()).collect::<Vec<_>>(), self.den)
    }
}

impl CycNum {
    fn dim(p: u64) -> usize {
        (p - 1).max(1) as usize
    }

    fn normalized(p: u64, mut num: Vec<BigInt>, mut den: BigInt) -> CycNum {
        if den.is_negative() {
            den = -den;
            for x in num.iter_mut() {
                *x = -&*x;
            }
        }
        let mut g = den.clone();
        for x in &num {
            if g.is_one() {
                break;
            }
            g = g.gcd(x);
        }
        if num.iter().all(Zero::is_zero) {
            return CycNum { p, num, den: BigInt::one() };
        }
        if !g.is_one() {
            for x in num.iter_mut() {
                *x = &*x / &g;
            }
            den = den / &g;
        }
        CycNum { p, num, den }
    }

    /// Reduces a vector indexed by exponents modulo ζ^p = 1 and Φ_p(ζ) = 0.
    fn from_exponent_vector(p: u64, mut v: Vec<BigInt>, den: BigInt) -> CycNum {
        let dim = Self::dim(p);
        if p == 2 {
            // ζ = -1, so ζ^k = (-1)^k.
            let mut acc = BigInt::zero();
            for (k, x) in v.into_iter().enumerate() {
                if k % 2 == 0 {
                    acc += x;
                } else {
                    acc -= x;
                }
            }
            return Self::normalized(p, vec![acc], den);
        }
        let pu = p as usize;
        if v.len() > pu {
            let tail = v.split_off(pu);
            for (k, x) in tail.into_iter().enumerate() {
                v[(pu + k) % pu] += x;
            }
        }
        v.resize(pu, BigInt::zero());
        let top = v.pop().unwrap();
        if !top.is_zero() {
            for x in v.iter_mut() {
                *x -= &top;
            }
        }
        debug_assert_eq!(v.len(), dim);
        Self::normalized(p, v, den)
    }

    pub fn zero(p: u64) -> CycNum {
        CycNum { p, num: vec![BigInt::zero(); Self::dim(p)], den: BigInt::one() }
    }

    pub fn one(p: u64) -> CycNum {
        Self::from_integer(p, BigInt::one())
    }

    pub fn from_integer(p: u64, n: BigInt) -> CycNum {
        let mut num = vec![BigInt::zero(); Self::dim(p)];
        num[0] = n;
        CycNum { p, num, den: BigInt::one() }
    }

    pub fn from_rational(p: u64, x: &BigRational) -> CycNum {
        let mut num = vec![BigInt::zero(); Self::dim(p)];
        num[0] = x.numer().clone();
        Self::normalized(p, num, x.denom().clone())
    }

    /// ζ^k.
    pub fn zeta_power(p: u64, k: u64) -> CycNum {
        let mut v = vec![BigInt::zero(); p as usize];
        v[(k % p) as usize] = BigInt::one();
        Self::from_exponent_vector(p, v, BigInt::one())
    }

    /// Σ_j counts[j] ζ^j.
    pub fn from_counts(p: u64, counts: &[u64]) -> CycNum {
        let v = counts.iter().map(|&c| BigInt::from(c)).collect();
        Self::from_exponent_vector(p, v, BigInt::one())
    }

    /// Builds an element from rational coordinates in the basis 1, ..., ζ^{p-2}.
    pub fn from_coords(p: u64, coords: &[BigRational]) -> CycNum {
        assert_eq!(coords.len(), Self::dim(p), "wrong number of coordinates");
        let den = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let num = coords.iter().map(|c| c.numer() * (&den / c.denom())).collect();
        Self::normalized(p, num, den)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn coords(&self) -> Vec<BigRational> {
        self.num
            .iter()
            .map(|x| BigRational::new(x.clone(), self.den.clone()))
            .collect()
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.num
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(Zero::is_zero)
    }

    /// True when the element lies in Z[ζ_p].
    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.num[1..]
            .iter()
            .all(Zero::is_zero)
            .then(|| BigRational::new(self.num[0].clone(), self.den.clone()))
    }

    pub fn scale(&self, k: &BigRational) -> CycNum {
        let num = self.num.iter().map(|x| x * k.numer()).collect();
        Self::normalized(self.p, num, &self.den * k.denom())
    }

    pub fn scale_int(&self, k: &BigInt) -> CycNum {
        let num = self.num.iter().map(|x| x * k).collect();
        Self::normalized(self.p, num, self.den.clone())
    }

    /// Image under the automorphism ζ -> ζ^k (k prime to p).
    pub fn galois(&self, k: u64) -> CycNum {
        assert!(k % self.p != 0 || self.p == 2, "not an automorphism");
        let mut v = vec![BigInt::zero(); self.p as usize];
        for (i, x) in self.num.iter().enumerate() {
            let j = ((i as u64 * k) % self.p) as usize;
            v[j] += x;
        }
        Self::from_exponent_vector(self.p, v, self.den.clone())
    }

    pub fn valuation(&self) -> ExtRational {
        if self.is_zero() {
            return ExtRational::Infinity;
        }
        let p = self.p;
        let norm = norm_of_integral(p, &self.num);
        let vn = vp_int(&norm, p) as i64;
        let vd = vp_int(&self.den, p) as i64;
        ExtRational::Finite(
            BigRational::new(BigInt::from(vn), BigInt::from(Self::dim(p) as u64))
                - BigRational::from_integer(BigInt::from(vd)),
        )
    }

    /// Norm to Q.
    pub fn norm(&self) -> BigRational {
        let n = norm_of_integral(self.p, &self.num);
        let d = num_traits::pow(self.den.clone(), Self::dim(self.p));
        BigRational::new(n, d)
    }

    fn check(&self, other: &CycNum) {
        assert_eq!(self.p, other.p, "mixing cyclotomic fields");
    }
}

impl<'a> std::ops::Add<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn add(self, rhs: &CycNum) -> CycNum {
        self.check(rhs);
        if self.den == rhs.den {
            let num = self.num.iter().zip(&rhs.num).map(|(a, b)| a + b).collect();
            return CycNum::normalized(self.p, num, self.den.clone());
        }
        let num = self
            .num
            .iter()
            .zip(&rhs.num)
            .map(|(a, b)| a * &rhs.den + b * &self.den)
            .collect();
        CycNum::normalized(self.p, num, &self.den * &rhs.den)
    }
}

impl std::ops::Neg for &CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        CycNum { p: self.p, num: self.num.iter().map(|x| -x).collect(), den: self.den.clone() }
    }
}

impl<'a> std::ops::Sub<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn sub(self, rhs: &CycNum) -> CycNum {
        self + &(-rhs)
    }
}

impl<'a> std::ops::Mul<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn mul(self, rhs: &CycNum) -> CycNum {
        self.check(rhs);
        let p = self.p;
        if p == 2 {
            return CycNum::normalized(p, vec![&self.num[0] * &rhs.num[0]], &self.den * &rhs.den);
        }
        let pu = p as usize;
        let mut v = vec![BigInt::zero(); pu];
        for (i, a) in self.num.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.num.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let k = (i + j) % pu;
                v[k] += a * b;
            }
        }
        CycNum::from_exponent_vector(p, v, &self.den * &rhs.den)
    }
}

/// Word-size primes l ≡ 1 (mod p) with a primitive p-th root of unity mod l.
fn crt_primes(p: u64, count: usize) -> Vec<(u64, u64)> {
    static CACHE: Mutex<Option<HashMap<u64, Vec<(u64, u64)>>>> = Mutex::new(None);
    let mut guard = CACHE.lock().unwrap();
    let map = guard.get_or_insert_with(HashMap::new);
    let list = map.entry(p).or_default();
    let step = if p == 2 { 2 } else { 2 * p };
    let mut cand = list.last().map(|&(l, _)| l - step).unwrap_or_else(|| {
        let top = (1u64 << 62) - 1;
        top - (top - 1) % step
    });
    while list.len() < count {
        if is_prime_u64(cand) {
            let mut h = 2u64;
            let omega = loop {
                let w = pow_mod(h, (cand - 1) / p, cand);
                if w != 1 {
                    break w;
                }
                h += 1;
            };
            list.push((cand, omega));
        }
        cand -= step;
    }
    list[..count].to_vec()
}

/// Norm of an element of Z[ζ_p] given by integer coordinates.
///
/// N(a) = Π_{k=1}^{p-1} a(ω^k) is evaluated modulo enough word primes to
/// exceed twice the bound ‖a‖_1^{p-1}, then lifted by CRT.
fn norm_of_integral(p: u64, a: &[BigInt]) -> BigInt {
    let l1: BigInt = a.iter().map(|x| x.abs()).sum();
    if l1.is_zero() {
        return BigInt::zero();
    }
    let bits = (p - 1).max(1) * l1.bits() + 2;
    let count = (bits / 61 + 1) as usize;
    let primes = crt_primes(p, count);
    let mut modulus = BigInt::one();
    let mut acc = BigInt::zero();
    for &(l, omega) in &primes {
        let coeffs: Vec<u64> = a.iter().map(|x| bigint_mod_u64(x, l)).collect();
        let mut prod = 1u64;
        let mut w = omega;
        for _ in 1..p {
            let mut e = 0u64;
            for &c in coeffs.iter().rev() {
                e = ((e as u128 * w as u128 + c as u128) % l as u128) as u64;
            }
            prod = mul_mod(prod, e, l);
            w = mul_mod(w, omega, l);
        }
        // Incremental CRT.
        let cur = bigint_mod_u64(&acc, l);
        let m_mod = bigint_mod_u64(&modulus, l);
        let diff = (prod as u128 + l as u128 - cur as u128) % l as u128;
        let t = mul_mod(diff as u64, inv_mod(m_mod, l), l);
        acc += &modulus * BigInt::from(t);
        modulus *= BigInt::from(l);
    }
    let half: BigInt = &modulus >> 1;
    if acc > half {
        acc - modulus
    } else {
        acc
    }
}

/// Valuation by repeatedly dividing out the uniformizer 1 - ζ.
///
/// This is an independent cross-check of [`CycNum::valuation`]: it never
/// forms a norm. Divisibility of an integral element by 1 - ζ is tested
/// through the coordinate sum, and the quotient is b_i = A_i - (i+1)s with
/// prefix sums A_i and s = A_{p-2}/p.
pub fn valuation_by_uniformizer(a: &CycNum) -> ExtRational {
    if a.is_zero() {
        return ExtRational::Infinity;
    }
    let p = a.p;
    let pb = BigInt::from(p);
    let mut cur = a.num.clone();
    let mut count = 0u64;
    loop {
        let total: BigInt = cur.iter().sum();
        if !total.is_multiple_of(&pb) {
            break;
        }
        let s = &total / &pb;
        let mut prefix = BigInt::zero();
        let mut next = Vec::with_capacity(cur.len());
        for (i, x) in cur.iter().enumerate() {
            prefix += x;
            next.push(&prefix - &s * BigInt::from(i as u64 + 1));
        }
        cur = next;
        count += 1;
    }
    let vd = vp_int(&a.den, p) as i64;
    ExtRational::Finite(
        BigRational::new(BigInt::from(count), BigInt::from(CycNum::dim(p) as u64))
            - BigRational::from_integer(BigInt::from(vd)),
    )
}

/// Converts a small rational to f64 for display only.
pub fn approx(x: &BigRational) -> f64 {
    x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn fin(n: i64, d: i64) -> ExtRational {
        ExtRational::Finite(rat(n, d))
    }

    #[test]
    fn basic_valuations() {
        let p = 5;
        let pi = &CycNum::one(p) - &CycNum::zeta_power(p, 1);
        assert_eq!(pi.valuation(), fin(1, 4));
        assert_eq!(CycNum::from_integer(p, 5.into()).valuation(), fin(1, 1));
        assert_eq!(CycNum::from_integer(p, 7.into()).valuation(), fin(0, 1));
        assert_eq!(CycNum::zero(p).valuation(), ExtRational::Infinity);
        let quarter = CycNum::from_rational(p, &rat(3, 25));
        assert_eq!(quarter.valuation(), fin(-2, 1));
    }

    #[test]
    fn zeta_to_the_p_is_one() {
        for p in [2u64, 3, 5, 7, 11] {
            let z = CycNum::zeta_power(p, 1);
            let mut acc = CycNum::one(p);
            for _ in 0..p {
                acc = &acc * &z;
            }
            assert_eq!(acc, CycNum::one(p));
            let sum = (0..p).fold(CycNum::zero(p), |s, k| &s + &CycNum::zeta_power(p, k));
            assert!(sum.is_zero());
        }
    }

    #[test]
    fn norm_of_uniformizer_is_p() {
        for p in [3u64, 5, 7, 23, 47] {
            let pi = &CycNum::one(p) - &CycNum::zeta_power(p, 1);
            assert_eq!(pi.norm(), rat(p as i64, 1));
        }
    }

    #[test]
    fn quadratic_gauss_sum() {
        // g = Σ (x/7) ζ^x satisfies g^2 = -7.
        let p = 7;
        let mut g = CycNum::zero(p);
        for x in 1..p {
            let leg = pow_mod(x, (p - 1) / 2, p);
            let term = CycNum::zeta_power(p, x);
            g = if leg == 1 { &g + &term } else { &g - &term };
        }
        assert_eq!(&g * &g, CycNum::from_integer(p, (-7).into()));
        assert_eq!(g.valuation(), fin(1, 2));
        assert_eq!(valuation_by_uniformizer(&g), fin(1, 2));
    }

    #[test]
    fn ordering_of_extended_rationals() {
        assert!(fin(100, 1) < ExtRational::Infinity);
        assert!(fin(-1, 2) < fin(1, 3));
    }
}
