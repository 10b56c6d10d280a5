//! Integer and rational helpers shared by the other modules.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo the prime `p`. Panics on `a ≡ 0`.
pub fn inv_mod(a: u64, p: u64) -> u64 {
    let a = a % p;
    assert!(a != 0, "inverse of zero mod {p}");
    pow_mod(a, p - 2, p)
}

/// Deterministic Miller-Rabin for all 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorisation of a 64-bit integer by trial division.
///
/// Intended for group orders of enumerable fields, which stay below 2^40.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut q = 2u64;
    while q.saturating_mul(q) <= n {
        if n % q == 0 {
            let mut e = 0;
            while n % q == 0 {
                n /= q;
                e += 1;
            }
            out.push((q, e));
        }
        if is_prime_u64(n) {
            break;
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

/// `base^exp` as an arbitrary precision integer.
pub fn big_pow(base: u64, exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(base), exp as usize)
}

pub fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Exponent of the prime `p` in a nonzero integer.
pub fn vp_int(x: &BigInt, p: u64) -> u64 {
    assert!(!x.is_zero(), "valuation of zero");
    let p = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        x = q;
        v += 1;
    }
}

/// Exponent of `p` in a nonzero rational (may be negative).
pub fn vp_rational(x: &BigRational, p: u64) -> i64 {
    vp_int(x.numer(), p) as i64 - vp_int(x.denom(), p) as i64
}

pub fn ceil_div(a: i64, b: i64) -> i64 {
    assert!(b > 0);
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Formats a rational as `num/den`, always with an explicit denominator.
pub fn fmt_rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `n`, `-n` or `n/d`.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let d: BigInt = d.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(BigRational::new(n, d))
}

/// Reduces a rational modulo a prime not dividing its denominator.
pub fn rational_mod_p(x: &BigRational, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let den = x.denom().mod_floor(&pb).to_u64()?;
    if den == 0 {
        return None;
    }
    let num = x.numer().mod_floor(&pb).to_u64()?;
    Some(mul_mod(num, inv_mod(den, p), p))
}

/// Outcome of a bounded factorisation attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub primes: Vec<BigUint>,
    /// False when a composite cofactor beyond the trial bound remains.
    pub complete: bool,
    /// Leftover cofactor (1 when complete).
    pub cofactor: BigUint,
}

/// Trial division by all primes up to `bound`, then a primality test on
/// the cofactor when it fits in 64 bits.
pub fn factor_bounded(n: &BigInt, bound: u64) -> Factorization {
    let mut rest = n.magnitude().clone();
    let mut primes = Vec::new();
    if rest.is_zero() {
        return Factorization { primes, complete: false, cofactor: rest };
    }
    for q in small_primes(bound) {
        let qb = BigUint::from(q);
        if &qb * &qb > rest {
            break;
        }
        if (&rest % &qb).is_zero() {
            primes.push(qb.clone());
            while (&rest % &qb).is_zero() {
                rest /= &qb;
            }
        }
    }
    if rest.is_one() {
        return Factorization { primes, complete: true, cofactor: rest };
    }
    let bound_sq = BigUint::from(bound) * BigUint::from(bound);
    let certified = rest <= bound_sq || rest.to_u64().is_some_and(is_prime_u64);
    if certified {
        primes.push(rest);
        Factorization { primes, complete: true, cofactor: BigUint::one() }
    } else {
        Factorization { primes, complete: false, cofactor: rest }
    }
}

fn small_primes(bound: u64) -> impl Iterator<Item = u64> {
    let n = bound as usize + 1;
    let mut sieve = vec![true; n.max(2)];
    sieve[0] = false;
    if n > 1 {
        sieve[1] = false;
    }
    let mut i = 2;
    while i * i < n {
        if sieve[i] {
            let mut j = i * i;
            while j < n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .into_iter()
        .enumerate()
        .filter(|&(_, b)| b)
        .map(|(i, _)| i as u64)
}

/// Sign-aware conversion used when reducing integer coordinates mod a word prime.
pub fn bigint_mod_u64(x: &BigInt, m: u64) -> u64 {
    let r = x.magnitude() % m;
    let r = r.to_u64().unwrap_or(0);
    if x.sign() == Sign::Minus && r != 0 {
        m - r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small() {
        let ps: Vec<u64> = (0..60).filter(|&n| is_prime_u64(n)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime_u64(4_611_686_018_427_387_847));
        assert!(!is_prime_u64(3_215_031_751));
    }

    #[test]
    fn factor_roundtrip() {
        for n in [1u64, 2, 12, 255, 65535, (1 << 26) - 1, 1_099_511_627_775] {
            let prod: u64 = factor_u64(n).iter().map(|&(q, e)| q.pow(e)).product();
            assert_eq!(prod, n);
        }
        assert_eq!(factor_u64(528), vec![(2, 4), (3, 1), (11, 1)]);
    }

    #[test]
    fn rationals_parse_and_reduce() {
        assert_eq!(parse_rational("-6/4").unwrap(), rat(-3, 2));
        assert_eq!(fmt_rational(&rat_int(5)), "5/1");
        assert_eq!(rational_mod_p(&rat(1, 2), 7), Some(4));
        assert_eq!(rational_mod_p(&rat(1, 7), 7), None);
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn bounded_factorisation() {
        let f = factor_bounded(&BigInt::from(-360), 100);
        assert!(f.complete);
        assert_eq!(f.primes, vec![2u32, 3, 5].into_iter().map(BigUint::from).collect::<Vec<_>>());
        let big = BigInt::from(1_000_000_007u64) * BigInt::from(998_244_353u64);
        let f = factor_bounded(&big, 1000);
        assert!(!f.complete);
    }
}
