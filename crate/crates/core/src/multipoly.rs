//! Sparse polynomials over Q in A_1..A_d.
//!
//! Monomials are ordered lexicographically with A_d > A_{d-1} > ... > A_1,
//! so the exponent of A_d is compared first.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{Map, Value};

use crate::arith::{fmt_rational, mul_mod, parse_rational, pow_mod, rational_mod_p};
use crate::fields::{FieldDesc, FqElem};

/// Exponent vector (m_1, ..., m_d).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(d: usize) -> Monomial {
        Monomial(vec![0; d])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    d: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl MultiPoly {
    pub fn zero(d: usize) -> MultiPoly {
        MultiPoly { d, terms: BTreeMap::new() }
    }

    pub fn constant(d: usize, c: BigRational) -> MultiPoly {
        let mut out = MultiPoly::zero(d);
        out.add_term(Monomial::one(d), c);
        out
    }

    pub fn one(d: usize) -> MultiPoly {
        MultiPoly::constant(d, BigRational::one())
    }

    /// The variable A_k, 1-based.
    pub fn var(d: usize, k: usize) -> MultiPoly {
        assert!((1..=d).contains(&k), "variable index out of range");
        let mut e = vec![0; d];
        e[k - 1] = 1;
        MultiPoly::monomial(Monomial(e), BigRational::one())
    }

    pub fn monomial(m: Monomial, c: BigRational) -> MultiPoly {
        let d = m.0.len();
        let mut out = MultiPoly::zero(d);
        out.add_term(m, c);
        out
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (Monomial, BigRational)>) -> MultiPoly {
        let mut out = MultiPoly::zero(d);
        for (m, c) in terms {
            out.add_term(m, c);
        }
        out
    }

    /// Adds c·m in place, dropping the entry if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        assert_eq!(m.0.len(), self.d, "monomial has the wrong number of variables");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in increasing monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> Vec<Monomial> {
        self.terms.keys().cloned().collect()
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Some(k) when every term has total degree k.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(Monomial::degree);
        let first = degs.next()?;
        degs.all(|k| k == first).then_some(first)
    }

    pub fn scale(&self, c: &BigRational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.d);
        }
        MultiPoly { d: self.d, terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> MultiPoly {
        MultiPoly { d: self.d, terms: self.terms.iter().map(|(k, a)| (k.mul(m), a.clone())).collect() }
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut acc = MultiPoly::one(self.d);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        assert_eq!(point.len(), self.d, "point has the wrong dimension");
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    /// Coefficients reduced mod p, zero residues dropped. None when some
    /// denominator is divisible by p.
    pub fn reduce_mod_p(&self, p: u64) -> Option<BTreeMap<Monomial, u64>> {
        let mut out = BTreeMap::new();
        for (m, c) in &self.terms {
            let r = rational_mod_p(c, p)?;
            if r != 0 {
                out.insert(m.clone(), r);
            }
        }
        Some(out)
    }

    /// Evaluates the mod-p reduction at a point of F_q. None when some
    /// coefficient is not p-integral.
    pub fn eval_fq(&self, field: &FieldDesc, point: &[FqElem]) -> Option<FqElem> {
        assert_eq!(point.len(), self.d, "point has the wrong dimension");
        let p = field.p();
        let mut acc = field.zero();
        for (m, c) in &self.terms {
            let mut t = field.constant(rational_mod_p(c, p)?);
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t = &t * &x.pow(e as u128);
                }
            }
            acc = &acc + &t;
        }
        Some(acc)
    }

    /// Evaluates the mod-p reduction at a point of F_p.
    pub fn eval_mod_p(&self, p: u64, point: &[u64]) -> Option<u64> {
        let mut acc = 0u64;
        for (m, c) in &self.terms {
            let mut t = rational_mod_p(c, p)?;
            for (&x, &e) in point.iter().zip(&m.0) {
                t = mul_mod(t, pow_mod(x % p, e as u64, p), p);
            }
            acc = (acc + t) % p;
        }
        Some(acc)
    }

    /// Primes dividing a coefficient denominator are exactly those p for
    /// which this returns false.
    pub fn is_p_integral(&self, p: u64) -> bool {
        let pb = BigInt::from(p);
        self.terms.values().all(|c| !(c.denom() % &pb).is_zero())
    }

    /// JSON map from "m1,...,md" to "num/den".
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (m, c) in &self.terms {
            let key = m.0.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
            map.insert(key, Value::String(fmt_rational(c)));
        }
        Value::Object(map)
    }

    pub fn from_json(d: usize, v: &Value) -> Result<MultiPoly, String> {
        let map = v.as_object().ok_or("expected a JSON object")?;
        let mut out = MultiPoly::zero(d);
        for (k, c) in map {
            let exps: Vec<u32> = k
                .split(',')
                .map(|s| s.trim().parse::<u32>().map_err(|_| format!("bad exponent in {k:?}")))
                .collect::<Result<_, _>>()?;
            if exps.len() != d {
                return Err(format!("monomial {k:?} does not have {d} exponents"));
            }
            let c = c.as_str().ok_or("coefficients must be strings")?;
            out.add_term(Monomial(exps), parse_rational(c)?);
        }
        Ok(out)
    }
}

impl<'a> std::ops::Add<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.d, rhs.d, "variable count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> std::ops::Sub<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.d, rhs.d, "variable count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl std::ops::Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly { d: self.d, terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
}

impl<'a> std::ops::Mul<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.d, rhs.d, "variable count mismatch");
        let mut out = MultiPoly::zero(self.d);
        for (ma, a) in &self.terms {
            for (mb, b) in &rhs.terms {
                out.add_term(ma.mul(mb), a * b);
            }
        }
        out
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let a = c.abs();
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(k, &e)| if e == 1 { format!("A{}", k + 1) } else { format!("A{}^{}", k + 1, e) })
                .collect();
            if vars.is_empty() || !a.is_one() {
                if a.is_integer() {
                    write!(f, "{}", a.numer())?;
                } else {
                    write!(f, "{}", fmt_rational(&a))?;
                }
                if !vars.is_empty() {
                    write!(f, "*")?;
                }
            }
            write!(f, "{}", vars.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly[{}]({})", self.d, self)
    }
}
