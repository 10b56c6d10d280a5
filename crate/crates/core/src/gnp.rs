//! Asymptotic generic Newton polygons of the families x^d + ... and
//! x^d + a x, the Hodge polygon, and the ε_i slope data.
//!
//! Vertices are w_n = n(n+1)/(2d) + M_n/(d(p-1)) where M_n is the minimum of
//! Σ r_{i,σ(i)} over σ ∈ S_n and r_ij = (-(ri - j)) mod d with r = p mod d.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use thiserror::Error;

use crate::arith::{is_prime_u64, rat};
use crate::polygon::{lower_hull, NewtonPolygon, Point};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GnpError {
    #[error("degree {0} is out of range (need d >= 2)")]
    Degree(usize),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p = {p} divides d = {d}")]
    NotCoprime { d: usize, p: u64 },
    #[error("residue {r} is not a unit mod {d}")]
    BadResidue { d: usize, r: u64 },
    #[error("ε_{i} = {eps} violates its bounds for d = {d}")]
    EpsilonBound { d: usize, i: usize, eps: i64 },
    #[error("endpoint ({d}-1, w) has w = {w} instead of (d-1)/2")]
    Endpoint { d: usize, w: String },
}

/// Residue tables r_ij and r'_ij for 1 <= i, j <= n, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueTables {
    pub d: usize,
    pub r: u64,
    pub full: Vec<Vec<i64>>,
    pub one_param: Vec<Vec<i64>>,
}

pub fn residue_tables(d: usize, r: u64, n: usize) -> ResidueTables {
    let dd = d as i64;
    let r = r as i64;
    let full = (1..=n as i64)
        .map(|i| (1..=n as i64).map(|j| (-(r * i - j)).rem_euclid(dd)).collect())
        .collect();
    let one_param = (1..=n as i64)
        .map(|i| (1..=n as i64).map(|j| (r * i - j).rem_euclid(dd)).collect())
        .collect();
    ResidueTables { d, r: r as u64, full, one_param }
}

/// Minimum of Σ cost[i][σ(i)] over permutations, with every minimiser.
///
/// Minimisers are 0-based permutations listed in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub value: i64,
    pub minimizers: Vec<Vec<usize>>,
}

pub fn assignment_min(cost: &[Vec<i64>]) -> Assignment {
    let n = cost.len();
    assert!(cost.iter().all(|row| row.len() == n), "cost matrix must be square");
    if n == 0 {
        return Assignment { value: 0, minimizers: vec![Vec::new()] };
    }
    if n <= 8 {
        brute_force_min(cost)
    } else {
        let (value, u, v) = hungarian(cost);
        let minimizers = tight_matchings(cost, &u, &v);
        debug_assert!(minimizers.iter().all(|s| perm_cost(cost, s) == value));
        Assignment { value, minimizers }
    }
}

fn perm_cost(cost: &[Vec<i64>], s: &[usize]) -> i64 {
    s.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

/// Exhaustive search over S_n in lexicographic order.
pub fn brute_force_min(cost: &[Vec<i64>]) -> Assignment {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = i64::MAX;
    let mut mins = Vec::new();
    loop {
        let c = perm_cost(cost, &perm);
        if c < best {
            best = c;
            mins.clear();
        }
        if c == best {
            mins.push(perm.clone());
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Assignment { value: best, minimizers: mins }
}

pub(crate) fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Hungarian algorithm with potentials. Returns the optimum and feasible
/// duals (u, v) with cost[i][j] >= u[i] + v[j].
pub fn hungarian(cost: &[Vec<i64>]) -> (i64, Vec<i64>, Vec<i64>) {
    let n = cost.len();
    let inf = i64::MAX / 4;
    // 1-based arrays; column 0 is a virtual start.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut matched = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut value = 0;
    for j in 1..=n {
        value += cost[matched[j] - 1][j - 1];
    }
    (value, u[1..].to_vec(), v[1..].to_vec())
}

/// All permutations using only edges with zero reduced cost. With optimal
/// duals these are exactly the minimisers.
fn tight_matchings(cost: &[Vec<i64>], u: &[i64], v: &[i64]) -> Vec<Vec<usize>> {
    let n = cost.len();
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| cost[i][j] - u[i] - v[j] == 0).collect())
        .collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(
        i: usize,
        tight: &[Vec<usize>],
        used: &mut [bool],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if i == tight.len() {
            out.push(cur.clone());
            return;
        }
        for &j in &tight[i] {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(i + 1, tight, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(0, &tight, &mut used, &mut cur, &mut out);
    out
}

/// Generic polygon together with the listed points it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericPolygon {
    pub d: usize,
    pub p: u64,
    /// M_n (or M'_n) for n = 1..d-1.
    pub m_values: Vec<i64>,
    /// (n, w_n) for n = 0..d-1.
    pub points: Vec<Point>,
    pub polygon: NewtonPolygon,
    /// Set when some listed point lies strictly above the hull.
    pub degenerate: bool,
}

fn validate(d: usize, p: u64) -> Result<(), GnpError> {
    if d < 2 {
        return Err(GnpError::Degree(d));
    }
    if !is_prime_u64(p) {
        return Err(GnpError::NotPrime(p));
    }
    if d as u64 % p == 0 {
        return Err(GnpError::NotCoprime { d, p });
    }
    Ok(())
}

/// M_n for n = 1..d-1 under residue class r.
pub fn m_values(d: usize, r: u64) -> Vec<i64> {
    let tables = residue_tables(d, r, d - 1);
    (1..d)
        .map(|n| {
            let sub: Vec<Vec<i64>> = tables.full[..n].iter().map(|row| row[..n].to_vec()).collect();
            assignment_min(&sub).value
        })
        .collect()
}

/// M'_n for n = 1..d-1 under residue class r.
pub fn m_prime_values(d: usize, r: u64) -> Vec<i64> {
    let tables = residue_tables(d, r, d - 1);
    (1..d)
        .map(|n| {
            let sub: Vec<Vec<i64>> = tables.one_param[..n].iter().map(|row| row[..n].to_vec()).collect();
            assignment_min(&sub).value
        })
        .collect()
}

fn build(d: usize, p: u64, ms: Vec<i64>, weight: i64) -> Result<GenericPolygon, GnpError> {
    let dd = d as i64;
    let mut points = vec![(rat(0, 1), rat(0, 1))];
    for (k, &m) in ms.iter().enumerate() {
        let n = k as i64 + 1;
        let w = rat(n * (n + 1), 2 * dd) + BigRational::new(BigInt::from(weight * m), BigInt::from(dd) * BigInt::from(p - 1));
        points.push((rat(n, 1), w));
    }
    let end = &points[d - 1].1;
    if *end != rat(dd - 1, 2) {
        return Err(GnpError::Endpoint { d, w: format!("{}/{}", end.numer(), end.denom()) });
    }
    let polygon = lower_hull(points.clone()).expect("points are ordered");
    let degenerate = points.iter().any(|pt| polygon.eval(&pt.0) != pt.1);
    Ok(GenericPolygon { d, p, m_values: ms, points, polygon, degenerate })
}

/// GNP(A^d, F_p).
pub fn gnp_full(d: usize, p: u64) -> Result<GenericPolygon, GnpError> {
    validate(d, p)?;
    let r = p % d as u64;
    build(d, p, m_values(d, r), 1)
}

/// GNP(A^d(1), F_p) for the family x^d + a x.
pub fn gnp_one_param(d: usize, p: u64) -> Result<GenericPolygon, GnpError> {
    validate(d, p)?;
    let r = p % d as u64;
    build(d, p, m_prime_values(d, r), d as i64 - 1)
}

/// HP(A^d): vertices (n, n(n+1)/(2d)) for n = 0..d-1.
pub fn hodge(d: usize) -> NewtonPolygon {
    let dd = d as i64;
    let pts = (0..dd).map(|n| (rat(n, 1), rat(n * (n + 1), 2 * dd))).collect();
    lower_hull(pts).expect("ordered")
}

/// HP_g: the (p^ℓ - 1)-fold dilation of HP(A^d).
pub fn hodge_curve(d: usize, p: u64, ell: u32) -> NewtonPolygon {
    hodge(d).dilate(p.pow(ell) - 1)
}

/// ε_i = M_i - M_{i-1} for i = 1..d-1, checked against
/// -(i-1)(d-1) <= ε_i <= i(d-1).
pub fn epsilon_slopes(d: usize, r: u64) -> Result<Vec<i64>, GnpError> {
    if d < 2 {
        return Err(GnpError::Degree(d));
    }
    if r.gcd(&(d as u64)) != 1 {
        return Err(GnpError::BadResidue { d, r });
    }
    let ms = m_values(d, r);
    let dd = d as i64;
    let mut prev = 0;
    let mut out = Vec::with_capacity(d - 1);
    for (k, &m) in ms.iter().enumerate() {
        let i = k as i64 + 1;
        let eps = m - prev;
        if eps < -(i - 1) * (dd - 1) || eps > i * (dd - 1) {
            return Err(GnpError::EpsilonBound { d, i: k + 1, eps });
        }
        out.push(eps);
        prev = m;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_examples() {
        let t = residue_tables(3, 2, 2);
        assert_eq!(t.full, vec![vec![2, 0], vec![0, 1]]);
        let a = assignment_min(&t.full[..1].iter().map(|r| r[..1].to_vec()).collect::<Vec<_>>());
        assert_eq!(a.value, 2);
        let a = assignment_min(&t.full);
        assert_eq!(a.value, 0);
        assert_eq!(a.minimizers, vec![vec![1, 0]]);
    }

    #[test]
    fn identity_zero_diagonal() {
        let c = vec![vec![0, 5, 5], vec![5, 0, 5], vec![5, 5, 0]];
        let a = assignment_min(&c);
        assert_eq!(a.value, 0);
        assert!(a.minimizers.contains(&vec![0, 1, 2]));
    }

    #[test]
    fn d3_p5() {
        let g = gnp_full(3, 5).unwrap();
        assert_eq!(g.m_values, vec![2, 0]);
        // w_1 = 1/3 + 2/12 lies on the chord from (0,0) to (2,1).
        assert_eq!(g.points[1].1, rat(1, 2));
        assert_eq!(g.polygon.vertices().len(), 2);
        assert!(!g.degenerate);
        assert_eq!(gnp_full(3, 7).unwrap().polygon, hodge(3));
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_slopes(3, 2).unwrap(), vec![2, -2]);
        assert_eq!(epsilon_slopes(7, 1).unwrap(), vec![0; 6]);
        assert!(epsilon_slopes(4, 2).is_err());
    }

    #[test]
    fn hungarian_and_tight_matchings_on_larger_matrix() {
        let t = residue_tables(13, 5, 10);
        let a = assignment_min(&t.full);
        let (v, _, _) = hungarian(&t.full);
        assert_eq!(a.value, v);
        assert!(!a.minimizers.is_empty());
        for s in &a.minimizers {
            assert_eq!(perm_cost(&t.full, s), v);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(gnp_full(3, 3).unwrap_err(), GnpError::NotCoprime { d: 3, p: 3 });
        assert_eq!(gnp_full(3, 9).unwrap_err(), GnpError::NotPrime(9));
    }
}
