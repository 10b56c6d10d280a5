//! Trace histograms over F_{q^k}.
//!
//! For functionals c_1..c_m in the base field, the histogram counts
//! x ∈ F_{q^k} by the vector (Tr(c_1 f(x)), ..., Tr(c_m f(x))) ∈ F_p^m,
//! stored at index Σ t_i p^{i-1}. Every exponential sum needed downstream
//! is a linear image of such a histogram.
//!
//! Three engines produce identical integer counts:
//! * `Naive` evaluates f with generic field arithmetic at every element.
//! * `Plane` splits x = y + Σ_{c<F} s_c θ^c with s_c ∈ F_p. For fixed y each
//!   Tr(c f(x)) is a polynomial of degree <= d in the s_c, whose
//!   coefficients cost one batch of field work per p^F elements; the points
//!   are then visited by nested forward differences.
//! * `LogTable` tabulates τ(e) = Tr(g^e) for a primitive g, after which
//!   Tr(w x^i) = τ(log w + i e) for x = g^e. Used for p <= 7.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::arith::checked_pow;
use crate::fields::{FieldDesc, FqElem};

/// Largest field handled by the log-table engine (bytes of table memory).
pub const LOG_TABLE_LIMIT: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Auto,
    Naive,
    Plane,
    LogTable,
}

/// Evaluation knobs. Results never depend on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    pub engine: Engine,
    /// Number of work chunks; 0 picks a default from the thread pool.
    pub chunks: usize,
}

/// Counts indexed by Σ t_i p^{i-1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHistogram {
    pub p: u64,
    pub width: usize,
    pub counts: Vec<u64>,
}

impl TraceHistogram {
    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    /// Collapses to counts of Σ n_i t_i mod p.
    pub fn project(&self, n: &[u64]) -> Vec<u64> {
        assert_eq!(n.len(), self.width, "coefficient vector has wrong length");
        let p = self.p;
        let mut out = vec![0u64; p as usize];
        for (idx, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut rest = idx as u64;
            let mut e = 0u64;
            for &ni in n {
                e = (e + ni * (rest % p)) % p;
                rest /= p;
            }
            out[e as usize] += c;
        }
        out
    }
}

/// Input prepared in the enumeration field F_{p^N}.
pub(crate) struct Prepared {
    pub big: FieldDesc,
    /// Per functional: (power i, w = c * a_i in raw coordinates).
    pub terms: Vec<Vec<(usize, Vec<u64>)>>,
    pub dmax: usize,
}

impl Prepared {
    fn p(&self) -> u64 {
        self.big.p()
    }

    fn n(&self) -> usize {
        self.big.degree()
    }

    fn width(&self) -> usize {
        self.terms.len()
    }

    fn hist_len(&self) -> usize {
        checked_pow(self.p(), self.width() as u32).expect("histogram too large") as usize
    }
}

pub(crate) fn prepare(big: &FieldDesc, coeffs: &[FqElem], functionals: &[FqElem]) -> Prepared {
    let terms: Vec<Vec<(usize, Vec<u64>)>> = functionals
        .iter()
        .map(|c| {
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(i, a)| (i, (c * a).coeffs().to_vec()))
                .collect()
        })
        .collect();
    let dmax = coeffs.iter().rposition(|a| !a.is_zero()).unwrap_or(0);
    Prepared { big: big.clone(), terms, dmax }
}

pub(crate) fn choose_engine(prep: &Prepared, requested: Engine) -> Engine {
    if requested != Engine::Auto {
        return requested;
    }
    let p = prep.p();
    let q = prep.big.order().unwrap_or(u128::MAX);
    if q <= 2048 || p >= 1 << 16 {
        Engine::Naive
    } else if p <= 7 && q <= LOG_TABLE_LIMIT as u128 {
        Engine::LogTable
    } else {
        Engine::Plane
    }
}

pub(crate) fn run(prep: &Prepared, opts: EvalOptions) -> TraceHistogram {
    let engine = choose_engine(prep, opts.engine);
    let chunks = if opts.chunks == 0 { 4 * rayon::current_num_threads() } else { opts.chunks };
    let counts = match engine {
        Engine::Naive | Engine::Auto => naive(prep, chunks),
        Engine::Plane => plane(prep, chunks),
        Engine::LogTable => log_table(prep, chunks),
    };
    TraceHistogram { p: prep.p(), width: prep.width(), counts }
}

fn split(total: u64, chunks: usize) -> Vec<Range<u64>> {
    let chunks = (chunks as u64).clamp(1, total.max(1));
    let step = total / chunks;
    let extra = total % chunks;
    let mut out = Vec::with_capacity(chunks as usize);
    let mut start = 0;
    for c in 0..chunks {
        let len = step + u64::from(c < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

fn merge(parts: Vec<Vec<u64>>, len: usize) -> Vec<u64> {
    let mut out = vec![0u64; len];
    for part in parts {
        for (o, x) in out.iter_mut().zip(part) {
            *o += x;
        }
    }
    out
}

fn naive(prep: &Prepared, chunks: usize) -> Vec<u64> {
    let q = prep.big.order().expect("field too large") as u64;
    let len = prep.hist_len();
    let p = prep.p();
    let parts: Vec<Vec<u64>> = split(q, chunks)
        .into_par_iter()
        .map(|range| {
            let mut counts = vec![0u64; len];
            let big = &prep.big;
            let terms: Vec<Vec<(usize, FqElem)>> = prep
                .terms
                .iter()
                .map(|ts| ts.iter().map(|(i, w)| (*i, big.element(w))).collect())
                .collect();
            for idx in range {
                let x = big.element_at(idx as u128);
                let mut key = 0u64;
                let mut scale = 1u64;
                for ts in &terms {
                    let mut y = big.zero();
                    for (i, w) in ts {
                        y = &y + &(w * &x.pow(*i as u128));
                    }
                    key += scale * y.trace_abs();
                    scale *= p;
                }
                counts[key as usize] += 1;
            }
            counts
        })
        .collect();
    merge(parts, len)
}

/// Multiplication in F_p[x]/(g) for p < 2^16 without per-term reductions.
struct SmallField {
    p: u64,
    n: usize,
    neg_g: Vec<u64>,
}

impl SmallField {
    fn new(f: &FieldDesc) -> Self {
        let p = f.p();
        let n = f.degree();
        let neg_g = f.defpoly()[..n].iter().map(|&c| (p - c) % p).collect();
        SmallField { p, n, neg_g }
    }

    fn mul(&self, a: &[u64], b: &[u64], scratch: &mut [u64], out: &mut [u64]) {
        let n = self.n;
        let p = self.p;
        scratch[..2 * n - 1].fill(0);
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                scratch[i + j] += x * y;
            }
        }
        for k in (n..2 * n - 1).rev() {
            let t = scratch[k] % p;
            if t == 0 {
                continue;
            }
            for i in 0..n {
                scratch[k - n + i] += self.neg_g[i] * t;
            }
        }
        for i in 0..n {
            out[i] = scratch[i] % p;
        }
    }

    /// z <- z·θ in place.
    fn mul_theta(&self, z: &mut [u64]) {
        let n = self.n;
        let p = self.p;
        let top = z[n - 1];
        for i in (1..n).rev() {
            z[i] = z[i - 1];
        }
        z[0] = 0;
        if top != 0 {
            for i in 0..n {
                let s = z[i] + self.neg_g[i] * top % p;
                z[i] = if s >= p { s - p } else { s };
            }
        }
    }
}

/// Tr(w θ^k) for k < len.
fn extended_traces(big: &FieldDesc, w: &[u64], len: usize) -> Vec<u64> {
    let sf = SmallField::new(big);
    let mut z = w.to_vec();
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        if k > 0 {
            if big.degree() == 1 {
                z.fill(0);
            } else {
                sf.mul_theta(&mut z);
            }
        }
        out.push(big.trace_raw(&z));
    }
    out
}

/// Reduction modulo a word-sized prime via a precomputed reciprocal.
#[derive(Clone, Copy)]
struct Barrett {
    p: u64,
    m: u64,
}

impl Barrett {
    fn new(p: u64) -> Self {
        Barrett { p, m: (u128::from(u64::MAX) / u128::from(p)) as u64 }
    }

    #[inline(always)]
    fn reduce(self, x: u64) -> u64 {
        let q = ((u128::from(x) * u128::from(self.m)) >> 64) as u64;
        let r = x - q * self.p;
        if r >= self.p {
            r - self.p
        } else {
            r
        }
    }
}

/// Number of coordinates enumerated by finite differences in the plane
/// engine; the remaining coordinates form the base point.
fn free_coords(p: u64, n: usize, dd: usize, width: usize) -> usize {
    let lo = n.min(2);
    // Rough per-element cost of the per-base setup plus one walk step.
    let cost = |f: usize| -> f64 {
        let cells = (dd as f64).powi(f as i32);
        width as f64 * cells * (n + dd * f) as f64 / (p as f64).powi(f as i32)
    };
    let mut best = lo;
    for f in lo + 1..=n {
        let per_base = (p as f64).powi(f as i32);
        let bases = (p as f64).powi((n - f) as i32);
        let cells = width as f64 * (dd as f64).powi(f as i32);
        if per_base > (1u64 << 22) as f64 || bases < 64.0 || cells > (1u64 << 14) as f64 {
            break;
        }
        if cost(f) < cost(best) {
            best = f;
        }
    }
    best
}

fn plane(prep: &Prepared, chunks: usize) -> Vec<u64> {
    let p = prep.p();
    let n = prep.n();
    let dmax = prep.dmax;
    let dd = dmax + 1;
    let width = prep.width();
    let len = prep.hist_len();
    let free = free_coords(p, n, dd, width);
    let cells = dd.pow(free as u32);
    let base_total = p.pow((n - free) as u32);
    let br = Barrett::new(p);

    // tv[m][term][k] = Tr(w θ^k).
    let tv_len = n + (free - 1) * dmax + 1;
    let tv: Vec<Vec<Vec<u64>>> = prep
        .terms
        .iter()
        .map(|ts| ts.iter().map(|(_, w)| extended_traces(&prep.big, w, tv_len)).collect())
        .collect();
    let mut binom = vec![vec![0u64; dd]; dd];
    for i in 0..dd {
        binom[i][0] = 1 % p;
        for j in 1..=i {
            binom[i][j] = (binom[i - 1][j - 1] + binom[i - 1][j]) % p;
        }
    }
    // Exponent vectors (j_0, ..., j_{free-1}) with |j| <= dmax, at offset Σ j_c dd^c.
    let mut shape: Vec<(usize, Vec<usize>)> = Vec::new();
    for offset in 0..cells {
        let mut rest = offset;
        let jv: Vec<usize> = (0..free)
            .map(|_| {
                let j = rest % dd;
                rest /= dd;
                j
            })
            .collect();
        if jv.iter().sum::<usize>() <= dmax {
            shape.push((offset, jv));
        }
    }
    // multi[i][cell] = i! / (j_0! ... j_{free-1}! e!) mod p.
    let multi: Vec<Vec<u64>> = (0..dd)
        .map(|i| {
            shape
                .iter()
                .map(|(_, jv)| {
                    let mut left = i;
                    let mut acc = 1 % p;
                    for &j in jv {
                        if j > left {
                            return 0;
                        }
                        acc = acc * binom[left][j] % p;
                        left -= j;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    // delta[k][j] = (Δ^k t^j)(0) mod p.
    let delta: Vec<Vec<u64>> = (0..dd)
        .map(|k| {
            (0..dd)
                .map(|j| {
                    let mut acc = 0u64;
                    for i in 0..=k {
                        let ij = crate::arith::pow_mod(i as u64 % p, j as u64, p);
                        let c = binom[k][i] * ij % p;
                        acc = if (k - i) % 2 == 0 { (acc + c) % p } else { (acc + p - c) % p };
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let parts: Vec<Vec<u64>> = split(base_total, chunks)
        .into_par_iter()
        .map(|range| {
            let sf = SmallField::new(&prep.big);
            let mut counts = vec![0u64; len];
            let mut scratch = vec![0u64; 2 * n];
            let mut pows = vec![vec![0u64; n]; dd];
            let mut bufs: Vec<Vec<u64>> = (0..=free).map(|k| vec![0u64; width * dd.pow(k as u32)]).collect();
            let mut gather = vec![0u64; dd];
            let mut walker = Walker::new(p, dmax, width);
            let mut y = vec![0u64; n];
            let mut rest = range.start;
            for c in y.iter_mut().skip(free) {
                *c = rest % p;
                rest /= p;
            }
            for _ in range.clone() {
                pows[0].fill(0);
                pows[0][0] = 1;
                if dmax >= 1 {
                    pows[1].copy_from_slice(&y);
                }
                for e in 2..=dmax {
                    let (lo, hi) = pows.split_at_mut(e);
                    sf.mul(&lo[e - 1], &y, &mut scratch, &mut hi[0]);
                }
                // Coefficient of Π s_c^{j_c} in Tr(c_m f(y + Σ s_c θ^c)).
                let v = &mut bufs[free];
                v.fill(0);
                for m in 0..width {
                    for (ti, (i, _)) in prep.terms[m].iter().enumerate() {
                        let i = *i;
                        let t = &tv[m][ti];
                        for (ci, (offset, jv)) in shape.iter().enumerate() {
                            let coef = multi[i][ci];
                            if coef == 0 {
                                continue;
                            }
                            let e = i - jv.iter().sum::<usize>();
                            let pos: usize = jv.iter().enumerate().map(|(c, &j)| c * j).sum();
                            let pe = &pows[e];
                            let mut acc = 0u64;
                            for k in 0..n {
                                acc += pe[k] * t[pos + k];
                            }
                            let slot = &mut v[m * cells + offset];
                            *slot = br.reduce(*slot + br.reduce(br.reduce(acc) * coef));
                        }
                    }
                }
                // Forward differences along every axis.
                for axis in 0..free {
                    let stride = dd.pow(axis as u32);
                    for m in 0..width {
                        let arr = &mut v[m * cells..(m + 1) * cells];
                        for b in 0..cells {
                            if (b / stride) % dd != 0 {
                                continue;
                            }
                            for j in 0..dd {
                                gather[j] = arr[b + j * stride];
                            }
                            for k in 0..dd {
                                let mut acc = 0u64;
                                for j in 0..dd {
                                    acc += delta[k][j] * gather[j];
                                }
                                arr[b + k * stride] = br.reduce(acc);
                            }
                        }
                    }
                }
                walker.walk(free, &mut bufs, &mut counts);
                for c in y.iter_mut().skip(free) {
                    *c += 1;
                    if *c < p {
                        break;
                    }
                    *c = 0;
                }
            }
            counts[0] -= walker.padding;
            counts
        })
        .collect();
    merge(parts, len)
}

/// Nested iteration over the free coordinates driven by forward differences.
struct Walker {
    p: u64,
    dmax: usize,
    width: usize,
    lanes: bool,
    block: Vec<u32>,
    line: Vec<u64>,
    /// Increments of counts[0] caused by padding lanes.
    padding: u64,
}

impl Walker {
    fn new(p: u64, dmax: usize, width: usize) -> Self {
        let dd = dmax + 1;
        Walker {
            p,
            dmax,
            width,
            lanes: width <= 2 && (1..=12).contains(&dmax),
            block: vec![0; width * dd * LANES],
            line: vec![0; width * dd],
            padding: 0,
        }
    }

    /// bufs[k] holds, per functional, the difference table of a k-dimensional
    /// slice with axis k-1 slowest. Visits all p^k points of the slice.
    fn walk(&mut self, k: usize, bufs: &mut [Vec<u64>], counts: &mut [u64]) {
        let (p, dd, width) = (self.p, self.dmax + 1, self.width);
        if k == 1 {
            self.line.copy_from_slice(&bufs[1]);
            diff_line(p, self.dmax, width, &mut self.line, counts);
            return;
        }
        let sub = dd.pow(k as u32 - 1);
        let (lower, upper) = bufs.split_at_mut(k);
        let arr = &mut upper[0];
        let mut s = 0u64;
        while s < p {
            if k == 2 && self.lanes {
                self.block.fill(0);
                let used = LANES.min((p - s) as usize);
                for lane in 0..used {
                    for m in 0..width {
                        for j in 0..dd {
                            self.block[(m * dd + j) * LANES + lane] = arr[m * dd * dd + j] as u32;
                        }
                    }
                    advance(p, arr, width, dd, sub);
                }
                diff_block(p as u32, self.dmax, width, &self.block, counts);
                self.padding += (LANES - used) as u64 * p;
                s += used as u64;
                continue;
            }
            let next = &mut lower[k - 1];
            for m in 0..width {
                next[m * sub..(m + 1) * sub].copy_from_slice(&arr[m * sub * dd..m * sub * dd + sub]);
            }
            self.walk(k - 1, lower, counts);
            advance(p, arr, width, dd, sub);
            s += 1;
        }
    }
}

/// Steps a difference table one unit along its slowest axis.
#[inline]
fn advance(p: u64, arr: &mut [u64], width: usize, dd: usize, sub: usize) {
    for m in 0..width {
        let a = &mut arr[m * sub * dd..(m + 1) * sub * dd];
        for r in 0..dd - 1 {
            let (lo, hi) = a.split_at_mut((r + 1) * sub);
            for (x, &y) in lo[r * sub..].iter_mut().zip(&hi[..sub]) {
                let s = *x + y;
                *x = if s >= p { s - p } else { s };
            }
        }
    }
}

/// One line from forward differences diff[m][k] = Δ^k P_m(0).
#[inline]
fn diff_line(p: u64, dmax: usize, width: usize, diff: &mut [u64], counts: &mut [u64]) {
    macro_rules! fixed {
        ($($d:literal)*) => {
            match (width, dmax) {
                $( (1, $d) => return line1::<{ $d + 1 }>(p, diff, counts), )*
                $( (2, $d) => return line2::<{ $d + 1 }>(p, diff, counts), )*
                _ => {}
            }
        };
    }
    fixed!(1 2 3 4 5 6 7 8 9 10 11 12);
    let dd = dmax + 1;
    for _ in 0..p {
        let mut key = 0u64;
        for m in (0..width).rev() {
            let d = &mut diff[m * dd..(m + 1) * dd];
            key = key * p + d[0];
            for k in 0..dmax {
                let s = d[k] + d[k + 1];
                d[k] = if s >= p { s - p } else { s };
            }
        }
        counts[key as usize] += 1;
    }
}

#[inline(always)]
fn step<const D: usize>(p: u64, d: &mut [u64; D]) {
    for k in 0..D - 1 {
        let s = d[k] + d[k + 1];
        d[k] = if s >= p { s - p } else { s };
    }
}

fn line1<const D: usize>(p: u64, diff: &[u64], counts: &mut [u64]) {
    let mut d: [u64; D] = diff[..D].try_into().unwrap();
    for _ in 0..p {
        counts[d[0] as usize] += 1;
        step(p, &mut d);
    }
}

fn line2<const D: usize>(p: u64, diff: &[u64], counts: &mut [u64]) {
    let mut d0: [u64; D] = diff[..D].try_into().unwrap();
    let mut d1: [u64; D] = diff[D..2 * D].try_into().unwrap();
    for _ in 0..p {
        counts[(d1[0] * p + d0[0]) as usize] += 1;
        step(p, &mut d0);
        step(p, &mut d1);
    }
}

const LANES: usize = 8;

/// LANES interleaved lines; block[(m*dd + k)*LANES + lane] = Δ^k P_{m,lane}(0).
fn diff_block(p: u32, dmax: usize, width: usize, block: &[u32], counts: &mut [u64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if has_avx2() {
            // SAFETY: the CPU supports AVX2, checked at runtime.
            unsafe { diff_block_avx2(p, dmax, width, block, counts) };
            return;
        }
    }
    diff_block_generic(p, dmax, width, block, counts);
}

#[cfg(target_arch = "x86_64")]
fn has_avx2() -> bool {
    static AVX2: OnceLock<bool> = OnceLock::new();
    *AVX2.get_or_init(|| std::is_x86_feature_detected!("avx2"))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn diff_block_avx2(p: u32, dmax: usize, width: usize, block: &[u32], counts: &mut [u64]) {
    diff_block_generic(p, dmax, width, block, counts);
}

#[inline(always)]
fn diff_block_generic(p: u32, dmax: usize, width: usize, block: &[u32], counts: &mut [u64]) {
    macro_rules! fixed {
        ($($d:literal)*) => {
            match (width, dmax) {
                $( (1, $d) => block1::<{ $d + 1 }>(p, block, counts), )*
                $( (2, $d) => block2::<{ $d + 1 }>(p, block, counts), )*
                _ => unreachable!("block kernels cover width <= 2, dmax <= 12"),
            }
        };
    }
    fixed!(1 2 3 4 5 6 7 8 9 10 11 12);
}

#[inline(always)]
fn load_block<const D: usize>(block: &[u32]) -> [[u32; LANES]; D] {
    let mut d = [[0u32; LANES]; D];
    for (k, row) in d.iter_mut().enumerate() {
        row.copy_from_slice(&block[k * LANES..(k + 1) * LANES]);
    }
    d
}

#[inline(always)]
fn step_block<const D: usize>(p: u32, d: &mut [[u32; LANES]; D]) {
    for k in 0..D - 1 {
        let next = d[k + 1];
        for (x, y) in d[k].iter_mut().zip(next) {
            let s = *x + y;
            *x = s.min(s.wrapping_sub(p));
        }
    }
}

#[inline(always)]
fn block1<const D: usize>(p: u32, block: &[u32], counts: &mut [u64]) {
    let mut d = load_block::<D>(block);
    for _ in 0..p {
        for &x in &d[0] {
            counts[x as usize] += 1;
        }
        step_block(p, &mut d);
    }
}

#[inline(always)]
fn block2<const D: usize>(p: u32, block: &[u32], counts: &mut [u64]) {
    let mut d0 = load_block::<D>(block);
    let mut d1 = load_block::<D>(&block[D * LANES..]);
    for _ in 0..p {
        for (&a, &b) in d0[0].iter().zip(&d1[0]) {
            counts[(b * p + a) as usize] += 1;
        }
        step_block(p, &mut d0);
        step_block(p, &mut d1);
    }
}

fn discrete_log(big: &FieldDesc, g: &FqElem, target: &FqElem, order: u64) -> u64 {
    let m = (order as f64).sqrt().ceil() as u64 + 1;
    let mut baby: HashMap<Vec<u64>, u64> = HashMap::with_capacity(m as usize);
    let mut z = big.one();
    for j in 0..m {
        baby.entry(z.coeffs().to_vec()).or_insert(j);
        z = &z * g;
    }
    let giant = g.pow((order - m % order) as u128 % order as u128);
    let mut y = target.clone();
    for i in 0..=m {
        if let Some(&j) = baby.get(y.coeffs()) {
            return (i * m + j) % order;
        }
        y = &y * &giant;
    }
    panic!("discrete logarithm not found");
}

fn log_table(prep: &Prepared, chunks: usize) -> Vec<u64> {
    let big = &prep.big;
    let p = prep.p();
    assert!(p < 256, "log table needs p < 256");
    let q = big.order().expect("field too large") as u64;
    let order = q - 1;
    let g = big.primitive_element().expect("primitive element");
    let table = build_trace_table(big, &g, order, chunks);

    let width = prep.width();
    let len = prep.hist_len();
    let mut consts = vec![0u64; width];
    let mut logs: Vec<Vec<(u64, u64)>> = vec![Vec::new(); width];
    for (m, ts) in prep.terms.iter().enumerate() {
        for (i, w) in ts {
            if *i == 0 {
                consts[m] = (consts[m] + big.trace_raw(w)) % p;
            } else {
                let l = discrete_log(big, &g, &big.element(w), order);
                logs[m].push((*i as u64 % order, l));
            }
        }
    }
    let br = Barrett::new(p);
    let parts: Vec<Vec<u64>> = split(order, chunks)
        .into_par_iter()
        .map(|range| {
            let mut counts = vec![0u64; len];
            // Running indices (i*e + log w) mod order.
            let mut idx: Vec<Vec<(u64, u64)>> = logs
                .iter()
                .map(|ls| {
                    ls.iter()
                        .map(|&(i, l)| (i, ((i as u128 * range.start as u128 + l as u128) % order as u128) as u64))
                        .collect()
                })
                .collect();
            for _ in range {
                let mut key = 0u64;
                for m in (0..width).rev() {
                    let mut t = consts[m];
                    for slot in idx[m].iter_mut() {
                        t += table[slot.1 as usize] as u64;
                        slot.1 += slot.0;
                        if slot.1 >= order {
                            slot.1 -= order;
                        }
                    }
                    key = key * p + br.reduce(t);
                }
                counts[key as usize] += 1;
            }
            counts
        })
        .collect();
    let mut counts = merge(parts, len);
    // x = 0.
    let mut key = 0u64;
    for m in (0..width).rev() {
        key = key * p + consts[m];
    }
    counts[key as usize] += 1;
    counts
}

/// τ[e] = Tr(g^e) for 0 <= e < order.
fn build_trace_table(big: &FieldDesc, g: &FqElem, order: u64, chunks: usize) -> Vec<u8> {
    let p = big.p();
    let n = big.degree();
    let mut table = vec![0u8; order as usize];
    let ranges = split(order, chunks);
    let mut slices: Vec<&mut [u8]> = Vec::with_capacity(ranges.len());
    let mut rest: &mut [u8] = &mut table;
    for r in &ranges {
        let (head, tail) = rest.split_at_mut((r.end - r.start) as usize);
        slices.push(head);
        rest = tail;
    }
    let gk: Vec<usize> = (0..n).filter(|&k| g.coeffs()[k] != 0).collect();
    if p == 2 && n < 64 {
        let defmask: u64 = big.defpoly().iter().enumerate().fold(0, |acc, (i, &c)| acc | (c << i));
        let tmask: u64 = big.trace_vector().iter().enumerate().fold(0, |acc, (i, &c)| acc | (c << i));
        let top = 1u64 << n;
        slices.into_par_iter().zip(ranges.into_par_iter()).for_each(|(out, r)| {
            let start = g.pow(r.start as u128);
            let mut z: u64 = start.coeffs().iter().enumerate().fold(0, |acc, (i, &c)| acc | (c << i));
            for slot in out.iter_mut() {
                *slot = ((z & tmask).count_ones() & 1) as u8;
                let mut acc = 0u64;
                let mut shifted = z;
                let mut k = 0;
                for &kk in &gk {
                    while k < kk {
                        shifted <<= 1;
                        if shifted & top != 0 {
                            shifted ^= defmask;
                        }
                        k += 1;
                    }
                    acc ^= shifted;
                }
                z = acc;
            }
        });
        return table;
    }
    let tr = big.trace_vector().to_vec();
    // red[t*n + i] = coefficient i of -t·g(θ) + t·θ^n, i.e. what θ^n·t reduces to.
    let neg_g: Vec<u64> = big.defpoly()[..n].iter().map(|&c| (p - c) % p).collect();
    let red: Vec<u64> = (0..p).flat_map(|t| neg_g.iter().map(move |&c| c * t % p)).collect();
    let gc = g.coeffs().to_vec();
    let br = Barrett::new(p);
    slices.into_par_iter().zip(ranges.into_par_iter()).for_each(|(out, r)| {
        let mut z = g.pow(r.start as u128).coeffs().to_vec();
        let mut acc = vec![0u64; n];
        let mut shifted = vec![0u64; n];
        for slot in out.iter_mut() {
            let mut t = 0u64;
            for k in 0..n {
                t += z[k] * tr[k];
            }
            *slot = br.reduce(t) as u8;
            acc.fill(0);
            shifted.copy_from_slice(&z);
            let mut k = 0;
            for &kk in &gk {
                while k < kk {
                    let top = shifted[n - 1] as usize;
                    shifted.copy_within(0..n - 1, 1);
                    shifted[0] = 0;
                    let row = &red[top * n..(top + 1) * n];
                    for i in 0..n {
                        let s = shifted[i] + row[i];
                        shifted[i] = if s >= p { s - p } else { s };
                    }
                    k += 1;
                }
                let c = gc[kk];
                for i in 0..n {
                    let s = acc[i] + if c == 1 { shifted[i] } else { br.reduce(c * shifted[i]) };
                    acc[i] = if s >= p { s - p } else { s };
                }
            }
            std::mem::swap(&mut z, &mut acc);
        }
    });
    table
}
