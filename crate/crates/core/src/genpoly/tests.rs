use super::*;
use crate::arith::rat_int;
use crate::fields::build_field;
use proptest::prelude::*;

fn a(d: usize, k: usize) -> MultiPoly {
    MultiPoly::var(d, k)
}

fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..hi).filter(|&q| is_prime_u64(q)).collect()
}

#[test]
fn h11_for_d3_r2() {
    let h = h_tilde(3, 2, 1, 1).unwrap();
    let expect = &(&a(3, 1) * &a(3, 3).pow(2)).scale(&rat(1, 3)) - &(&a(3, 2).pow(2) * &a(3, 3)).scale(&rat(1, 9));
    assert_eq!(h, expect);
    assert_eq!(m_set(3, r_ij(3, 2, 1, 1)), vec![Monomial(vec![0, 2, 1]), Monomial(vec![1, 0, 2])]);
    assert_eq!(delta_ij(3, 2, 1, 1), 0);
}

#[test]
fn every_h_is_homogeneous_on_its_support() {
    for d in 2..=7 {
        for r in unit_residues(d) {
            for i in 1..d {
                for j in 1..d {
                    let h = h_tilde(d, r, i, j).unwrap();
                    assert_eq!(h.homogeneous_degree(), Some(d as u32));
                    assert_eq!(h.support(), {
                        let mut s = m_set(d, r_ij(d, r, i, j));
                        s.sort();
                        s
                    });
                }
            }
        }
    }
}

#[test]
fn m_set_matches_brute_force() {
    for d in 2..=5usize {
        for target in 0..d as i64 {
            let mut brute = Vec::new();
            let mut m = vec![0u32; d];
            loop {
                let size: u32 = m.iter().sum();
                let w: i64 = (0..d - 1).map(|k| (d - 1 - k) as i64 * m[k] as i64).sum();
                if size == d as u32 && w == target {
                    brute.push(Monomial(m.clone()));
                }
                let mut k = 0;
                while k < d {
                    m[k] += 1;
                    if m[k] <= d as u32 {
                        break;
                    }
                    m[k] = 0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
            let mut got = m_set(d, target);
            got.sort();
            brute.sort();
            assert_eq!(got, brute, "d={d} target={target}");
        }
    }
}

#[test]
fn delta_is_the_ceiling_gap() {
    for d in 2..=9usize {
        for p in primes_in(d as u64 + 1, 200) {
            let r = p % d as u64;
            for i in 1..d {
                let pi = (p * i as u64) as i64;
                for j in 1..d {
                    let gap = ceil_div(pi - 1, d as i64) - ceil_div(pi - j as i64, d as i64);
                    assert_eq!(delta_ij(d, r, i, j) as i64, gap, "d={d} p={p} i={i} j={j}");
                }
            }
        }
    }
}

// With δ forced to 1 whenever ri ≡ 1 (mod d) the scalar relating K̃ and H̃
// would change with j, so no single v_i could exist.
#[test]
fn delta_vanishes_when_ri_is_one() {
    let (d, p, i) = (3usize, 31u64, 1usize);
    assert_eq!((p as usize * i) % d, 1);
    let literal = |m: &Monomial| {
        let base = rat(r_ij(d, 1, i, 1) - 1, d as i64);
        let s: u32 = m.0[..d - 1].iter().sum();
        let mut num = BigRational::one();
        for l in 0..s + 1 {
            num *= &base - rat(l as i64, 1);
        }
        let den: BigInt = m.0[..d - 1].iter().map(|&e| factorial(e as u64)).product();
        num / BigRational::from_integer(den)
    };
    let ratios: Vec<u64> = (1..d)
        .map(|j| {
            let m = &m_set(d, r_ij(d, 1, i, j))[0];
            let lit = crate::arith::rational_mod_p(&literal(m), p).unwrap();
            let ours = crate::arith::rational_mod_p(&h_coefficient(d, 1, i, j, m), p).unwrap();
            mul_mod(lit, inv_mod(ours, p), p)
        })
        .collect();
    assert_ne!(ratios[0], ratios[1]);
    assert!((1..d).all(|j| check_key2(d, p, i, j).unwrap()));
}

#[test]
fn f1_is_h11() {
    for d in 2..=6 {
        for r in unit_residues(d) {
            assert_eq!(f_tilde(d, r, 1).unwrap(), h_tilde(d, r, 1, 1).unwrap());
        }
    }
}

#[test]
fn f2_for_d3_r2() {
    let f = f_tilde(3, 2, 2).unwrap();
    assert!(!f.is_zero());
    assert_eq!(f.homogeneous_degree(), Some(6));
    assert_eq!(s_min(3, 2, 2).unwrap(), vec![vec![1, 0]]);
    // Only the transposition is minimal, so f̃_2 = -H̃_12 H̃_21.
    let expect = -&(&h_tilde(3, 2, 1, 2).unwrap() * &h_tilde(3, 2, 2, 1).unwrap());
    assert_eq!(f, expect);
}

#[test]
fn sigma0_examples() {
    for d in 2..=8 {
        for n in 1..d {
            let s = sigma0(d, 1, n).unwrap();
            assert_eq!(s.perm, (0..n).collect::<Vec<_>>());
            assert_eq!(s.layer_sizes[0], n);
        }
    }
    let s = sigma0(3, 2, 2).unwrap();
    assert_eq!(s.perm, vec![1, 0]);
    assert_eq!(s.layer_sizes, vec![2, 0, 0]);
    assert_eq!(s.xi, Monomial(vec![0, 0, 6]));
}

#[test]
fn lead_certificate_small_degrees() {
    for d in 3..=5 {
        for r in unit_residues(d) {
            for n in 1..d {
                let c = lead_certificate(d, r, n).unwrap();
                assert!(c.holds, "d={d} r={r} n={n}: {c:?}");
            }
        }
    }
}

#[test]
fn det_matches_permutation_expansion() {
    let (d, r, n) = (4usize, 3u64, 3usize);
    let hs = h_matrix(d, r, n).unwrap();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut full = MultiPoly::zero(d);
    loop {
        full = &full + &signed_product(&hs, &perm);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    assert_eq!(det_h(d, r, n).unwrap(), full);
}

#[test]
fn factor_set_shape_and_integrality() {
    for d in 2..=6 {
        for r in unit_residues(d) {
            let set = psi_factors(d, r).unwrap();
            assert_eq!(set.factors.len(), 1 + (d - 1) * (d - 1) + (d - 2));
            assert!(set.factors.iter().all(|f| !f.poly.is_zero()));
            for p in primes_in(d as u64 + 1, 400).into_iter().filter(|p| p % d as u64 == r) {
                assert!(set.factors.iter().all(|f| f.poly.is_p_integral(p)), "d={d} r={r} p={p}");
            }
        }
    }
    let set = psi_factors(3, 2).unwrap();
    assert_eq!(set.product().homogeneous_degree(), Some(1 + 4 * 3 + 3));
}

#[test]
fn k_tilde_example() {
    let k = k_tilde(3, 5, 1, 1).unwrap();
    let expect = &a(3, 2).pow(2).scale(&rat(1, 2)) + &(&a(3, 1) * &a(3, 3));
    assert_eq!(k, expect);
}

#[test]
fn weighted_compositions_match_brute_force() {
    for (d, n, c) in [(3usize, 4i64, 2i64), (3, 22, 8), (4, 51, 13), (4, 104, 26), (5, 17, 4)] {
        let mut brute = Vec::new();
        let mut m = vec![0u32; d - 1];
        loop {
            let size: i64 = m.iter().map(|&e| e as i64).sum();
            let w: i64 = m.iter().enumerate().map(|(k, &e)| (k as i64 + 1) * e as i64).sum();
            let rest = c - size;
            if rest >= 0 && w + d as i64 * rest == n {
                let mut full = m.clone();
                full.push(rest as u32);
                brute.push(Monomial(full));
            }
            let mut k = 0;
            while k < d - 1 {
                m[k] += 1;
                if m[k] as i64 <= c {
                    break;
                }
                m[k] = 0;
                k += 1;
            }
            if k == d - 1 {
                break;
            }
        }
        let mut got = weighted_compositions(d, n, c);
        got.sort();
        brute.sort();
        assert_eq!(got, brute, "d={d} n={n} c={c}");
    }
}

#[test]
fn k_tilde_homogeneous_and_integral() {
    for (d, p) in [(3usize, 23u64), (3, 29), (4, 53), (4, 59), (5, 107)] {
        for i in 1..d {
            for j in 1..d {
                let k = k_tilde(d, p, i, j).unwrap();
                let c = ceil_div((p * i as u64) as i64 - j as i64, d as i64);
                assert_eq!(k.homogeneous_degree(), Some(c as u32));
                assert!(k.is_p_integral(p));
            }
        }
    }
}

#[test]
fn key2_congruence_examples() {
    for (d, p) in [(3usize, 23u64), (4, 53)] {
        for i in 1..d {
            for j in 1..d {
                assert!(check_key2(d, p, i, j).unwrap(), "d={d} p={p} i={i} j={j}");
            }
        }
    }
    assert!(matches!(check_key2(3, 19, 1, 1), Err(GenpolyError::PrimeTooSmall { .. })));
}

#[test]
fn key2_supports_match_after_shift() {
    let (d, p) = (4usize, 53u64);
    for i in 1..d {
        for j in 1..d {
            let k = k_tilde(d, p, i, j).unwrap();
            let h = h_tilde(d, p % d as u64, i, j).unwrap();
            let c = ceil_div((p * i as u64) as i64 - j as i64, d as i64) as u32;
            let mut shift = vec![0u32; d];
            shift[d - 1] = c - d as u32;
            assert_eq!(k.support(), h.mul_monomial(&Monomial(shift)).support());
        }
    }
}

#[test]
fn x3_plus_x_is_outside_u() {
    // For r = 1 the factor H̃_12 is a multiple of A_2 A_3^2.
    let h12 = h_tilde(3, 1, 1, 2).unwrap();
    assert_eq!(h12.support(), vec![Monomial(vec![0, 1, 2])]);
    let rep = membership_u(&[rat_int(1), rat_int(0), rat_int(1)]).unwrap();
    assert!(!rep.in_u);
    assert_eq!(rep.failing, Some((1, FactorLabel::H { i: 1, j: 2 })));
    assert_eq!(rep.values.len(), 2 * 6);
}

#[test]
fn membership_and_height_of_x3_plus_x2_plus_x() {
    let f = [rat_int(1), rat_int(1), rat_int(1)];
    let rep = membership_u(&f).unwrap();
    assert!(rep.in_u, "{rep:?}");
    let hb = height_bound(&f).unwrap();
    assert_eq!(hb.floor, 20);
    assert!(hb.complete);
    assert_eq!(hb.bad_primes, vec![BigUint::from(2u32)]);
    assert_eq!(hb.bound, BigUint::from(20u32));
    // Oracle: above the bound, each factor value of Ψ̃_r is a unit at primes in class r.
    for v in &rep.values {
        for q in primes_in(21, 300).into_iter().filter(|q| q % 3 == v.r) {
            assert_eq!(crate::arith::vp_rational(&v.value, q), 0);
        }
    }
}

#[test]
fn membership_fails_on_vanishing_leading_coefficient() {
    let rep = membership_u(&[rat_int(1), rat_int(1), rat_int(0)]).unwrap();
    assert!(!rep.in_u);
    assert_eq!(rep.failing, Some((1, FactorLabel::Ad)));
    assert!(matches!(height_bound(&[rat_int(1), rat_int(1), rat_int(0)]), Err(GenpolyError::NotInU { .. })));
}

#[test]
fn height_bound_with_unit_values() {
    // For d = 2 the factors are A_2 and H̃_11 = A_2^2, both 1 at (1, 1).
    assert_eq!(h_tilde(2, 1, 1, 1).unwrap(), a(2, 2).pow(2));
    let rep = height_bound(&[rat_int(1), rat_int(1)]).unwrap();
    assert_eq!(rep.floor, 5);
    assert!(rep.bad_primes.is_empty());
    assert_eq!(rep.bound, BigUint::from(5u32));
    let rep = height_bound(&[rat(1, 7), rat_int(1)]).unwrap();
    assert_eq!(rep.bad_primes, vec![BigUint::from(7u32)]);
    assert_eq!(rep.bound, BigUint::from(7u32));
}

#[test]
fn certificate_basic_cases() {
    let field = build_field(23, 1).unwrap();
    let pt = [field.constant(1), field.constant(1), field.constant(1)];
    assert!(ordinary_certificate(3, &field, &pt).unwrap());
    assert!(ordinary_certificate_mod_p(3, 23, &[1, 1, 1]).unwrap());
    assert!(!ordinary_certificate_mod_p(3, 23, &[1, 0, 1]).unwrap());
    let zero_lead = [field.constant(1), field.constant(0), field.zero()];
    assert!(!ordinary_certificate(3, &field, &zero_lead).unwrap());
    let small = build_field(17, 1).unwrap();
    assert!(ordinary_certificate(3, &small, &[small.one(), small.zero(), small.one()]).is_err());
}

#[test]
fn certificate_agrees_over_extension() {
    let fp = build_field(29, 1).unwrap();
    let fq = build_field(29, 2).unwrap();
    let emb = fp.embedding_into(&fq).unwrap();
    for a1 in 0..29u64 {
        for a2 in [0u64, 3, 17] {
            let small = ordinary_certificate_mod_p(3, 29, &[a1, a2, 1]).unwrap();
            let pt: Vec<FqElem> = [a1, a2, 1].iter().map(|&x| emb.map(&fp.constant(x))).collect();
            assert_eq!(small, ordinary_certificate(3, &fq, &pt).unwrap());
        }
    }
}

#[test]
fn factor_json_round_trip() {
    let h = h_tilde(4, 3, 2, 3).unwrap();
    assert_eq!(MultiPoly::from_json(4, &h.to_json()).unwrap(), h);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn membership_is_scale_invariant(a1 in -20i64..20, a2 in -20i64..20, a3 in 1i64..20, num in 1i64..30, den in 1i64..30) {
        let f = [rat_int(a1), rat_int(a2), rat_int(a3)];
        let s = rat(num, den);
        let g: Vec<BigRational> = f.iter().map(|x| x * &s).collect();
        let rf = membership_u(&f).unwrap();
        let rg = membership_u(&g).unwrap();
        prop_assert_eq!(rf.in_u, rg.in_u);
        prop_assert_eq!(rf.failing, rg.failing);
    }
}
