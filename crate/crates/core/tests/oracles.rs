//! Library results checked against brute-force reference computations
//! written independently here.

use gmac_ldpc::gmac::functional_node_update;
use gmac_ldpc::ldpc::BpDecoder;
use gmac_ldpc::protograph::{lift, LiftedCode, ParityCheck};
use gmac_ldpc::{ChannelConfig, Protograph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Probability-domain marginalisation over every interferer pattern.
fn functional_oracle(y: f64, others: &[f64], power: f64, n0: f64) -> f64 {
    let amp = power.sqrt();
    let p_plus: Vec<f64> = others.iter().map(|&l| 1.0 / (1.0 + (-l).exp())).collect();
    let mut lik = [0.0f64; 2];
    for (s, slot) in [1.0f64, -1.0].iter().zip(lik.iter_mut()) {
        for m in 0..1usize << others.len() {
            let mut prob = 1.0;
            let mut sum = *s;
            for (j, &p) in p_plus.iter().enumerate() {
                if m >> j & 1 == 1 {
                    prob *= p;
                    sum += 1.0;
                } else {
                    prob *= 1.0 - p;
                    sum -= 1.0;
                }
            }
            let r = y - amp * sum;
            *slot += prob * (-(r * r) / n0).exp();
        }
    }
    (lik[0] / lik[1]).ln().clamp(-30.0, 30.0)
}

#[test]
fn functional_node_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for users in 2..=4 {
        for _ in 0..3000 {
            let power: f64 = rng.random_range(0.25..4.0);
            let n0: f64 = rng.random_range(0.3..4.0);
            let sent: f64 = (0..users).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).sum();
            let y = power.sqrt() * sent + (n0 / 2.0).sqrt() * rng.random_range(-3.0..3.0);
            let others: Vec<f64> = (0..users - 1).map(|_| rng.random_range(-8.0..8.0)).collect();
            let cfg = ChannelConfig::new(users, power, n0).unwrap();
            let got = functional_node_update(y, &others, &cfg);
            let want = functional_oracle(y, &others, power, n0);
            worst = worst.max((got - want).abs());
        }
    }
    assert!(worst < 1e-9, "max deviation {worst}");
}

fn map_marginals(h: &ParityCheck, llr: &[f64]) -> Vec<f64> {
    let n = h.n();
    let dense = h.to_dense();
    let mut zero = vec![0.0f64; n];
    let mut one = vec![0.0f64; n];
    for w in 0..1u32 << n {
        let bit = |i: usize| (w >> i & 1) as u8;
        if dense.iter().any(|row| (0..n).map(|i| row[i] & bit(i)).sum::<u8>() % 2 == 1) {
            continue;
        }
        // llr = ln p(bit 0) / p(bit 1): weight each word by e^{+l/2} or e^{-l/2}
        let weight: f64 = (0..n)
            .map(|i| if bit(i) == 0 { (llr[i] / 2.0).exp() } else { (-llr[i] / 2.0).exp() })
            .product();
        for i in 0..n {
            if bit(i) == 0 {
                zero[i] += weight;
            } else {
                one[i] += weight;
            }
        }
    }
    (0..n).map(|i| (zero[i] / one[i]).ln()).collect()
}

#[test]
fn bp_on_a_tree_equals_map() {
    // chain of checks plus a pendant check: the Tanner graph is a tree
    let h = ParityCheck::from_rows(
        9,
        vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 6], vec![6, 7], vec![3, 8]],
    )
    .unwrap();
    let code = LiftedCode::from_parity_check(h.clone()).unwrap();
    let mut dec = BpDecoder::new(&code);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let llr: Vec<f64> = (0..9).map(|_| rng.random_range(-4.0..4.0)).collect();
        let bp = dec.posteriors(&llr, 12);
        let map = map_marginals(&h, &llr);
        for (a, b) in bp.iter().zip(&map) {
            assert!((a - b).abs() < 1e-9, "{bp:?} vs {map:?}");
        }
    }
}

fn gf2_rank(mut rows: Vec<Vec<u8>>) -> usize {
    let n = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..n {
        if let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] == 1) {
            rows.swap(rank, p);
            for r in 0..rows.len() {
                if r != rank && rows[r][col] == 1 {
                    let pivot = rows[rank].clone();
                    rows[r].iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                }
            }
            rank += 1;
        }
    }
    rank
}

#[test]
fn encoder_dimension_and_codewords() {
    let p = Protograph::from_rows(&[&[3, 3]]).unwrap().repetition();
    for (z, seed) in [(7, 1u64), (13, 2), (91, 0)] {
        let code = lift(&p, z, seed).unwrap();
        let dense = code.h().to_dense();
        assert_eq!(code.k(), code.n() - gf2_rank(dense.clone()));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let info: Vec<u8> = (0..code.k()).map(|_| rng.random::<bool>() as u8).collect();
            let word = code.encode(&info);
            for row in &dense {
                let parity = row.iter().zip(&word).filter(|(a, b)| **a == 1 && **b == 1).count();
                assert_eq!(parity % 2, 0);
            }
            assert_eq!(code.encoder().extract(&word), info);
        }
    }
}

/// Shortest cycle through the Tanner graph by BFS from every variable node.
fn tanner_girth(h: &ParityCheck) -> usize {
    let (n, m) = (h.n(), h.m());
    let mut best = usize::MAX;
    for start in 0..n {
        // nodes 0..n variables, n..n+m checks
        let mut dist = vec![usize::MAX; n + m];
        let mut parent = vec![usize::MAX; n + m];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let nbrs: Vec<usize> = if u < n {
                h.col(u).iter().map(|&c| n + c).collect()
            } else {
                h.row(u - n).to_vec()
            };
            for v in nbrs {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                } else if parent[u] != v {
                    best = best.min(dist[u] + dist[v] + 1);
                }
            }
        }
    }
    best
}

#[test]
fn lifted_codes_have_no_four_cycles() {
    let p36 = Protograph::from_rows(&[&[3, 3]]).unwrap();
    let opt = Protograph::from_rows(&[&[1, 2, 1, 1], &[2, 1, 1, 1], &[1, 1, 2, 1]]).unwrap();
    for (p, z) in [(&p36, 91usize), (&p36, 182), (&opt, 91)] {
        let code = lift(p, z, 5).unwrap();
        assert!(tanner_girth(code.h()) >= 6);
        assert_eq!(code.h().count_four_cycles(), 0);
    }
}

#[test]
fn alist_round_trip_preserves_matrix() {
    let code = lift(&Protograph::from_rows(&[&[2, 1, 1]]).unwrap(), 17, 4).unwrap();
    let text = gmac_ldpc::protograph::write_alist(code.h());
    let back = gmac_ldpc::protograph::parse_alist(&text).unwrap();
    assert_eq!(back.to_dense(), code.h().to_dense());
}
