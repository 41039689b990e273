//! Joint decoding: degenerate cases and noiseless resolvability.

use gmac_ldpc::gmac::{transmit, JointDecoder, JointFactorGraph, Schedule};
use gmac_ldpc::ldpc::bp_decode;
use gmac_ldpc::protograph::lift;
use gmac_ldpc::spreading::{generate_signatures, joint_decode_spread, spread_transmit, SpreadingSignature};
use gmac_ldpc::{rng, ChannelConfig, LiftedCode, Protograph};
use rand::Rng;

fn code(z: usize) -> LiftedCode {
    lift(&Protograph::from_rows(&[&[3, 3]]).unwrap().repetition(), z, 1).unwrap()
}

fn random_words(code: &LiftedCode, users: usize, rng: &mut impl Rng) -> Vec<Vec<u8>> {
    (0..users)
        .map(|_| {
            let info: Vec<u8> = (0..code.k()).map(|_| rng.random::<bool>() as u8).collect();
            code.encode(&info)
        })
        .collect()
}

#[test]
fn single_user_joint_decoding_is_plain_bp() {
    let code = code(23);
    let schedule = Schedule { outer: 6, inner: 3 };
    let mut rng = rng::stream(7, &[]);
    let mut dec = JointDecoder::new(&code, 1);
    let graph = JointFactorGraph::with_interleavers(1, code.n(), 9);
    let mut decoded_some = 0;
    for frame in 0..100 {
        let cfg = ChannelConfig::from_ebn0(1, rng.random_range(-1.0..4.0), code.rate()).unwrap();
        let words = random_words(&code, 1, &mut rng);
        let y = transmit(&graph, &cfg, &words, frame).unwrap();
        let joint = dec.decode(&graph, &y, &cfg, schedule);
        // chip c carries bit i with chip_of[i] = c
        let mut llr = vec![0.0; code.n()];
        for (i, &c) in graph.chip_of(0).iter().enumerate() {
            llr[i] = gmac_ldpc::gmac::awgn_llr(y[c], &cfg);
        }
        let single = bp_decode(&code, &llr, schedule.outer * schedule.inner);
        assert_eq!(joint.codewords[0], single.codeword, "frame {frame}");
        assert_eq!(joint.success[0], single.converged);
        decoded_some += single.converged as usize;
    }
    assert!(decoded_some > 10 && decoded_some < 100);
}

#[test]
fn noiseless_two_user_collisions_resolve() {
    let code = code(23);
    let mut rng = rng::stream(1, &[]);
    let mut dec = JointDecoder::new(&code, 2);
    let cfg = ChannelConfig::new(2, 1.0, 1e-6).unwrap();
    for frame in 0..100 {
        let graph = JointFactorGraph::with_interleavers(2, code.n(), frame);
        let words = random_words(&code, 2, &mut rng);
        let y = transmit(&graph, &cfg, &words, frame).unwrap();
        let out = dec.decode(&graph, &y, &cfg, Schedule::default());
        assert_eq!(out.codewords, words, "frame {frame}");
    }
}

#[test]
fn noiseless_eight_users_with_spreading_resolve() {
    let code = code(46);
    let mut rng = rng::stream(2, &[]);
    let mut dec = JointDecoder::new(&code, 8);
    let cfg = ChannelConfig::new(8, 1.0, 1e-6).unwrap();
    for frame in 0..100 {
        let sig = generate_signatures(8, code.n(), 2 * code.n(), frame).unwrap();
        assert_eq!(sig.d_c, 4);
        let words = random_words(&code, 8, &mut rng);
        let y = spread_transmit(&sig, &cfg, &words, &mut rng).unwrap();
        let out = joint_decode_spread(&mut dec, &sig, &y, &cfg, Schedule::default());
        assert_eq!(out.codewords, words, "frame {frame}");
    }
}

#[test]
fn full_degree_spreading_matches_unspread_decoding() {
    let code = code(23);
    let users = 3;
    let graph = JointFactorGraph::with_interleavers(users, code.n(), 4);
    let sig = SpreadingSignature::from_interleavers(users, code.n(), 4);
    assert_eq!(sig.d_c, users);
    let mut a = JointDecoder::new(&code, users);
    let mut b = JointDecoder::new(&code, users);
    let mut rng = rng::stream(3, &[]);
    for frame in 0..20 {
        let cfg = ChannelConfig::from_ebn0(users, 4.0, code.rate()).unwrap();
        let words = random_words(&code, users, &mut rng);
        let y = transmit(&graph, &cfg, &words, frame).unwrap();
        let plain = a.decode(&graph, &y, &cfg, Schedule::default());
        let spread = joint_decode_spread(&mut b, &sig, &y, &cfg, Schedule::default());
        assert_eq!(plain, spread);
    }
}

#[test]
fn regular_signature_small_case_by_exhaustion() {
    let sig = generate_signatures(2, 4, 4, 0).unwrap();
    assert_eq!(sig.d_c, 2);
    for c in 0..4 {
        let count = sig.chip_of.iter().flatten().filter(|&&x| x == c).count();
        assert_eq!(count, 2);
    }
    for map in &sig.chip_of {
        let mut m = map.clone();
        m.sort_unstable();
        m.dedup();
        assert_eq!(m.len(), 4);
    }
}
