//! PEXIT machinery against an independent J implementation and closed
//! forms.

use gmac_ldpc::pexit::*;
use gmac_ldpc::{rng, ChannelConfig, Protograph};
use rand::Rng;
use rand_distr::StandardNormal;

/// J by the trapezoid rule on a wide uniform grid.
fn j_ref(sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let mu = sigma * sigma / 2.0;
    let (lo, hi) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
    let steps = 40_000;
    let h = (hi - lo) / steps as f64;
    let mut acc = 0.0;
    for k in 0..=steps {
        let l = lo + k as f64 * h;
        let pdf = (-(l - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let f = pdf * if l > 0.0 { (-l).exp().ln_1p() } else { -l + l.exp().ln_1p() } / std::f64::consts::LN_2;
        acc += if k == 0 || k == steps { 0.5 * f } else { f };
    }
    1.0 - acc * h
}

fn j_inv_ref(info: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 30.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if j_ref(mid) < info {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn regular() -> Protograph {
    Protograph::from_rows(&[&[3, 3]]).unwrap()
}

#[test]
fn j_inverse_of_one_half_matches_reference() {
    let want = j_inv_ref(0.5);
    assert!((j_inv(0.5).unwrap() - want).abs() < 1e-6, "{want}");
    for s in [0.3, 1.0, 2.5, 6.0] {
        assert!((j_func(s) - j_ref(s)).abs() < 1e-8);
    }
}

#[test]
fn variable_update_scalar_chain() {
    let p = regular();
    let mut st = PexitState::new(&p);
    st.i_av = vec![0.5, 0.5];
    st.i_es = vec![0.3, 0.3];
    pexit_variable(&mut st, &p, 0);
    let (a, e) = (j_inv_ref(0.5), j_inv_ref(0.3));
    let want_ev = j_ref((2.0 * a * a + e * e).sqrt());
    let want_evs = j_ref((3.0 * a * a).sqrt());
    assert!((st.i_ev[0] - want_ev).abs() < 1e-6, "{} vs {want_ev}", st.i_ev[0]);
    assert!((st.i_evs[0] - want_evs).abs() < 1e-6);
}

#[test]
fn check_update_scalar_chain() {
    let p = regular();
    let mut st = PexitState::new(&p);
    st.i_ac = vec![0.9, 0.9];
    pexit_check(&mut st, &p, 0);
    let d = j_inv_ref(0.1);
    let want = 1.0 - j_ref((5.0 * d * d).sqrt());
    assert!((st.i_ec[0] - want).abs() < 1e-6);
    assert!((st.i_ec[1] - want).abs() < 1e-6);
}

#[test]
fn app_scalar_chain() {
    let p = Protograph::from_rows(&[&[2, 1, 0], &[1, 1, 1]]).unwrap();
    let mut st = PexitState::new(&p);
    st.i_av = vec![0.4, 0.7, 0.9, 0.2, 0.1, 0.3];
    st.i_es = vec![0.6, 0.05, 0.5];
    pexit_app(&mut st, &p);
    let col0 = 2.0 * j_inv_ref(0.4).powi(2) + j_inv_ref(0.2).powi(2) + j_inv_ref(0.6).powi(2);
    let col1 = j_inv_ref(0.7).powi(2) + j_inv_ref(0.1).powi(2) + j_inv_ref(0.05).powi(2);
    let col2 = j_inv_ref(0.3).powi(2) + j_inv_ref(0.5).powi(2);
    assert!((st.i_app[0] - j_ref(col0.sqrt())).abs() < 1e-6);
    assert!((st.i_app[1] - j_ref(col1.sqrt())).abs() < 1e-6);
    assert!((st.i_app[2] - j_ref(col2.sqrt())).abs() < 1e-6);
}

#[test]
fn single_user_state_info_is_channel_information() {
    for (p, n0) in [(1.0, 1.0), (0.5, 2.0), (1.0, 0.6)] {
        let cfg = ChannelConfig::new(1, p, n0).unwrap();
        let want = j_ref((8.0 * p / n0).sqrt());
        let mut seen = Vec::new();
        for est in [Estimator::MeanMatched, Estimator::ModeMatched, Estimator::Mixture] {
            let got = estimate_column(0.0, &cfg, est, 10_000, 4).unwrap();
            assert!((got - want).abs() < 0.03, "{est:?}: {got} vs {want}");
            seen.push(got);
        }
        let spread = seen.iter().cloned().fold(f64::MIN, f64::max) - seen.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 0.05, "estimators disagree by {spread}");
    }
}

#[test]
fn perfect_priors_remove_interference() {
    let single = j_ref(8f64.sqrt());
    for users in [2, 3, 4] {
        let cfg = ChannelConfig::new(users, 1.0, 1.0).unwrap();
        let got = estimate_column(1.0, &cfg, Estimator::Mixture, 10_000, 8).unwrap();
        assert!((got - single).abs() < 0.01, "T={users}: {got} vs {single}");
    }
}

#[test]
fn two_user_mean_matched_against_large_sample_reference() {
    // closed-form T=2 message with an uninformative interferer prior
    let mut r = rng::stream(99, &[]);
    let n = 1_000_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let other = if r.random::<bool>() { 1.0 } else { -1.0 };
        let z: f64 = r.sample(StandardNormal);
        let y = 1.0 + other + (0.5f64).sqrt() * z;
        let lik = |s: f64| (-(y - s - 1.0).powi(2)).exp() + (-(y - s + 1.0).powi(2)).exp();
        sum += (lik(1.0) / lik(-1.0)).ln();
    }
    let want = j_ref((2.0 * sum / n as f64).sqrt());
    let cfg = ChannelConfig::new(2, 1.0, 1.0).unwrap();
    let got = estimate_column(0.0, &cfg, Estimator::MeanMatched, 10_000, 1).unwrap();
    assert!((got - want).abs() < 0.01, "{got} vs {want}");
}

#[test]
fn single_user_trajectories_are_monotone_with_frozen_state_info() {
    let protos = [
        regular(),
        regular().repetition(),
        Protograph::from_rows(&[&[1, 2, 1, 1], &[2, 1, 1, 1], &[1, 1, 2, 1]]).unwrap(),
    ];
    for p in &protos {
        for es in [0.2, 0.45, 0.6, 0.9] {
            let mut src = FixedSource(vec![es; p.cols()]);
            let mut st = PexitState::new(p);
            let mut prev = st.clone();
            for _ in 0..200 {
                pexit_iteration(&mut st, p, &mut src).unwrap();
                for (new, old) in [(&st.i_ev, &prev.i_ev), (&st.i_ec, &prev.i_ec), (&st.i_app, &prev.i_app)] {
                    assert!(new.iter().zip(old).all(|(a, b)| a >= b));
                }
                prev = st.clone();
            }
        }
    }
}

#[test]
fn information_stays_in_unit_interval() {
    let mut r = rng::stream(5, &[]);
    for trial in 0..100 {
        let rows = r.random_range(1..=3);
        let cols = rows + r.random_range(1..=3);
        let entries: Vec<u32> = (0..rows * cols).map(|_| r.random_range(1..=3)).collect();
        let p = Protograph::new(rows, cols, entries).unwrap();
        let users = r.random_range(1..=4);
        let channel = ChannelConfig::from_ebn0(users, r.random_range(-2.0..12.0), p.design_rate()).unwrap();
        let mut src = MonteCarloSource {
            channel,
            estimator: Estimator::Mixture,
            samples: 1000,
            seed: trial,
        };
        let mut st = PexitState::new(&p);
        for _ in 0..15 {
            pexit_iteration(&mut st, &p, &mut src).unwrap();
            assert!(st.in_unit_range(), "{st:?}");
        }
    }
}

fn quick(users: usize) -> ThresholdConfig {
    ThresholdConfig {
        samples: 2000,
        resolution_db: 0.05,
        mode: StateInfoMode::Tabulated,
        ..ThresholdConfig::new(users)
    }
}

#[test]
fn threshold_grows_with_users() {
    let p = regular().repetition();
    let t: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&u| pexit_threshold(&p, &quick(u)).unwrap().ebn0_db)
        .collect();
    assert!(t[0] <= t[1] && t[1] <= t[2], "{t:?}");
}

#[test]
fn unprotected_columns_have_no_threshold() {
    let p = Protograph::from_rows(&[&[1, 1, 1, 1]]).unwrap();
    let ev = evolve(&p, &mut FixedSource(vec![0.0; 4]), &EvolutionOptions::default()).unwrap();
    assert!(!ev.converged);
    assert_eq!(ev.state.min_app(), 0.0);
    // eight users at rate 3/4 exceed what any binary-input slot can carry
    let cfg = ThresholdConfig { samples: 1000, ..quick(8) };
    match pexit_threshold(&p, &cfg) {
        Err(gmac_ldpc::Error::NoThreshold { .. }) => {}
        other => panic!("expected no threshold, got {other:?}"),
    }
}

#[test]
fn trajectory_csv_has_one_row_per_iteration() {
    let p = regular();
    let ev = evolve(&p, &mut FixedSource(vec![0.7, 0.7]), &EvolutionOptions::default()).unwrap();
    let csv = ev.trajectory_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,min_iapp,ies_0,ies_1"));
    assert_eq!(lines.count(), ev.iterations);
}
