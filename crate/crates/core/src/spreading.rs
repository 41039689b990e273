//! Sparse spreading: each user's coded bits are placed on a subset of a
//! longer slot so that every chip superposes only `d_c` users.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmac::{interleaver, transmit_with, ChannelConfig, JointDecoder, JointFactorGraph, JointOutcome, Schedule};

/// Injective bit-to-chip maps for every user over a slot of `n_prime`
/// chips, with exactly `d_c` participants per chip.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpreadingSignature {
    pub users: usize,
    pub n: usize,
    pub n_prime: usize,
    pub d_c: usize,
    pub chip_of: Vec<Vec<usize>>,
}

fn chip_degree(users: usize, n: usize, n_prime: usize) -> Result<usize> {
    if users == 0 || n == 0 || n_prime == 0 {
        return Err(Error::Spreading("users, n and n' must be positive".into()));
    }
    if n > n_prime {
        return Err(Error::Spreading(format!("code length {n} exceeds slot length {n_prime}")));
    }
    if !(users * n).is_multiple_of(n_prime) {
        return Err(Error::Spreading(format!(
            "T*n = {} is not a multiple of n' = {n_prime}",
            users * n
        )));
    }
    Ok(users * n / n_prime)
}

impl SpreadingSignature {
    /// Validates explicit maps against the regularity invariants.
    pub fn from_maps(chip_of: Vec<Vec<usize>>, n_prime: usize) -> Result<Self> {
        let users = chip_of.len();
        let n = chip_of.first().map_or(0, Vec::len);
        let d_c = chip_degree(users, n, n_prime)?;
        let graph = JointFactorGraph::from_chip_maps(chip_of.clone(), n_prime)
            .map_err(|e| Error::Spreading(e.to_string()))?;
        if let Some(c) = (0..n_prime).find(|&c| graph.chip_degree(c) != d_c) {
            return Err(Error::Spreading(format!(
                "chip {c} has {} participants, expected {d_c}",
                graph.chip_degree(c)
            )));
        }
        Ok(SpreadingSignature {
            users,
            n,
            n_prime,
            d_c,
            chip_of,
        })
    }

    /// Degenerate signature: `n' = n`, user `t` placed by its interleaver.
    pub fn from_interleavers(users: usize, n: usize, seed: u64) -> Self {
        let maps = (0..users).map(|t| interleaver(n, seed, t)).collect();
        Self::from_maps(maps, n).expect("interleavers form a regular signature")
    }

    pub fn graph(&self) -> JointFactorGraph {
        JointFactorGraph::from_chip_maps(self.chip_of.clone(), self.n_prime).expect("validated signature")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SpreadingSignature = serde_json::from_str(text)?;
        let sig = Self::from_maps(raw.chip_of, raw.n_prime)?;
        if (sig.users, sig.n, sig.d_c) != (raw.users, raw.n, raw.d_c) {
            return Err(Error::Spreading("header fields disagree with the maps".into()));
        }
        Ok(sig)
    }
}

const ATTEMPTS: usize = 16;

/// Random regular signature from a configuration model: `d_c` sockets per
/// chip are shuffled and dealt to users in blocks of `n`, then sockets that
/// repeat a chip within one user are swapped with other users' sockets.
pub fn generate_signatures(users: usize, n: usize, n_prime: usize, seed: u64) -> Result<SpreadingSignature> {
    let d_c = chip_degree(users, n, n_prime)?;
    let mut rng = crate::rng::stream(seed, &[0x7370_7264]);
    let total = users * n;
    let budget = 64 * total + 1024;
    for _ in 0..ATTEMPTS {
        let mut sockets: Vec<usize> = (0..n_prime).flat_map(|c| std::iter::repeat_n(c, d_c)).collect();
        sockets.shuffle(&mut rng);
        if repair(&mut sockets, users, n, n_prime, budget, &mut rng) {
            let chip_of = sockets.chunks(n).map(<[usize]>::to_vec).collect();
            return SpreadingSignature::from_maps(chip_of, n_prime);
        }
    }
    Err(Error::Spreading(format!(
        "no collision-free assignment after {ATTEMPTS} attempts"
    )))
}

fn repair(sockets: &mut [usize], users: usize, n: usize, n_prime: usize, budget: usize, rng: &mut impl Rng) -> bool {
    let mut count = vec![0u32; users * n_prime];
    for (s, &c) in sockets.iter().enumerate() {
        count[(s / n) * n_prime + c] += 1;
    }
    let mut tries = 0;
    for a in 0..sockets.len() {
        let t = a / n;
        while count[t * n_prime + sockets[a]] > 1 {
            tries += 1;
            if tries > budget {
                return false;
            }
            let b = rng.random_range(0..sockets.len());
            let u = b / n;
            let (ca, cb) = (sockets[a], sockets[b]);
            if u == t || count[t * n_prime + cb] > 0 || count[u * n_prime + ca] > 0 {
                continue;
            }
            count[t * n_prime + ca] -= 1;
            count[t * n_prime + cb] += 1;
            count[u * n_prime + cb] -= 1;
            count[u * n_prime + ca] += 1;
            sockets.swap(a, b);
        }
    }
    true
}

/// Received slot for `codewords` placed by `sig`, noise drawn from `rng`.
pub fn spread_transmit<R: Rng + ?Sized>(
    sig: &SpreadingSignature,
    cfg: &ChannelConfig,
    codewords: &[Vec<u8>],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut y = vec![0.0; sig.n_prime];
    transmit_with(&sig.graph(), cfg, codewords, rng, &mut y)?;
    Ok(y)
}

/// Joint decoding over a spread slot; functional nodes see `d_c` users.
pub fn joint_decode_spread(
    decoder: &mut JointDecoder,
    sig: &SpreadingSignature,
    y: &[f64],
    cfg: &ChannelConfig,
    schedule: Schedule,
) -> JointOutcome {
    decoder.decode(&sig.graph(), y, cfg, schedule)
}

/// Slot splitting: `users` split into `groups` equal groups, each sent
/// unspread over its own `n` chips with its own interleavers.
pub fn slot_split_graphs(users: usize, groups: usize, n: usize, seed: u64) -> Result<Vec<JointFactorGraph>> {
    if groups == 0 || !users.is_multiple_of(groups) {
        return Err(Error::Spreading(format!(
            "{users} users cannot be split into {groups} equal groups"
        )));
    }
    let per = users / groups;
    Ok((0..groups)
        .map(|g| JointFactorGraph::with_interleavers(per, n, crate::rng::derive_seed(seed, &[g as u64])))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_users_on_twice_the_length_are_regular() {
        let sig = generate_signatures(8, 182, 364, 3).unwrap();
        assert_eq!(sig.d_c, 4);
        let g = sig.graph();
        assert!((0..364).all(|c| g.chip_degree(c) == 4));
    }

    #[test]
    fn single_user_is_a_permutation() {
        let sig = generate_signatures(1, 10, 10, 0).unwrap();
        let mut m = sig.chip_of[0].clone();
        m.sort_unstable();
        assert_eq!(m, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn infeasible_parameters() {
        assert!(generate_signatures(3, 5, 4, 0).is_err());
        assert!(generate_signatures(2, 5, 4, 0).is_err());
        assert!(generate_signatures(0, 5, 5, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let sig = generate_signatures(4, 12, 16, 9).unwrap();
        let back = SpreadingSignature::from_json(&sig.to_json().unwrap()).unwrap();
        assert_eq!(sig, back);
        assert_eq!(generate_signatures(4, 12, 16, 9).unwrap(), sig);
    }

    #[test]
    fn non_regular_maps_rejected() {
        assert!(SpreadingSignature::from_maps(vec![vec![0, 1], vec![0, 2]], 4).is_err());
    }
}
