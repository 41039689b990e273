//! The T-user binary-input Gaussian multiple access channel and its joint
//! decoder.
//!
//! Every user sends a BPSK codeword through a private interleaver; the
//! receiver sees the chip-wise sum plus Gaussian noise. The joint decoder
//! alternates exact marginalisation at the functional (state) nodes, one
//! per received chip, with a few sum-product iterations per user.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ldpc::{clamp_llr, BpState, TannerGraph};
use crate::protograph::LiftedCode;
use crate::rng;

/// Equal-power channel parameters. Noise variance per real sample is
/// `n0 / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelConfig {
    users: usize,
    power: f64,
    n0: f64,
}

impl ChannelConfig {
    pub fn new(users: usize, power: f64, n0: f64) -> Result<Self> {
        if users == 0 {
            return Err(Error::InvalidArgument("at least one user is required".into()));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidArgument(format!("power must be positive, got {power}")));
        }
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::InvalidArgument(format!("N0 must be positive, got {n0}")));
        }
        Ok(ChannelConfig { users, power, n0 })
    }

    /// Unit power and `N0 = 1 / (R 10^(Eb/N0 / 10))`.
    pub fn from_ebn0(users: usize, ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidArgument(format!("rate must be in (0, 1], got {rate}")));
        }
        Self::new(users, 1.0, 1.0 / (rate * 10f64.powf(ebn0_db / 10.0)))
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn amplitude(&self) -> f64 {
        self.power.sqrt()
    }

    pub fn noise_sd(&self) -> f64 {
        (self.n0 / 2.0).sqrt()
    }

    pub fn ebn0_db(&self, rate: f64) -> f64 {
        10.0 * (self.power / (rate * self.n0)).log10()
    }
}

/// BPSK: bit 0 maps to `+sqrt(P)`, bit 1 to `-sqrt(P)`.
#[inline]
pub fn bpsk(bit: u8, amplitude: f64) -> f64 {
    if bit & 1 == 0 {
        amplitude
    } else {
        -amplitude
    }
}

/// Single-user AWGN channel LLR `4 sqrt(P) y / N0`, clamped.
#[inline]
pub fn awgn_llr(y: f64, cfg: &ChannelConfig) -> f64 {
    clamp_llr(4.0 * cfg.amplitude() * y / cfg.n0())
}

/// Uniform permutation of `0..n` for one user, derived from a master seed.
pub fn interleaver(n: usize, seed: u64, user: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, &[0x696e_746c, user as u64]));
    perm
}

/// Extrinsic messages from one functional node to each of its participants.
///
/// `priors[k]` is participant `k`'s incoming LLR; `out[k]` receives
/// `ln p(x_k = +1 | y) / p(x_k = -1 | y)` computed from the Gaussian
/// likelihood of `y` and the priors of the other participants only. The
/// sum runs over all `2^d` sign patterns; the cost is exponential in the
/// node degree `d`.
pub fn functional_node_messages(y: f64, priors: &[f64], cfg: &ChannelConfig, out: &mut [f64]) {
    FunctionalNode::default().messages(y, priors, cfg, out);
}

/// Message to one target participant given the priors of the others.
pub fn functional_node_update(y: f64, others: &[f64], cfg: &ChannelConfig) -> f64 {
    let mut priors = Vec::with_capacity(others.len() + 1);
    priors.extend_from_slice(others);
    priors.push(0.0);
    let mut out = vec![0.0; priors.len()];
    functional_node_messages(y, &priors, cfg, &mut out);
    out[others.len()]
}

/// Scratch space for functional-node updates.
#[derive(Clone, Debug, Default)]
pub struct FunctionalNode {
    half: Vec<f64>,
    lik: Vec<f64>,
    weight: Vec<f64>,
}

impl FunctionalNode {
    pub fn messages(&mut self, y: f64, priors: &[f64], cfg: &ChannelConfig, out: &mut [f64]) {
        let d = priors.len();
        assert_eq!(out.len(), d, "one output per participant");
        assert!(d < 31, "functional node degree {d} is too large");
        if d == 1 {
            out[0] = awgn_llr(y, cfg);
            return;
        }
        let amp = cfg.amplitude();
        let n0 = cfg.n0();

        self.half.clear();
        self.half.extend(priors.iter().map(|&l| clamp_llr(l) / 2.0));
        // Likelihood depends only on the number of +1 symbols.
        self.lik.clear();
        self.lik.extend((0..=d).map(|plus| {
            let sum = (2 * plus) as f64 - d as f64;
            let r = y - amp * sum;
            -(r * r) / n0
        }));

        let configs = 1usize << d;
        self.weight.clear();
        let mut max = f64::NEG_INFINITY;
        for m in 0..configs {
            let mut t = 0.0;
            for (j, &h) in self.half.iter().enumerate() {
                t += if m >> j & 1 == 1 { h } else { -h };
            }
            t += self.lik[m.count_ones() as usize];
            max = max.max(t);
            self.weight.push(t);
        }
        self.weight.iter_mut().for_each(|w| *w = (*w - max).exp());

        // The two sums visit mirrored patterns in the same order, so the
        // result is exactly odd under (y, priors) -> (-y, -priors).
        let mask = configs - 1;
        for (k, o) in out.iter_mut().enumerate() {
            let bit = 1usize << k;
            let (mut num, mut den) = (0.0, 0.0);
            for m in (0..configs).filter(|m| m & bit != 0) {
                num += self.weight[m];
                den += self.weight[mask ^ m];
            }
            *o = clamp_llr((num.ln() - den.ln()) - 2.0 * self.half[k]);
        }
    }
}

/// Iteration schedule of the joint decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    /// Outer rounds of functional-node updates.
    pub outer: usize,
    /// Sum-product iterations per user per outer round.
    pub inner: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { outer: 30, inner: 2 }
    }
}

/// Bipartite wiring between user code bits and received chips.
///
/// `chip_of[t][i]` is the chip carrying bit `i` of user `t`. Participants of
/// each chip are stored in user order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointFactorGraph {
    n: usize,
    chips: usize,
    chip_of: Vec<Vec<usize>>,
    chip_ptr: Vec<usize>,
    part_user: Vec<usize>,
    part_bit: Vec<usize>,
}

impl JointFactorGraph {
    /// Builds the graph from one injective bit-to-chip map per user.
    pub fn from_chip_maps(chip_of: Vec<Vec<usize>>, chips: usize) -> Result<Self> {
        let users = chip_of.len();
        if users == 0 {
            return Err(Error::InvalidArgument("at least one user is required".into()));
        }
        let n = chip_of[0].len();
        let mut count = vec![0usize; chips + 1];
        for (t, map) in chip_of.iter().enumerate() {
            if map.len() != n {
                return Err(Error::Dimension(format!(
                    "user {t} maps {} bits, expected {n}",
                    map.len()
                )));
            }
            let mut used = vec![false; chips];
            for &c in map {
                if c >= chips || std::mem::replace(&mut used[c], true) {
                    return Err(Error::InvalidArgument(format!(
                        "user {t}: chip map is not injective into {chips} chips"
                    )));
                }
                count[c + 1] += 1;
            }
        }
        for c in 0..chips {
            count[c + 1] += count[c];
        }
        let chip_ptr = count.clone();
        let mut fill = count;
        let total = chip_ptr[chips];
        let mut part_user = vec![0; total];
        let mut part_bit = vec![0; total];
        for (t, map) in chip_of.iter().enumerate() {
            for (i, &c) in map.iter().enumerate() {
                part_user[fill[c]] = t;
                part_bit[fill[c]] = i;
                fill[c] += 1;
            }
        }
        Ok(JointFactorGraph {
            n,
            chips,
            chip_of,
            chip_ptr,
            part_user,
            part_bit,
        })
    }

    /// Unspread slot: `n` chips, user `t` permuted by its own interleaver.
    pub fn with_interleavers(users: usize, n: usize, seed: u64) -> Self {
        let maps = (0..users).map(|t| interleaver(n, seed, t)).collect();
        Self::from_chip_maps(maps, n).expect("interleavers are permutations")
    }

    pub fn users(&self) -> usize {
        self.chip_of.len()
    }

    pub fn code_len(&self) -> usize {
        self.n
    }

    pub fn chips(&self) -> usize {
        self.chips
    }

    pub fn chip_of(&self, user: usize) -> &[usize] {
        &self.chip_of[user]
    }

    /// `(user, bit)` pairs superposed on chip `c`.
    pub fn participants(&self, c: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.chip_ptr[c]..self.chip_ptr[c + 1];
        self.part_user[r.clone()]
            .iter()
            .copied()
            .zip(self.part_bit[r].iter().copied())
    }

    pub fn chip_degree(&self, c: usize) -> usize {
        self.chip_ptr[c + 1] - self.chip_ptr[c]
    }

    pub fn max_chip_degree(&self) -> usize {
        (0..self.chips).map(|c| self.chip_degree(c)).max().unwrap_or(0)
    }
}

/// Noiseless superposition `sum_t x_t` on every chip.
pub fn superpose(graph: &JointFactorGraph, cfg: &ChannelConfig, codewords: &[Vec<u8>], out: &mut [f64]) -> Result<()> {
    if codewords.len() != graph.users() {
        return Err(Error::Dimension(format!(
            "{} codewords for {} users",
            codewords.len(),
            graph.users()
        )));
    }
    if let Some(w) = codewords.iter().find(|w| w.len() != graph.code_len()) {
        return Err(Error::Dimension(format!(
            "codeword of length {}, expected {}",
            w.len(),
            graph.code_len()
        )));
    }
    if out.len() != graph.chips() {
        return Err(Error::Dimension("output length differs from chip count".into()));
    }
    let amp = cfg.amplitude();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (word, map) in codewords.iter().zip(&graph.chip_of) {
        for (&b, &c) in word.iter().zip(map) {
            out[c] += bpsk(b, amp);
        }
    }
    Ok(())
}

/// Superposition plus `N(0, N0/2)` noise drawn from `rng`.
pub fn transmit_with<R: Rng + ?Sized>(
    graph: &JointFactorGraph,
    cfg: &ChannelConfig,
    codewords: &[Vec<u8>],
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    superpose(graph, cfg, codewords, out)?;
    let sd = cfg.noise_sd();
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += sd * z;
    }
    Ok(())
}

/// Received vector for `codewords`, deterministic in `seed`.
pub fn transmit(graph: &JointFactorGraph, cfg: &ChannelConfig, codewords: &[Vec<u8>], seed: u64) -> Result<Vec<f64>> {
    let mut y = vec![0.0; graph.chips()];
    transmit_with(graph, cfg, codewords, &mut rng::stream(seed, &[0x7478]), &mut y)?;
    Ok(y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointOutcome {
    pub codewords: Vec<Vec<u8>>,
    /// Per user: the decoded word satisfies every parity check.
    pub success: Vec<bool>,
    pub outer_iterations: usize,
    /// Sum-product iterations actually run per user.
    pub bp_iterations: Vec<usize>,
}

impl JointOutcome {
    pub fn all_success(&self) -> bool {
        self.success.iter().all(|&s| s)
    }
}

/// Joint decoder for `users` users sharing one code. Owns all message
/// buffers; reuse it across frames.
#[derive(Clone, Debug)]
pub struct JointDecoder {
    tanner: TannerGraph,
    states: Vec<BpState>,
    m_sv: Vec<Vec<f64>>,
    m_vs: Vec<Vec<f64>>,
    hard: Vec<Vec<u8>>,
    node: FunctionalNode,
    priors: Vec<f64>,
    msgs: Vec<f64>,
}

impl JointDecoder {
    pub fn new(code: &LiftedCode, users: usize) -> Self {
        let tanner = TannerGraph::new(code.h());
        let n = tanner.n();
        JointDecoder {
            states: (0..users).map(|_| BpState::new(&tanner)).collect(),
            m_sv: vec![vec![0.0; n]; users],
            m_vs: vec![vec![0.0; n]; users],
            hard: vec![vec![0; n]; users],
            tanner,
            node: FunctionalNode::default(),
            priors: Vec::new(),
            msgs: Vec::new(),
        }
    }

    pub fn users(&self) -> usize {
        self.states.len()
    }

    pub fn user_state(&self, user: usize) -> &BpState {
        &self.states[user]
    }

    /// Latest functional-node messages into `user`'s variable nodes.
    pub fn state_messages(&self, user: usize) -> &[f64] {
        &self.m_sv[user]
    }

    fn update_functional_nodes(&mut self, graph: &JointFactorGraph, y: &[f64], cfg: &ChannelConfig) {
        for (c, &yc) in y.iter().enumerate() {
            let range = graph.chip_ptr[c]..graph.chip_ptr[c + 1];
            self.priors.clear();
            for p in range.clone() {
                self.priors.push(self.m_vs[graph.part_user[p]][graph.part_bit[p]]);
            }
            self.msgs.clear();
            self.msgs.resize(self.priors.len(), 0.0);
            self.node.messages(yc, &self.priors, cfg, &mut self.msgs);
            for (p, &msg) in range.zip(&self.msgs) {
                self.m_sv[graph.part_user[p]][graph.part_bit[p]] = msg;
            }
        }
    }

    /// Runs the outer/inner schedule from all-zero messages.
    ///
    /// Each outer round refreshes every functional node from the current
    /// variable-to-state messages, then runs up to `inner` flooding
    /// iterations per user, skipping a user as soon as its hard decision
    /// satisfies all checks. Variable-to-state messages are extrinsic: the
    /// sum of incoming check messages. Stops early once every user checks.
    pub fn decode(
        &mut self,
        graph: &JointFactorGraph,
        y: &[f64],
        cfg: &ChannelConfig,
        schedule: Schedule,
    ) -> JointOutcome {
        let users = self.users();
        assert_eq!(graph.users(), users, "graph and decoder disagree on users");
        assert_eq!(graph.code_len(), self.tanner.n(), "graph and code disagree on length");
        assert_eq!(y.len(), graph.chips(), "received vector length");

        for t in 0..users {
            self.states[t].reset();
            self.m_vs[t].iter_mut().for_each(|m| *m = 0.0);
        }
        let mut bp_iterations = vec![0; users];
        let mut outer_iterations = 0;
        for _ in 0..schedule.outer {
            outer_iterations += 1;
            self.update_functional_nodes(graph, y, cfg);
            let mut all_done = true;
            for (t, iters) in bp_iterations.iter_mut().enumerate() {
                let mut done = false;
                for _ in 0..schedule.inner {
                    self.states[t].decide(&self.tanner, &self.m_sv[t], &mut self.hard[t]);
                    if self.tanner.syndrome_is_zero(&self.hard[t]) {
                        done = true;
                        break;
                    }
                    self.states[t].iterate(&self.tanner, &self.m_sv[t]);
                    *iters += 1;
                }
                all_done &= done;
                self.states[t].check_sums(&self.tanner, &mut self.m_vs[t]);
            }
            if all_done {
                break;
            }
        }

        let mut success = Vec::with_capacity(users);
        for t in 0..users {
            self.states[t].decide(&self.tanner, &self.m_sv[t], &mut self.hard[t]);
            success.push(self.tanner.syndrome_is_zero(&self.hard[t]));
        }
        JointOutcome {
            codewords: self.hard.clone(),
            success,
            outer_iterations,
            bp_iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::LLR_MAX;
    use proptest::prelude::*;

    fn cfg(users: usize, p: f64, n0: f64) -> ChannelConfig {
        ChannelConfig::new(users, p, n0).unwrap()
    }

    #[test]
    fn config_validation_and_ebn0() {
        assert!(ChannelConfig::new(0, 1.0, 1.0).is_err());
        assert!(ChannelConfig::new(1, 0.0, 1.0).is_err());
        assert!(ChannelConfig::new(1, 1.0, -1.0).is_err());
        let c = ChannelConfig::from_ebn0(2, 3.0, 0.25).unwrap();
        assert_eq!(c.power(), 1.0);
        assert!((c.ebn0_db(0.25) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_user_message_is_awgn_llr() {
        let c = cfg(1, 1.0, 1.0);
        assert_eq!(functional_node_update(0.5, &[], &c), 2.0);
    }

    #[test]
    fn known_interferer_is_cancelled() {
        let (p, n0) = (1.3f64, 0.8);
        let c = cfg(2, p, n0);
        for y in [-1.5, -0.2, 0.0, 0.7, 2.1] {
            let got = functional_node_update(y, &[LLR_MAX], &c);
            let want = 4.0 * p.sqrt() * (y - p.sqrt()) / n0;
            assert!((got - want).abs() < 1e-6, "y={y}: {got} vs {want}");
        }
    }

    #[test]
    fn noiseless_superposition() {
        let g = JointFactorGraph::with_interleavers(1, 4, 3);
        let c = cfg(1, 2.0, 1e-300);
        let y = transmit(&g, &c, &[vec![0; 4]], 1).unwrap();
        assert!(y.iter().all(|&v| (v - 2f64.sqrt()).abs() < 1e-12));

        let g = JointFactorGraph::from_chip_maps(vec![vec![0, 1], vec![1, 0]], 2).unwrap();
        let y = transmit(&g, &c, &[vec![0, 1], vec![1, 0]], 1).unwrap();
        assert!((y[0] - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((y[1] + 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn transmit_rejects_length_mismatch() {
        let g = JointFactorGraph::with_interleavers(2, 4, 0);
        let c = cfg(2, 1.0, 1.0);
        assert!(transmit(&g, &c, &[vec![0; 4]], 0).is_err());
        assert!(transmit(&g, &c, &[vec![0; 4], vec![0; 3]], 0).is_err());
    }

    #[test]
    fn chip_maps_must_be_injective() {
        assert!(JointFactorGraph::from_chip_maps(vec![vec![0, 0]], 2).is_err());
        assert!(JointFactorGraph::from_chip_maps(vec![vec![0, 2]], 2).is_err());
        let g = JointFactorGraph::with_interleavers(3, 10, 9);
        assert!((0..10).all(|c| g.chip_degree(c) == 3));
        let users: Vec<usize> = g.participants(4).map(|(t, _)| t).collect();
        assert_eq!(users, vec![0, 1, 2]);
    }

    proptest! {
        #[test]
        fn messages_are_exactly_odd(
            y in -6.0f64..6.0,
            priors in prop::collection::vec(-40.0f64..40.0, 1..7),
            p in 0.1f64..4.0,
            n0 in 0.05f64..5.0,
        ) {
            let c = cfg(priors.len(), p, n0);
            let mut a = vec![0.0; priors.len()];
            let mut b = vec![0.0; priors.len()];
            functional_node_messages(y, &priors, &c, &mut a);
            let neg: Vec<f64> = priors.iter().map(|v| -v).collect();
            functional_node_messages(-y, &neg, &c, &mut b);
            for (x, z) in a.iter().zip(&b) {
                prop_assert_eq!(*x, -*z);
            }
        }

        #[test]
        fn relabelling_users_permutes_messages(
            y in -6.0f64..6.0,
            priors in prop::collection::vec(-20.0f64..20.0, 2..6),
            shift in 0usize..6,
        ) {
            let c = cfg(priors.len(), 1.0, 0.7);
            let mut a = vec![0.0; priors.len()];
            functional_node_messages(y, &priors, &c, &mut a);
            let mut rotated = priors.clone();
            rotated.rotate_left(shift % priors.len());
            let mut b = vec![0.0; priors.len()];
            functional_node_messages(y, &rotated, &c, &mut b);
            a.rotate_left(shift % priors.len());
            for (x, z) in a.iter().zip(&b) {
                prop_assert!((x - z).abs() < 1e-9);
            }
        }
    }
}
