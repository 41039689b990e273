//! Sum-product decoding primitives in the LLR domain.
//!
//! Messages are symbol LLRs `ln p(x = +1) / p(x = -1)`. Code bit 0 is sent
//! as `+1`, so a non-negative LLR decides bit 0.

use crate::protograph::{LiftedCode, ParityCheck};

/// Every message is clamped to `[-LLR_MAX, LLR_MAX]`.
pub const LLR_MAX: f64 = 30.0;

#[inline]
pub fn clamp_llr(x: f64) -> f64 {
    x.clamp(-LLR_MAX, LLR_MAX)
}

/// Hard decision on a total LLR. Ties go to symbol +1 (bit 0).
#[inline]
pub fn hard_bit(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

#[inline]
fn softplus_neg(x: f64) -> f64 {
    // ln(1 + e^-x) for x >= 0
    (-x).exp().ln_1p()
}

/// Pairwise box-plus `2 atanh(tanh(a/2) tanh(b/2))` in the form
/// `sign(a) sign(b) min(|a|,|b|) + ln(1+e^-|a+b|) - ln(1+e^-|a-b|)`.
/// Exactly odd in each argument.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let (x, y) = (a.abs(), b.abs());
    let mag = x.min(y) + softplus_neg(x + y) - softplus_neg((x - y).abs());
    if (a < 0.0) != (b < 0.0) {
        -mag
    } else {
        mag
    }
}

/// Variable-to-check message: the state-node LLR plus every other incoming
/// check message.
pub fn variable_update(others: &[f64], state_llr: f64) -> f64 {
    clamp_llr(others.iter().fold(state_llr, |acc, &m| acc + m))
}

/// Check-to-variable message from the other incoming variable messages.
/// A degree-1 check pins its bit to 0.
pub fn check_update(others: &[f64]) -> f64 {
    match others.split_first() {
        None => LLR_MAX,
        Some((&first, rest)) => clamp_llr(rest.iter().fold(first, |acc, &m| boxplus(acc, m))),
    }
}

/// Edge-indexed Tanner graph. Edges are numbered check by check.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    n: usize,
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    var_ptr: Vec<usize>,
    var_edges: Vec<usize>,
}

impl TannerGraph {
    pub fn new(h: &ParityCheck) -> Self {
        let n = h.n();
        let mut check_ptr = Vec::with_capacity(h.m() + 1);
        let mut edge_var = Vec::with_capacity(h.edge_count());
        check_ptr.push(0);
        for row in h.rows() {
            edge_var.extend_from_slice(row);
            check_ptr.push(edge_var.len());
        }
        let mut var_ptr = vec![0; n + 1];
        for &v in &edge_var {
            var_ptr[v + 1] += 1;
        }
        for v in 0..n {
            var_ptr[v + 1] += var_ptr[v];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v]] = e;
            fill[v] += 1;
        }
        TannerGraph {
            n,
            check_ptr,
            edge_var,
            var_ptr,
            var_edges,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.check_ptr.len() - 1
    }

    pub fn edges(&self) -> usize {
        self.edge_var.len()
    }

    #[inline]
    fn var_edge_ids(&self, v: usize) -> &[usize] {
        &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]]
    }

    pub fn syndrome_is_zero(&self, hard: &[u8]) -> bool {
        self.check_ptr.windows(2).all(|w| {
            self.edge_var[w[0]..w[1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ hard[v])
                == 0
        })
    }
}

/// Per-decoder message buffers. One instance per user per frame worker.
#[derive(Clone, Debug)]
pub struct BpState {
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    fwd: Vec<f64>,
    bwd: Vec<f64>,
}

impl BpState {
    pub fn new(graph: &TannerGraph) -> Self {
        let max_deg = graph
            .check_ptr
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0);
        BpState {
            c2v: vec![0.0; graph.edges()],
            v2c: vec![0.0; graph.edges()],
            fwd: vec![0.0; max_deg],
            bwd: vec![0.0; max_deg],
        }
    }

    pub fn reset(&mut self) {
        self.c2v.iter_mut().for_each(|m| *m = 0.0);
        self.v2c.iter_mut().for_each(|m| *m = 0.0);
    }

    pub fn c2v(&self) -> &[f64] {
        &self.c2v
    }

    pub fn v2c(&self) -> &[f64] {
        &self.v2c
    }

    /// Sum of incoming check messages per variable (the extrinsic part of
    /// the posterior).
    pub fn check_sums(&self, graph: &TannerGraph, out: &mut [f64]) {
        for (v, o) in out.iter_mut().enumerate().take(graph.n) {
            *o = graph.var_edge_ids(v).iter().map(|&e| self.c2v[e]).sum();
        }
    }

    /// Posterior LLR per variable: `prior + sum of check messages`.
    pub fn posterior(&self, graph: &TannerGraph, prior: &[f64], out: &mut [f64]) {
        for v in 0..graph.n {
            out[v] = graph
                .var_edge_ids(v)
                .iter()
                .fold(prior[v], |acc, &e| acc + self.c2v[e]);
        }
    }

    pub fn decide(&self, graph: &TannerGraph, prior: &[f64], hard: &mut [u8]) {
        for v in 0..graph.n {
            let total = graph
                .var_edge_ids(v)
                .iter()
                .fold(prior[v], |acc, &e| acc + self.c2v[e]);
            hard[v] = hard_bit(total);
        }
    }

    /// One flooding iteration: all variable nodes, then all check nodes.
    pub fn iterate(&mut self, graph: &TannerGraph, prior: &[f64]) {
        for (v, &p) in prior.iter().enumerate().take(graph.n) {
            let ids = graph.var_edge_ids(v);
            for &e in ids {
                let sum = ids
                    .iter()
                    .filter(|&&o| o != e)
                    .fold(p, |acc, &o| acc + self.c2v[o]);
                self.v2c[e] = clamp_llr(sum);
            }
        }
        for w in graph.check_ptr.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let d = hi - lo;
            let input = &self.v2c[lo..hi];
            let out = &mut self.c2v[lo..hi];
            match d {
                0 => {}
                1 => out[0] = LLR_MAX,
                _ => {
                    let (fwd, bwd) = (&mut self.fwd[..d], &mut self.bwd[..d]);
                    fwd[0] = input[0];
                    for k in 1..d {
                        fwd[k] = boxplus(fwd[k - 1], input[k]);
                    }
                    bwd[d - 1] = input[d - 1];
                    for k in (0..d - 1).rev() {
                        bwd[k] = boxplus(input[k], bwd[k + 1]);
                    }
                    out[0] = clamp_llr(bwd[1]);
                    out[d - 1] = clamp_llr(fwd[d - 2]);
                    for k in 1..d - 1 {
                        out[k] = clamp_llr(boxplus(fwd[k - 1], bwd[k + 1]));
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpOutcome {
    pub codeword: Vec<u8>,
    pub converged: bool,
    /// Iterations run before the syndrome check succeeded (or the cap).
    pub iterations: usize,
    pub posterior: Vec<f64>,
}

/// Reusable single-user decoder over one code.
#[derive(Clone, Debug)]
pub struct BpDecoder {
    graph: TannerGraph,
    state: BpState,
    hard: Vec<u8>,
}

impl BpDecoder {
    pub fn new(code: &LiftedCode) -> Self {
        let graph = TannerGraph::new(code.h());
        let state = BpState::new(&graph);
        let hard = vec![0; graph.n()];
        BpDecoder { graph, state, hard }
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    /// Flooding sum-product with a syndrome check before each iteration.
    pub fn decode(&mut self, channel_llr: &[f64], max_iters: usize) -> BpOutcome {
        assert_eq!(channel_llr.len(), self.graph.n(), "channel LLR length");
        self.state.reset();
        let mut iterations = max_iters;
        let mut converged = false;
        for it in 0..max_iters {
            self.state.decide(&self.graph, channel_llr, &mut self.hard);
            if self.graph.syndrome_is_zero(&self.hard) {
                iterations = it;
                converged = true;
                break;
            }
            self.state.iterate(&self.graph, channel_llr);
        }
        let mut posterior = vec![0.0; self.graph.n()];
        self.state.posterior(&self.graph, channel_llr, &mut posterior);
        if !converged {
            self.state.decide(&self.graph, channel_llr, &mut self.hard);
            converged = self.graph.syndrome_is_zero(&self.hard);
        }
        BpOutcome {
            codeword: self.hard.clone(),
            converged,
            iterations,
            posterior,
        }
    }

    /// Posterior LLRs after exactly `iters` flooding iterations.
    pub fn posteriors(&mut self, channel_llr: &[f64], iters: usize) -> Vec<f64> {
        self.state.reset();
        for _ in 0..iters {
            self.state.iterate(&self.graph, channel_llr);
        }
        let mut posterior = vec![0.0; self.graph.n()];
        self.state.posterior(&self.graph, channel_llr, &mut posterior);
        posterior
    }

    pub fn state(&self) -> &BpState {
        &self.state
    }
}

pub fn bp_decode(code: &LiftedCode, channel_llr: &[f64], max_iters: usize) -> BpOutcome {
    BpDecoder::new(code).decode(channel_llr, max_iters)
}
