//! Protograph EXIT evolution over the multiple access channel and the
//! threshold search built on it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use super::estimate::{estimate_column, estimate_state_info, Estimator};
use super::jfunc::{JTable, SIGMA_MAX};
use crate::error::{Error, Result};
use crate::gmac::ChannelConfig;
use crate::protograph::Protograph;
use crate::rng;

/// Per-edge and per-column mutual informations. Edge quantities are stored
/// row-major per protograph entry; parallel edges share one value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PexitState {
    pub rows: usize,
    pub cols: usize,
    pub i_av: Vec<f64>,
    pub i_ev: Vec<f64>,
    pub i_ac: Vec<f64>,
    pub i_ec: Vec<f64>,
    pub i_evs: Vec<f64>,
    pub i_es: Vec<f64>,
    pub i_app: Vec<f64>,
    pub iteration: usize,
}

impl PexitState {
    pub fn new(p: &Protograph) -> Self {
        let e = p.rows() * p.cols();
        PexitState {
            rows: p.rows(),
            cols: p.cols(),
            i_av: vec![0.0; e],
            i_ev: vec![0.0; e],
            i_ac: vec![0.0; e],
            i_ec: vec![0.0; e],
            i_evs: vec![0.0; p.cols()],
            i_es: vec![0.0; p.cols()],
            i_app: vec![0.0; p.cols()],
            iteration: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    pub fn min_app(&self) -> f64 {
        self.i_app.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// All stored informations lie in `[0, 1]`.
    pub fn in_unit_range(&self) -> bool {
        [&self.i_av, &self.i_ev, &self.i_ac, &self.i_ec, &self.i_evs, &self.i_es, &self.i_app]
            .iter()
            .all(|v| v.iter().all(|x| (0.0..=1.0).contains(x)))
    }
}

#[inline]
fn sq_inv(j: &JTable, info: f64) -> f64 {
    let s = j.j_inv_saturating(info);
    s * s
}

#[inline]
fn j_of_sq(j: &JTable, sum_sq: f64) -> f64 {
    j.j(sum_sq.max(0.0).sqrt().min(SIGMA_MAX))
}

/// Information sent from variable column `j` to the state node: every
/// incoming check edge, counted with multiplicity.
pub fn state_output_info(state: &PexitState, p: &Protograph, j: usize) -> f64 {
    let jt = JTable::global();
    let sum: f64 = (0..p.rows())
        .map(|s| p.get(s, j) as f64 * sq_inv(jt, state.i_av[state.at(s, j)]))
        .sum();
    j_of_sq(jt, sum)
}

/// Updates `I_Ev(., j)` and `I_Evs(j)` from `I_Av(., j)` and `I_Es(j)`.
/// The target edge is excluded once from its own entry's multiplicity.
pub fn pexit_variable(state: &mut PexitState, p: &Protograph, j: usize) {
    let jt = JTable::global();
    let es = sq_inv(jt, state.i_es[j]);
    let av: Vec<f64> = (0..p.rows()).map(|s| sq_inv(jt, state.i_av[state.at(s, j)])).collect();
    let total: f64 = (0..p.rows()).map(|s| p.get(s, j) as f64 * av[s]).sum();
    for i in 0..p.rows() {
        if p.get(i, j) == 0 {
            continue;
        }
        let others: f64 = (0..p.rows())
            .map(|s| (p.get(s, j) - u32::from(s == i)) as f64 * av[s])
            .sum();
        let idx = state.at(i, j);
        state.i_ev[idx] = j_of_sq(jt, others + es);
    }
    state.i_evs[j] = j_of_sq(jt, total);
}

/// Updates `I_Ec(i, .)` from `I_Ac(i, .)` through the check-node duality
/// `1 - J(sqrt(sum J^-1(1 - I_Ac)^2))`.
pub fn pexit_check(state: &mut PexitState, p: &Protograph, i: usize) {
    let jt = JTable::global();
    let dual: Vec<f64> = (0..p.cols())
        .map(|s| sq_inv(jt, 1.0 - state.i_ac[state.at(i, s)]))
        .collect();
    for j in 0..p.cols() {
        if p.get(i, j) == 0 {
            continue;
        }
        let others: f64 = (0..p.cols())
            .map(|s| (p.get(i, s) - u32::from(s == j)) as f64 * dual[s])
            .sum();
        let idx = state.at(i, j);
        state.i_ec[idx] = (1.0 - j_of_sq(jt, others)).clamp(0.0, 1.0);
    }
}

/// A-posteriori information per column: all check edges plus the state node.
pub fn pexit_app(state: &mut PexitState, p: &Protograph) {
    let jt = JTable::global();
    for j in 0..p.cols() {
        let sum: f64 = (0..p.rows())
            .map(|s| p.get(s, j) as f64 * sq_inv(jt, state.i_av[state.at(s, j)]))
            .sum();
        state.i_app[j] = j_of_sq(jt, sum + sq_inv(jt, state.i_es[j]));
    }
}

/// Supplies `I_Es` per column given `I_Evs` per column.
pub trait StateInfoSource {
    fn state_info(&mut self, i_evs: &[f64], iteration: usize) -> Result<Vec<f64>>;
}

/// Fresh Monte-Carlo estimate every iteration, seeded by
/// `(seed, iteration, column)`.
#[derive(Clone, Debug)]
pub struct MonteCarloSource {
    pub channel: ChannelConfig,
    pub estimator: Estimator,
    pub samples: usize,
    pub seed: u64,
}

impl StateInfoSource for MonteCarloSource {
    fn state_info(&mut self, i_evs: &[f64], iteration: usize) -> Result<Vec<f64>> {
        estimate_state_info(
            i_evs,
            &self.channel,
            self.estimator,
            self.samples,
            rng::derive_seed(self.seed, &[iteration as u64]),
        )
    }
}

/// The same `I_Es` vector every iteration.
#[derive(Clone, Debug)]
pub struct FixedSource(pub Vec<f64>);

impl StateInfoSource for FixedSource {
    fn state_info(&mut self, i_evs: &[f64], _iteration: usize) -> Result<Vec<f64>> {
        if self.0.len() != i_evs.len() {
            return Err(Error::Dimension("fixed I_Es length differs from column count".into()));
        }
        Ok(self.0.clone())
    }
}

/// State-node transfer curve `I_Evs -> I_Es` sampled once on a grid of
/// prior widths `sigma = J^-1(I_Evs)` and linearly interpolated. Common
/// random numbers across grid points keep the curve smooth; a running
/// maximum removes residual Monte-Carlo wiggles.
#[derive(Clone, Debug)]
pub struct TransferTable {
    step: f64,
    values: Vec<f64>,
}

impl TransferTable {
    pub const SIGMA_SPAN: f64 = 12.0;
    pub const POINTS: usize = 49;

    pub fn estimate(channel: &ChannelConfig, estimator: Estimator, samples: usize, seed: u64) -> Result<Self> {
        let step = Self::SIGMA_SPAN / (Self::POINTS - 1) as f64;
        let jt = JTable::global();
        let mut values = Vec::with_capacity(Self::POINTS);
        let mut best: f64 = 0.0;
        for k in 0..Self::POINTS {
            let info = jt.j(k as f64 * step);
            let v = estimate_column(info, channel, estimator, samples, seed)?;
            best = best.max(v);
            values.push(best);
        }
        Ok(TransferTable { step, values })
    }

    pub fn eval(&self, i_evs: f64) -> f64 {
        let x = JTable::global().j_inv_saturating(i_evs) / self.step;
        let last = self.values.len() - 1;
        if x >= last as f64 {
            return self.values[last];
        }
        let k = x.floor() as usize;
        let u = x - k as f64;
        self.values[k] * (1.0 - u) + self.values[k + 1] * u
    }
}

impl StateInfoSource for &TransferTable {
    fn state_info(&mut self, i_evs: &[f64], _iteration: usize) -> Result<Vec<f64>> {
        Ok(i_evs.iter().map(|&v| self.eval(v)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionOptions {
    pub max_iters: usize,
    /// Converged once every `I_APP >= 1 - tolerance`.
    pub tolerance: f64,
    /// Stop early when the best `min I_APP` has not grown by `stall_delta`
    /// over this many iterations.
    pub stall_window: usize,
    pub stall_delta: f64,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        EvolutionOptions {
            max_iters: 1000,
            tolerance: 1e-4,
            stall_window: 60,
            stall_delta: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub min_app: f64,
    pub i_es: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evolution {
    pub converged: bool,
    pub iterations: usize,
    pub trajectory: Vec<TrajectoryPoint>,
    pub state: PexitState,
}

impl Evolution {
    /// CSV with columns `iteration,min_iapp,ies_0,...`.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("iteration,min_iapp");
        for j in 0..self.state.cols {
            let _ = write!(out, ",ies_{j}");
        }
        out.push('\n');
        for p in &self.trajectory {
            let _ = write!(out, "{},{}", p.iteration, p.min_app);
            for v in &p.i_es {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// One iteration: state node, variable nodes, check nodes, APP.
pub fn pexit_iteration(state: &mut PexitState, p: &Protograph, source: &mut impl StateInfoSource) -> Result<()> {
    for j in 0..p.cols() {
        state.i_evs[j] = state_output_info(state, p, j);
    }
    let es = source.state_info(&state.i_evs, state.iteration)?;
    if es.len() != p.cols() {
        return Err(Error::Dimension("state information per column".into()));
    }
    state.i_es = es.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    for j in 0..p.cols() {
        pexit_variable(state, p, j);
    }
    state.i_ac.copy_from_slice(&state.i_ev);
    for i in 0..p.rows() {
        pexit_check(state, p, i);
    }
    state.i_av.copy_from_slice(&state.i_ec);
    pexit_app(state, p);
    state.iteration += 1;
    Ok(())
}

pub fn evolve(p: &Protograph, source: &mut impl StateInfoSource, opts: &EvolutionOptions) -> Result<Evolution> {
    let mut state = PexitState::new(p);
    let mut trajectory = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut best_at = 0;
    let mut converged = false;
    for it in 0..opts.max_iters {
        pexit_iteration(&mut state, p, source)?;
        let min_app = state.min_app();
        trajectory.push(TrajectoryPoint {
            iteration: it + 1,
            min_app,
            i_es: state.i_es.clone(),
        });
        if min_app >= 1.0 - opts.tolerance {
            converged = true;
            break;
        }
        if min_app > best + opts.stall_delta {
            best = min_app;
            best_at = it;
        } else if it - best_at >= opts.stall_window {
            break;
        }
    }
    Ok(Evolution {
        converged,
        iterations: state.iteration,
        trajectory,
        state,
    })
}

/// Where `I_Es` comes from during a threshold search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateInfoMode {
    /// Fresh samples per iteration and column.
    #[default]
    MonteCarlo,
    /// One transfer table per channel, shared through a [`TransferCache`].
    Tabulated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdConfig {
    pub users: usize,
    pub estimator: Estimator,
    pub samples: usize,
    pub evolution: EvolutionOptions,
    pub lo_db: f64,
    pub hi_db: f64,
    pub resolution_db: f64,
    pub seed: u64,
    pub mode: StateInfoMode,
}

impl ThresholdConfig {
    pub fn new(users: usize) -> Self {
        ThresholdConfig {
            users,
            estimator: Estimator::default(),
            samples: 10_000,
            evolution: EvolutionOptions::default(),
            lo_db: -2.0,
            hi_db: 12.0,
            resolution_db: 0.01,
            seed: 0,
            mode: StateInfoMode::MonteCarlo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Threshold {
    pub ebn0_db: f64,
    /// Evolution at the reported threshold.
    pub evolution: Evolution,
}

type TableKey = (usize, Estimator, usize, u64, u64, u64);

/// Transfer tables keyed by users, estimator, samples, seed and the
/// channel's power and noise level. Eb/N0 alone is not enough: the same
/// Eb/N0 maps to different noise levels at different code rates.
#[derive(Debug, Default)]
pub struct TransferCache {
    tables: Mutex<HashMap<TableKey, Arc<TransferTable>>>,
}

impl TransferCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tables.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, cfg: &ThresholdConfig, ebn0_db: f64, channel: &ChannelConfig) -> Result<Arc<TransferTable>> {
        let key = (
            cfg.users,
            cfg.estimator,
            cfg.samples,
            cfg.seed,
            channel.power().to_bits(),
            channel.n0().to_bits(),
        );
        if let Some(t) = self.tables.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(TransferTable::estimate(
            channel,
            cfg.estimator,
            cfg.samples,
            rng::derive_seed(cfg.seed, &[(ebn0_db * 1e6).round() as i64 as u64]),
        )?);
        self.tables
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&table));
        Ok(table)
    }
}

/// Runs one evolution at `ebn0_db` (rate = design rate of `p`).
pub fn evolve_at(p: &Protograph, ebn0_db: f64, cfg: &ThresholdConfig, cache: &TransferCache) -> Result<Evolution> {
    let channel = ChannelConfig::from_ebn0(cfg.users, ebn0_db, p.design_rate())?;
    match cfg.mode {
        StateInfoMode::MonteCarlo => {
            let mut source = MonteCarloSource {
                channel,
                estimator: cfg.estimator,
                samples: cfg.samples,
                seed: rng::derive_seed(cfg.seed, &[(ebn0_db * 1e6).round() as i64 as u64]),
            };
            evolve(p, &mut source, &cfg.evolution)
        }
        StateInfoMode::Tabulated => {
            let table = cache.get(cfg, ebn0_db, &channel)?;
            evolve(p, &mut &*table, &cfg.evolution)
        }
    }
}

/// Smallest Eb/N0 in `[lo_db, hi_db]` at which the evolution converges,
/// found by bisection to `resolution_db`.
pub fn pexit_threshold(p: &Protograph, cfg: &ThresholdConfig) -> Result<Threshold> {
    pexit_threshold_cached(p, cfg, &TransferCache::new())
}

pub fn pexit_threshold_cached(p: &Protograph, cfg: &ThresholdConfig, cache: &TransferCache) -> Result<Threshold> {
    if cfg.lo_db.partial_cmp(&cfg.hi_db) != Some(std::cmp::Ordering::Less)
        || cfg.resolution_db.is_nan()
        || cfg.resolution_db <= 0.0
    {
        return Err(Error::InvalidArgument("threshold search interval".into()));
    }
    let top = evolve_at(p, cfg.hi_db, cfg, cache)?;
    if !top.converged {
        return Err(Error::NoThreshold {
            lo_db: cfg.lo_db,
            hi_db: cfg.hi_db,
        });
    }
    let bottom = evolve_at(p, cfg.lo_db, cfg, cache)?;
    if bottom.converged {
        return Ok(Threshold {
            ebn0_db: cfg.lo_db,
            evolution: bottom,
        });
    }
    let (mut lo, mut hi, mut at_hi) = (cfg.lo_db, cfg.hi_db, top);
    while hi - lo > cfg.resolution_db {
        let mid = 0.5 * (lo + hi);
        let ev = evolve_at(p, mid, cfg, cache)?;
        if ev.converged {
            hi = mid;
            at_hi = ev;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold {
        ebn0_db: hi,
        evolution: at_hi,
    })
}
