//! Monte-Carlo frame-error-rate measurement.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmac::{transmit_with, ChannelConfig, JointDecoder, JointFactorGraph, Schedule};
use crate::protograph::{lift, parse_alist, LiftedCode, Protograph};
use crate::rng;
use crate::spreading::{generate_signatures, slot_split_graphs};

/// Where the code comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodeSource {
    /// Protograph text file lifted by `z`.
    Protograph {
        path: PathBuf,
        z: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Parity-check matrix in alist format.
    Alist { path: PathBuf },
    /// Every bit of a lifted `[[3, 3]]` code sent twice.
    Baseline {
        z: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl CodeSource {
    /// Builds the code, resolving relative paths against `base`.
    pub fn build(&self, base: &Path) -> Result<LiftedCode> {
        let read = |p: &Path| {
            let p = base.join(p);
            std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
        };
        match self {
            CodeSource::Protograph { path, z, seed } => lift(&Protograph::parse(&read(path)?)?, *z, *seed),
            CodeSource::Alist { path } => LiftedCode::from_parity_check(parse_alist(&read(path)?)?),
            CodeSource::Baseline { z, seed } => baseline_code(*z, *seed),
        }
    }
}

/// Repetition baseline: a `[[3, 3]]` code lifted by `z`, each bit repeated.
pub fn baseline_code(z: usize, seed: u64) -> Result<LiftedCode> {
    let inner = lift(&Protograph::from_rows(&[&[3, 3]])?, z, seed)?;
    LiftedCode::repetition_of(&inner, 2)
}

/// Inclusive Eb/N0 grid in dB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(Error::InvalidArgument("sweep needs finite start <= stop".into()));
        }
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(Error::InvalidArgument("sweep step must be positive".into()));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// How users share the slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Layout {
    /// `n` chips, every user on every chip through its own interleaver.
    #[default]
    Unspread,
    /// Regular sparse spreading over `n_prime` chips.
    Spread { n_prime: usize },
    /// Users split into `groups` groups, each unspread on its own `n` chips.
    Split { groups: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub users: usize,
    pub ebn0_db: Vec<f64>,
    pub frames: usize,
    /// Stop a point after this many frame errors; 0 never stops early.
    pub stop_after_errors: usize,
    pub schedule: Schedule,
    pub seed: u64,
    pub layout: Layout,
}

impl SimConfig {
    pub fn new(users: usize, ebn0_db: Vec<f64>, frames: usize) -> Self {
        SimConfig {
            users,
            ebn0_db,
            frames,
            stop_after_errors: 100,
            schedule: Schedule::default(),
            seed: 0,
            layout: Layout::Unspread,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::InvalidArgument("at least one user is required".into()));
        }
        if self.ebn0_db.is_empty() {
            return Err(Error::InvalidArgument("empty Eb/N0 sweep".into()));
        }
        if self.frames == 0 {
            return Err(Error::InvalidArgument("frames must be at least 1".into()));
        }
        if self.schedule.outer == 0 || self.schedule.inner == 0 {
            return Err(Error::InvalidArgument("iteration counts must be positive".into()));
        }
        Ok(())
    }

    /// Factor graphs for each independently decoded group of users.
    pub fn graphs(&self, n: usize) -> Result<Vec<JointFactorGraph>> {
        let seed = rng::derive_seed(self.seed, &[0x6c61_796f]);
        match self.layout {
            Layout::Unspread => Ok(vec![JointFactorGraph::with_interleavers(self.users, n, seed)]),
            Layout::Spread { n_prime } => Ok(vec![generate_signatures(self.users, n, n_prime, seed)?.graph()]),
            Layout::Split { groups } => slot_split_graphs(self.users, groups, n, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FerPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    /// Frames where at least one user decoded a wrong codeword.
    pub frame_errors: u64,
    /// Information-bit errors per user.
    pub bit_errors: Vec<u64>,
    pub info_bits_per_user: u64,
    pub fer: f64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub seconds: f64,
}

/// 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959964;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

struct Group {
    graph: JointFactorGraph,
    channel: ChannelConfig,
}

#[derive(Clone)]
struct Workspace {
    decoders: Vec<JointDecoder>,
    info: Vec<Vec<u8>>,
    words: Vec<Vec<u8>>,
    y: Vec<f64>,
}

struct FrameResult {
    error: bool,
    bit_errors: Vec<u64>,
}

fn simulate_frame(
    code: &LiftedCode,
    groups: &[Group],
    schedule: Schedule,
    ws: &mut Workspace,
    rng: &mut impl Rng,
) -> FrameResult {
    let mut error = false;
    let mut bit_errors = Vec::new();
    for (g, dec) in groups.iter().zip(&mut ws.decoders) {
        let users = g.graph.users();
        ws.info.resize(users, Vec::new());
        ws.words.resize(users, Vec::new());
        for t in 0..users {
            ws.info[t].clear();
            ws.info[t].extend((0..code.k()).map(|_| rng.random::<bool>() as u8));
            ws.words[t] = code.encode(&ws.info[t]);
        }
        ws.y.resize(g.graph.chips(), 0.0);
        transmit_with(&g.graph, &g.channel, &ws.words[..users], rng, &mut ws.y).expect("consistent dimensions");
        let out = dec.decode(&g.graph, &ws.y, &g.channel, schedule);
        for t in 0..users {
            error |= out.codewords[t] != ws.words[t];
            let decoded = code.encoder().extract(&out.codewords[t]);
            bit_errors.push(decoded.iter().zip(&ws.info[t]).filter(|(a, b)| a != b).count() as u64);
        }
    }
    FrameResult { error, bit_errors }
}

const BATCH: usize = 64;

/// Simulates every sweep point. Frames run in parallel batches; each frame
/// draws from its own stream keyed by `(seed, point, frame)`, and a point
/// that reaches the error budget is cut at the exact frame that reached it,
/// so counts do not depend on the number of workers.
pub fn run_fer_sweep(code: &LiftedCode, cfg: &SimConfig) -> Result<Vec<FerPoint>> {
    cfg.validate()?;
    let graphs = cfg.graphs(code.n())?;
    let mut points = Vec::with_capacity(cfg.ebn0_db.len());
    for (pi, &db) in cfg.ebn0_db.iter().enumerate() {
        let started = Instant::now();
        let groups = graphs
            .iter()
            .map(|g| {
                Ok(Group {
                    channel: ChannelConfig::from_ebn0(g.users(), db, code.rate())?,
                    graph: g.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ws = Workspace {
            decoders: groups.iter().map(|g| JointDecoder::new(code, g.graph.users())).collect(),
            info: Vec::new(),
            words: Vec::new(),
            y: Vec::new(),
        };
        let mut frames = 0u64;
        let mut frame_errors = 0u64;
        let mut bit_errors = vec![0u64; cfg.users];
        let mut next = 0usize;
        'outer: while next < cfg.frames {
            let end = (next + BATCH).min(cfg.frames);
            let batch: Vec<FrameResult> = (next..end)
                .into_par_iter()
                .map_init(
                    || ws.clone(),
                    |ws, f| {
                        let mut r = rng::stream(cfg.seed, &[pi as u64, f as u64]);
                        simulate_frame(code, &groups, cfg.schedule, ws, &mut r)
                    },
                )
                .collect();
            next = end;
            for r in batch {
                frames += 1;
                frame_errors += r.error as u64;
                for (acc, e) in bit_errors.iter_mut().zip(r.bit_errors) {
                    *acc += e;
                }
                if cfg.stop_after_errors > 0 && frame_errors >= cfg.stop_after_errors as u64 {
                    break 'outer;
                }
            }
        }
        let info_bits_per_user = frames * code.k() as u64;
        let total_bits = info_bits_per_user * cfg.users as u64;
        let (ci_low, ci_high) = wilson_interval(frame_errors, frames);
        points.push(FerPoint {
            ebn0_db: db,
            frames,
            frame_errors,
            fer: frame_errors as f64 / frames as f64,
            ber: if total_bits == 0 {
                0.0
            } else {
                bit_errors.iter().sum::<u64>() as f64 / total_bits as f64
            },
            bit_errors,
            info_bits_per_user,
            ci_low,
            ci_high,
            seed: cfg.seed,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(points)
}

pub const CSV_HEADER: [&str; 9] = [
    "ebn0_db",
    "frames",
    "frame_errors",
    "fer",
    "ber",
    "ci_low",
    "ci_high",
    "seed",
    "seconds",
];

pub fn write_fer_csv<W: std::io::Write>(out: W, points: &[FerPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in points {
        w.write_record([
            p.ebn0_db.to_string(),
            p.frames.to_string(),
            p.frame_errors.to_string(),
            p.fer.to_string(),
            p.ber.to_string(),
            p.ci_low.to_string(),
            p.ci_high.to_string(),
            p.seed.to_string(),
            format!("{:.3}", p.seconds),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_fer_csv_file(path: &Path, points: &[FerPoint]) -> Result<()> {
    let mut buf = Vec::new();
    write_fer_csv(&mut buf, points)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Eb/N0 where the FER curve crosses `target`, interpolated linearly in
/// `log10(FER)` between the first bracketing pair of points.
pub fn crossing_db(points: &[FerPoint], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.fer >= target && b.fer < target {
            if b.fer == 0.0 || a.fer == target {
                return Some(if a.fer == target { a.ebn0_db } else { b.ebn0_db });
            }
            let (la, lb, lt) = (a.fer.log10(), b.fer.log10(), target.log10());
            Some(a.ebn0_db + (la - lt) / (la - lb) * (b.ebn0_db - a.ebn0_db))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points() {
        let s = Sweep { start: 4.0, stop: 8.0, step: 1.0 };
        assert_eq!(s.points().unwrap(), vec![4.0, 5.0, 6.0, 7.0, 8.0]);
        let s = Sweep { start: 0.0, stop: 0.3, step: 0.1 };
        assert_eq!(s.points().unwrap().len(), 4);
        assert!(Sweep { start: 1.0, stop: 0.0, step: 1.0 }.points().is_err());
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_dimensions() {
        let c = baseline_code(91, 0).unwrap();
        assert_eq!((c.n(), c.k()), (364, 91));
    }

    #[test]
    fn stop_after_errors_is_exact() {
        let code = baseline_code(8, 0).unwrap();
        let mut cfg = SimConfig::new(2, vec![-5.0], 300);
        cfg.stop_after_errors = 7;
        cfg.schedule = Schedule { outer: 3, inner: 1 };
        let p = &run_fer_sweep(&code, &cfg).unwrap()[0];
        assert_eq!(p.frame_errors, 7);
        assert!(p.frames >= 7 && p.frames < 300);
    }

    #[test]
    fn crossing_interpolates() {
        let mk = |db: f64, fer: f64| FerPoint {
            ebn0_db: db,
            frames: 1,
            frame_errors: 0,
            bit_errors: vec![],
            info_bits_per_user: 0,
            fer,
            ber: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            seed: 0,
            seconds: 0.0,
        };
        let pts = [mk(1.0, 1.0), mk(2.0, 0.1), mk(3.0, 0.001)];
        assert!((crossing_db(&pts, 0.1).unwrap() - 2.0).abs() < 1e-12);
        assert!((crossing_db(&pts, 0.01).unwrap() - 2.5).abs() < 1e-12);
        assert!(crossing_db(&pts, 1e-4).is_none());
    }
}
