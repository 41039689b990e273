//! Monte-Carlo estimation of the state-to-variable mutual information.
//!
//! Interferer priors are drawn from the consistent Gaussian matching the
//! current variable-to-state information, pushed with a fresh channel
//! sample through the exact functional-node rule, and the resulting LLR
//! samples are summarised by one of three Gaussian approximations.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::jfunc::JTable;
use crate::error::{Error, Result};
use crate::gmac::{ChannelConfig, FunctionalNode};
use crate::rng;

pub const MIN_SAMPLES: usize = 1000;

/// How the sampled state-node LLRs are mapped to mutual information.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Consistent Gaussian with the sample mean.
    #[serde(alias = "mean")]
    MeanMatched,
    /// Consistent Gaussian centred on the histogram mode.
    #[serde(alias = "mode")]
    ModeMatched,
    /// Two-component mixture of consistent Gaussians fitted by EM.
    #[default]
    #[serde(alias = "mixture")]
    Mixture,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-matched" | "mean" => Ok(Estimator::MeanMatched),
            "mode-matched" | "mode" => Ok(Estimator::ModeMatched),
            "mixture" => Ok(Estimator::Mixture),
            _ => Err(Error::InvalidArgument(format!("unknown estimator {s:?}"))),
        }
    }
}

/// `J` of a consistent Gaussian with the given mean (variance `2 mean`).
pub fn consistent_info(mean: f64) -> f64 {
    JTable::global().j((2.0 * mean.max(0.0)).sqrt())
}

/// Mean of the consistent Gaussian carrying `info` bits.
pub fn consistent_mean(info: f64) -> f64 {
    let s = JTable::global().j_inv_saturating(info);
    0.5 * s * s
}

/// Gaussian mixture whose component `i` has mean `means[i]` and variance
/// `2 means[i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureFit {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
}

impl MixtureFit {
    pub fn mutual_information(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(a, &mu)| a * consistent_info(mu))
            .sum()
    }
}

pub fn sample_mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Histogram mode with Freedman-Diaconis bin width. Bin counts are
/// smoothed by a Gaussian kernel of Silverman bandwidth before taking the
/// peak, which is refined by a parabola through its neighbours.
pub fn histogram_mode(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    if iqr <= 0.0 || max <= min {
        return quantile(&sorted, 0.5);
    }
    let width = 2.0 * iqr / (n as f64).cbrt();
    let bins = (((max - min) / width).ceil() as usize).clamp(1, 100_000);
    let width = (max - min) / bins as f64;
    let mut counts = vec![0.0f64; bins];
    for &x in &sorted {
        counts[(((x - min) / width) as usize).min(bins - 1)] += 1.0;
    }
    let mean = sample_mean(&sorted);
    let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let h = 0.9 * sd.min(iqr / 1.34) * (n as f64).powf(-0.2);
    let reach = (4.0 * h / width).ceil() as usize;
    let kernel: Vec<f64> = (0..=reach)
        .map(|k| (-0.5 * (k as f64 * width / h).powi(2)).exp())
        .collect();
    let density: Vec<f64> = (0..bins)
        .map(|b| {
            let hi = (b + reach).min(bins - 1);
            (b.saturating_sub(reach)..=hi).map(|c| counts[c] * kernel[b.abs_diff(c)]).sum()
        })
        .collect();
    let peak = density
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut offset = 0.0;
    if peak > 0 && peak + 1 < bins {
        let (l, c, r) = (density[peak - 1], density[peak], density[peak + 1]);
        let denom = l - 2.0 * c + r;
        if denom < 0.0 {
            offset = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
        }
    }
    min + (peak as f64 + 0.5 + offset) * width
}

/// EM fit of `components` consistent Gaussians. The M-step for a mean is
/// closed form: `mu = sqrt(1 + E_r[x^2]) - 1`. Runs at most `iterations`
/// rounds and stops early once no parameter moves by more than 1e-10.
pub fn fit_mixture(samples: &[f64], components: usize, iterations: usize) -> MixtureFit {
    let k = components.max(1);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut means: Vec<f64> = (0..k)
        .map(|i| quantile(&sorted, (i as f64 + 0.5) / k as f64).abs().max(1e-3))
        .collect();
    let mut weights = vec![1.0 / k as f64; k];
    let mut offset = vec![0.0; k];
    let mut inv4mu = vec![0.0; k];
    let mut resp = vec![0.0; k];
    let mut sum_r = vec![0.0; k];
    let mut sum_x2 = vec![0.0; k];
    for _ in 0..iterations {
        for c in 0..k {
            offset[c] = weights[c].ln() - 0.5 * (4.0 * std::f64::consts::PI * means[c]).ln();
            inv4mu[c] = 0.25 / means[c];
        }
        sum_r.iter_mut().for_each(|v| *v = 0.0);
        sum_x2.iter_mut().for_each(|v| *v = 0.0);
        for &x in samples {
            let mut top = f64::NEG_INFINITY;
            for c in 0..k {
                let d = x - means[c];
                resp[c] = offset[c] - d * d * inv4mu[c];
                top = top.max(resp[c]);
            }
            let mut total = 0.0;
            for r in resp.iter_mut() {
                *r = (*r - top).exp();
                total += *r;
            }
            let x2 = x * x;
            for c in 0..k {
                let r = resp[c] / total;
                sum_r[c] += r;
                sum_x2[c] += r * x2;
            }
        }
        let mut moved: f64 = 0.0;
        for c in 0..k {
            let w = (sum_r[c] / samples.len() as f64).max(1e-300);
            moved = moved.max((w - weights[c]).abs());
            weights[c] = w;
            if sum_r[c] > 1e-12 {
                let mu = ((1.0 + sum_x2[c] / sum_r[c]).sqrt() - 1.0).max(1e-9);
                moved = moved.max((mu - means[c]).abs() / means[c].max(1.0));
                means[c] = mu;
            }
        }
        if moved < 1e-10 {
            break;
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    MixtureFit { weights, means }
}

pub fn summarize(samples: &[f64], estimator: Estimator) -> f64 {
    match estimator {
        Estimator::MeanMatched => consistent_info(sample_mean(samples)),
        Estimator::ModeMatched => consistent_info(histogram_mode(samples)),
        Estimator::Mixture => fit_mixture(samples, 2, 100).mutual_information(),
    }
}

/// State-node output LLR samples for a target user sending +1 while the
/// other `users - 1` users send uniform bits with priors carrying `i_evs`.
pub fn sample_state_messages(
    i_evs: f64,
    cfg: &ChannelConfig,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let others = cfg.users() - 1;
    let mean = consistent_mean(i_evs);
    let sd = (2.0 * mean).sqrt();
    let amp = cfg.amplitude();
    let noise = cfg.noise_sd();
    let mut node = FunctionalNode::default();
    let mut priors = vec![0.0; others + 1];
    let mut out = vec![0.0; others + 1];
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut sum = 1.0;
        for p in priors.iter_mut().take(others) {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let z: f64 = rng.sample(StandardNormal);
            *p = s * (mean + sd * z);
            sum += s;
        }
        let z: f64 = rng.sample(StandardNormal);
        let y = amp * sum + noise * z;
        node.messages(y, &priors, cfg, &mut out);
        let m = out[others];
        if !m.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        draws.push(m);
    }
    Ok(draws)
}

/// Estimated state-to-variable information for one column.
pub fn estimate_column(
    i_evs: f64,
    cfg: &ChannelConfig,
    estimator: Estimator,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    let draws = sample_state_messages(i_evs, cfg, samples, &mut rng::stream(seed, &[0x7374]))?;
    Ok(summarize(&draws, estimator).clamp(0.0, 1.0))
}

/// `I_Es` per protograph column from the columns' `I_Evs`. Column `j`
/// uses the stream `(seed, j)`.
pub fn estimate_state_info(
    i_evs: &[f64],
    cfg: &ChannelConfig,
    estimator: Estimator,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    i_evs
        .iter()
        .enumerate()
        .map(|(j, &v)| estimate_column(v, cfg, estimator, samples, rng::derive_seed(seed, &[j as u64])))
        .collect()
}
