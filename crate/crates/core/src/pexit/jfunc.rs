//! `J(sigma)`: mutual information between a uniform BPSK bit and a
//! consistent Gaussian LLR with mean `sigma^2 / 2` and variance `sigma^2`.
//!
//! The complement `1 - J = E[log2(1 + e^-L)]` is integrated once per grid
//! point with adaptive Simpson quadrature; its logarithm is tabulated and
//! interpolated with a monotone cubic (Fritsch-Carlson). Keeping the
//! complement in log form preserves relative accuracy near `J = 1`.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

const GRID_STEP: f64 = 0.005;
/// Above this width `1 - J` is below 1e-20 and `J` rounds to 1.
pub const SIGMA_MAX: f64 = 20.0;

/// Direct quadrature of `1 - J(sigma)`.
pub fn j_complement_quadrature(sigma: f64) -> f64 {
    let s = sigma.abs();
    if s == 0.0 {
        return 1.0;
    }
    // L = s^2/2 + s t with t standard normal
    let f = |t: f64| {
        let l = 0.5 * s * s + s * t;
        let softplus = (-l).max(0.0) + (-l.abs()).exp().ln_1p();
        (-0.5 * t * t).exp() / (2.0 * PI).sqrt() * softplus / LN_2
    };
    let (a, b) = (-s - 14.0, 14.0);
    // Coarse composite Simpson sets the scale for the relative tolerance.
    let panels = 64;
    let h = (b - a) / panels as f64;
    let mut coarse = f(a) + f(b);
    for k in 1..panels {
        coarse += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    coarse *= h / 3.0;
    let eps = 1e-13 * coarse.abs().max(f64::MIN_POSITIVE);
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, eps, 48)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || (delta.abs() <= 15.0 * eps && (b - a) < 0.5) {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Monotone interpolation table of `ln(1 - J)` on a uniform sigma grid.
#[derive(Clone, Debug)]
pub struct JTable {
    step: f64,
    log_c: Vec<f64>,
    slope: Vec<f64>,
}

impl JTable {
    pub fn build() -> Self {
        let points = (SIGMA_MAX / GRID_STEP).round() as usize + 1;
        let log_c: Vec<f64> = (0..points)
            .map(|k| j_complement_quadrature(k as f64 * GRID_STEP).ln())
            .collect();
        let slope = fritsch_carlson(&log_c, GRID_STEP);
        JTable {
            step: GRID_STEP,
            log_c,
            slope,
        }
    }

    /// Process-wide table, built on first use.
    pub fn global() -> &'static JTable {
        static TABLE: OnceLock<JTable> = OnceLock::new();
        TABLE.get_or_init(JTable::build)
    }

    #[inline]
    fn hermite(&self, k: usize, u: f64) -> f64 {
        let (y0, y1) = (self.log_c[k], self.log_c[k + 1]);
        let (d0, d1) = (self.slope[k] * self.step, self.slope[k + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * d1
    }

    #[inline]
    fn log_complement(&self, sigma: f64) -> f64 {
        let x = sigma / self.step;
        let k = (x.floor() as usize).min(self.log_c.len() - 2);
        self.hermite(k, x - k as f64)
    }

    /// `J(sigma)`; even in sigma, exactly 1 beyond [`SIGMA_MAX`].
    #[inline]
    pub fn j(&self, sigma: f64) -> f64 {
        let s = sigma.abs();
        if s >= SIGMA_MAX {
            return 1.0;
        }
        -self.log_complement(s).exp_m1()
    }

    /// Inverse of [`JTable::j`] for `info` in `[0, 1)`.
    pub fn j_inv(&self, info: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&info) {
            return Err(Error::InvalidArgument(format!(
                "J^-1 needs mutual information in [0, 1), got {info}"
            )));
        }
        Ok(self.j_inv_unchecked(info))
    }

    /// Inverse that saturates: `info <= 0` gives 0 and `info >= 1` gives
    /// [`SIGMA_MAX`].
    pub fn j_inv_saturating(&self, info: f64) -> f64 {
        if info.is_nan() || info <= 0.0 {
            0.0
        } else if info >= 1.0 {
            SIGMA_MAX
        } else {
            self.j_inv_unchecked(info)
        }
    }

    fn j_inv_unchecked(&self, info: f64) -> f64 {
        if info == 0.0 {
            return 0.0;
        }
        let target = (-info).ln_1p();
        let last = self.log_c.len() - 1;
        if target <= self.log_c[last] {
            return SIGMA_MAX;
        }
        // log_c is strictly decreasing: find k with log_c[k] >= target > log_c[k+1]
        let k = self.log_c.partition_point(|&v| v >= target).saturating_sub(1).min(last - 1);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(k, mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        (k as f64 + 0.5 * (lo + hi)) * self.step
    }
}

/// Fourth-order central slopes (the data is even about 0, so the left edge
/// reflects), then the Fritsch-Carlson limiter to keep every segment
/// monotone.
fn fritsch_carlson(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let at = |k: isize| y[k.unsigned_abs()];
    let mut m = vec![0.0; n];
    for k in 1..n - 2 {
        let k = k as isize;
        m[k as usize] = (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h);
    }
    m[n - 2] = (y[n - 1] - y[n - 3]) / (2.0 * h);
    m[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
    for k in 0..n - 1 {
        if delta[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let (a, b) = (m[k] / delta[k], m[k + 1] / delta[k]);
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            m[k] = t * a * delta[k];
            m[k + 1] = t * b * delta[k];
        }
    }
    m
}

pub fn j_func(sigma: f64) -> f64 {
    JTable::global().j(sigma)
}

pub fn j_inv(info: f64) -> Result<f64> {
    JTable::global().j_inv(info)
}
