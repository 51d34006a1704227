//! Small statistics helpers for simulation reports.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> ConfidenceInterval {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Clamp the endpoints the formula reaches exactly at p = 0 or 1, where
    // rounding could otherwise leave the point estimate outside.
    let low = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let high = if successes == trials { 1.0 } else { (center + half).clamp(p, 1.0) };
    ConfidenceInterval { low, high, level: 0.95 }
}

/// Binomial standard error `sqrt(p (1 - p) / trials)`.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Summary of a set of sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub mean: f64,
    pub median: f64,
    pub p90: u64,
    pub min: u64,
    pub max: u64,
}

impl SizeSummary {
    /// Summarizes `sizes`, sorting them in place. Order-independent: the
    /// mean is computed from an exact integer sum.
    pub fn from_sizes(sizes: &mut [u64]) -> Option<Self> {
        if sizes.is_empty() {
            return None;
        }
        sizes.sort_unstable();
        let len = sizes.len();
        let sum: u128 = sizes.iter().map(|&s| u128::from(s)).sum();
        let median = if len % 2 == 1 {
            sizes[len / 2] as f64
        } else {
            (sizes[len / 2 - 1] as f64 + sizes[len / 2] as f64) / 2.0
        };
        // nearest-rank percentile
        let rank = (0.9 * len as f64).ceil() as usize;
        Some(Self {
            mean: sum as f64 / len as f64,
            median,
            p90: sizes[rank.clamp(1, len) - 1],
            min: sizes[0],
            max: sizes[len - 1],
        })
    }
}
