use serde::{Deserialize, Serialize};

use super::StatsError;

/// Two-sided 95% Student-t quantiles t(0.975, df) for df = 1..=29.
const T_975: [f64; 29] = [
    12.7062047364,
    4.3026527297,
    3.1824463053,
    2.7764451052,
    2.5705818356,
    2.4469118511,
    2.3646242516,
    2.3060041352,
    2.2621571629,
    2.2281388520,
    2.2009851601,
    2.1788128297,
    2.1603686565,
    2.1447866879,
    2.1314495456,
    2.1199052992,
    2.1098155778,
    2.1009220402,
    2.0930240544,
    2.0859634473,
    2.0796138447,
    2.0738730679,
    2.0686576104,
    2.0638985616,
    2.0595385528,
    2.0555294386,
    2.0518305165,
    2.0484071418,
    2.0452296421,
];

/// Critical value for `n` samples: the table up to n = 30, 1.96 beyond.
pub fn t_quantile_975(n: usize) -> Option<f64> {
    match n {
        0 | 1 => None,
        2..=30 => Some(T_975[n - 2]),
        _ => Some(1.96),
    }
}

/// A mean with an optional 95% half-width (absent for a single run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_half_width: Option<f64>,
}

impl Estimate {
    /// Mean ± CI when there are at least two samples, bare mean otherwise.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        match samples.len() {
            0 => None,
            1 => Some(Self {
                mean: samples[0],
                ci_half_width: None,
            }),
            _ => confidence_interval(samples).ok().map(|(mean, hw)| Self {
                mean,
                ci_half_width: Some(hw),
            }),
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            ci_half_width: self.ci_half_width.map(|h| h * factor),
        }
    }
}

/// `(mean, t(0.975, n-1) * s / sqrt(n))` with the (n-1) sample deviation.
pub fn confidence_interval(samples: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = samples.len();
    let t = t_quantile_975(n).ok_or(StatsError::TooFewRuns(n))?;
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok((mean, t * var.sqrt() / nf.sqrt()))
}
