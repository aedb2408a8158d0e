//! Normal-approximation estimates and tests.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

/// Sample mean with its 95% half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn std_error(&self) -> f64 {
        self.half_width / Z95
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn estimate(xs: &[f64]) -> Estimate {
    let se = (variance(xs) / xs.len().max(1) as f64).sqrt();
    Estimate { mean: mean(xs), half_width: Z95 * se, samples: xs.len() }
}

/// One-sided test of `mean(x) > mean(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneSided {
    pub difference: f64,
    pub std_error: f64,
    pub z: f64,
    pub significant: bool,
}

fn one_sided(difference: f64, std_error: f64) -> OneSided {
    let z = if std_error > 0.0 {
        difference / std_error
    } else if difference > 0.0 {
        f64::INFINITY
    } else if difference < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    OneSided { difference, std_error, z, significant: z > Z95_ONE_SIDED }
}

/// Paired test of `x > y` on matched samples.
pub fn paired_greater(x: &[f64], y: &[f64]) -> OneSided {
    assert_eq!(x.len(), y.len(), "paired samples must have equal length");
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    one_sided(mean(&d), (variance(&d) / d.len().max(1) as f64).sqrt())
}

/// Unpaired (Welch) test of `x > y`.
pub fn welch_greater(x: &[f64], y: &[f64]) -> OneSided {
    let se = (variance(x) / x.len().max(1) as f64 + variance(y) / y.len().max(1) as f64).sqrt();
    one_sided(mean(x) - mean(y), se)
}
