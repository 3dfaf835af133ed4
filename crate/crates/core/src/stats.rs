//! Statistical checks used by the Monte Carlo experiments.
//!
//! All bands are three standard deviations of the exact analytic
//! distribution being tested.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Width of every statistical acceptance band, in standard deviations.
pub const SIGMA_BAND: f64 = 3.0;

/// One-sided upper-tail probability of a standard normal beyond
/// [`SIGMA_BAND`].
pub fn three_sigma_tail() -> f64 {
    Normal::standard().sf(SIGMA_BAND)
}

/// Standard error of an empirical frequency of an event with probability `p`
/// over `n` draws.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Mean of a geometric distribution on `{1, 2, ...}` with stopping
/// probability `p`.
pub fn geometric_mean(p: f64) -> f64 {
    1.0 / p
}

pub fn geometric_variance(p: f64) -> f64 {
    (1.0 - p) / (p * p)
}

/// `P(K = k) = (1-p)^{k-1} p`.
pub fn geometric_pmf(p: f64, k: u32) -> f64 {
    (1.0 - p).powi(k as i32 - 1) * p
}

/// `observed` against `expected ± SIGMA_BAND * sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub observed: f64,
    pub expected: f64,
    pub sigma: f64,
    pub passed: bool,
}

impl BandCheck {
    pub fn new(observed: f64, expected: f64, sigma: f64) -> Self {
        Self {
            observed,
            expected,
            sigma,
            passed: (observed - expected).abs() <= SIGMA_BAND * sigma,
        }
    }

    pub fn half_width(&self) -> f64 {
        SIGMA_BAND * self.sigma
    }
}

/// Pearson goodness-of-fit of several count vectors against one known
/// distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    /// Critical value at the [`three_sigma_tail`] significance level.
    pub critical_value: f64,
    pub p_value: f64,
    pub rejected: bool,
}

/// Pools the per-row statistics `Σ (O - E)^2 / E`; each row of `k` cells
/// contributes `k - 1` degrees of freedom because the expected probabilities
/// are fixed a priori.
pub fn chi_square_goodness_of_fit(rows: &[Vec<u64>], probabilities: &[f64]) -> ChiSquareTest {
    let mut statistic = 0.0;
    let mut dof = 0u64;
    for row in rows {
        let total: u64 = row.iter().sum();
        for (&observed, &p) in row.iter().zip(probabilities) {
            let expected = p * total as f64;
            statistic += (observed as f64 - expected).powi(2) / expected;
        }
        dof += row.len() as u64 - 1;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    let critical_value = dist.inverse_cdf(1.0 - three_sigma_tail());
    ChiSquareTest {
        statistic,
        degrees_of_freedom: dof,
        critical_value,
        p_value: dist.sf(statistic),
        rejected: statistic > critical_value,
    }
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    LinearFit {
        slope,
        intercept,
        r_squared: 1.0 - ss_res / ss_tot,
    }
}
