//! Scalar statistics on simple-return series.
//!
//! All functions take returns as decimal fractions (`0.25` = +25%) and use
//! population moments (divide by `T`, not `T - 1`); realized-return tables
//! in this crate are decompositions of a fixed observed window, not
//! estimates for a larger population, so the population convention is
//! hard-coded.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty return series")]
    EmptySeries,
    #[error("total loss: return {value} at index {index} must be > -1")]
    TotalLoss { index: usize, value: f64 },
    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("undefined correlation: an input series has zero variance")]
    UndefinedCorrelation,
    #[error("arithmetic mean {value} must be > -1")]
    MeanBelowTotalLoss { value: f64 },
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Summary statistics of one return series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub periods: usize,
    pub arithmetic_mean: f64,
    pub geometric_mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    /// Final wealth per unit invested: `(1 + geometric_mean)^periods`.
    pub wealth_ratio: f64,
}

impl SeriesStats {
    pub fn from_returns(returns: &[f64]) -> Result<Self> {
        Ok(SeriesStats {
            periods: returns.len(),
            arithmetic_mean: arithmetic_mean(returns)?,
            geometric_mean: geometric_mean(returns)?,
            variance: variance(returns)?,
            std_dev: std_dev(returns)?,
            wealth_ratio: wealth_ratio(returns)?,
        })
    }
}

fn non_empty(returns: &[f64]) -> Result<()> {
    if returns.is_empty() {
        Err(StatsError::EmptySeries)
    } else {
        Ok(())
    }
}

fn same_length(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        })
    } else {
        Ok(())
    }
}

/// Mean of the simple returns.
pub fn arithmetic_mean(returns: &[f64]) -> Result<f64> {
    non_empty(returns)?;
    Ok(returns.iter().sum::<f64>() / returns.len() as f64)
}

/// Product of gross returns: `prod(1 + r_t)`.
pub fn wealth_ratio(returns: &[f64]) -> Result<f64> {
    non_empty(returns)?;
    for (index, &value) in returns.iter().enumerate() {
        if value <= -1.0 {
            return Err(StatsError::TotalLoss { index, value });
        }
    }
    Ok(returns.iter().map(|r| 1.0 + r).product())
}

/// Constant per-period rate with the same final wealth:
/// `(prod(1 + r_t))^(1/T) - 1`.
pub fn geometric_mean(returns: &[f64]) -> Result<f64> {
    let ratio = wealth_ratio(returns)?;
    Ok(ratio.powf(1.0 / returns.len() as f64) - 1.0)
}

/// Population variance (divide by `T`).
pub fn variance(returns: &[f64]) -> Result<f64> {
    let mean = arithmetic_mean(returns)?;
    let sum_sq = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>();
    Ok(sum_sq / returns.len() as f64)
}

/// Population standard deviation.
pub fn std_dev(returns: &[f64]) -> Result<f64> {
    Ok(variance(returns)?.sqrt())
}

/// Population covariance (divide by `T`). `covariance(a, a) == variance(a)`.
pub fn covariance(a: &[f64], b: &[f64]) -> Result<f64> {
    non_empty(a)?;
    same_length(a, b)?;
    let mean_a = arithmetic_mean(a)?;
    let mean_b = arithmetic_mean(b)?;
    let sum = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - mean_a) * (y - mean_b))
        .sum::<f64>();
    Ok(sum / a.len() as f64)
}

/// Pearson correlation; errors when either series has zero variance.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    let cov = covariance(a, b)?;
    let sd_a = std_dev(a)?;
    let sd_b = std_dev(b)?;
    if sd_a == 0.0 || sd_b == 0.0 {
        return Err(StatsError::UndefinedCorrelation);
    }
    Ok(cov / (sd_a * sd_b))
}

/// Variance-drag approximation of the geometric mean: `r_bar - variance/2`.
///
/// Good to second order in the size of the returns; the error shrinks
/// cubically as returns scale toward zero.
pub fn approx_geometric_from_arithmetic(arithmetic_mean: f64, variance: f64) -> f64 {
    arithmetic_mean - variance / 2.0
}

/// Two-term expansion of the compound (log) return:
/// `C = ln(1 + r_bar) - variance / (2 (1 + r_bar)^2)`.
///
/// `exp(C) - 1` agrees with [`approx_geometric_from_arithmetic`] to leading
/// order; higher-order terms of the underlying series expansion are
/// deliberately not exposed.
pub fn compound_return_expansion(arithmetic_mean: f64, variance: f64) -> Result<f64> {
    if arithmetic_mean <= -1.0 {
        return Err(StatsError::MeanBelowTotalLoss {
            value: arithmetic_mean,
        });
    }
    let gross = 1.0 + arithmetic_mean;
    Ok(gross.ln() - variance / (2.0 * gross * gross))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fifty_fifty, PCT2, STOCK, TREASURY};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn arithmetic_mean_examples() {
        assert_eq!(arithmetic_mean(&[0.50, -0.50]).unwrap(), 0.0);
        assert_eq!(arithmetic_mean(&[0.10]).unwrap(), 0.10);
        assert_abs_diff_eq!(arithmetic_mean(&STOCK).unwrap(), 0.0121, epsilon = PCT2);
        assert_abs_diff_eq!(arithmetic_mean(&TREASURY).unwrap(), 0.0807, epsilon = PCT2);
    }

    #[test]
    fn arithmetic_mean_rejects_empty() {
        assert_eq!(arithmetic_mean(&[]), Err(StatsError::EmptySeries));
    }

    #[test]
    fn geometric_mean_examples() {
        // Wealth ratio 1.5 * 0.5 = 0.75, a 25% loss over two periods.
        let g = geometric_mean(&[0.50, -0.50]).unwrap();
        assert_relative_eq!(g, 0.75f64.sqrt() - 1.0, max_relative = 1e-15);
        assert_abs_diff_eq!(g, -0.1340, epsilon = PCT2);

        // 1.25 * 0.80 = 1: two-period round trip.
        assert_abs_diff_eq!(geometric_mean(&[0.25, -0.20]).unwrap(), 0.0, epsilon = 1e-15);

        assert_abs_diff_eq!(geometric_mean(&STOCK).unwrap(), -0.0095, epsilon = PCT2);
        assert_abs_diff_eq!(geometric_mean(&TREASURY).unwrap(), 0.0759, epsilon = PCT2);
    }

    #[test]
    fn geometric_mean_rejects_total_loss() {
        assert_eq!(
            geometric_mean(&[0.10, -1.0]),
            Err(StatsError::TotalLoss {
                index: 1,
                value: -1.0
            })
        );
        assert_eq!(geometric_mean(&[]), Err(StatsError::EmptySeries));
    }

    #[test]
    fn variance_examples() {
        assert_abs_diff_eq!(std_dev(&STOCK).unwrap(), 0.2003, epsilon = PCT2);
        // A constant series has zero variance up to the rounding of its mean.
        assert_abs_diff_eq!(variance(&[0.05, 0.05, 0.05]).unwrap(), 0.0, epsilon = 1e-30);
        // mean 0.025, deviations +/-0.225
        assert_relative_eq!(
            variance(&[0.25, -0.20]).unwrap(),
            0.050625,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            std_dev(&[0.25, -0.20]).unwrap(),
            0.225,
            max_relative = 1e-14
        );
    }

    #[test]
    fn covariance_examples() {
        let portfolio = fifty_fifty();
        assert_abs_diff_eq!(
            covariance(&STOCK, &portfolio).unwrap(),
            117.33e-4,
            epsilon = PCT2
        );
        assert_abs_diff_eq!(
            covariance(&TREASURY, &portfolio).unwrap(),
            -32.69e-4,
            epsilon = PCT2
        );
        assert_eq!(
            covariance(&STOCK, &STOCK).unwrap(),
            variance(&STOCK).unwrap()
        );
        assert_eq!(
            covariance(&[0.1], &[0.1, 0.2]),
            Err(StatsError::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn correlation_examples() {
        assert_relative_eq!(
            correlation(&[0.25, -0.10], &[0.50, -0.20]).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            correlation(&STOCK, &STOCK).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            correlation(&[0.25, -0.20], &[-0.20, 0.25]).unwrap(),
            -1.0,
            max_relative = 1e-12
        );
        assert_eq!(
            correlation(&[0.1, 0.1], &[0.2, 0.3]),
            Err(StatsError::UndefinedCorrelation)
        );
    }

    #[test]
    fn approx_geometric_examples() {
        assert_abs_diff_eq!(
            approx_geometric_from_arithmetic(0.0121, 0.2003f64.powi(2)),
            -0.0080,
            epsilon = PCT2
        );
        assert_eq!(approx_geometric_from_arithmetic(0.0464, 0.0), 0.0464);
        assert_abs_diff_eq!(
            approx_geometric_from_arithmetic(0.0464, 0.0651f64.powi(2)),
            0.0443,
            epsilon = PCT2
        );
    }

    #[test]
    fn compound_return_examples() {
        assert_eq!(
            compound_return_expansion(0.07, 0.0).unwrap(),
            1.07f64.ln()
        );
        assert_abs_diff_eq!(
            compound_return_expansion(0.0121, 0.2003f64.powi(2)).unwrap(),
            -0.00756,
            epsilon = 5e-6
        );
        assert_relative_eq!(
            compound_return_expansion(0.0, 0.09).unwrap(),
            -0.045,
            max_relative = 1e-15
        );
        assert_eq!(
            compound_return_expansion(-1.0, 0.1),
            Err(StatsError::MeanBelowTotalLoss { value: -1.0 })
        );
    }

    #[test]
    fn series_stats_bundle() {
        let stats = SeriesStats::from_returns(&STOCK).unwrap();
        assert_eq!(stats.periods, 10);
        assert_relative_eq!(
            stats.wealth_ratio,
            (1.0 + stats.geometric_mean).powi(10),
            max_relative = 1e-12
        );
        assert!(stats.geometric_mean < stats.arithmetic_mean);
    }

    /// Error of the variance-drag approximation shrinks at least cubically
    /// when returns are scaled toward zero.
    #[test]
    fn approximation_error_decays_cubically() {
        let mut previous: Option<f64> = None;
        for k in 0..4 {
            let lambda = 0.5f64.powi(k);
            let scaled: Vec<f64> = STOCK.iter().map(|r| lambda * r).collect();
            let exact = geometric_mean(&scaled).unwrap();
            let approx = approx_geometric_from_arithmetic(
                arithmetic_mean(&scaled).unwrap(),
                variance(&scaled).unwrap(),
            );
            let err = (exact - approx).abs();
            if let Some(prev) = previous {
                assert!(
                    err * 8.0 <= prev,
                    "error must shrink at least 8x per halving: {prev:.3e} -> {err:.3e}"
                );
            }
            previous = Some(err);
        }
    }

    /// `exp(C) - 1` from the compound expansion tracks the variance-drag
    /// approximation with an error that also decays at least cubically.
    #[test]
    fn compound_expansion_agrees_to_leading_order() {
        let mut previous: Option<f64> = None;
        for k in 0..4 {
            let lambda = 0.5f64.powi(k);
            let scaled: Vec<f64> = STOCK.iter().map(|r| lambda * r).collect();
            let mean = arithmetic_mean(&scaled).unwrap();
            let var = variance(&scaled).unwrap();
            let via_log = compound_return_expansion(mean, var).unwrap().exp() - 1.0;
            let direct = approx_geometric_from_arithmetic(mean, var);
            let err = (via_log - direct).abs();
            if let Some(prev) = previous {
                assert!(
                    err * 8.0 <= prev,
                    "error must shrink at least 8x per halving: {prev:.3e} -> {err:.3e}"
                );
            }
            previous = Some(err);
        }
    }

    fn return_series() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-0.90..1.5f64, 1..40)
    }

    proptest! {
        #[test]
        fn am_gm_inequality(series in return_series()) {
            let am = arithmetic_mean(&series).unwrap();
            let gm = geometric_mean(&series).unwrap();
            prop_assert!(gm <= am + 1e-12);
            let spread = variance(&series).unwrap();
            if spread > 1e-9 {
                prop_assert!(gm < am);
            }
        }

        #[test]
        fn wealth_consistency(series in return_series()) {
            let gm = geometric_mean(&series).unwrap();
            let ratio = wealth_ratio(&series).unwrap();
            let rebuilt = (1.0 + gm).powi(series.len() as i32);
            prop_assert!((rebuilt - ratio).abs() <= 1e-12 * ratio.abs().max(1.0));
        }

        #[test]
        fn covariance_is_bilinear(
            a in proptest::collection::vec(-0.9..1.5f64, 2..20),
            seed_b in proptest::collection::vec(-0.9..1.5f64, 2..20),
            seed_c in proptest::collection::vec(-0.9..1.5f64, 2..20),
            alpha in -2.0..2.0f64,
            beta in -2.0..2.0f64,
        ) {
            let n = a.len().min(seed_b.len()).min(seed_c.len());
            let (a, b, c) = (&a[..n], &seed_b[..n], &seed_c[..n]);
            let combined: Vec<f64> = a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect();
            let lhs = covariance(&combined, c).unwrap();
            let rhs = alpha * covariance(a, c).unwrap() + beta * covariance(b, c).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn correlation_is_bounded(
            a in proptest::collection::vec(-0.9..1.5f64, 2..20),
            b in proptest::collection::vec(-0.9..1.5f64, 2..20),
        ) {
            let n = a.len().min(b.len());
            if let Ok(rho) = correlation(&a[..n], &b[..n]) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho));
            }
        }
    }
}
