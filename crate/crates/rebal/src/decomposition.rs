//! Splits the realized geometric return of a rebalanced portfolio into a
//! strategic part and a diversification part.
//!
//! The strategic return is the weighted average of the assets' geometric
//! means — what a zero-volatility portfolio with the same weights would have
//! earned. The diversification return is everything on top of that:
//! `portfolio geometric mean - strategic return`, earned mechanically by
//! rebalancing (selling relative winners, buying relative losers).
//!
//! The exact value is always computed from a full simulation. Three
//! approximation formulas — covariance form, variance-reduction form, and
//! correlation form — are algebraic rearrangements of one another and are
//! each evaluated by their own code path so the report can cross-check them.
//! A fourth shortcut that uses only the average variance and average
//! pairwise correlation is also reported, permanently flagged as untrusted:
//! it predicts zero for perfectly correlated assets of unequal volatility,
//! where the true diversification return stays positive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, EngineError, PolicyMode, PortfolioPolicy, ReturnMatrix};
use crate::stats::{self, SeriesStats, StatsError};

/// Printed next to the averaged-input shortcut in human-readable reports.
pub const AVERAGED_SHORTCUT_CAVEAT: &str = "estimate from average variance and average \
pairwise correlation only; it predicts zero for perfectly correlated assets of unequal \
volatility, where the exact diversification return stays positive - do not trust it";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompositionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("input length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("correlation matrix is {rows}x{columns}, expected {expected}x{expected}")]
    NotSquare {
        rows: usize,
        columns: usize,
        expected: usize,
    },
    #[error("correlation matrix is not symmetric at ({row}, {column})")]
    NotSymmetric { row: usize, column: usize },
    #[error("correlation matrix diagonal entry {row} is {value}, expected 1")]
    NotUnitDiagonal { row: usize, value: f64 },
    #[error("correlation {value} at ({row}, {column}) is outside [-1, 1]")]
    CorrelationOutOfRange {
        row: usize,
        column: usize,
        value: f64,
    },
    #[error("averaged-input shortcut needs at least 2 assets, got {got}")]
    TooFewAssets { got: usize },
    #[error(
        "diversification return decomposes {mode} portfolios only; growth of a held portfolio \
         is a weighted-average effect - use buy_and_hold_geometric instead"
    )]
    RebalancedOnly { mode: PolicyMode },
}

pub type Result<T> = std::result::Result<T, DecompositionError>;

/// Per-asset row of a [`DecompositionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetDecomposition {
    pub label: String,
    pub weight: f64,
    #[serde(flatten)]
    pub stats: SeriesStats,
    /// Population covariance of the asset's returns with the simulated
    /// portfolio returns.
    pub covariance_with_portfolio: f64,
}

/// Averaged-input shortcut value, permanently flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErbHarveyEstimate {
    pub value: f64,
    /// Always `true`: see [`AVERAGED_SHORTCUT_CAVEAT`].
    pub untrusted: bool,
}

/// Side-by-side decomposition of one rebalanced portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub per_asset_stats: Vec<AssetDecomposition>,
    pub portfolio_stats: SeriesStats,
    /// Weighted average of asset geometric means.
    pub strategic_return: f64,
    /// Portfolio geometric mean minus strategic return (definition, not an
    /// approximation).
    pub diversification_return_exact: f64,
    /// Half the weighted excess of asset variance over covariance with the
    /// portfolio.
    pub dr_covariance_approx: f64,
    /// Half the drop from weighted-average variance to portfolio variance.
    pub dr_variance_reduction_approx: f64,
    /// Same quantity assembled from volatilities and pairwise correlations.
    pub dr_correlation_approx: f64,
    pub dr_erb_harvey: ErbHarveyEstimate,
    pub policy_echo: PortfolioPolicy,
}

fn same_length(left: usize, right: usize) -> Result<()> {
    if left != right {
        Err(DecompositionError::LengthMismatch { left, right })
    } else {
        Ok(())
    }
}

/// Weighted average of asset geometric means: the growth a zero-volatility
/// portfolio with these weights would deliver.
pub fn strategic_return(weights: &[f64], asset_geometric_means: &[f64]) -> Result<f64> {
    same_length(weights.len(), asset_geometric_means.len())?;
    engine::validate_weights(weights)?;
    Ok(weights
        .iter()
        .zip(asset_geometric_means)
        .map(|(w, g)| w * g)
        .sum())
}

/// Simulates the rebalanced portfolio and subtracts the strategic return
/// from its realized geometric mean.
pub fn diversification_return_exact(matrix: &ReturnMatrix, weights: &[f64]) -> Result<f64> {
    let result = engine::simulate(matrix, &PortfolioPolicy::rebalanced(weights.to_vec()))?;
    let portfolio_g = stats::geometric_mean(&result.portfolio_returns)?;
    let means: Vec<f64> = (0..matrix.n_assets())
        .map(|i| stats::geometric_mean(&matrix.column(i)))
        .collect::<stats::Result<_>>()?;
    Ok(portfolio_g - strategic_return(weights, &means)?)
}

/// Covariance form: `1/2 sum_i w_i (var_i - cov_ip)`.
pub fn dr_covariance_approx(
    weights: &[f64],
    variances: &[f64],
    covariances_with_portfolio: &[f64],
) -> Result<f64> {
    same_length(weights.len(), variances.len())?;
    same_length(weights.len(), covariances_with_portfolio.len())?;
    Ok(0.5
        * weights
            .iter()
            .zip(variances)
            .zip(covariances_with_portfolio)
            .map(|((w, var), cov)| w * (var - cov))
            .sum::<f64>())
}

/// Variance-reduction form: `1/2 (sum_i w_i var_i - portfolio_variance)`.
pub fn dr_variance_reduction_approx(
    weights: &[f64],
    variances: &[f64],
    portfolio_variance: f64,
) -> Result<f64> {
    same_length(weights.len(), variances.len())?;
    let weighted: f64 = weights.iter().zip(variances).map(|(w, v)| w * v).sum();
    Ok(0.5 * (weighted - portfolio_variance))
}

/// Correlation form:
/// `1/2 (sum_i w_i sd_i^2 - sum_i sum_j w_i w_j rho_ij sd_i sd_j)`.
pub fn dr_correlation_approx(
    weights: &[f64],
    std_devs: &[f64],
    correlation_matrix: &[Vec<f64>],
) -> Result<f64> {
    let n = weights.len();
    same_length(n, std_devs.len())?;
    check_correlation_matrix(correlation_matrix, n)?;
    let weighted_variance: f64 = weights.iter().zip(std_devs).map(|(w, s)| w * s * s).sum();
    let mut portfolio_variance = 0.0;
    for i in 0..n {
        for j in 0..n {
            portfolio_variance +=
                weights[i] * weights[j] * correlation_matrix[i][j] * std_devs[i] * std_devs[j];
        }
    }
    Ok(0.5 * (weighted_variance - portfolio_variance))
}

fn check_correlation_matrix(matrix: &[Vec<f64>], expected: usize) -> Result<()> {
    if matrix.len() != expected {
        return Err(DecompositionError::NotSquare {
            rows: matrix.len(),
            columns: matrix.first().map_or(0, Vec::len),
            expected,
        });
    }
    for (row, values) in matrix.iter().enumerate() {
        if values.len() != expected {
            return Err(DecompositionError::NotSquare {
                rows: matrix.len(),
                columns: values.len(),
                expected,
            });
        }
        for (column, &value) in values.iter().enumerate() {
            if value.abs() > 1.0 + 1e-12 || value.is_nan() {
                return Err(DecompositionError::CorrelationOutOfRange { row, column, value });
            }
            if (value - matrix[column][row]).abs() > 1e-12 {
                return Err(DecompositionError::NotSymmetric { row, column });
            }
        }
        if (values[row] - 1.0).abs() > 1e-12 {
            return Err(DecompositionError::NotUnitDiagonal {
                row,
                value: values[row],
            });
        }
    }
    Ok(())
}

/// Averaged-input shortcut: `1/2 (1 - 1/N) avg_variance (1 - avg_corr)`.
///
/// Always returned with the untrusted flag set; see
/// [`AVERAGED_SHORTCUT_CAVEAT`].
pub fn dr_erb_harvey(
    n: usize,
    avg_variance: f64,
    avg_pairwise_correlation: f64,
) -> Result<ErbHarveyEstimate> {
    if n < 2 {
        return Err(DecompositionError::TooFewAssets { got: n });
    }
    let value =
        0.5 * (1.0 - 1.0 / n as f64) * avg_variance * (1.0 - avg_pairwise_correlation);
    Ok(ErbHarveyEstimate {
        value,
        untrusted: true,
    })
}

/// Full report for a rebalanced portfolio over observed returns.
///
/// All statistics are population moments of realized simple returns over the
/// simulated horizon. The three equivalent approximations are evaluated by
/// their own formula paths; they agree to rounding error by construction.
pub fn decompose(matrix: &ReturnMatrix, weights: &[f64]) -> Result<DecompositionReport> {
    let policy = PortfolioPolicy::rebalanced(weights.to_vec());
    let simulated = engine::simulate(matrix, &policy)?;
    let n = matrix.n_assets();

    let columns: Vec<Vec<f64>> = (0..n).map(|i| matrix.column(i)).collect();
    let portfolio_stats = SeriesStats::from_returns(&simulated.portfolio_returns)?;
    let mut per_asset_stats = Vec::with_capacity(n);
    for i in 0..n {
        per_asset_stats.push(AssetDecomposition {
            label: matrix.asset_labels()[i].clone(),
            weight: weights[i],
            stats: SeriesStats::from_returns(&columns[i])?,
            covariance_with_portfolio: stats::covariance(
                &columns[i],
                &simulated.portfolio_returns,
            )?,
        });
    }

    let geometric_means: Vec<f64> =
        per_asset_stats.iter().map(|a| a.stats.geometric_mean).collect();
    let variances: Vec<f64> = per_asset_stats.iter().map(|a| a.stats.variance).collect();
    let std_devs: Vec<f64> = per_asset_stats.iter().map(|a| a.stats.std_dev).collect();
    let covariances: Vec<f64> = per_asset_stats
        .iter()
        .map(|a| a.covariance_with_portfolio)
        .collect();

    let strategic = strategic_return(weights, &geometric_means)?;
    let exact = portfolio_stats.geometric_mean - strategic;
    let covariance_form = dr_covariance_approx(weights, &variances, &covariances)?;
    let variance_reduction_form =
        dr_variance_reduction_approx(weights, &variances, portfolio_stats.variance)?;
    let correlation_form = dr_correlation_approx(
        weights,
        &std_devs,
        &correlation_matrix(&columns, &std_devs)?,
    )?;
    debug_assert!(
        (covariance_form - variance_reduction_form).abs() <= 1e-9
            && (covariance_form - correlation_form).abs() <= 1e-9,
        "equivalent approximation paths diverged: {covariance_form} vs \
         {variance_reduction_form} vs {correlation_form}"
    );

    let erb_harvey = if n >= 2 {
        let avg_variance = variances.iter().sum::<f64>() / n as f64;
        dr_erb_harvey(n, avg_variance, average_pairwise_correlation(&columns)?)?
    } else {
        // A one-asset portfolio has no pairs to average over; every
        // diversification measure is zero.
        ErbHarveyEstimate {
            value: 0.0,
            untrusted: true,
        }
    };

    Ok(DecompositionReport {
        per_asset_stats,
        portfolio_stats,
        strategic_return: strategic,
        diversification_return_exact: exact,
        dr_covariance_approx: covariance_form,
        dr_variance_reduction_approx: variance_reduction_form,
        dr_correlation_approx: correlation_form,
        dr_erb_harvey: erb_harvey,
        policy_echo: policy,
    })
}

/// [`decompose`] for callers holding a policy: only the rebalanced mode has
/// a defined diversification return.
pub fn decompose_policy(
    matrix: &ReturnMatrix,
    policy: &PortfolioPolicy,
) -> Result<DecompositionReport> {
    match policy.mode {
        PolicyMode::Rebalanced => {
            let weights = policy
                .target_weights
                .as_deref()
                .ok_or(EngineError::MissingWeights { mode: policy.mode })?;
            decompose(matrix, weights)
        }
        mode => Err(DecompositionError::RebalancedOnly { mode }),
    }
}

/// Pairwise correlation grid of the asset columns. Pairs involving a
/// zero-variance asset get correlation 0 (their covariance terms vanish
/// anyway); values are clamped to [-1, 1] against rounding spill.
fn correlation_matrix(columns: &[Vec<f64>], std_devs: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = columns.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        matrix[i][i] = 1.0;
        for j in 0..i {
            let rho = if std_devs[i] == 0.0 || std_devs[j] == 0.0 {
                0.0
            } else {
                let cov = stats::covariance(&columns[i], &columns[j])?;
                (cov / (std_devs[i] * std_devs[j])).clamp(-1.0, 1.0)
            };
            matrix[i][j] = rho;
            matrix[j][i] = rho;
        }
    }
    Ok(matrix)
}

/// Mean correlation over unordered asset pairs; zero-variance pairs count
/// as 0.
fn average_pairwise_correlation(columns: &[Vec<f64>]) -> Result<f64> {
    let n = columns.len();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in 0..i {
            total += match stats::correlation(&columns[i], &columns[j]) {
                Ok(rho) => rho.clamp(-1.0, 1.0),
                Err(StatsError::UndefinedCorrelation) => 0.0,
                Err(error) => return Err(error.into()),
            };
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}
