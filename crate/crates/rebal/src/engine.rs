//! Wealth and weight-trajectory simulation.
//!
//! A [`ReturnMatrix`] holds per-period simple returns for N assets, with an
//! optional availability schedule marking the first period each asset can be
//! held (for portfolios that grow by adding assets over time). A
//! [`PortfolioPolicy`] selects one of four trading rules:
//!
//! * [`PolicyMode::Rebalanced`] — weights reset to fixed targets at the end
//!   of every holding period.
//! * [`PolicyMode::BuyAndHold`] — initial dollars are never traded; weights
//!   drift with performance.
//! * [`PolicyMode::IndexRebalanced`] — equal weights `1/N_t` over the assets
//!   available in period `t`, reset every period (including the periods in
//!   which new assets join).
//! * [`PolicyMode::IndexBuyIn`] — holdings drift as buy-and-hold; when `k`
//!   assets join an index of (then) `N` assets, a fraction `k/N` of portfolio
//!   value is raised pro-rata from existing holdings and split equally among
//!   the newcomers, leaving the relative weights of the incumbents unchanged.
//!
//! Trading is frictionless and instantaneous at period boundaries; periods
//! are abstract holding periods (the engine never assumes a calendar).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("return matrix must have at least one period and one asset")]
    EmptyMatrix,
    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("label count {labels} does not match asset count {assets}")]
    LabelCountMismatch { labels: usize, assets: usize },
    #[error("total loss: return {value} for asset {asset} in period {period} must be > -1")]
    TotalLoss {
        period: usize,
        asset: usize,
        value: f64,
    },
    #[error("availability schedule has {got} entries, expected {expected}")]
    AvailabilityLength { expected: usize, got: usize },
    #[error("asset {asset} first becomes available in period {index}, beyond the {periods}-period horizon")]
    AvailabilityOutOfRange {
        asset: usize,
        index: usize,
        periods: usize,
    },
    #[error("{mode} requires target weights")]
    MissingWeights { mode: PolicyMode },
    #[error("{mode} derives weights from availability; target weights must not be set")]
    UnexpectedWeights { mode: PolicyMode },
    #[error("policy has {got} weights for {expected} assets")]
    WeightCountMismatch { expected: usize, got: usize },
    #[error("weight {value} at index {index} must be >= 0")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightsDoNotSumToOne { sum: f64 },
    #[error("{mode} requires an availability schedule on the return matrix")]
    MissingAvailability { mode: PolicyMode },
    #[error("{mode} requires every asset to be available from period 0")]
    DelayedAvailabilityUnsupported { mode: PolicyMode },
    #[error("no asset is available in period 0")]
    NoInitialAssets,
    #[error("period count must be >= 1")]
    ZeroPeriods,
    #[error("geometric mean {value} at index {index} must be > -1")]
    GeometricMeanOutOfRange { index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, EngineError>;

/// T x N grid of simple returns with asset labels and an optional per-asset
/// first-available period.
///
/// Entries of an asset before its availability period are ignored (treated
/// as non-existent, not as zero) and are exempt from validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMatrix {
    asset_labels: Vec<String>,
    periods: usize,
    /// Row-major: `values[period * n_assets + asset]`.
    values: Vec<f64>,
    availability: Option<Vec<usize>>,
}

impl ReturnMatrix {
    /// Builds a matrix from per-period rows; every asset available from
    /// period 0.
    pub fn from_rows(asset_labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(asset_labels, rows, None)
    }

    /// Builds a matrix from per-asset columns; every asset available from
    /// period 0.
    pub fn from_columns(asset_labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() || columns[0].is_empty() {
            return Err(EngineError::EmptyMatrix);
        }
        let periods = columns[0].len();
        for (asset, column) in columns.iter().enumerate() {
            if column.len() != periods {
                return Err(EngineError::RaggedRow {
                    row: asset,
                    expected: periods,
                    got: column.len(),
                });
            }
        }
        let rows = (0..periods)
            .map(|t| columns.iter().map(|c| c[t]).collect())
            .collect();
        Self::build(asset_labels, rows, None)
    }

    /// Builds a matrix with an availability schedule: `availability[i]` is
    /// the first period in which asset `i` can be held.
    pub fn with_availability(
        asset_labels: Vec<String>,
        rows: Vec<Vec<f64>>,
        availability: Vec<usize>,
    ) -> Result<Self> {
        Self::build(asset_labels, rows, Some(availability))
    }

    fn build(
        asset_labels: Vec<String>,
        rows: Vec<Vec<f64>>,
        availability: Option<Vec<usize>>,
    ) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(EngineError::EmptyMatrix);
        }
        let n_assets = rows[0].len();
        let periods = rows.len();
        if asset_labels.len() != n_assets {
            return Err(EngineError::LabelCountMismatch {
                labels: asset_labels.len(),
                assets: n_assets,
            });
        }
        if let Some(schedule) = &availability {
            if schedule.len() != n_assets {
                return Err(EngineError::AvailabilityLength {
                    expected: n_assets,
                    got: schedule.len(),
                });
            }
            for (asset, &index) in schedule.iter().enumerate() {
                if index >= periods {
                    return Err(EngineError::AvailabilityOutOfRange {
                        asset,
                        index,
                        periods,
                    });
                }
            }
        }
        let mut values = Vec::with_capacity(periods * n_assets);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n_assets {
                return Err(EngineError::RaggedRow {
                    row: t,
                    expected: n_assets,
                    got: row.len(),
                });
            }
            for (asset, &value) in row.iter().enumerate() {
                let first = availability.as_ref().map_or(0, |a| a[asset]);
                if t >= first && value <= -1.0 {
                    return Err(EngineError::TotalLoss {
                        period: t,
                        asset,
                        value,
                    });
                }
                values.push(value);
            }
        }
        Ok(ReturnMatrix {
            asset_labels,
            periods,
            values,
            availability,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.asset_labels.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods
    }

    pub fn asset_labels(&self) -> &[String] {
        &self.asset_labels
    }

    pub fn availability(&self) -> Option<&[usize]> {
        self.availability.as_deref()
    }

    /// First period in which the asset can be held (0 when no schedule).
    pub fn first_period(&self, asset: usize) -> usize {
        self.availability.as_ref().map_or(0, |a| a[asset])
    }

    pub fn is_live(&self, asset: usize, period: usize) -> bool {
        period >= self.first_period(asset)
    }

    /// Returns of all assets in one period.
    pub fn row(&self, period: usize) -> &[f64] {
        let n = self.n_assets();
        &self.values[period * n..(period + 1) * n]
    }

    /// Full return series of one asset.
    pub fn column(&self, asset: usize) -> Vec<f64> {
        (0..self.periods)
            .map(|t| self.values[t * self.n_assets() + asset])
            .collect()
    }

    /// Return series of one asset from its first available period onward.
    pub fn live_column(&self, asset: usize) -> Vec<f64> {
        (self.first_period(asset)..self.periods)
            .map(|t| self.values[t * self.n_assets() + asset])
            .collect()
    }

    /// True when every asset is available from period 0.
    pub fn fully_available(&self) -> bool {
        self.availability
            .as_ref()
            .is_none_or(|a| a.iter().all(|&index| index == 0))
    }

    fn live_count(&self, period: usize) -> usize {
        (0..self.n_assets())
            .filter(|&i| self.is_live(i, period))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PolicyMode {
    Rebalanced,
    BuyAndHold,
    IndexRebalanced,
    IndexBuyIn,
}

impl std::fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PolicyMode::Rebalanced => "REBALANCED",
            PolicyMode::BuyAndHold => "BUY_AND_HOLD",
            PolicyMode::IndexRebalanced => "INDEX_REBALANCED",
            PolicyMode::IndexBuyIn => "INDEX_BUY_IN",
        };
        f.write_str(name)
    }
}

/// Trading rule plus target weights where the rule needs them. Index modes
/// derive equal weights from the availability schedule and take no targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioPolicy {
    pub mode: PolicyMode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_weights: Option<Vec<f64>>,
}

impl PortfolioPolicy {
    pub fn rebalanced(target_weights: Vec<f64>) -> Self {
        PortfolioPolicy {
            mode: PolicyMode::Rebalanced,
            target_weights: Some(target_weights),
        }
    }

    pub fn buy_and_hold(target_weights: Vec<f64>) -> Self {
        PortfolioPolicy {
            mode: PolicyMode::BuyAndHold,
            target_weights: Some(target_weights),
        }
    }

    pub fn index_rebalanced() -> Self {
        PortfolioPolicy {
            mode: PolicyMode::IndexRebalanced,
            target_weights: None,
        }
    }

    pub fn index_buy_in() -> Self {
        PortfolioPolicy {
            mode: PolicyMode::IndexBuyIn,
            target_weights: None,
        }
    }
}

/// Checks weights are non-negative and sum to 1 within
/// [`WEIGHT_SUM_TOLERANCE`].
pub fn validate_weights(weights: &[f64]) -> Result<()> {
    for (index, &value) in weights.iter().enumerate() {
        if value.is_nan() || value < 0.0 {
            return Err(EngineError::NegativeWeight { index, value });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(EngineError::WeightsDoNotSumToOne { sum });
    }
    Ok(())
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    /// Portfolio simple return per period (length T).
    pub portfolio_returns: Vec<f64>,
    /// Wealth per unit invested, before each period and after the last
    /// (length T+1, starts at 1.0).
    pub wealth_path: Vec<f64>,
    /// Start-of-period weights, plus the post-trade weights after the final
    /// period ((T+1) x N). Assets not yet available carry weight 0.
    pub weight_path: Vec<Vec<f64>>,
    /// Sum of absolute weight changes traded at each period end (length T).
    pub turnover: Vec<f64>,
}

/// Runs the policy over the matrix.
pub fn simulate(matrix: &ReturnMatrix, policy: &PortfolioPolicy) -> Result<SimulationResult> {
    match policy.mode {
        PolicyMode::Rebalanced => {
            let weights = fixed_weights(matrix, policy)?;
            Ok(simulate_rebalanced(matrix, weights))
        }
        PolicyMode::BuyAndHold => {
            let weights = fixed_weights(matrix, policy)?;
            Ok(simulate_buy_and_hold(matrix, weights))
        }
        PolicyMode::IndexRebalanced => {
            check_index_policy(matrix, policy)?;
            Ok(simulate_index_rebalanced(matrix))
        }
        PolicyMode::IndexBuyIn => {
            check_index_policy(matrix, policy)?;
            Ok(simulate_index_buy_in(matrix))
        }
    }
}

/// The weight grid of [`simulate`], for callers that only need trajectories.
pub fn weight_trajectory(matrix: &ReturnMatrix, policy: &PortfolioPolicy) -> Result<Vec<Vec<f64>>> {
    Ok(simulate(matrix, policy)?.weight_path)
}

/// Closed-form buy-and-hold geometric mean from per-asset geometric means:
/// `(sum_i f_i (1 + g_i)^T)^(1/T) - 1`.
///
/// Matches the step-by-step simulation whenever each asset's return is
/// constant per period; for volatile assets it is exact in the per-asset
/// geometric means but not in the path.
pub fn buy_and_hold_geometric(
    initial_weights: &[f64],
    asset_geometric_means: &[f64],
    periods: u32,
) -> Result<f64> {
    check_means(initial_weights, asset_geometric_means)?;
    if periods == 0 {
        return Err(EngineError::ZeroPeriods);
    }
    let wealth: f64 = initial_weights
        .iter()
        .zip(asset_geometric_means)
        .map(|(f, g)| f * (1.0 + g).powi(periods as i32))
        .sum();
    Ok(wealth.powf(1.0 / f64::from(periods)) - 1.0)
}

/// First-order buy-and-hold growth: the weighted average of asset geometric
/// means, `sum_i f_i g_i`. The gap between [`buy_and_hold_geometric`] and
/// this line is the part of buy-and-hold growth the linear picture misses.
pub fn linearized_buy_and_hold(
    initial_weights: &[f64],
    asset_geometric_means: &[f64],
) -> Result<f64> {
    check_means(initial_weights, asset_geometric_means)?;
    Ok(initial_weights
        .iter()
        .zip(asset_geometric_means)
        .map(|(f, g)| f * g)
        .sum())
}

fn check_means(weights: &[f64], geometric_means: &[f64]) -> Result<()> {
    if weights.len() != geometric_means.len() {
        return Err(EngineError::WeightCountMismatch {
            expected: geometric_means.len(),
            got: weights.len(),
        });
    }
    validate_weights(weights)?;
    for (index, &value) in geometric_means.iter().enumerate() {
        if value <= -1.0 {
            return Err(EngineError::GeometricMeanOutOfRange { index, value });
        }
    }
    Ok(())
}

fn fixed_weights<'p>(matrix: &ReturnMatrix, policy: &'p PortfolioPolicy) -> Result<&'p [f64]> {
    let weights = policy
        .target_weights
        .as_deref()
        .ok_or(EngineError::MissingWeights { mode: policy.mode })?;
    if weights.len() != matrix.n_assets() {
        return Err(EngineError::WeightCountMismatch {
            expected: matrix.n_assets(),
            got: weights.len(),
        });
    }
    validate_weights(weights)?;
    if !matrix.fully_available() {
        return Err(EngineError::DelayedAvailabilityUnsupported { mode: policy.mode });
    }
    Ok(weights)
}

fn check_index_policy(matrix: &ReturnMatrix, policy: &PortfolioPolicy) -> Result<()> {
    if policy.target_weights.is_some() {
        return Err(EngineError::UnexpectedWeights { mode: policy.mode });
    }
    let schedule = matrix
        .availability()
        .ok_or(EngineError::MissingAvailability { mode: policy.mode })?;
    if !schedule.contains(&0) {
        return Err(EngineError::NoInitialAssets);
    }
    Ok(())
}

fn simulate_rebalanced(matrix: &ReturnMatrix, weights: &[f64]) -> SimulationResult {
    let periods = matrix.n_periods();
    let mut portfolio_returns = Vec::with_capacity(periods);
    let mut wealth_path = Vec::with_capacity(periods + 1);
    let mut weight_path = Vec::with_capacity(periods + 1);
    let mut turnover = Vec::with_capacity(periods);
    let mut wealth = 1.0;
    wealth_path.push(wealth);
    weight_path.push(weights.to_vec());
    for t in 0..periods {
        let row = matrix.row(t);
        // Constant weights make the portfolio return the weighted sum of
        // asset returns, exactly.
        let portfolio_return: f64 = weights.iter().zip(row).map(|(w, r)| w * r).sum();
        let gross = 1.0 + portfolio_return;
        let traded: f64 = weights
            .iter()
            .zip(row)
            .map(|(w, r)| (w - w * (1.0 + r) / gross).abs())
            .sum();
        wealth *= gross;
        portfolio_returns.push(portfolio_return);
        wealth_path.push(wealth);
        weight_path.push(weights.to_vec());
        turnover.push(traded);
    }
    SimulationResult {
        portfolio_returns,
        wealth_path,
        weight_path,
        turnover,
    }
}

fn simulate_buy_and_hold(matrix: &ReturnMatrix, weights: &[f64]) -> SimulationResult {
    let periods = matrix.n_periods();
    let n = matrix.n_assets();
    let mut dollars = weights.to_vec();
    let mut current = weights.to_vec();
    let mut portfolio_returns = Vec::with_capacity(periods);
    let mut wealth_path = vec![1.0];
    let mut weight_path = vec![current.clone()];
    let mut wealth = 1.0;
    for t in 0..periods {
        let row = matrix.row(t);
        let portfolio_return: f64 = current.iter().zip(row).map(|(w, r)| w * r).sum();
        for i in 0..n {
            dollars[i] *= 1.0 + row[i];
        }
        let total: f64 = dollars.iter().sum();
        current = dollars.iter().map(|d| d / total).collect();
        wealth *= 1.0 + portfolio_return;
        portfolio_returns.push(portfolio_return);
        wealth_path.push(wealth);
        weight_path.push(current.clone());
    }
    SimulationResult {
        portfolio_returns,
        wealth_path,
        weight_path,
        turnover: vec![0.0; periods],
    }
}

fn simulate_index_rebalanced(matrix: &ReturnMatrix) -> SimulationResult {
    let periods = matrix.n_periods();
    let n = matrix.n_assets();
    let uniform_row = |period: usize| -> Vec<f64> {
        let live = matrix.live_count(period) as f64;
        (0..n)
            .map(|i| if matrix.is_live(i, period) { 1.0 / live } else { 0.0 })
            .collect()
    };
    let mut portfolio_returns = Vec::with_capacity(periods);
    let mut wealth_path = vec![1.0];
    let mut weight_path = vec![uniform_row(0)];
    let mut turnover = Vec::with_capacity(periods);
    let mut wealth = 1.0;
    for t in 0..periods {
        let row = matrix.row(t);
        let current = &weight_path[t];
        let portfolio_return: f64 = current.iter().zip(row).map(|(w, r)| w * r).sum();
        let gross = 1.0 + portfolio_return;
        // The final row repeats the last period's membership: no assets
        // join beyond the horizon.
        let next = uniform_row((t + 1).min(periods - 1));
        let traded: f64 = (0..n)
            .map(|i| {
                let drifted = current[i] * (1.0 + row[i]) / gross;
                (next[i] - drifted).abs()
            })
            .sum();
        wealth *= gross;
        portfolio_returns.push(portfolio_return);
        wealth_path.push(wealth);
        weight_path.push(next);
        turnover.push(traded);
    }
    SimulationResult {
        portfolio_returns,
        wealth_path,
        weight_path,
        turnover,
    }
}

fn simulate_index_buy_in(matrix: &ReturnMatrix) -> SimulationResult {
    let periods = matrix.n_periods();
    let n = matrix.n_assets();
    let initial_live = matrix.live_count(0) as f64;
    let mut dollars: Vec<f64> = (0..n)
        .map(|i| if matrix.is_live(i, 0) { 1.0 / initial_live } else { 0.0 })
        .collect();
    let mut portfolio_returns = Vec::with_capacity(periods);
    let mut wealth_path = vec![1.0];
    let mut weight_path = vec![dollars.clone()];
    let mut turnover = Vec::with_capacity(periods);
    let mut wealth = 1.0;
    let mut total = 1.0;
    for t in 0..periods {
        let row = matrix.row(t);
        let mut portfolio_return = 0.0;
        for i in 0..n {
            if matrix.is_live(i, t) {
                portfolio_return += dollars[i] / total * row[i];
                dollars[i] *= 1.0 + row[i];
            }
        }
        total = dollars.iter().sum();
        let drifted: Vec<f64> = dollars.iter().map(|d| d / total).collect();
        // Buy in any assets that become available at the start of the next
        // period: their stake is funded pro-rata from existing holdings, so
        // total value is untouched by the trade.
        if t + 1 < periods {
            let joining: Vec<usize> = (0..n)
                .filter(|&i| matrix.first_period(i) == t + 1)
                .collect();
            if !joining.is_empty() {
                let live_after = matrix.live_count(t + 1) as f64;
                let fraction = joining.len() as f64 / live_after;
                for value in dollars.iter_mut() {
                    *value *= 1.0 - fraction;
                }
                for &i in &joining {
                    dollars[i] = total / live_after;
                }
                total = dollars.iter().sum();
            }
        }
        let next: Vec<f64> = dollars.iter().map(|d| d / total).collect();
        let traded: f64 = next
            .iter()
            .zip(&drifted)
            .map(|(after, before)| (after - before).abs())
            .sum();
        wealth *= 1.0 + portfolio_return;
        portfolio_returns.push(portfolio_return);
        wealth_path.push(wealth);
        weight_path.push(next);
        turnover.push(traded);
    }
    SimulationResult {
        portfolio_returns,
        wealth_path,
        weight_path,
        turnover,
    }
}
