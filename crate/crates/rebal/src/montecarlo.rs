//! Seeded synthetic return generation and the rebalancing experiment:
//! distributions of rebalanced vs. buy-and-hold geometric returns over many
//! independent trials.
//!
//! The flagship configuration — many uncorrelated assets, each with zero
//! geometric return and substantial volatility, equal-weighted and
//! rebalanced every period — earns a strictly positive average geometric
//! return, while the buy-and-hold portfolio on the same draws earns exactly
//! zero when `exact_g_mode` pins each asset's realized geometric mean.
//!
//! Generation is deterministic: a config (including its seed) maps to one
//! bit-identical matrix. Trials derive per-trial seeds from the base seed
//! with a fixed mixing function, so any single trial can be regenerated in
//! isolation and trials can run on any number of threads with identical
//! aggregate output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, EngineError, PolicyMode, PortfolioPolicy, ReturnMatrix};
use crate::stats::{self, StatsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("n_assets must be at least 1")]
    NoAssets,
    #[error("n_periods must be at least 1")]
    NoPeriods,
    #[error("target_std_dev {value} must be finite and >= 0")]
    InvalidStdDev { value: f64 },
    #[error("target_geometric_mean {value} must be > -1")]
    TargetOutOfRange { value: f64 },
    #[error("correlation matrix is {rows}x{columns}, expected {expected}x{expected}")]
    CorrelationShape {
        rows: usize,
        columns: usize,
        expected: usize,
    },
    #[error("correlation matrix is not symmetric at ({row}, {column})")]
    CorrelationNotSymmetric { row: usize, column: usize },
    #[error("correlation matrix diagonal entry {row} is {value}, expected 1")]
    CorrelationNotUnitDiagonal { row: usize, value: f64 },
    #[error("correlation {value} at ({row}, {column}) is outside [-1, 1]")]
    CorrelationOutOfRange {
        row: usize,
        column: usize,
        value: f64,
    },
    #[error("correlation matrix is not positive semi-definite")]
    NotPositiveSemiDefinite,
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("{mode} is not supported here: synthetic matrices have no availability schedule; use REBALANCED or BUY_AND_HOLD")]
    UnsupportedPolicy { mode: PolicyMode },
    #[error("input length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub type Result<T> = std::result::Result<T, MonteCarloError>;

/// Return distribution drawn for each asset-period cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Model {
    /// `ln(1 + r)` is normal; simple returns can never reach -100%.
    Lognormal,
    /// Simple returns are normal; draws that would lose everything are
    /// redrawn (and counted).
    Normal,
    /// Each period is an up or down move of equal probability.
    TwoPoint,
}

/// Cross-asset dependence of the underlying normal draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    Uncorrelated,
    Matrix(Vec<Vec<f64>>),
}

/// Everything that determines one synthetic return matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_assets: usize,
    pub n_periods: usize,
    /// Geometric mean each asset should realize (exactly in
    /// `exact_g_mode`, in expectation otherwise).
    pub target_geometric_mean: f64,
    /// Population standard deviation of simple returns the model is
    /// calibrated to.
    pub target_std_dev: f64,
    pub correlation: Correlation,
    pub model: Model,
    /// Rescale each asset's gross returns so its realized geometric mean
    /// hits the target exactly, not just in expectation.
    pub exact_g_mode: bool,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_assets == 0 {
            return Err(MonteCarloError::NoAssets);
        }
        if self.n_periods == 0 {
            return Err(MonteCarloError::NoPeriods);
        }
        if self.target_std_dev.is_nan()
            || self.target_std_dev < 0.0
            || !self.target_std_dev.is_finite()
        {
            return Err(MonteCarloError::InvalidStdDev {
                value: self.target_std_dev,
            });
        }
        if self.target_geometric_mean.is_nan() || self.target_geometric_mean <= -1.0 {
            return Err(MonteCarloError::TargetOutOfRange {
                value: self.target_geometric_mean,
            });
        }
        if let Correlation::Matrix(matrix) = &self.correlation {
            validate_correlation(matrix, self.n_assets)?;
        }
        Ok(())
    }
}

/// What actually came out of the generator, next to the targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationDiagnostics {
    /// Row redraws forced by would-be total-loss draws (NORMAL model only).
    pub resamples: u64,
    pub realized_geometric_means: Vec<f64>,
    pub realized_std_devs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub matrix: ReturnMatrix,
    pub diagnostics: GenerationDiagnostics,
}

/// Per-trial seed: a fixed avalanche mix of the base seed and trial index,
/// so trial `i` is reproducible without generating trials `0..i`.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    splitmix64(base_seed ^ trial_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one return matrix and reports realized-vs-target diagnostics.
pub fn generate(config: &GeneratorConfig) -> Result<Generated> {
    config.validate()?;
    let n = config.n_assets;
    let t = config.n_periods;
    let factor = match &config.correlation {
        Correlation::Uncorrelated => None,
        Correlation::Matrix(matrix) => Some(semidefinite_cholesky(matrix)?),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut resamples = 0u64;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(t);

    let g = config.target_geometric_mean;
    let sigma = config.target_std_dev;
    let map_row = |shocks: &[f64]| -> Vec<f64> {
        match config.model {
            Model::Lognormal => {
                let location = (1.0 + g).ln();
                let scale = lognormal_scale(g, sigma);
                shocks
                    .iter()
                    .map(|z| (location + scale * z).exp() - 1.0)
                    .collect()
            }
            Model::Normal => {
                // Invert the variance-drag relation so the geometric mean
                // lands on target in expectation.
                let mean = g + sigma * sigma / 2.0;
                shocks.iter().map(|z| mean + sigma * z).collect()
            }
            Model::TwoPoint => {
                let (up, down) = two_point_levels(g, sigma);
                shocks
                    .iter()
                    .map(|z| if *z >= 0.0 { up } else { down })
                    .collect()
            }
        }
    };

    for _ in 0..t {
        let returns = loop {
            let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let shocks = match &factor {
                None => raw,
                Some(lower) => apply_factor(lower, &raw),
            };
            let candidate = map_row(&shocks);
            if candidate.iter().all(|&r| r > -1.0) {
                break candidate;
            }
            // Only the NORMAL model can land at or below -100%; redraw the
            // whole period so cross-asset correlation survives.
            resamples += 1;
        };
        rows.push(returns);
    }

    if config.exact_g_mode {
        pin_geometric_means(&mut rows, g);
    }

    let labels = (1..=n).map(|i| format!("A{i}")).collect();
    let matrix = ReturnMatrix::from_rows(labels, rows)?;
    let mut realized_geometric_means = Vec::with_capacity(n);
    let mut realized_std_devs = Vec::with_capacity(n);
    for asset in 0..n {
        let column = matrix.column(asset);
        realized_geometric_means.push(stats::geometric_mean(&column)?);
        realized_std_devs.push(stats::std_dev(&column)?);
    }
    Ok(Generated {
        matrix,
        diagnostics: GenerationDiagnostics {
            resamples,
            realized_geometric_means,
            realized_std_devs,
        },
    })
}

/// [`generate`] without the diagnostics.
pub fn generate_returns(config: &GeneratorConfig) -> Result<ReturnMatrix> {
    Ok(generate(config)?.matrix)
}

/// Rescale each column's gross returns by the constant that moves its
/// realized geometric mean onto the target.
fn pin_geometric_means(rows: &mut [Vec<f64>], target: f64) {
    let t = rows.len();
    let n = rows[0].len();
    for asset in 0..n {
        let wealth: f64 = rows.iter().map(|row| 1.0 + row[asset]).product();
        let scale = (1.0 + target) / wealth.powf(1.0 / t as f64);
        for row in rows.iter_mut() {
            row[asset] = (1.0 + row[asset]) * scale - 1.0;
        }
    }
}

/// Scale of the normal law behind a lognormal return with geometric mean
/// `g` and simple-return standard deviation `sigma`.
///
/// With location `ln(1+g)`, the simple-return variance is
/// `(e^{s^2} - 1) e^{s^2} (1+g)^2`; setting `a = e^{s^2}` gives
/// `a^2 - a = sigma^2 / (1+g)^2`, solved by the positive quadratic root.
fn lognormal_scale(g: f64, sigma: f64) -> f64 {
    let ratio = sigma * sigma / ((1.0 + g) * (1.0 + g));
    let a = 0.5 * (1.0 + (1.0 + 4.0 * ratio).sqrt());
    a.ln().max(0.0).sqrt()
}

/// Up/down moves of the equal-probability two-point model:
/// `(1+u)(1+d) = (1+g)^2` fixes the geometric mean, `(u-d)/2 = sigma` the
/// population standard deviation.
fn two_point_levels(g: f64, sigma: f64) -> (f64, f64) {
    let root = (sigma * sigma + (1.0 + g) * (1.0 + g)).sqrt();
    (root + sigma - 1.0, root - sigma - 1.0)
}

fn validate_correlation(matrix: &[Vec<f64>], expected: usize) -> Result<()> {
    if matrix.len() != expected {
        return Err(MonteCarloError::CorrelationShape {
            rows: matrix.len(),
            columns: matrix.first().map_or(0, Vec::len),
            expected,
        });
    }
    for (row, values) in matrix.iter().enumerate() {
        if values.len() != expected {
            return Err(MonteCarloError::CorrelationShape {
                rows: matrix.len(),
                columns: values.len(),
                expected,
            });
        }
        for (column, &value) in values.iter().enumerate() {
            if value.abs() > 1.0 + 1e-12 || value.is_nan() {
                return Err(MonteCarloError::CorrelationOutOfRange { row, column, value });
            }
            if (value - matrix[column][row]).abs() > 1e-12 {
                return Err(MonteCarloError::CorrelationNotSymmetric { row, column });
            }
        }
        if (values[row] - 1.0).abs() > 1e-12 {
            return Err(MonteCarloError::CorrelationNotUnitDiagonal {
                row,
                value: values[row],
            });
        }
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular factor `L` with `L L^T = matrix`, accepting
/// positive *semi*-definite inputs (e.g. all correlations equal to 1) by
/// zeroing exhausted pivots.
fn semidefinite_cholesky(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    const PIVOT_TOLERANCE: f64 = 1e-10;
    let n = matrix.len();
    let mut lower = vec![vec![0.0; n]; n];
    for j in 0..n {
        let pivot = matrix[j][j] - dot(&lower[j][..j], &lower[j][..j]);
        if pivot > PIVOT_TOLERANCE {
            let diagonal = pivot.sqrt();
            lower[j][j] = diagonal;
            for i in (j + 1)..n {
                let value = matrix[i][j] - dot(&lower[i][..j], &lower[j][..j]);
                lower[i][j] = value / diagonal;
            }
        } else if pivot > -PIVOT_TOLERANCE {
            // Rank-deficient direction: the remaining column must already
            // be explained by earlier columns.
            for i in (j + 1)..n {
                let residual = matrix[i][j] - dot(&lower[i][..j], &lower[j][..j]);
                if residual.abs() > 1e-8 {
                    return Err(MonteCarloError::NotPositiveSemiDefinite);
                }
            }
        } else {
            return Err(MonteCarloError::NotPositiveSemiDefinite);
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let rebuilt = dot(&lower[i], &lower[j]);
            if (rebuilt - matrix[i][j]).abs() > 1e-8 {
                return Err(MonteCarloError::NotPositiveSemiDefinite);
            }
        }
    }
    Ok(lower)
}

fn apply_factor(lower: &[Vec<f64>], raw: &[f64]) -> Vec<f64> {
    (0..raw.len())
        .map(|i| {
            lower[i][..=i]
                .iter()
                .zip(raw)
                .map(|(coefficient, z)| coefficient * z)
                .sum()
        })
        .collect()
}

/// Distribution of per-trial portfolio geometric means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDistribution {
    pub per_trial_geometric_means: Vec<f64>,
    /// Arithmetic average of the per-trial values.
    pub mean: f64,
    /// Sample standard deviation (n-1) of per-trial values over
    /// `sqrt(trials)`; 0 for a single trial.
    pub std_error: f64,
    pub trials: usize,
    pub policy_echo: PortfolioPolicy,
}

/// Generator behavior averaged over all trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    /// Realized per-asset geometric mean, averaged over assets and trials.
    pub mean_realized_geometric_mean: f64,
    /// Realized per-asset standard deviation, averaged over assets and
    /// trials — shows calibration drift from `exact_g_mode` rescaling.
    pub mean_realized_std_dev: f64,
    pub total_resamples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRun {
    pub distribution: TrialDistribution,
    pub generation: GenerationSummary,
}

struct TrialOutcome {
    geometric_mean: f64,
    mean_asset_geometric_mean: f64,
    mean_asset_std_dev: f64,
    resamples: u64,
}

/// Runs `trials` independent equal-weight simulations under the given
/// policy and collects the distribution of geometric means plus generator
/// diagnostics.
///
/// Trials execute in parallel; per-trial seeding and order-preserving
/// collection make the output identical to a sequential run.
pub fn run_trials(
    config: &GeneratorConfig,
    trials: usize,
    policy_mode: PolicyMode,
) -> Result<TrialRun> {
    config.validate()?;
    if trials == 0 {
        return Err(MonteCarloError::ZeroTrials);
    }
    let weights = vec![1.0 / config.n_assets as f64; config.n_assets];
    let policy = match policy_mode {
        PolicyMode::Rebalanced => PortfolioPolicy::rebalanced(weights),
        PolicyMode::BuyAndHold => PortfolioPolicy::buy_and_hold(weights),
        mode => return Err(MonteCarloError::UnsupportedPolicy { mode }),
    };

    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|index| -> Result<TrialOutcome> {
            let trial_config = GeneratorConfig {
                seed: trial_seed(config.seed, index),
                ..config.clone()
            };
            let generated = generate(&trial_config)?;
            let simulated = engine::simulate(&generated.matrix, &policy)?;
            let diagnostics = &generated.diagnostics;
            let n = trial_config.n_assets as f64;
            Ok(TrialOutcome {
                geometric_mean: stats::geometric_mean(&simulated.portfolio_returns)?,
                mean_asset_geometric_mean: diagnostics.realized_geometric_means.iter().sum::<f64>()
                    / n,
                mean_asset_std_dev: diagnostics.realized_std_devs.iter().sum::<f64>() / n,
                resamples: diagnostics.resamples,
            })
        })
        .collect::<Result<_>>()?;

    let per_trial_geometric_means: Vec<f64> =
        outcomes.iter().map(|o| o.geometric_mean).collect();
    let mean = per_trial_geometric_means.iter().sum::<f64>() / trials as f64;
    let std_error = if trials > 1 {
        let sum_sq: f64 = per_trial_geometric_means
            .iter()
            .map(|g| (g - mean) * (g - mean))
            .sum();
        (sum_sq / (trials - 1) as f64).sqrt() / (trials as f64).sqrt()
    } else {
        0.0
    };

    let distribution = TrialDistribution {
        per_trial_geometric_means,
        mean,
        std_error,
        trials,
        policy_echo: policy,
    };
    let generation = GenerationSummary {
        mean_realized_geometric_mean: outcomes
            .iter()
            .map(|o| o.mean_asset_geometric_mean)
            .sum::<f64>()
            / trials as f64,
        mean_realized_std_dev: outcomes.iter().map(|o| o.mean_asset_std_dev).sum::<f64>()
            / trials as f64,
        total_resamples: outcomes.iter().map(|o| o.resamples).sum(),
    };
    Ok(TrialRun {
        distribution,
        generation,
    })
}

/// [`run_trials`] returning only the distribution.
pub fn water_into_wine(
    config: &GeneratorConfig,
    trials: usize,
    policy_mode: PolicyMode,
) -> Result<TrialDistribution> {
    Ok(run_trials(config, trials, policy_mode)?.distribution)
}

/// Analytic prediction of the diversification return for uncorrelated
/// assets: `1/2 sum_i w_i (1 - w_i) var_i`. Plotted against the simulated
/// distribution; agreement is approximate, not exact.
pub fn dr_prediction_uncorrelated(weights: &[f64], variances: &[f64]) -> Result<f64> {
    if weights.len() != variances.len() {
        return Err(MonteCarloError::LengthMismatch {
            left: weights.len(),
            right: variances.len(),
        });
    }
    engine::validate_weights(weights)?;
    Ok(0.5
        * weights
            .iter()
            .zip(variances)
            .map(|(w, v)| w * (1.0 - w) * v)
            .sum::<f64>())
}
