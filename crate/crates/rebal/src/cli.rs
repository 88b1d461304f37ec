//! Command-line interface.
//!
//! Five subcommands cover the pipeline: `stats` and `decompose` analyze a
//! CSV return table, `simulate` runs any policy over one,
//! `buyhold-closed-form` evaluates the held-portfolio growth formula
//! without a simulation, and `montecarlo` runs the seeded synthetic-trial
//! experiment. Every command takes `--format table|json`.
//!
//! Exit codes: 0 success, 1 validation problem (bad flags, bad weights, bad
//! cell values), 2 I/O problem (unreadable input file, broken pipe).

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::decomposition::{self, DecompositionError};
use crate::engine::{self, EngineError, PolicyMode, PortfolioPolicy};
use crate::input::{self, InputError, Unit};
use crate::montecarlo::{self, Correlation, GeneratorConfig, Model, MonteCarloError};
use crate::report::{
    self, AssetStats, BuyHoldReport, Format, MonteCarloReport, Provenance, ReportDocument,
    SimulationReport, StatsReport,
};
use crate::stats::{SeriesStats, StatsError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    #[error("--policy {policy} requires --weights")]
    WeightsRequired { policy: String },
    #[error("--policy {policy} derives weights from the availability schedule; drop --weights")]
    WeightsForbidden { policy: String },
    #[error("cannot read correlation file {path}: {source}")]
    CorrelationIo {
        path: String,
        source: std::io::Error,
    },
    #[error("correlation file {path}: {source}")]
    CorrelationCsv { path: String, source: csv::Error },
    #[error("correlation file {path}, line {line}, column {column}: cannot parse {content:?} as a number")]
    CorrelationParse {
        path: String,
        line: usize,
        column: usize,
        content: String,
    },
    #[error("correlation file {path} is empty")]
    CorrelationEmpty { path: String },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot write report: {0}")]
    Write(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(error) => {
                if error.is_io() {
                    2
                } else {
                    1
                }
            }
            CliError::CorrelationIo { .. } => 2,
            CliError::CorrelationCsv { source, .. } => {
                if source.is_io_error() {
                    2
                } else {
                    1
                }
            }
            CliError::Json(_) | CliError::Write(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum UnitArg {
    #[default]
    Percent,
    Decimal,
}

impl From<UnitArg> for Unit {
    fn from(arg: UnitArg) -> Unit {
        match arg {
            UnitArg::Percent => Unit::Percent,
            UnitArg::Decimal => Unit::Decimal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum FormatArg {
    #[default]
    Table,
    Json,
}

impl From<FormatArg> for Format {
    fn from(arg: FormatArg) -> Format {
        match arg {
            FormatArg::Table => Format::TextTable,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Rebalanced,
    Buyhold,
    IndexRebalanced,
    IndexBuyin,
}

impl PolicyArg {
    fn flag_name(self) -> &'static str {
        match self {
            PolicyArg::Rebalanced => "rebalanced",
            PolicyArg::Buyhold => "buyhold",
            PolicyArg::IndexRebalanced => "index-rebalanced",
            PolicyArg::IndexBuyin => "index-buyin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ModelArg {
    #[default]
    Lognormal,
    Normal,
    Twopoint,
}

impl From<ModelArg> for Model {
    fn from(arg: ModelArg) -> Model {
        match arg {
            ModelArg::Lognormal => Model::Lognormal,
            ModelArg::Normal => Model::Normal,
            ModelArg::Twopoint => Model::TwoPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McPolicyArg {
    Rebalanced,
    Buyhold,
}

impl From<McPolicyArg> for PolicyMode {
    fn from(arg: McPolicyArg) -> PolicyMode {
        match arg {
            McPolicyArg::Rebalanced => PolicyMode::Rebalanced,
            McPolicyArg::Buyhold => PolicyMode::BuyAndHold,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rebal",
    version,
    about = "Rebalanced vs. buy-and-hold portfolio analytics: simulation, \
             return decomposition, and seeded Monte Carlo experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-asset summary statistics of a CSV return table.
    Stats {
        /// CSV file: header of asset labels, then one row per period.
        #[arg(long)]
        input: PathBuf,
        /// How to read the cells (percent: -9.10 means -9.1%).
        #[arg(long, value_enum, default_value_t)]
        unit: UnitArg,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
    },
    /// Strategic/diversification split of a rebalanced portfolio.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated target weights, summing to 1.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        weights: Vec<f64>,
        #[arg(long, value_enum, default_value_t)]
        unit: UnitArg,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
    },
    /// Wealth, weight, and turnover paths of a portfolio policy.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        policy: PolicyArg,
        /// Target weights (rebalanced/buyhold only; index policies derive
        /// equal weights from column availability).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        weights: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t)]
        unit: UnitArg,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
    },
    /// Buy-and-hold geometric mean from per-asset geometric means, without
    /// a simulation.
    BuyholdClosedForm {
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        weights: Vec<f64>,
        /// Comma-separated per-asset geometric means, as decimals.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        geometric_means: Vec<f64>,
        #[arg(long)]
        periods: u32,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
    },
    /// Distribution of portfolio geometric means over seeded synthetic
    /// trials.
    Montecarlo {
        #[arg(long)]
        assets: usize,
        #[arg(long)]
        periods: usize,
        /// Target per-asset standard deviation of simple returns (decimal).
        #[arg(long)]
        sigma: f64,
        /// Target per-asset geometric mean (decimal).
        #[arg(long)]
        g: f64,
        #[arg(long, value_enum, default_value_t)]
        model: ModelArg,
        /// Pin every asset's realized geometric mean to the target exactly.
        #[arg(long = "exact-g")]
        exact_g: bool,
        /// "none", or a CSV file holding an NxN correlation matrix (no
        /// header).
        #[arg(long, default_value = "none")]
        correlation: String,
        #[arg(long)]
        trials: usize,
        /// Base seed; trial seeds are derived from it deterministically.
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        policy: McPolicyArg,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Executes a parsed command, writing the report to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<()> {
    match &cli.command {
        Command::Stats {
            input,
            unit,
            format,
        } => {
            let parsed = input::parse_csv_file(input, (*unit).into())?;
            let matrix = &parsed.matrix;
            let mut assets = Vec::with_capacity(matrix.n_assets());
            for i in 0..matrix.n_assets() {
                assets.push(AssetStats {
                    label: matrix.asset_labels()[i].clone(),
                    first_period: matrix.first_period(i),
                    stats: SeriesStats::from_returns(&matrix.live_column(i))?,
                });
            }
            let doc = ReportDocument::new(
                "stats",
                Provenance::for_input(&input.display().to_string()),
                StatsReport {
                    unit: (*unit).into(),
                    assets,
                },
            );
            emit(out, (*format).into(), &doc, report::render_stats_table)
        }
        Command::Decompose {
            input,
            weights,
            unit,
            format,
        } => {
            let parsed = input::parse_csv_file(input, (*unit).into())?;
            let result = decomposition::decompose(&parsed.matrix, weights)?;
            let doc = ReportDocument::new(
                "decompose",
                Provenance::for_input(&input.display().to_string()),
                result,
            );
            emit(
                out,
                (*format).into(),
                &doc,
                report::render_decomposition_table,
            )
        }
        Command::Simulate {
            input,
            policy,
            weights,
            unit,
            format,
        } => {
            let parsed = input::parse_csv_file(input, (*unit).into())?;
            let chosen = build_policy(*policy, weights.clone())?;
            let result = engine::simulate(&parsed.matrix, &chosen)?;
            let doc = ReportDocument::new(
                "simulate",
                Provenance::for_input(&input.display().to_string()),
                SimulationReport {
                    policy_echo: chosen,
                    asset_labels: parsed.matrix.asset_labels().to_vec(),
                    period_labels: parsed.period_labels.clone(),
                    result,
                },
            );
            emit(
                out,
                (*format).into(),
                &doc,
                report::render_simulation_table,
            )
        }
        Command::BuyholdClosedForm {
            weights,
            geometric_means,
            periods,
            format,
        } => {
            let geometric_mean =
                engine::buy_and_hold_geometric(weights, geometric_means, *periods)?;
            let weighted_average =
                engine::linearized_buy_and_hold(weights, geometric_means)?;
            let doc = ReportDocument::new(
                "buyhold-closed-form",
                Provenance::bare(),
                BuyHoldReport {
                    initial_weights: weights.clone(),
                    asset_geometric_means: geometric_means.clone(),
                    periods: *periods,
                    geometric_mean,
                    weighted_average_geometric_mean: weighted_average,
                    excess_over_weighted_average: geometric_mean - weighted_average,
                },
            );
            emit(out, (*format).into(), &doc, report::render_buyhold_table)
        }
        Command::Montecarlo {
            assets,
            periods,
            sigma,
            g,
            model,
            exact_g,
            correlation,
            trials,
            seed,
            policy,
            format,
        } => {
            let correlation = if correlation.eq_ignore_ascii_case("none") {
                Correlation::Uncorrelated
            } else {
                Correlation::Matrix(read_correlation_matrix(Path::new(correlation))?)
            };
            let config = GeneratorConfig {
                n_assets: *assets,
                n_periods: *periods,
                target_geometric_mean: *g,
                target_std_dev: *sigma,
                correlation,
                model: (*model).into(),
                exact_g_mode: *exact_g,
                seed: *seed,
            };
            let run = montecarlo::run_trials(&config, *trials, (*policy).into())?;
            let predicted = montecarlo::dr_prediction_uncorrelated(
                &vec![1.0 / *assets as f64; *assets],
                &vec![sigma * sigma; *assets],
            )?;
            let histogram = report::histogram(
                &run.distribution.per_trial_geometric_means,
                report::HISTOGRAM_BINS,
            );
            let doc = ReportDocument::new(
                "montecarlo",
                Provenance::for_config(config),
                MonteCarloReport {
                    distribution: run.distribution,
                    generation: run.generation,
                    predicted_diversification_return: predicted,
                    histogram,
                },
            );
            emit(
                out,
                (*format).into(),
                &doc,
                report::render_montecarlo_table,
            )
        }
    }
}

fn build_policy(policy: PolicyArg, weights: Option<Vec<f64>>) -> Result<PortfolioPolicy> {
    match policy {
        PolicyArg::Rebalanced | PolicyArg::Buyhold => {
            let weights = weights.ok_or_else(|| CliError::WeightsRequired {
                policy: policy.flag_name().to_owned(),
            })?;
            Ok(match policy {
                PolicyArg::Rebalanced => PortfolioPolicy::rebalanced(weights),
                _ => PortfolioPolicy::buy_and_hold(weights),
            })
        }
        PolicyArg::IndexRebalanced | PolicyArg::IndexBuyin => {
            if weights.is_some() {
                return Err(CliError::WeightsForbidden {
                    policy: policy.flag_name().to_owned(),
                });
            }
            Ok(match policy {
                PolicyArg::IndexRebalanced => PortfolioPolicy::index_rebalanced(),
                _ => PortfolioPolicy::index_buy_in(),
            })
        }
    }
}

fn read_correlation_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| CliError::CorrelationIo {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|source| CliError::CorrelationCsv {
            path: display.clone(),
            source,
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        let mut row = Vec::with_capacity(record.len());
        for (column, cell) in record.iter().enumerate() {
            let value = cell
                .parse::<f64>()
                .map_err(|_| CliError::CorrelationParse {
                    path: display.clone(),
                    line,
                    column: column + 1,
                    content: cell.to_owned(),
                })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::CorrelationEmpty { path: display });
    }
    Ok(rows)
}

fn emit<W: Write, T: Serialize + DeserializeOwned>(
    out: &mut W,
    format: Format,
    doc: &ReportDocument<T>,
    render: impl FnOnce(&T) -> String,
) -> Result<()> {
    let text = match format {
        Format::Json => doc.to_json()?,
        Format::TextTable => render(&doc.result),
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_declaration_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn policy_weights_rules() {
        assert!(matches!(
            build_policy(PolicyArg::Rebalanced, None),
            Err(CliError::WeightsRequired { .. })
        ));
        assert!(matches!(
            build_policy(PolicyArg::IndexBuyin, Some(vec![0.5, 0.5])),
            Err(CliError::WeightsForbidden { .. })
        ));
        let held = build_policy(PolicyArg::Buyhold, Some(vec![0.5, 0.5])).unwrap();
        assert_eq!(held.mode, PolicyMode::BuyAndHold);
        let index = build_policy(PolicyArg::IndexRebalanced, None).unwrap();
        assert_eq!(index.mode, PolicyMode::IndexRebalanced);
        assert!(index.target_weights.is_none());
    }

    #[test]
    fn exit_codes_distinguish_io_from_validation() {
        let io_error = CliError::Input(InputError::Io {
            path: "x".into(),
            source: std::io::Error::from(std::io::ErrorKind::NotFound),
        });
        assert_eq!(io_error.exit_code(), 2);
        let content_error = CliError::Input(InputError::EmptyTable);
        assert_eq!(content_error.exit_code(), 1);
        let weight_error = CliError::WeightsRequired {
            policy: "rebalanced".into(),
        };
        assert_eq!(weight_error.exit_code(), 1);
    }

    #[test]
    fn run_writes_json_documents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mini.csv");
        std::fs::write(&path, "year,a,b\n2000,10.0,-5.0\n2001,-5.0,10.0\n").unwrap();
        let cli = Cli {
            command: Command::Stats {
                input: path,
                unit: UnitArg::Percent,
                format: FormatArg::Json,
            },
        };
        let mut buffer = Vec::new();
        run(&cli, &mut buffer).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buffer).unwrap();
        assert_eq!(value["command"], "stats");
        assert!(value["provenance"]["input"].as_str().unwrap().ends_with("mini.csv"));
        assert_eq!(value["result"]["assets"][0]["label"], "a");
    }
}
