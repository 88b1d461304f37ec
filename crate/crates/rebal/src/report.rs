//! Report envelopes and rendering.
//!
//! Every command emits one [`ReportDocument`]: the command name, provenance
//! (input path or generator config, seed, tool version), and a
//! command-specific result. JSON keeps full double precision and
//! round-trips; the text format renders rates in percent with two decimals,
//! in a layout that lines up per-asset columns for visual diffing against
//! published tables.
//!
//! Distributions are not plotted: they are emitted as a fixed-bin histogram
//! (edges plus counts) that external tooling can consume as CSV.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::decomposition::{DecompositionReport, AVERAGED_SHORTCUT_CAVEAT};
use crate::engine::{PortfolioPolicy, SimulationResult};
use crate::input::Unit;
use crate::montecarlo::{GenerationSummary, GeneratorConfig, TrialDistribution};
use crate::stats::SeriesStats;

/// Bins used for every emitted histogram.
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    TextTable,
    Json,
}

/// Where a report's numbers came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<GeneratorConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub version: String,
}

fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_owned()
}

impl Provenance {
    pub fn for_input(path: &str) -> Self {
        Provenance {
            input: Some(path.to_owned()),
            config: None,
            seed: None,
            version: tool_version(),
        }
    }

    pub fn for_config(config: GeneratorConfig) -> Self {
        Provenance {
            seed: Some(config.seed),
            input: None,
            config: Some(config),
            version: tool_version(),
        }
    }

    pub fn bare() -> Self {
        Provenance {
            input: None,
            config: None,
            seed: None,
            version: tool_version(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument<T> {
    pub command: String,
    pub provenance: Provenance,
    pub result: T,
}

impl<T: Serialize + DeserializeOwned> ReportDocument<T> {
    pub fn new(command: &str, provenance: Provenance, result: T) -> Self {
        ReportDocument {
            command: command.to_owned(),
            provenance,
            result,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Per-asset block of the `stats` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetStats {
    pub label: String,
    /// First period the asset is available (0 unless the CSV column starts
    /// with empty cells); statistics cover the live span only.
    pub first_period: usize,
    #[serde(flatten)]
    pub stats: SeriesStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub unit: Unit,
    pub assets: Vec<AssetStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub policy_echo: PortfolioPolicy,
    pub asset_labels: Vec<String>,
    pub period_labels: Vec<String>,
    #[serde(flatten)]
    pub result: SimulationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuyHoldReport {
    pub initial_weights: Vec<f64>,
    pub asset_geometric_means: Vec<f64>,
    pub periods: u32,
    /// Portfolio geometric mean from the closed form.
    pub geometric_mean: f64,
    /// First-order value: weighted average of the asset geometric means.
    pub weighted_average_geometric_mean: f64,
    /// Drift effect: closed form minus the weighted average.
    pub excess_over_weighted_average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    /// Count per bin; the last bin includes its upper edge.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub distribution: TrialDistribution,
    pub generation: GenerationSummary,
    /// Analytic diversification-return prediction for uncorrelated assets
    /// at the configured targets (indicative only when a correlation matrix
    /// is supplied).
    pub predicted_diversification_return: f64,
    pub histogram: Histogram,
}

/// Equal-width histogram over the value range; degenerate ranges get one
/// microscopic symmetric bin span so edges stay strictly ascending.
pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    assert!(bins >= 1 && !values.is_empty());
    let mut low = f64::INFINITY;
    let mut high = f64::NEG_INFINITY;
    for &value in values {
        low = low.min(value);
        high = high.max(value);
    }
    if high - low == 0.0 {
        low -= 5e-7;
        high += 5e-7;
    }
    let width = (high - low) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| low + i as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &value in values {
        let index = (((value - low) / width) as usize).min(bins - 1);
        counts[index] += 1;
    }
    Histogram { edges, counts }
}

fn pct(value: f64) -> String {
    two_decimals(value * 100.0)
}

fn per_ten_thousand(value: f64) -> String {
    two_decimals(value * 1e4)
}

/// Formats with two decimals, folding "-0.00" into "0.00".
fn two_decimals(scaled: f64) -> String {
    let rounded = (scaled * 100.0).round() / 100.0;
    format!("{:.2}", if rounded == 0.0 { 0.0 } else { scaled })
}

/// `labels` right-aligned into columns after a left-aligned metric column.
struct Table {
    metric_width: usize,
    column_widths: Vec<usize>,
    lines: Vec<String>,
}

impl Table {
    fn new(metric_width: usize, labels: &[String]) -> Self {
        let column_widths = labels.iter().map(|l| l.len().max(9) + 2).collect();
        let mut table = Table {
            metric_width,
            column_widths,
            lines: Vec::new(),
        };
        table.push_row("", labels.iter().map(String::as_str));
        table
    }

    fn push_row<'c>(&mut self, metric: &str, cells: impl Iterator<Item = &'c str>) {
        let mut line = format!("{:<width$}", metric, width = self.metric_width);
        for (cell, width) in cells.zip(&self.column_widths) {
            line.push_str(&format!("{:>width$}", cell, width = width));
        }
        self.lines.push(line.trim_end().to_owned());
    }

    fn push_values(&mut self, metric: &str, values: impl Iterator<Item = String>) {
        let cells: Vec<String> = values.collect();
        self.push_row(metric, cells.iter().map(String::as_str));
    }

    fn finish(self) -> String {
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}

pub fn render_stats_table(report: &StatsReport) -> String {
    let labels: Vec<String> = report.assets.iter().map(|a| a.label.clone()).collect();
    let mut table = Table::new(22, &labels);
    let rows = &report.assets;
    table.push_values("periods", rows.iter().map(|a| a.stats.periods.to_string()));
    table.push_values(
        "first period",
        rows.iter().map(|a| a.first_period.to_string()),
    );
    table.push_values(
        "arithmetic mean (%)",
        rows.iter().map(|a| pct(a.stats.arithmetic_mean)),
    );
    table.push_values(
        "geometric mean (%)",
        rows.iter().map(|a| pct(a.stats.geometric_mean)),
    );
    table.push_values("std dev (%)", rows.iter().map(|a| pct(a.stats.std_dev)));
    table.push_values(
        "variance (x 1e-4)",
        rows.iter().map(|a| per_ten_thousand(a.stats.variance)),
    );
    table.push_values(
        "wealth ratio",
        rows.iter().map(|a| format!("{:.4}", a.stats.wealth_ratio)),
    );
    table.finish()
}

pub fn render_decomposition_table(report: &DecompositionReport) -> String {
    let mut labels: Vec<String> = report
        .per_asset_stats
        .iter()
        .map(|a| a.label.clone())
        .collect();
    labels.push("portfolio".to_owned());
    let mut table = Table::new(36, &labels);
    let assets = &report.per_asset_stats;
    let portfolio = &report.portfolio_stats;
    table.push_values(
        "weight (%)",
        assets
            .iter()
            .map(|a| pct(a.weight))
            .chain([pct(1.0)]),
    );
    table.push_values(
        "arithmetic mean (%)",
        assets
            .iter()
            .map(|a| pct(a.stats.arithmetic_mean))
            .chain([pct(portfolio.arithmetic_mean)]),
    );
    table.push_values(
        "geometric mean (%)",
        assets
            .iter()
            .map(|a| pct(a.stats.geometric_mean))
            .chain([pct(portfolio.geometric_mean)]),
    );
    table.push_values(
        "std dev (%)",
        assets
            .iter()
            .map(|a| pct(a.stats.std_dev))
            .chain([pct(portfolio.std_dev)]),
    );
    table.push_values(
        "covariance with portfolio (x 1e-4)",
        assets
            .iter()
            .map(|a| per_ten_thousand(a.covariance_with_portfolio))
            .chain([per_ten_thousand(portfolio.variance)]),
    );
    let mut text = table.finish();
    text.push('\n');
    text.push_str(&format!(
        "strategic return (%)            {:>8}\n",
        pct(report.strategic_return)
    ));
    text.push_str(&format!(
        "diversification return (%)      {:>8}\n",
        pct(report.diversification_return_exact)
    ));
    text.push_str(&format!(
        "  covariance form (%)           {:>8}\n",
        pct(report.dr_covariance_approx)
    ));
    text.push_str(&format!(
        "  variance-reduction form (%)   {:>8}\n",
        pct(report.dr_variance_reduction_approx)
    ));
    text.push_str(&format!(
        "  correlation form (%)          {:>8}\n",
        pct(report.dr_correlation_approx)
    ));
    text.push_str(&format!(
        "  averaged shortcut (%)         {:>8}  [untrusted]\n",
        pct(report.dr_erb_harvey.value)
    ));
    text.push_str(&format!("note: {AVERAGED_SHORTCUT_CAVEAT}\n"));
    text
}

pub fn render_simulation_table(report: &SimulationReport) -> String {
    let mut text = format!("policy: {}\n", report.policy_echo.mode);
    let weight_header = report.asset_labels.join(",");
    text.push_str(&format!(
        "{:<12}{:>12}{:>12}{:>14}  weights % ({weight_header})\n",
        "period", "return (%)", "wealth", "turnover (%)"
    ));
    text.push_str(&format!(
        "{:<12}{:>12}{:>12}{:>14}  {}\n",
        "(start)",
        "--",
        format!("{:.4}", report.result.wealth_path[0]),
        "--",
        join_pct(&report.result.weight_path[0])
    ));
    for (t, label) in report.period_labels.iter().enumerate() {
        text.push_str(&format!(
            "{:<12}{:>12}{:>12}{:>14}  {}\n",
            label,
            pct(report.result.portfolio_returns[t]),
            format!("{:.4}", report.result.wealth_path[t + 1]),
            pct(report.result.turnover[t]),
            join_pct(&report.result.weight_path[t + 1])
        ));
    }
    text
}

fn join_pct(values: &[f64]) -> String {
    values.iter().map(|&v| pct(v)).collect::<Vec<_>>().join(",")
}

pub fn render_buyhold_table(report: &BuyHoldReport) -> String {
    format!(
        "buy-and-hold closed form over {} periods\n\
         initial weights (%):                     {}\n\
         asset geometric means (%):               {}\n\
         portfolio geometric mean (%):        {:>8}\n\
         weighted average of asset means (%): {:>8}\n\
         excess from weight drift (%):        {:>8}\n",
        report.periods,
        join_pct(&report.initial_weights),
        join_pct(&report.asset_geometric_means),
        pct(report.geometric_mean),
        pct(report.weighted_average_geometric_mean),
        pct(report.excess_over_weighted_average)
    )
}

pub fn render_montecarlo_table(report: &MonteCarloReport) -> String {
    let distribution = &report.distribution;
    let mut text = format!(
        "trials: {}    policy: {}\n\
         mean geometric return (%):                {:>8}\n\
         standard error (%):                       {:>8}\n\
         predicted diversification return (%):     {:>8}  (uncorrelated-asset formula)\n\
         realized asset geometric mean (avg, %):   {:>8}\n\
         realized asset std dev (avg, %):          {:>8}\n\
         total-loss redraws: {}\n\
         histogram of per-trial geometric means (decimal units)\n\
         bin_start,bin_end,count\n",
        distribution.trials,
        distribution.policy_echo.mode,
        pct(distribution.mean),
        format!("{:.4}", distribution.std_error * 100.0),
        pct(report.predicted_diversification_return),
        pct(report.generation.mean_realized_geometric_mean),
        pct(report.generation.mean_realized_std_dev),
        report.generation.total_resamples,
    );
    let histogram = &report.histogram;
    for (index, count) in histogram.counts.iter().enumerate() {
        text.push_str(&format!(
            "{:.6},{:.6},{}\n",
            histogram.edges[index],
            histogram.edges[index + 1],
            count
        ));
    }
    text
}
