//! Report documents and their serialization.
//!
//! Reports are the machine contract: single JSON documents with a fixed key
//! order (struct declaration order), an embedded `report_version`, and
//! currency amounts rounded half-to-even at the configured decimal places.
//! All information values stay at full precision. Serialization of the same
//! report is byte-identical across runs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{BiasMode, ChannelCellsInfo, EstimatorConfig, LeakageEstimate};
use crate::info::NATS_PER_BIT;
use crate::pricing::{BundlePricing, PricePolicy, SweepTable};

pub const REPORT_VERSION: u32 = 1;

/// Half-to-even rounding to `dp` decimal places, applied to currency
/// amounts at serialization time only.
pub fn round_half_even(value: f64, dp: u8) -> f64 {
    let scale = 10f64.powi(dp as i32);
    (value * scale).round_ties_even() / scale
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorEcho {
    pub bias_mode: BiasMode,
    pub permutation_count: usize,
    pub percentile: f64,
    pub min_rows: usize,
    pub nats_per_bit: f64,
}

impl From<&EstimatorConfig> for EstimatorEcho {
    fn from(cfg: &EstimatorConfig) -> Self {
        EstimatorEcho {
            bias_mode: cfg.bias_mode,
            permutation_count: cfg.permutation_count,
            percentile: cfg.percentile,
            min_rows: cfg.min_rows,
            nats_per_bit: NATS_PER_BIT,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyEcho {
    pub c_p: f64,
    pub lambda: f64,
    pub currency: String,
    pub rounding_dp: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelEstimateEntry {
    pub channel: String,
    pub sample_count: usize,
    pub dropped_rows: usize,
    pub bin_count: usize,
    pub cells: ChannelCellsInfo,
    pub mi_plugin_bits: f64,
    pub mi_corrected_bits: f64,
    pub permutation_floor_bits: f64,
    pub mi_reported_bits: f64,
}

impl From<&LeakageEstimate> for ChannelEstimateEntry {
    fn from(leak: &LeakageEstimate) -> Self {
        ChannelEstimateEntry {
            channel: leak.channel.clone(),
            sample_count: leak.sample_count,
            dropped_rows: leak.dropped_rows,
            bin_count: leak.bin_count_used,
            cells: leak.info.clone(),
            mi_plugin_bits: leak.mi_plugin.bits(),
            mi_corrected_bits: leak.mi_corrected.bits(),
            permutation_floor_bits: leak.permutation_floor.bits(),
            mi_reported_bits: leak.mi_reported.bits(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportFailure {
    pub channel: String,
    pub code: String,
    pub message: String,
}

/// Output of the `estimate` command: leakage per channel, no prices.
#[derive(Debug, Clone, Serialize)]
pub struct LeakageReport {
    pub report_version: u32,
    pub kind: &'static str,
    pub seed: u64,
    pub schema_path: String,
    pub data_path: String,
    pub row_count: usize,
    pub estimator: EstimatorEcho,
    pub channels: Vec<ChannelEstimateEntry>,
    pub failures: Vec<ReportFailure>,
}

impl LeakageReport {
    pub fn new(
        seed: u64,
        schema_path: String,
        data_path: String,
        row_count: usize,
        config: &EstimatorConfig,
        estimates: &[LeakageEstimate],
        failures: Vec<ReportFailure>,
    ) -> Self {
        LeakageReport {
            report_version: REPORT_VERSION,
            kind: "leakage",
            seed,
            schema_path,
            data_path,
            row_count,
            estimator: EstimatorEcho::from(config),
            channels: estimates.iter().map(ChannelEstimateEntry::from).collect(),
            failures,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        to_pretty(self)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelValuationEntry {
    pub channel: String,
    pub sample_count: usize,
    pub dropped_rows: usize,
    pub bin_count: usize,
    pub cells: ChannelCellsInfo,
    pub mi_plugin_bits: f64,
    pub mi_corrected_bits: f64,
    pub permutation_floor_bits: f64,
    pub mi_reported_bits: f64,
    pub surcharge: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncrementalStepEntry {
    pub step: usize,
    pub channel: String,
    pub conditional_mi_bits: f64,
    pub sample_count: usize,
    pub step_total: f64,
    pub cumulative_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncrementalSection {
    pub order: Vec<String>,
    pub steps: Vec<IncrementalStepEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSection {
    pub lambda_grid: Vec<f64>,
    pub channels: Vec<SweepChannelEntry>,
    pub bundle_totals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepChannelEntry {
    pub channel: String,
    pub totals: Vec<f64>,
}

/// Output of the `price` and `audit` commands.
#[derive(Debug, Clone, Serialize)]
pub struct ValuationReport {
    pub report_version: u32,
    pub kind: &'static str,
    pub seed: u64,
    pub schema_path: String,
    pub data_path: String,
    pub row_count: usize,
    pub mode: &'static str,
    pub estimator: EstimatorEcho,
    pub policy: PolicyEcho,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub channels: Vec<ChannelValuationEntry>,
    pub bundle_total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incremental: Option<IncrementalSection>,
    pub failures: Vec<ReportFailure>,
}

impl ValuationReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        seed: u64,
        schema_path: String,
        data_path: String,
        row_count: usize,
        config: &EstimatorConfig,
        policy: &PricePolicy,
        estimates: &[LeakageEstimate],
        bundle: &BundlePricing,
        sweep: Option<&SweepTable>,
        failures: Vec<ReportFailure>,
    ) -> Self {
        let channels = estimates
            .iter()
            .zip(&bundle.entries)
            .map(|(leak, price)| ChannelValuationEntry {
                channel: leak.channel.clone(),
                sample_count: leak.sample_count,
                dropped_rows: leak.dropped_rows,
                bin_count: leak.bin_count_used,
                cells: leak.info.clone(),
                mi_plugin_bits: leak.mi_plugin.bits(),
                mi_corrected_bits: leak.mi_corrected.bits(),
                permutation_floor_bits: leak.permutation_floor.bits(),
                mi_reported_bits: leak.mi_reported.bits(),
                surcharge: price.surcharge,
                total: price.total,
            })
            .collect();
        ValuationReport {
            report_version: REPORT_VERSION,
            kind: "valuation",
            seed,
            schema_path,
            data_path,
            row_count,
            mode: if bundle.incremental.is_some() {
                "incremental"
            } else {
                "marginal"
            },
            estimator: EstimatorEcho::from(config),
            policy: PolicyEcho {
                c_p: policy.c_p,
                lambda: policy.lambda,
                currency: policy.currency.clone(),
                rounding_dp: policy.rounding_dp,
            },
            warnings: policy.zero_lambda_warning().into_iter().collect(),
            channels,
            bundle_total: bundle.bundle_total,
            sweep: sweep.map(|s| SweepSection {
                lambda_grid: s.lambda_grid.clone(),
                channels: s
                    .channels
                    .iter()
                    .map(|row| SweepChannelEntry {
                        channel: row.channel.clone(),
                        totals: row.totals.clone(),
                    })
                    .collect(),
                bundle_totals: s.bundle_totals.clone(),
            }),
            incremental: bundle.incremental.as_ref().map(|inc| IncrementalSection {
                order: inc.order.clone(),
                steps: inc
                    .steps
                    .iter()
                    .map(|s| IncrementalStepEntry {
                        step: s.step,
                        channel: s.channel.clone(),
                        conditional_mi_bits: s.conditional_mi_bits,
                        sample_count: s.sample_count,
                        step_total: s.step_total,
                        cumulative_total: s.cumulative_total,
                    })
                    .collect(),
            }),
            failures,
        }
    }

    /// Serializes with currency amounts rounded half-to-even at the
    /// policy's decimal places. Information values are not rounded.
    pub fn to_json_string(&self) -> Result<String> {
        let mut wire = self.clone();
        let dp = wire.policy.rounding_dp;
        let r = |v: &mut f64| *v = round_half_even(*v, dp);
        r(&mut wire.policy.c_p);
        r(&mut wire.policy.lambda);
        for ch in &mut wire.channels {
            r(&mut ch.surcharge);
            r(&mut ch.total);
        }
        r(&mut wire.bundle_total);
        if let Some(sweep) = &mut wire.sweep {
            for l in &mut sweep.lambda_grid {
                r(l);
            }
            for row in &mut sweep.channels {
                for t in &mut row.totals {
                    r(t);
                }
            }
            for t in &mut sweep.bundle_totals {
                r(t);
            }
        }
        if let Some(inc) = &mut wire.incremental {
            for step in &mut inc.steps {
                r(&mut step.step_total);
                r(&mut step.cumulative_total);
            }
        }
        to_pretty(&wire)
    }
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::JsonInvalid {
        message: e.to_string(),
    })?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_half_even_ties() {
        assert_eq!(round_half_even(0.125, 2), 0.12);
        assert_eq!(round_half_even(0.375, 2), 0.38);
        assert_eq!(round_half_even(0.3874435, 6), 0.387444); // no tie, plain nearest
        assert_eq!(round_half_even(1.0, 6), 1.0);
    }

    #[test]
    fn rounding_preserves_in_memory_precision() {
        // the report struct keeps full precision; only the wire copy rounds
        let v = 0.1234567890123;
        assert_ne!(round_half_even(v, 6), v);
    }
}
