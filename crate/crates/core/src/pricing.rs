//! The surcharge rule V(X) = c_p + λ·I(X;S) and its bundle forms.
//!
//! Prices are carried at full precision; rounding happens only when a
//! report is serialized. A channel with zero reported leakage is always
//! priced at exactly the production cost — no inference, no surcharge.

use serde::{Deserialize, Serialize};

use crate::batch::RecordBatch;
use crate::bins::BinSpec;
use crate::error::{Error, Result};
use crate::estimate::{incremental_leakage, EstimatorConfig, LeakageEstimate};
use crate::schema::AttributeSchema;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePolicy {
    /// Internal marginal cost of producing or processing the datum.
    pub c_p: f64,
    /// Currency per bit of reported leakage; society's valuation knob.
    pub lambda: f64,
    pub currency: String,
    /// Decimal places applied to currency amounts at serialization.
    pub rounding_dp: u8,
}

impl PricePolicy {
    pub fn validate(&self) -> Result<()> {
        if !self.c_p.is_finite() || self.c_p < 0.0 {
            return Err(Error::InvalidPolicy {
                message: format!("c_p must be a nonnegative amount, got {}", self.c_p),
            });
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidPolicy {
                message: format!("lambda must be nonnegative, got {}", self.lambda),
            });
        }
        if self.rounding_dp > 12 {
            return Err(Error::InvalidPolicy {
                message: format!("rounding_dp {} exceeds 12", self.rounding_dp),
            });
        }
        Ok(())
    }

    /// λ = 0 is legal but disables the surcharge entirely; callers surface
    /// this as a warning.
    pub fn zero_lambda_warning(&self) -> Option<String> {
        (self.lambda == 0.0)
            .then(|| "lambda is 0: the surcharge is disabled and every price equals c_p".into())
    }
}

/// One priced channel.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelPrice {
    pub channel: String,
    pub mi_reported_bits: f64,
    pub surcharge: f64,
    pub total: f64,
}

/// V(X) for a single channel: surcharge λ·I plus production cost.
pub fn price_channel(leak: &LeakageEstimate, policy: &PricePolicy) -> ChannelPrice {
    let mi = leak.mi_reported.bits();
    let surcharge = policy.lambda * mi;
    ChannelPrice {
        channel: leak.channel.clone(),
        mi_reported_bits: mi,
        surcharge,
        total: policy.c_p + surcharge,
    }
}

/// Totals per channel for a grid of λ values.
#[derive(Debug, Clone, Serialize)]
pub struct SweepChannelRow {
    pub channel: String,
    pub totals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub lambda_grid: Vec<f64>,
    pub channels: Vec<SweepChannelRow>,
    pub bundle_totals: Vec<f64>,
}

/// Evaluates totals across a λ grid. The grid must be nonnegative and
/// strictly increasing; totals are then monotone nondecreasing in λ for
/// every channel.
pub fn lambda_sweep(
    leaks: &[LeakageEstimate],
    c_p: f64,
    grid: &[f64],
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|l| !l.is_finite() || *l < 0.0)
        || grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::UnsortedGrid);
    }
    let channels: Vec<SweepChannelRow> = leaks
        .iter()
        .map(|leak| SweepChannelRow {
            channel: leak.channel.clone(),
            totals: grid
                .iter()
                .map(|&l| c_p + l * leak.mi_reported.bits())
                .collect(),
        })
        .collect();
    let bundle_totals = (0..grid.len())
        .map(|j| channels.iter().map(|row| row.totals[j]).sum())
        .collect();
    Ok(SweepTable {
        lambda_grid: grid.to_vec(),
        channels,
        bundle_totals,
    })
}

/// How a bundle of disclosures is priced.
pub enum PricingMode<'a> {
    /// Each channel priced independently; the bundle total is the sum.
    Marginal,
    /// Step k priced at c_p + λ·Î(X_k;S | X_1..k−1) along a disclosure
    /// order; needs the data to estimate the conditional terms.
    Incremental {
        order: &'a [String],
        batch: &'a RecordBatch,
        schema: &'a AttributeSchema,
        config: &'a EstimatorConfig,
        bin_override_for: &'a dyn Fn(&str) -> Option<BinSpec>,
        cell_cap: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct IncrementalStepPrice {
    pub step: usize,
    pub channel: String,
    pub conditional_mi_bits: f64,
    pub sample_count: usize,
    pub step_total: f64,
    pub cumulative_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncrementalPricing {
    pub order: Vec<String>,
    pub steps: Vec<IncrementalStepPrice>,
}

#[derive(Debug, Clone)]
pub struct BundlePricing {
    /// Marginal entries, always present.
    pub entries: Vec<ChannelPrice>,
    /// Mode-dependent bundle total.
    pub bundle_total: f64,
    pub incremental: Option<IncrementalPricing>,
}

/// Prices a bundle of channels under the given mode.
pub fn price_bundle(
    leaks: &[LeakageEstimate],
    policy: &PricePolicy,
    mode: PricingMode,
) -> Result<BundlePricing> {
    policy.validate()?;
    let entries: Vec<ChannelPrice> = leaks.iter().map(|l| price_channel(l, policy)).collect();
    match mode {
        PricingMode::Marginal => {
            let bundle_total = entries.iter().map(|e| e.total).sum();
            Ok(BundlePricing {
                entries,
                bundle_total,
                incremental: None,
            })
        }
        PricingMode::Incremental {
            order,
            batch,
            schema,
            config,
            bin_override_for,
            cell_cap,
        } => {
            let steps = incremental_leakage(
                batch,
                order,
                schema,
                config,
                bin_override_for,
                cell_cap,
            )?;
            let mut cumulative = 0.0;
            let priced: Vec<IncrementalStepPrice> = steps
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let step_total = policy.c_p + policy.lambda * s.conditional_mi.bits();
                    cumulative += step_total;
                    IncrementalStepPrice {
                        step: i + 1,
                        channel: s.channel.clone(),
                        conditional_mi_bits: s.conditional_mi.bits(),
                        sample_count: s.sample_count,
                        step_total,
                        cumulative_total: cumulative,
                    }
                })
                .collect();
            Ok(BundlePricing {
                entries,
                bundle_total: cumulative,
                incremental: Some(IncrementalPricing {
                    order: order.to_vec(),
                    steps: priced,
                }),
            })
        }
    }
}
