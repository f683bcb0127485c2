//! From raw records to per-channel leakage estimates.
//!
//! The pipeline is: discretize the channel, count the empirical joint over
//! (feature cell × profile cell), take plug-in mutual information, apply an
//! optional Miller-Madow correction, and compare against a permutation-null
//! floor. Estimates at or below the floor are reported as zero leakage, so
//! sampling noise never turns into a surcharge.
//!
//! Every stochastic step takes an explicit seed; estimates are pure
//! functions of (batch, schema, config, seed) and safe to run concurrently
//! across channels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::batch::{ChannelColumn, RecordBatch, DEFAULT_MIN_ROWS};
use crate::bins::{discretize, BinSpec};
use crate::error::{Error, Result};
use crate::info::{mutual_information, BitsValue, NATS_PER_BIT};
use crate::joint::JointTable;
use crate::schema::{AttributeSchema, ChannelKind};

pub const DEFAULT_PERMUTATION_COUNT: usize = 200;
pub const DEFAULT_PERCENTILE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasMode {
    None,
    MillerMadow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub bias_mode: BiasMode,
    pub permutation_count: usize,
    /// Null quantile used as the zero floor, in (0, 1].
    pub percentile: f64,
    pub min_rows: usize,
    pub seed: u64,
    /// When set, a constant column with a requested bin count above 1 is an
    /// error instead of a single-bin warning.
    pub strict_bin_count: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            bias_mode: BiasMode::MillerMadow,
            permutation_count: DEFAULT_PERMUTATION_COUNT,
            percentile: DEFAULT_PERCENTILE,
            min_rows: DEFAULT_MIN_ROWS,
            seed: 0,
            strict_bin_count: false,
        }
    }
}

/// Realized feature cells of a channel, echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelCellsInfo {
    Categorical { levels: Vec<String> },
    Continuous {
        edges: Vec<f64>,
        clamped_low: usize,
        clamped_high: usize,
        constant_column: bool,
    },
}

/// Per-row feature cell codes for one channel (`None` = missing value).
#[derive(Debug, Clone)]
pub struct ChannelCells {
    pub codes: Vec<Option<u32>>,
    pub arity: usize,
    pub info: ChannelCellsInfo,
}

/// Discretizes (or interns) one channel into per-row feature cells.
///
/// Continuous channels are binned over their present values; the realized
/// edges are recorded. `bin_override` takes precedence over the schema's
/// bin spec.
pub fn channel_cells(
    batch: &RecordBatch,
    channel: &str,
    schema: &AttributeSchema,
    bin_override: Option<&BinSpec>,
    strict_bin_count: bool,
) -> Result<ChannelCells> {
    let idx = schema.channel_index(channel)?;
    let decl = &schema.feature_channels()[idx];
    match batch.channel_column(idx) {
        ChannelColumn::Categorical { codes, levels } => {
            debug_assert_eq!(decl.kind, ChannelKind::Categorical);
            Ok(ChannelCells {
                codes: codes.clone(),
                arity: levels.len().max(1),
                info: ChannelCellsInfo::Categorical {
                    levels: levels.clone(),
                },
            })
        }
        ChannelColumn::Continuous { values } => {
            let spec = bin_override
                .or(decl.bin_spec.as_ref())
                .ok_or_else(|| Error::MissingBinSpec {
                    channel: channel.to_string(),
                })?;
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            if present.is_empty() {
                return Err(Error::TooFewRows { kept: 0, min: 1 });
            }
            let d = discretize(&present, spec, strict_bin_count).map_err(|e| match e {
                Error::ConstantColumn { bin_count, .. } => Error::ConstantColumn {
                    channel: channel.to_string(),
                    bin_count,
                },
                other => other,
            })?;
            let mut cell_iter = d.cells.iter();
            let codes = values
                .iter()
                .map(|v| v.map(|_| *cell_iter.next().expect("cell per present value") as u32))
                .collect();
            Ok(ChannelCells {
                codes,
                arity: d.bin_count,
                info: ChannelCellsInfo::Continuous {
                    edges: d.edges,
                    clamped_low: d.clamped_low,
                    clamped_high: d.clamped_high,
                    constant_column: d.constant_column,
                },
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalJoint {
    pub table: JointTable,
    pub sample_count: usize,
    pub dropped_rows: usize,
    pub bin_count: usize,
    pub info: ChannelCellsInfo,
}

/// Contingency counts over (feature cell × profile cell), normalized.
///
/// Rows missing the channel value or any protected dimension are dropped
/// and counted. The profile axis always spans the full profile space; cells
/// never observed simply carry zero mass.
pub fn empirical_joint(
    batch: &RecordBatch,
    channel: &str,
    schema: &AttributeSchema,
    config: &EstimatorConfig,
    bin_override: Option<&BinSpec>,
) -> Result<EmpiricalJoint> {
    let cells = channel_cells(batch, channel, schema, bin_override, config.strict_bin_count)?;
    let (pairs, dropped) = kept_pairs(&cells.codes, batch.profile_flat());
    if pairs.len() < config.min_rows {
        return Err(Error::TooFewRows {
            kept: pairs.len(),
            min: config.min_rows,
        });
    }
    let table = JointTable::from_sparse(
        cells.arity,
        schema.profile_cells(),
        pairs.iter().map(|&(x, s)| (x as usize, s as usize, 1.0)),
    )?;
    Ok(EmpiricalJoint {
        table,
        sample_count: pairs.len(),
        dropped_rows: dropped,
        bin_count: cells.arity,
        info: cells.info,
    })
}

fn kept_pairs(codes: &[Option<u32>], profile: &[Option<u32>]) -> (Vec<(u32, u32)>, usize) {
    let mut pairs = Vec::with_capacity(codes.len());
    let mut dropped = 0;
    for (code, prof) in codes.iter().zip(profile) {
        match (code, prof) {
            (Some(x), Some(s)) => pairs.push((*x, *s)),
            _ => dropped += 1,
        }
    }
    (pairs, dropped)
}

#[derive(Debug, Clone, Serialize)]
pub struct LeakageEstimate {
    pub channel: String,
    pub mi_plugin: BitsValue,
    pub mi_corrected: BitsValue,
    pub permutation_floor: BitsValue,
    /// The corrected estimate when it clears the permutation floor,
    /// otherwise exactly zero.
    pub mi_reported: BitsValue,
    pub sample_count: usize,
    pub dropped_rows: usize,
    pub bin_count_used: usize,
    #[serde(skip)]
    pub info: ChannelCellsInfo,
}

/// Full estimation pipeline for one channel.
pub fn estimate_leakage(
    batch: &RecordBatch,
    channel: &str,
    schema: &AttributeSchema,
    config: &EstimatorConfig,
    bin_override: Option<&BinSpec>,
) -> Result<LeakageEstimate> {
    if batch.row_count() < config.min_rows {
        return Err(Error::TooFewRows {
            kept: batch.row_count(),
            min: config.min_rows,
        });
    }
    let ej = empirical_joint(batch, channel, schema, config, bin_override)?;
    let n = ej.sample_count;
    let mi_plugin = mutual_information(&ej.table)?;

    let px = ej.table.x_marginal();
    let ps = ej.table.s_marginal();
    let k_x = px.iter().filter(|&&p| p > 0.0).count();
    let k_s = ps.iter().filter(|&&p| p > 0.0).count();

    let mi_corrected = match config.bias_mode {
        BiasMode::None => mi_plugin,
        BiasMode::MillerMadow => {
            let bias =
                ((k_x - 1) * (k_s - 1)) as f64 / (2.0 * n as f64 * NATS_PER_BIT);
            BitsValue::new((mi_plugin.bits() - bias).max(0.0))?
        }
    };

    let channel_index = schema.channel_index(channel)?;
    let floor = permutation_floor(&ej.table, n, config, channel_index)?;

    let mi_reported = if mi_corrected.bits() > floor.bits() {
        mi_corrected
    } else {
        BitsValue::zero()
    };

    Ok(LeakageEstimate {
        channel: channel.to_string(),
        mi_plugin,
        mi_corrected,
        permutation_floor: floor,
        mi_reported,
        sample_count: n,
        dropped_rows: ej.dropped_rows,
        bin_count_used: ej.bin_count,
        info: ej.info,
    })
}

/// Null quantile of plug-in MI under random shuffles of the channel column.
///
/// The table is first compacted to its occupied cells (which leaves plug-in
/// MI unchanged), then the feature codes are permuted against the profile
/// codes `permutation_count` times with a channel-derived seed.
fn permutation_floor(
    table: &JointTable,
    sample_count: usize,
    config: &EstimatorConfig,
    channel_index: usize,
) -> Result<BitsValue> {
    if config.permutation_count == 0 {
        return Ok(BitsValue::zero());
    }
    if !(config.percentile > 0.0 && config.percentile <= 1.0) {
        return Err(Error::InvalidPolicy {
            message: format!("percentile {} outside (0, 1]", config.percentile),
        });
    }

    // Reconstruct compacted per-row codes from the empirical counts. The
    // row order is immaterial: only the multiset matters and the pairing is
    // destroyed by the shuffle anyway.
    let mut x_remap: BTreeMap<usize, u32> = BTreeMap::new();
    let mut s_remap: BTreeMap<usize, u32> = BTreeMap::new();
    let mut xs: Vec<u32> = Vec::with_capacity(sample_count);
    let mut ss: Vec<u32> = Vec::with_capacity(sample_count);
    for (x, s, p) in table.iter_nonzero() {
        let xi = next_code(&mut x_remap, x);
        let si = next_code(&mut s_remap, s);
        let count = (p * sample_count as f64).round() as usize;
        for _ in 0..count {
            xs.push(xi);
            ss.push(si);
        }
    }
    let k_x = x_remap.len();
    let k_s = s_remap.len();
    debug_assert_eq!(xs.len(), sample_count);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, channel_index));
    let mut counts = vec![0.0f64; k_x * k_s];
    let mut null_mi = Vec::with_capacity(config.permutation_count);
    for _ in 0..config.permutation_count {
        xs.shuffle(&mut rng);
        counts.fill(0.0);
        for (&x, &s) in xs.iter().zip(&ss) {
            counts[x as usize * k_s + s as usize] += 1.0;
        }
        let t = JointTable::from_weights(k_x, k_s, &counts)?;
        null_mi.push(mutual_information(&t)?.bits());
    }
    null_mi.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // nearest-rank percentile
    let rank = (config.percentile * config.permutation_count as f64).ceil() as usize;
    let idx = rank.clamp(1, config.permutation_count) - 1;
    BitsValue::new(null_mi[idx])
}

fn next_code(remap: &mut BTreeMap<usize, u32>, key: usize) -> u32 {
    let next = remap.len() as u32;
    *remap.entry(key).or_insert(next)
}

/// Conditional leakage of one disclosure step.
#[derive(Debug, Clone, Serialize)]
pub struct IncrementalStep {
    pub channel: String,
    /// Î(X_k ; S | X_1..k−1), plug-in, on the rows complete through step k.
    pub conditional_mi: BitsValue,
    pub sample_count: usize,
}

/// Sequential-disclosure leakage: step k is priced by the conditional
/// mutual information of channel k given everything already disclosed,
/// estimated from the empirical joint over the concatenated feature cells.
///
/// Uses the chain rule Î(X_k;S|X_prev) = Î(X_prev,X_k;S) − Î(X_prev;S) with
/// both terms on the same row set (rows complete through step k). Plug-in
/// only: no bias correction or permutation floor is applied per step.
pub fn incremental_leakage(
    batch: &RecordBatch,
    order: &[String],
    schema: &AttributeSchema,
    config: &EstimatorConfig,
    bin_override_for: impl Fn(&str) -> Option<BinSpec>,
    cell_cap: usize,
) -> Result<Vec<IncrementalStep>> {
    if order.is_empty() {
        return Err(Error::OrderMissing);
    }
    let profile = batch.profile_flat();
    let s_arity = schema.profile_cells();

    // concatenated feature code per row so far; None once any involved
    // channel was missing
    let mut prev_codes: Vec<Option<u64>> = vec![Some(0); batch.row_count()];
    let mut prev_arity: u128 = 1;
    let mut steps = Vec::with_capacity(order.len());

    for name in order {
        let spec = bin_override_for(name);
        let cells = channel_cells(batch, name, schema, spec.as_ref(), config.strict_bin_count)?;
        let arity = prev_arity * cells.arity as u128;
        if arity > cell_cap as u128 {
            return Err(Error::ProfileSpaceTooLarge {
                cells: arity,
                cap: cell_cap,
            });
        }
        let curr_codes: Vec<Option<u64>> = prev_codes
            .iter()
            .zip(&cells.codes)
            .map(|(prev, code)| match (prev, code) {
                (Some(p), Some(c)) => Some(p * cells.arity as u64 + *c as u64),
                _ => None,
            })
            .collect();

        let mut kept_prev = Vec::new();
        let mut kept_curr = Vec::new();
        for ((curr, prev), prof) in curr_codes.iter().zip(&prev_codes).zip(profile) {
            if let (Some(c), Some(s)) = (curr, prof) {
                kept_prev.push((prev.expect("prev present when curr is") as usize, *s as usize));
                kept_curr.push((*c as usize, *s as usize));
            }
        }
        if kept_curr.len() < config.min_rows {
            return Err(Error::TooFewRows {
                kept: kept_curr.len(),
                min: config.min_rows,
            });
        }

        let mi_curr = mutual_information(&JointTable::from_sparse(
            arity as usize,
            s_arity,
            kept_curr.iter().map(|&(x, s)| (x, s, 1.0)),
        )?)?;
        let mi_prev = mutual_information(&JointTable::from_sparse(
            prev_arity as usize,
            s_arity,
            kept_prev.iter().map(|&(x, s)| (x, s, 1.0)),
        )?)?;

        let delta = mi_curr.bits() - mi_prev.bits();
        if delta < -1e-9 {
            return Err(Error::InternalConsistency {
                message: format!(
                    "conditional information of step `{name}` is negative: {delta}"
                ),
            });
        }
        steps.push(IncrementalStep {
            channel: name.clone(),
            conditional_mi: BitsValue::new(delta.max(0.0))?,
            sample_count: kept_curr.len(),
        });

        prev_codes = curr_codes;
        prev_arity = arity;
    }
    Ok(steps)
}

/// Deterministic per-channel seed, stable under channel selection. Uses a
/// splitmix64 step over the base seed and the schema channel index.
pub fn derive_seed(base: u64, channel_index: usize) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(channel_index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
