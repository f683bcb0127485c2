//! Discretization of continuous feature channels into bin indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a continuous channel is cut into cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum BinSpec {
    EqualWidth { bin_count: usize },
    EqualFrequency { bin_count: usize },
    ExplicitEdges { edges: Vec<f64> },
}

impl BinSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BinSpec::EqualWidth { bin_count } | BinSpec::EqualFrequency { bin_count } => {
                if *bin_count < 1 {
                    return Err(Error::InvalidBinCount);
                }
            }
            BinSpec::ExplicitEdges { edges } => {
                if edges.len() < 2
                    || edges.iter().any(|e| !e.is_finite())
                    || edges.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::InvalidEdges);
                }
            }
        }
        Ok(())
    }
}

/// Outcome of binning one column: a cell index per value plus the realized
/// edges, kept for reproducibility.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub cells: Vec<usize>,
    /// Realized edges, length `bin_count + 1`. For a constant column the two
    /// edges coincide.
    pub edges: Vec<f64>,
    pub bin_count: usize,
    /// Values below the first explicit edge, clamped into bin 0.
    pub clamped_low: usize,
    /// Values above the last explicit edge, clamped into the final bin.
    pub clamped_high: usize,
    pub constant_column: bool,
}

/// Maps every value to exactly one bin.
///
/// Equal-width bins span `[min, max]`, right-open except the final bin which
/// is right-closed. Equal-frequency edges sit on order statistics; a value
/// equal to an interior edge stays in the lower bin. Explicit edges clamp
/// out-of-range values into the boundary bins and count them.
///
/// A constant column collapses to a single bin with a warning, unless
/// `strict_bin_count` insists on the requested bin count.
pub fn discretize(values: &[f64], spec: &BinSpec, strict_bin_count: bool) -> Result<Discretized> {
    if values.is_empty() {
        return Err(Error::EmptyColumn);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InternalConsistency {
            message: "non-finite value reached discretization".into(),
        });
    }
    spec.validate()?;

    match spec {
        BinSpec::EqualWidth { bin_count } => {
            equal_width(values, *bin_count, strict_bin_count)
        }
        BinSpec::EqualFrequency { bin_count } => {
            equal_frequency(values, *bin_count, strict_bin_count)
        }
        BinSpec::ExplicitEdges { edges } => Ok(explicit_edges(values, edges)),
    }
}

fn constant_result(values: &[f64], bin_count: usize, strict: bool) -> Result<Discretized> {
    if strict && bin_count > 1 {
        return Err(Error::ConstantColumn {
            channel: String::new(),
            bin_count,
        });
    }
    Ok(Discretized {
        cells: vec![0; values.len()],
        edges: vec![values[0], values[0]],
        bin_count: 1,
        clamped_low: 0,
        clamped_high: 0,
        constant_column: true,
    })
}

fn equal_width(values: &[f64], bin_count: usize, strict: bool) -> Result<Discretized> {
    if bin_count > values.len() {
        return Err(Error::BinCountExceedsRows {
            bin_count,
            rows: values.len(),
        });
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return constant_result(values, bin_count, strict);
    }
    let mut edges = Vec::with_capacity(bin_count + 1);
    for i in 0..=bin_count {
        edges.push(min + (max - min) * i as f64 / bin_count as f64);
    }
    edges[bin_count] = max;
    let interior = &edges[1..bin_count];
    let cells = values
        .iter()
        .map(|&v| interior.partition_point(|&e| e <= v).min(bin_count - 1))
        .collect();
    Ok(Discretized {
        cells,
        edges,
        bin_count,
        clamped_low: 0,
        clamped_high: 0,
        constant_column: false,
    })
}

fn equal_frequency(values: &[f64], bin_count: usize, strict: bool) -> Result<Discretized> {
    let n = values.len();
    if bin_count > n {
        return Err(Error::BinCountExceedsRows {
            bin_count,
            rows: n,
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted[0] == sorted[n - 1] {
        return constant_result(values, bin_count, strict);
    }
    // Interior edge i sits on the last order statistic of the i-th chunk;
    // ties at an edge stay in the lower bin.
    let mut interior = Vec::with_capacity(bin_count - 1);
    for i in 1..bin_count {
        let pos = (i * n).div_ceil(bin_count);
        interior.push(sorted[pos - 1]);
    }
    let cells = values
        .iter()
        .map(|&v| interior.partition_point(|&e| e < v))
        .collect();
    let mut edges = Vec::with_capacity(bin_count + 1);
    edges.push(sorted[0]);
    edges.extend_from_slice(&interior);
    edges.push(sorted[n - 1]);
    Ok(Discretized {
        cells,
        edges,
        bin_count,
        clamped_low: 0,
        clamped_high: 0,
        constant_column: false,
    })
}

fn explicit_edges(values: &[f64], edges: &[f64]) -> Discretized {
    let bin_count = edges.len() - 1;
    let first = edges[0];
    let last = edges[bin_count];
    let interior = &edges[1..bin_count];
    let mut clamped_low = 0;
    let mut clamped_high = 0;
    let cells = values
        .iter()
        .map(|&v| {
            if v < first {
                clamped_low += 1;
                0
            } else if v > last {
                clamped_high += 1;
                bin_count - 1
            } else {
                interior.partition_point(|&e| e <= v).min(bin_count - 1)
            }
        })
        .collect();
    Discretized {
        cells,
        edges: edges.to_vec(),
        bin_count,
        clamped_low,
        clamped_high,
        constant_column: false,
    }
}
