//! Protected-attribute schemas and the profile space they span.
//!
//! A schema declares the protected dimensions `S = (S_1, ..., S_m)` and the
//! observed feature channels. The profile space is the full Cartesian
//! product of the dimension levels; one joint configuration is a
//! [`ProfileCell`], addressed by a row-major flat index.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::bins::BinSpec;
use crate::error::{Error, Result};

/// Default cap on the profile-space size. Schemas whose level product
/// exceeds this are rejected so that exact joint tabulation stays feasible.
pub const DEFAULT_CELL_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtectedDim {
    pub name: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureChannel {
    pub name: String,
    pub kind: ChannelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_spec: Option<BinSpec>,
}

/// The on-disk schema document. Key names are part of the file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSpec {
    pub protected_dims: Vec<ProtectedDim>,
    pub feature_channels: Vec<FeatureChannel>,
}

/// A validated schema. Dimension order is authoritative: flattening and all
/// report ordering follow it.
#[derive(Debug, Clone)]
pub struct AttributeSchema {
    protected_dims: Vec<ProtectedDim>,
    feature_channels: Vec<FeatureChannel>,
    cardinalities: Vec<usize>,
    profile_cells: usize,
}

/// One joint configuration of the protected dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileCell {
    pub coordinates: Vec<usize>,
}

impl AttributeSchema {
    /// Validates a schema description against the default cell cap.
    pub fn build(spec: SchemaSpec) -> Result<Self> {
        Self::build_with_cap(spec, DEFAULT_CELL_CAP)
    }

    pub fn build_with_cap(spec: SchemaSpec, cap: usize) -> Result<Self> {
        if spec.protected_dims.is_empty() {
            return Err(Error::NoProtectedDims);
        }
        let mut names = BTreeSet::new();
        for dim in &spec.protected_dims {
            if !names.insert(dim.name.as_str()) {
                return Err(Error::DuplicateName {
                    name: dim.name.clone(),
                });
            }
            if dim.levels.is_empty() {
                return Err(Error::EmptyDimension {
                    dim: dim.name.clone(),
                });
            }
            let mut levels = BTreeSet::new();
            for level in &dim.levels {
                if !levels.insert(level.as_str()) {
                    return Err(Error::DuplicateName {
                        name: format!("{}::{}", dim.name, level),
                    });
                }
            }
        }
        for channel in &spec.feature_channels {
            if !names.insert(channel.name.as_str()) {
                return Err(Error::DuplicateName {
                    name: channel.name.clone(),
                });
            }
            match channel.kind {
                ChannelKind::Continuous => match &channel.bin_spec {
                    Some(spec) => spec.validate()?,
                    None => {
                        return Err(Error::MissingBinSpec {
                            channel: channel.name.clone(),
                        })
                    }
                },
                ChannelKind::Categorical => {
                    if channel.bin_spec.is_some() {
                        return Err(Error::BinSpecOnCategorical {
                            channel: channel.name.clone(),
                        });
                    }
                }
            }
        }

        let mut product: u128 = 1;
        for dim in &spec.protected_dims {
            product = product.saturating_mul(dim.levels.len() as u128);
        }
        if product > cap as u128 {
            return Err(Error::ProfileSpaceTooLarge {
                cells: product,
                cap,
            });
        }

        let cardinalities = spec.protected_dims.iter().map(|d| d.levels.len()).collect();
        Ok(AttributeSchema {
            protected_dims: spec.protected_dims,
            feature_channels: spec.feature_channels,
            cardinalities,
            profile_cells: product as usize,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: SchemaSpec = serde_json::from_str(text).map_err(|e| Error::JsonInvalid {
            message: format!("schema: {e}"),
        })?;
        Self::build(spec)
    }

    /// Number of protected dimensions `m`.
    pub fn dim_count(&self) -> usize {
        self.protected_dims.len()
    }

    pub fn protected_dims(&self) -> &[ProtectedDim] {
        &self.protected_dims
    }

    pub fn feature_channels(&self) -> &[FeatureChannel] {
        &self.feature_channels
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    /// Size of the full profile space (product of cardinalities).
    pub fn profile_cells(&self) -> usize {
        self.profile_cells
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.feature_channels
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownChannel {
                channel: name.to_string(),
            })
    }

    pub fn level_index(&self, dim_index: usize, label: &str) -> Option<usize> {
        self.protected_dims[dim_index]
            .levels
            .iter()
            .position(|l| l == label)
    }

    /// Row-major flat index of a profile cell, in schema dimension order.
    pub fn flatten(&self, cell: &ProfileCell) -> Result<usize> {
        if cell.coordinates.len() != self.dim_count() {
            return Err(Error::ShapeMismatch {
                expected: self.dim_count(),
                got: cell.coordinates.len(),
            });
        }
        let mut index = 0usize;
        for (i, (&coord, &card)) in cell
            .coordinates
            .iter()
            .zip(&self.cardinalities)
            .enumerate()
        {
            if coord >= card {
                return Err(Error::CoordinateOutOfRange {
                    dim: self.protected_dims[i].name.clone(),
                    value: coord,
                    cardinality: card,
                });
            }
            index = index * card + coord;
        }
        Ok(index)
    }

    /// Inverse of [`flatten`](Self::flatten); round-trips exactly.
    pub fn unflatten(&self, index: usize) -> Result<ProfileCell> {
        if index >= self.profile_cells {
            return Err(Error::IndexOutOfRange {
                index,
                cells: self.profile_cells,
            });
        }
        let mut coords = vec![0usize; self.dim_count()];
        let mut rest = index;
        for (i, &card) in self.cardinalities.iter().enumerate().rev() {
            coords[i] = rest % card;
            rest /= card;
        }
        Ok(ProfileCell {
            coordinates: coords,
        })
    }

    /// Human-readable label for a flat profile index, e.g. `female|65+|disabled`.
    pub fn profile_label(&self, index: usize) -> Result<String> {
        let cell = self.unflatten(index)?;
        let parts: Vec<&str> = cell
            .coordinates
            .iter()
            .zip(&self.protected_dims)
            .map(|(&c, dim)| dim.levels[c].as_str())
            .collect();
        Ok(parts.join("|"))
    }
}
