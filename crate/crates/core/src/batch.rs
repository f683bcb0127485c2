//! Raw tabular records aligned with a schema.
//!
//! Ingestion is strict: every protected-dimension value must be a declared
//! level, continuous values must parse to finite numbers, and all problems
//! are collected with 1-based data row indices. An empty string is a
//! missing value; missing values are dropped (and counted) per channel at
//! estimation time, never imputed.

use std::io::Read;
use std::path::Path;

use crate::error::Error;
use crate::schema::{AttributeSchema, ChannelKind};

/// Minimum usable rows for any estimation to proceed.
pub const DEFAULT_MIN_ROWS: usize = 30;

#[derive(Debug, Clone)]
pub enum ChannelColumn {
    /// Interned codes into the sorted list of distinct observed labels.
    Categorical {
        codes: Vec<Option<u32>>,
        levels: Vec<String>,
    },
    Continuous { values: Vec<Option<f64>> },
}

/// A validated batch of records, column-major, aligned with the schema.
#[derive(Debug, Clone)]
pub struct RecordBatch {
    row_count: usize,
    /// Flattened profile index per row; `None` when any dimension is missing.
    profile_flat: Vec<Option<u32>>,
    /// One column per schema feature channel, in schema order.
    channel_columns: Vec<ChannelColumn>,
}

impl RecordBatch {
    pub fn from_csv_path(
        path: &Path,
        schema: &AttributeSchema,
    ) -> Result<RecordBatch, Vec<Error>> {
        let file = std::fs::File::open(path).map_err(|e| {
            vec![Error::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            }]
        })?;
        Self::from_csv_reader(file, schema)
    }

    /// Reads a UTF-8 CSV with a header row. Column names must cover every
    /// schema dimension and channel; extra columns are ignored.
    pub fn from_csv_reader<R: Read>(
        reader: R,
        schema: &AttributeSchema,
    ) -> Result<RecordBatch, Vec<Error>> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);

        let headers = match rdr.headers() {
            Ok(h) => h.clone(),
            Err(e) => {
                return Err(vec![Error::CsvInvalid {
                    message: e.to_string(),
                }])
            }
        };
        let col_of = |name: &str| headers.iter().position(|h| h == name);

        let mut errors = Vec::new();
        let mut dim_cols = Vec::with_capacity(schema.dim_count());
        for dim in schema.protected_dims() {
            match col_of(&dim.name) {
                Some(c) => dim_cols.push(c),
                None => errors.push(Error::ColumnMissing {
                    column: dim.name.clone(),
                }),
            }
        }
        let mut chan_cols = Vec::with_capacity(schema.feature_channels().len());
        for channel in schema.feature_channels() {
            match col_of(&channel.name) {
                Some(c) => chan_cols.push(c),
                None => errors.push(Error::ColumnMissing {
                    column: channel.name.clone(),
                }),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let mut profile_flat: Vec<Option<u32>> = Vec::new();
        let mut raw_channels: Vec<Vec<Option<String>>> =
            vec![Vec::new(); schema.feature_channels().len()];
        let mut coords = vec![0usize; schema.dim_count()];

        for (row_idx, record) in rdr.records().enumerate() {
            let row = row_idx + 1; // 1-based data rows
            let record = match record {
                Ok(r) => r,
                Err(e) => {
                    errors.push(Error::CsvInvalid {
                        message: format!("row {row}: {e}"),
                    });
                    continue;
                }
            };

            let mut profile_ok = true;
            for (d, &col) in dim_cols.iter().enumerate() {
                let raw = record.get(col).unwrap_or("");
                if raw.is_empty() {
                    profile_ok = false;
                    continue;
                }
                match schema.level_index(d, raw) {
                    Some(level) => coords[d] = level,
                    None => {
                        errors.push(Error::UnknownLevel {
                            column: schema.protected_dims()[d].name.clone(),
                            value: raw.to_string(),
                            row,
                        });
                        profile_ok = false;
                    }
                }
            }
            let flat = if profile_ok {
                // coords are validated level indices; flattening cannot fail
                let mut index = 0usize;
                for (&c, &card) in coords.iter().zip(schema.cardinalities()) {
                    index = index * card + c;
                }
                Some(index as u32)
            } else {
                None
            };
            profile_flat.push(flat);

            for (k, (&col, channel)) in chan_cols
                .iter()
                .zip(schema.feature_channels())
                .enumerate()
            {
                let raw = record.get(col).unwrap_or("");
                if raw.is_empty() {
                    raw_channels[k].push(None);
                    continue;
                }
                if channel.kind == ChannelKind::Continuous {
                    match raw.parse::<f64>() {
                        Ok(v) if v.is_finite() => {}
                        _ => {
                            errors.push(Error::InvalidNumber {
                                column: channel.name.clone(),
                                value: raw.to_string(),
                                row,
                            });
                            raw_channels[k].push(None);
                            continue;
                        }
                    }
                }
                raw_channels[k].push(Some(raw.to_string()));
            }
        }

        if !errors.is_empty() {
            return Err(errors);
        }

        let row_count = profile_flat.len();
        let channel_columns = raw_channels
            .into_iter()
            .zip(schema.feature_channels())
            .map(|(raw, channel)| match channel.kind {
                ChannelKind::Categorical => {
                    let mut levels: Vec<String> =
                        raw.iter().flatten().cloned().collect();
                    levels.sort();
                    levels.dedup();
                    let codes = raw
                        .into_iter()
                        .map(|v| {
                            v.map(|label| {
                                levels.binary_search(&label).expect("interned label") as u32
                            })
                        })
                        .collect();
                    ChannelColumn::Categorical { codes, levels }
                }
                ChannelKind::Continuous => ChannelColumn::Continuous {
                    values: raw
                        .into_iter()
                        .map(|v| v.map(|s| s.parse::<f64>().expect("validated number")))
                        .collect(),
                },
            })
            .collect();

        Ok(RecordBatch {
            row_count,
            profile_flat,
            channel_columns,
        })
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    /// Flattened profile index per row (`None` = some dimension missing).
    pub fn profile_flat(&self) -> &[Option<u32>] {
        &self.profile_flat
    }

    pub fn channel_column(&self, index: usize) -> &ChannelColumn {
        &self.channel_columns[index]
    }
}
