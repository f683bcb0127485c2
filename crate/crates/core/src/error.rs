//! Error type shared across the engine, with stable machine-readable codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("duplicate name `{name}` in schema")]
    DuplicateName { name: String },

    #[error("protected dimension `{dim}` declares no levels")]
    EmptyDimension { dim: String },

    #[error("schema declares no protected dimensions")]
    NoProtectedDims,

    #[error("profile space of {cells} cells exceeds the cap of {cap}")]
    ProfileSpaceTooLarge { cells: u128, cap: usize },

    #[error("coordinate {value} out of range for dimension `{dim}` (cardinality {cardinality})")]
    CoordinateOutOfRange {
        dim: String,
        value: usize,
        cardinality: usize,
    },

    #[error("flat index {index} out of range for profile space of {cells} cells")]
    IndexOutOfRange { index: usize, cells: usize },

    #[error("continuous channel `{channel}` has no bin spec")]
    MissingBinSpec { channel: String },

    #[error("categorical channel `{channel}` must not carry a bin spec")]
    BinSpecOnCategorical { channel: String },

    #[error("expected {expected} weights, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("negative mass {value} at cell ({x}, {s})")]
    NegativeMass { x: usize, s: usize, value: f64 },

    #[error("all weights are zero")]
    AllZero,

    #[error("probability vector sums to {total}, outside tolerance of 1")]
    NotNormalized { total: f64 },

    #[error("merge map has {got} entries for {expected} feature cells")]
    IncompleteMergeMap { expected: usize, got: usize },

    #[error("explicit bin edges must be finite, at least two, and strictly increasing")]
    InvalidEdges,

    #[error("bin count must be at least 1")]
    InvalidBinCount,

    #[error("bin count {bin_count} exceeds the {rows} available rows")]
    BinCountExceedsRows { bin_count: usize, rows: usize },

    #[error("column `{channel}` is constant; cannot form {bin_count} bins")]
    ConstantColumn { channel: String, bin_count: usize },

    #[error("no values to discretize")]
    EmptyColumn,

    #[error("column `{column}` missing from data header")]
    ColumnMissing { column: String },

    #[error("unknown level `{value}` for `{column}` at row {row}")]
    UnknownLevel {
        column: String,
        value: String,
        row: usize,
    },

    #[error("value `{value}` for `{column}` at row {row} is not a finite number")]
    InvalidNumber {
        column: String,
        value: String,
        row: usize,
    },

    #[error("malformed csv: {message}")]
    CsvInvalid { message: String },

    #[error("malformed json: {message}")]
    JsonInvalid { message: String },

    #[error("failed to read `{path}`: {message}")]
    Io { path: String, message: String },

    #[error("channel `{channel}` not declared in schema")]
    UnknownChannel { channel: String },

    #[error("too few rows: {kept} usable, minimum {min}")]
    TooFewRows { kept: usize, min: usize },

    #[error("price policy invalid: {message}")]
    InvalidPolicy { message: String },

    #[error("lambda grid is empty")]
    EmptyGrid,

    #[error("lambda grid values must be nonnegative and strictly increasing")]
    UnsortedGrid,

    #[error("incremental pricing requires a non-empty disclosure order")]
    OrderMissing,

    #[error("internal consistency: {message}")]
    InternalConsistency { message: String },
}

impl Error {
    /// Stable machine-readable code, part of the CLI contract.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateName { .. } => "DUPLICATE_NAME",
            Error::EmptyDimension { .. } => "EMPTY_DIMENSION",
            Error::NoProtectedDims => "NO_PROTECTED_DIMS",
            Error::ProfileSpaceTooLarge { .. } => "PROFILE_SPACE_TOO_LARGE",
            Error::CoordinateOutOfRange { .. } => "COORDINATE_OUT_OF_RANGE",
            Error::IndexOutOfRange { .. } => "INDEX_OUT_OF_RANGE",
            Error::MissingBinSpec { .. } => "MISSING_BIN_SPEC",
            Error::BinSpecOnCategorical { .. } => "BIN_SPEC_ON_CATEGORICAL",
            Error::ShapeMismatch { .. } => "SHAPE_MISMATCH",
            Error::NegativeMass { .. } => "NEGATIVE_MASS",
            Error::AllZero => "ALL_ZERO",
            Error::NotNormalized { .. } => "NOT_NORMALIZED",
            Error::IncompleteMergeMap { .. } => "INCOMPLETE_MERGE_MAP",
            Error::InvalidEdges => "INVALID_EDGES",
            Error::InvalidBinCount => "INVALID_BIN_COUNT",
            Error::BinCountExceedsRows { .. } => "BIN_COUNT_EXCEEDS_ROWS",
            Error::ConstantColumn { .. } => "CONSTANT_COLUMN",
            Error::EmptyColumn => "EMPTY_COLUMN",
            Error::ColumnMissing { .. } => "SCHEMA_COLUMN_MISSING",
            Error::UnknownLevel { .. } => "UNKNOWN_LEVEL",
            Error::InvalidNumber { .. } => "INVALID_NUMBER",
            Error::CsvInvalid { .. } => "CSV_INVALID",
            Error::JsonInvalid { .. } => "JSON_INVALID",
            Error::Io { .. } => "IO_READ_FAILED",
            Error::UnknownChannel { .. } => "UNKNOWN_CHANNEL",
            Error::TooFewRows { .. } => "TOO_FEW_ROWS",
            Error::InvalidPolicy { .. } => "INVALID_POLICY",
            Error::EmptyGrid => "EMPTY_GRID",
            Error::UnsortedGrid => "UNSORTED_GRID",
            Error::OrderMissing => "ORDER_MISSING",
            Error::InternalConsistency { .. } => "INTERNAL_INCONSISTENCY",
        }
    }

    /// 1-based data row the error points at, when it is row-specific.
    pub fn row(&self) -> Option<usize> {
        match self {
            Error::UnknownLevel { row, .. } | Error::InvalidNumber { row, .. } => Some(*row),
            _ => None,
        }
    }
}
