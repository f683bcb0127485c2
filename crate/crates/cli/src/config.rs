//! The run-config file: one JSON document describing a complete,
//! reproducible audit run. Flags only override the seed and paths; the
//! config is the versionable record of what was computed.

use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pigou_core::bins::BinSpec;
use pigou_core::estimate::EstimatorConfig;
use pigou_core::pricing::PricePolicy;

pub const DEFAULT_FLAG_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_path: PathBuf,
    pub data_path: PathBuf,
    #[serde(default)]
    pub channels: ChannelSelect,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Per-channel overrides of the schema's bin specs.
    #[serde(default)]
    pub bins: BTreeMap<String, BinSpec>,
    #[serde(default)]
    pub policy: Option<PolicyConfig>,
    #[serde(default)]
    pub mode: ModeConfig,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Where `audit` writes the text summary; defaults to the report path
    /// with a `.txt` extension.
    #[serde(default)]
    pub summary_path: Option<PathBuf>,
    /// Worker threads for channel estimation; omitted = one per core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// `audit` flags channels whose surcharge exceeds this share of their
    /// total price.
    #[serde(default = "default_flag_share")]
    pub flag_share: f64,
}

fn default_flag_share() -> f64 {
    DEFAULT_FLAG_SHARE
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ChannelSelect {
    /// The literal string `"all"`.
    Keyword(String),
    List(Vec<String>),
}

impl Default for ChannelSelect {
    fn default() -> Self {
        ChannelSelect::Keyword("all".into())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    #[default]
    Marginal,
    Incremental {
        order: Vec<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub c_p: f64,
    pub lambda: f64,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default = "default_currency")]
    pub currency: String,
    #[serde(default = "default_rounding")]
    pub rounding_dp: u8,
}

fn default_currency() -> String {
    "USD".into()
}

fn default_rounding() -> u8 {
    6
}

impl PolicyConfig {
    pub fn to_policy(&self) -> PricePolicy {
        PricePolicy {
            c_p: self.c_p,
            lambda: self.lambda,
            currency: self.currency.clone(),
            rounding_dp: self.rounding_dp,
        }
    }
}

/// Joins a config-relative path onto the config file's directory.
pub fn resolve_path(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Default summary path for `audit`: the report path with `.txt`.
pub fn default_summary_path(report_path: &Path) -> PathBuf {
    report_path.with_extension("txt")
}
