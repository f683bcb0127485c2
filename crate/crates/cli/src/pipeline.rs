//! Command pipeline: validate → estimate → price → report, with the stable
//! exit-code contract (0 ok, 2 validation, 3 io, 4 estimation, 5 internal).
//!
//! Validation resolves the whole run up front; nothing is written unless
//! every input check passes. Channel estimation failures are isolated: one
//! broken channel lands in the report's `failures` list while the others
//! are still estimated, and the process exits 4.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use pigou_core::batch::RecordBatch;
use pigou_core::error::Error;
use pigou_core::estimate::{estimate_leakage, LeakageEstimate};
use pigou_core::pricing::{lambda_sweep, price_bundle, PricingMode, SweepTable};
use pigou_core::report::{LeakageReport, ReportFailure, ValuationReport};
use pigou_core::schema::{AttributeSchema, ChannelKind};

use crate::atomic::write_atomic;
use crate::config::{
    default_summary_path, resolve_path, ChannelSelect, ModeConfig, RunConfig,
};
use crate::summary;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_ESTIMATION: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

/// Test hook: set to `internal` to exercise the exit-5 path end to end.
pub const FAULT_INJECT_ENV: &str = "PIGOU_FAULT_INJECT";

#[derive(Debug, Clone, Serialize)]
pub struct ErrorItem {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
}

impl From<&Error> for ErrorItem {
    fn from(e: &Error) -> Self {
        ErrorItem {
            code: e.code().to_string(),
            message: e.to_string(),
            row: e.row(),
        }
    }
}

fn config_error(message: impl Into<String>) -> ErrorItem {
    ErrorItem {
        code: "CONFIG_INVALID".into(),
        message: message.into(),
        row: None,
    }
}

#[derive(Debug)]
pub struct Failure {
    pub exit: i32,
    pub errors: Vec<ErrorItem>,
}

impl Failure {
    fn new(exit: i32, errors: Vec<ErrorItem>) -> Self {
        Failure { exit, errors }
    }

    fn one(exit: i32, item: ErrorItem) -> Self {
        Failure::new(exit, vec![item])
    }
}

#[derive(Serialize)]
struct ValidationSummary {
    ok: bool,
    row_count: Option<usize>,
    channels: Vec<String>,
    errors: Vec<ErrorItem>,
}

/// Everything a run needs, fully resolved and validated.
pub struct PreparedRun {
    pub config: RunConfig,
    pub schema: AttributeSchema,
    pub batch: RecordBatch,
    pub schema_path: PathBuf,
    pub data_path: PathBuf,
    pub selected: Vec<String>,
}

pub struct Session {
    pub config_path: PathBuf,
    pub seed_override: Option<u64>,
    pub quiet: bool,
}

impl Session {
    fn note(&self, message: &str) {
        if !self.quiet {
            eprintln!("{message}");
        }
    }

    fn load_config(&self) -> Result<(RunConfig, PathBuf), Failure> {
        let text = std::fs::read_to_string(&self.config_path).map_err(|e| {
            Failure::one(
                EXIT_IO,
                ErrorItem {
                    code: "IO_READ_FAILED".into(),
                    message: format!("failed to read `{}`: {e}", self.config_path.display()),
                    row: None,
                },
            )
        })?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| {
            Failure::one(EXIT_VALIDATION, config_error(format!("run config: {e}")))
        })?;
        if let Some(seed) = self.seed_override {
            config.estimator.seed = seed;
        }
        let base = self
            .config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((config, base))
    }

    /// Loads and validates schema, data, and config coherence. Returns the
    /// full error list on failure; IO problems take exit 3, everything else 2.
    fn prepare(&self) -> Result<PreparedRun, Failure> {
        let (config, base) = self.load_config()?;
        let schema_path = resolve_path(&base, &config.schema_path);
        let data_path = resolve_path(&base, &config.data_path);

        let schema_text = std::fs::read_to_string(&schema_path).map_err(|e| {
            Failure::one(
                EXIT_IO,
                ErrorItem {
                    code: "IO_READ_FAILED".into(),
                    message: format!("failed to read `{}`: {e}", schema_path.display()),
                    row: None,
                },
            )
        })?;
        let schema = AttributeSchema::from_json_str(&schema_text)
            .map_err(|e| Failure::one(EXIT_VALIDATION, ErrorItem::from(&e)))?;

        let mut errors: Vec<ErrorItem> = Vec::new();
        let batch = match RecordBatch::from_csv_path(&data_path, &schema) {
            Ok(batch) => Some(batch),
            Err(batch_errors) => {
                let io = batch_errors
                    .iter()
                    .any(|e| matches!(e, Error::Io { .. }));
                let items: Vec<ErrorItem> = batch_errors.iter().map(ErrorItem::from).collect();
                if io {
                    return Err(Failure::new(EXIT_IO, items));
                }
                errors.extend(items);
                None
            }
        };

        let selected = self.check_coherence(&config, &schema, batch.as_ref(), &mut errors);
        if !errors.is_empty() {
            return Err(Failure::new(EXIT_VALIDATION, errors));
        }
        Ok(PreparedRun {
            config,
            schema,
            batch: batch.expect("batch present when no errors"),
            schema_path,
            data_path,
            selected,
        })
    }

    /// Cross-field checks; appends findings and returns the selected
    /// channels in schema order.
    fn check_coherence(
        &self,
        config: &RunConfig,
        schema: &AttributeSchema,
        batch: Option<&RecordBatch>,
        errors: &mut Vec<ErrorItem>,
    ) -> Vec<String> {
        let schema_channels: Vec<String> = schema
            .feature_channels()
            .iter()
            .map(|c| c.name.clone())
            .collect();

        let selected: Vec<String> = match &config.channels {
            ChannelSelect::Keyword(word) if word == "all" => schema_channels.clone(),
            ChannelSelect::Keyword(word) => {
                errors.push(config_error(format!(
                    "channels must be \"all\" or a list of names, got \"{word}\""
                )));
                vec![]
            }
            ChannelSelect::List(list) => {
                if list.is_empty() {
                    errors.push(config_error("channels list is empty"));
                }
                let mut seen = BTreeSet::new();
                for name in list {
                    if !schema_channels.contains(name) {
                        errors.push(ErrorItem::from(&Error::UnknownChannel {
                            channel: name.clone(),
                        }));
                    } else if !seen.insert(name.clone()) {
                        errors.push(config_error(format!(
                            "channel `{name}` listed more than once"
                        )));
                    }
                }
                // schema order, not listing order: reports are deterministic
                schema_channels
                    .iter()
                    .filter(|c| seen.contains(*c))
                    .cloned()
                    .collect()
            }
        };

        for (name, spec) in &config.bins {
            match schema.channel_index(name) {
                Err(e) => errors.push(ErrorItem::from(&e)),
                Ok(idx) => {
                    if schema.feature_channels()[idx].kind != ChannelKind::Continuous {
                        errors.push(ErrorItem::from(&Error::BinSpecOnCategorical {
                            channel: name.clone(),
                        }));
                    } else if let Err(e) = spec.validate() {
                        errors.push(ErrorItem::from(&e));
                    }
                }
            }
        }

        let est = &config.estimator;
        if !(est.percentile > 0.0 && est.percentile <= 1.0) {
            errors.push(config_error(format!(
                "estimator.percentile {} outside (0, 1]",
                est.percentile
            )));
        }
        if est.min_rows == 0 {
            errors.push(config_error("estimator.min_rows must be at least 1"));
        }
        if !(0.0..=1.0).contains(&config.flag_share) {
            errors.push(config_error(format!(
                "flag_share {} outside [0, 1]",
                config.flag_share
            )));
        }

        if let Some(policy) = &config.policy {
            if let Err(e) = policy.to_policy().validate() {
                errors.push(ErrorItem::from(&e));
            }
            if let Some(grid) = &policy.lambda_grid {
                if grid.is_empty() {
                    errors.push(ErrorItem::from(&Error::EmptyGrid));
                } else if grid.iter().any(|l| !l.is_finite() || *l < 0.0)
                    || grid.windows(2).any(|w| w[0] >= w[1])
                {
                    errors.push(ErrorItem::from(&Error::UnsortedGrid));
                }
            }
        }

        if let ModeConfig::Incremental { order } = &config.mode {
            if order.is_empty() {
                errors.push(ErrorItem::from(&Error::OrderMissing));
            }
            for name in order {
                if !selected.contains(name) {
                    errors.push(config_error(format!(
                        "incremental order names `{name}`, which is not among the selected channels"
                    )));
                }
            }
        }

        if let Some(batch) = batch {
            if batch.row_count() < est.min_rows {
                errors.push(ErrorItem::from(&Error::TooFewRows {
                    kept: batch.row_count(),
                    min: est.min_rows,
                }));
            }
        }

        selected
    }

    fn require_output_path(&self, run: &PreparedRun, base: &Path) -> Result<PathBuf, Failure> {
        match &run.config.output_path {
            Some(p) => Ok(resolve_path(base, p)),
            None => Err(Failure::one(
                EXIT_VALIDATION,
                config_error("output_path is required for this command"),
            )),
        }
    }

    fn require_policy(&self, run: &PreparedRun) -> Result<pigou_core::pricing::PricePolicy, Failure> {
        match &run.config.policy {
            Some(p) => Ok(p.to_policy()),
            None => Err(Failure::one(
                EXIT_VALIDATION,
                config_error("policy is required for this command"),
            )),
        }
    }

    /// Estimates the selected channels concurrently, merging results in
    /// schema order. Internal-consistency failures abort; everything else
    /// is isolated per channel.
    fn estimate_stage(
        &self,
        run: &PreparedRun,
    ) -> Result<(Vec<LeakageEstimate>, Vec<ReportFailure>), Failure> {
        if std::env::var(FAULT_INJECT_ENV).as_deref() == Ok("internal") {
            let e = Error::InternalConsistency {
                message: "fault injection requested via environment".into(),
            };
            return Err(Failure::one(EXIT_INTERNAL, ErrorItem::from(&e)));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(run.config.workers.unwrap_or(0))
            .build()
            .map_err(|e| {
                Failure::one(
                    EXIT_INTERNAL,
                    ErrorItem {
                        code: "INTERNAL_INCONSISTENCY".into(),
                        message: format!("worker pool: {e}"),
                        row: None,
                    },
                )
            })?;
        self.note(&format!(
            "estimating {} channel(s), seed {}",
            run.selected.len(),
            run.config.estimator.seed
        ));
        let results: Vec<(String, Result<LeakageEstimate, Error>)> = pool.install(|| {
            run.selected
                .par_iter()
                .map(|name| {
                    let leak = estimate_leakage(
                        &run.batch,
                        name,
                        &run.schema,
                        &run.config.estimator,
                        run.config.bins.get(name),
                    );
                    (name.clone(), leak)
                })
                .collect()
        });

        let mut estimates = Vec::new();
        let mut failures = Vec::new();
        for (name, outcome) in results {
            match outcome {
                Ok(leak) => estimates.push(leak),
                Err(e @ Error::InternalConsistency { .. }) => {
                    return Err(Failure::one(EXIT_INTERNAL, ErrorItem::from(&e)));
                }
                Err(e) => failures.push(ReportFailure {
                    channel: name,
                    code: e.code().to_string(),
                    message: e.to_string(),
                }),
            }
        }
        Ok((estimates, failures))
    }

    fn price_stage(
        &self,
        run: &PreparedRun,
        estimates: &[LeakageEstimate],
    ) -> Result<(pigou_core::pricing::BundlePricing, Option<SweepTable>), Failure> {
        let policy = self.require_policy(run)?;
        let estimation_failure = |e: &Error| {
            let exit = if matches!(e, Error::InternalConsistency { .. }) {
                EXIT_INTERNAL
            } else {
                EXIT_ESTIMATION
            };
            Failure::one(exit, ErrorItem::from(e))
        };
        let bundle = match &run.config.mode {
            ModeConfig::Marginal => {
                price_bundle(estimates, &policy, PricingMode::Marginal)
                    .map_err(|e| estimation_failure(&e))?
            }
            ModeConfig::Incremental { order } => {
                let bins = &run.config.bins;
                price_bundle(
                    estimates,
                    &policy,
                    PricingMode::Incremental {
                        order,
                        batch: &run.batch,
                        schema: &run.schema,
                        config: &run.config.estimator,
                        bin_override_for: &|name| bins.get(name).cloned(),
                        cell_cap: pigou_core::schema::DEFAULT_CELL_CAP,
                    },
                )
                .map_err(|e| estimation_failure(&e))?
            }
        };
        let sweep = match run
            .config
            .policy
            .as_ref()
            .and_then(|p| p.lambda_grid.as_ref())
        {
            Some(grid) => Some(
                lambda_sweep(estimates, policy.c_p, grid)
                    .map_err(|e| estimation_failure(&e))?,
            ),
            None => None,
        };
        Ok((bundle, sweep))
    }

    fn write_report(&self, path: &Path, text: &str) -> Result<(), Failure> {
        write_atomic(path, text).map_err(|e| {
            Failure::one(
                EXIT_IO,
                ErrorItem {
                    code: "IO_WRITE_FAILED".into(),
                    message: format!("failed to write `{}`: {e}", path.display()),
                    row: None,
                },
            )
        })?;
        self.note(&format!("wrote {}", path.display()));
        Ok(())
    }

    pub fn cmd_validate(&self) -> i32 {
        let (ok, row_count, channels, errors, exit) = match self.prepare() {
            Ok(run) => (
                true,
                Some(run.batch.row_count()),
                run.selected,
                vec![],
                EXIT_OK,
            ),
            Err(failure) => (false, None, vec![], failure.errors, failure.exit),
        };
        let summary = ValidationSummary {
            ok,
            row_count,
            channels,
            errors,
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        );
        exit
    }

    pub fn cmd_estimate(&self) -> i32 {
        match self.run_estimate() {
            Ok(code) => code,
            Err(failure) => self.fail(failure),
        }
    }

    fn run_estimate(&self) -> Result<i32, Failure> {
        let run = self.prepare()?;
        let base = self.config_base();
        let output_path = self.require_output_path(&run, &base)?;
        let (estimates, failures) = self.estimate_stage(&run)?;
        let report = LeakageReport::new(
            run.config.estimator.seed,
            run.schema_path.display().to_string(),
            run.data_path.display().to_string(),
            run.batch.row_count(),
            &run.config.estimator,
            &estimates,
            failures,
        );
        let text = report
            .to_json_string()
            .map_err(|e| Failure::one(EXIT_INTERNAL, ErrorItem::from(&e)))?;
        self.write_report(&output_path, &text)?;
        Ok(if report.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_ESTIMATION
        })
    }

    pub fn cmd_price(&self) -> i32 {
        match self.run_price(false) {
            Ok(code) => code,
            Err(failure) => self.fail(failure),
        }
    }

    pub fn cmd_audit(&self) -> i32 {
        match self.run_price(true) {
            Ok(code) => code,
            Err(failure) => self.fail(failure),
        }
    }

    fn run_price(&self, with_summary: bool) -> Result<i32, Failure> {
        let run = self.prepare()?;
        let base = self.config_base();
        let output_path = self.require_output_path(&run, &base)?;
        let policy = self.require_policy(&run)?;
        let (estimates, failures) = self.estimate_stage(&run)?;
        let (bundle, sweep) = self.price_stage(&run, &estimates)?;
        let report = ValuationReport::new(
            run.config.estimator.seed,
            run.schema_path.display().to_string(),
            run.data_path.display().to_string(),
            run.batch.row_count(),
            &run.config.estimator,
            &policy,
            &estimates,
            &bundle,
            sweep.as_ref(),
            failures,
        );
        let text = report
            .to_json_string()
            .map_err(|e| Failure::one(EXIT_INTERNAL, ErrorItem::from(&e)))?;
        self.write_report(&output_path, &text)?;

        if with_summary {
            let summary_text = summary::render(&report, run.config.flag_share);
            let summary_path = run
                .config
                .summary_path
                .as_ref()
                .map(|p| resolve_path(&base, p))
                .unwrap_or_else(|| default_summary_path(&output_path));
            self.write_report(&summary_path, &summary_text)?;
            if !self.quiet {
                print!("{summary_text}");
            }
        }
        Ok(if report.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_ESTIMATION
        })
    }

    fn config_base(&self) -> PathBuf {
        self.config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Prints the machine-readable error list and returns the exit code.
    fn fail(&self, failure: Failure) -> i32 {
        let summary = ValidationSummary {
            ok: false,
            row_count: None,
            channels: vec![],
            errors: failure.errors,
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        );
        failure.exit
    }
}
