//! Run configuration: command-line flags layered over an optional flat
//! `key = value` file, layered over built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use lbpbevm::datasets::{LabelSource, TraceSchema, DEFAULT_MAX_SAMPLES};
use lbpbevm::ebt::{EbtParams, DEFAULT_LEARNERS, DEFAULT_MAX_SPLITS};
use lbpbevm::features::{Descriptor, ExtractionConfig, Normalization};
use lbpbevm::lbp::LbpBins;
use lbpbevm::signal2d::PadPolicy;

use crate::CliError;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_SEED: u64 = 42;

/// Parsed `key = value` lines. `#` starts a comment; keys use the long flag names.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            entries.insert(key.trim().replace('_', "-"), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// `flag` if given, else the file's value for `key`, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key '{key}': cannot parse '{raw}': {e}"))),
        }
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

/// Extraction flags shared by `extract` and `sweep`.
#[derive(clap::Args, Debug, Default, Clone)]
pub struct ExtractFlags {
    /// Matrix width (default: ceil(sqrt(trace length)))
    #[arg(long)]
    pub width: Option<usize>,
    /// Pad policy for the last row: truncate, zero-pad or edge-replicate
    #[arg(long)]
    pub pad: Option<PadPolicy>,
    /// BEVM kernel side (odd)
    #[arg(long)]
    pub kernel: Option<usize>,
    /// BEVM threshold
    #[arg(long)]
    pub thre: Option<f64>,
    /// Use 59-bin uniform-pattern histograms instead of 256 bins
    #[arg(long)]
    pub uniform_lbp: bool,
    /// lbp-bevm or lbp
    #[arg(long)]
    pub descriptor: Option<Descriptor>,
    /// l1 or counts
    #[arg(long)]
    pub normalization: Option<Normalization>,
}

/// How trace CSVs are read.
#[derive(clap::Args, Debug, Default, Clone)]
pub struct SchemaFlags {
    /// 0-based power column
    #[arg(long)]
    pub power_col: Option<usize>,
    /// 0-based timestamp column (checked, not used)
    #[arg(long)]
    pub time_col: Option<usize>,
    /// 0-based label column; labels come from file names when absent
    #[arg(long)]
    pub label_col: Option<usize>,
    /// Skip the first row of each file
    #[arg(long)]
    pub header: bool,
    /// Sampling rate in Hz, recorded with each signal
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// Leading samples kept per signature
    #[arg(long)]
    pub max_samples: Option<usize>,
}

#[derive(clap::Args, Debug, Default, Clone)]
pub struct EbtFlags {
    /// Trees in the ensemble
    #[arg(long)]
    pub learners: Option<usize>,
    /// Maximum internal nodes per tree
    #[arg(long)]
    pub max_splits: Option<usize>,
    /// Seed for bootstraps and fold assignment (default 42)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train every tree on the full training set instead of a bootstrap
    #[arg(long)]
    pub no_bootstrap: bool,
}

pub fn resolve_extraction(flags: &ExtractFlags, file: &ConfigFile) -> Result<ExtractionConfig, CliError> {
    let d = ExtractionConfig::default();
    let width = match file.pick::<String>(None, "width")? {
        _ if flags.width.is_some() => flags.width,
        Some(w) if w == "auto" => None,
        Some(w) => Some(
            w.parse()
                .map_err(|e| CliError::Usage(format!("config key 'width': {e}")))?,
        ),
        None => None,
    };
    Ok(ExtractionConfig {
        width,
        pad: file.pick(flags.pad, "pad")?.unwrap_or(d.pad),
        kernel: file.pick(flags.kernel, "kernel")?.unwrap_or(d.kernel),
        threshold: file.pick(flags.thre, "thre")?.unwrap_or(d.threshold),
        bins: if file.flag(flags.uniform_lbp, "uniform-lbp")? {
            LbpBins::Uniform
        } else {
            LbpBins::Full
        },
        normalization: file
            .pick(flags.normalization, "normalization")?
            .unwrap_or(d.normalization),
        descriptor: file.pick(flags.descriptor, "descriptor")?.unwrap_or(d.descriptor),
    })
}

pub fn resolve_schema(flags: &SchemaFlags, file: &ConfigFile) -> Result<TraceSchema, CliError> {
    let d = TraceSchema::default();
    Ok(TraceSchema {
        power_col: file.pick(flags.power_col, "power-col")?.unwrap_or(d.power_col),
        time_col: file.pick(flags.time_col, "time-col")?,
        label: match file.pick(flags.label_col, "label-col")? {
            Some(c) => LabelSource::Column(c),
            None => LabelSource::Filename,
        },
        has_header: file.flag(flags.header, "header")?,
        sample_rate_hz: file.pick(flags.sample_rate, "sample-rate")?.unwrap_or(d.sample_rate_hz),
        max_samples: file
            .pick(flags.max_samples, "max-samples")?
            .unwrap_or(DEFAULT_MAX_SAMPLES),
    })
}

pub fn resolve_ebt(flags: &EbtFlags, file: &ConfigFile) -> Result<EbtParams, CliError> {
    Ok(EbtParams {
        learners: file.pick(flags.learners, "learners")?.unwrap_or(DEFAULT_LEARNERS),
        max_splits: file.pick(flags.max_splits, "max-splits")?.unwrap_or(DEFAULT_MAX_SPLITS),
        seed: file.pick(flags.seed, "seed")?.unwrap_or(DEFAULT_SEED),
        bootstrap: !flags.no_bootstrap && file.pick::<bool>(None, "bootstrap")?.unwrap_or(true),
    })
}

pub fn extraction_lines(cfg: &ExtractionConfig) -> Vec<String> {
    vec![
        format!("descriptor = {}", cfg.descriptor),
        format!("width = {}", cfg.width.map_or("auto".to_string(), |w| w.to_string())),
        format!("pad = {}", cfg.pad),
        format!("kernel = {}", cfg.kernel),
        format!("thre = {}", cfg.threshold),
        format!("uniform-lbp = {}", cfg.bins == LbpBins::Uniform),
        format!("normalization = {}", cfg.normalization),
    ]
}

pub fn schema_lines(s: &TraceSchema) -> Vec<String> {
    let mut lines = vec![format!("power-col = {}", s.power_col)];
    if let Some(t) = s.time_col {
        lines.push(format!("time-col = {t}"));
    }
    lines.push(match s.label {
        LabelSource::Filename => "label-source = filename".to_string(),
        LabelSource::Column(c) => format!("label-col = {c}"),
    });
    lines.push(format!("header = {}", s.has_header));
    lines.push(format!("sample-rate = {}", s.sample_rate_hz));
    lines.push(format!("max-samples = {}", s.max_samples));
    lines
}

pub fn ebt_lines(p: &EbtParams) -> Vec<String> {
    vec![
        format!("learners = {}", p.learners),
        format!("max-splits = {}", p.max_splits),
        format!("seed = {}", p.seed),
        format!("bootstrap = {}", p.bootstrap),
    ]
}
