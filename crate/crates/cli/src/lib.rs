//! `lbpbevm` command-line front end.

pub mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use lbpbevm::datasets::{self, FeatureDataset, SynthSpec};
use lbpbevm::ebt::{self, EbtModel};
use lbpbevm::features::{self, ExtractionConfig};
use lbpbevm::metrics::{self, EvalReport};
use thiserror::Error;

use config::{ConfigFile, EbtFlags, ExtractFlags, SchemaFlags, DEFAULT_K, DEFAULT_SEED};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lbpbevm::Error),
    #[error("{0}")]
    Usage(String),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] io::Error),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "lbpbevm",
    version,
    about = "Appliance identification with LBP-BEVM signatures"
)]
pub struct Cli {
    /// Flat `key = value` file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Extract one feature row per trace into a feature CSV
    Extract {
        /// Trace CSV file or directory of trace CSVs
        input: PathBuf,
        #[command(flatten)]
        extract: ExtractFlags,
        #[command(flatten)]
        schema: SchemaFlags,
        /// Output feature CSV (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an ensemble on a feature CSV and write the model file
    Train {
        /// Labelled feature CSV
        features: PathBuf,
        #[command(flatten)]
        ebt: EbtFlags,
        /// Model JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict a class for every row of a feature CSV
    Classify {
        /// Feature CSV to label
        features: PathBuf,
        /// Model JSON written by `train`
        #[arg(long)]
        model: PathBuf,
        /// Output predictions CSV (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stratified k-fold evaluation of a feature CSV
    Evaluate {
        /// Labelled feature CSV
        features: PathBuf,
        #[command(flatten)]
        ebt: EbtFlags,
        /// Number of folds (default 10)
        #[arg(long)]
        k: Option<usize>,
        /// Directory for report.json, report.txt and confusion.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-extract and evaluate across threshold or kernel values
    Sweep {
        /// Trace CSV file or directory
        input: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values, e.g. 4200,4225,4250
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        extract: ExtractFlags,
        #[command(flatten)]
        schema: SchemaFlags,
        #[command(flatten)]
        ebt: EbtFlags,
        /// Number of folds (default 10)
        #[arg(long)]
        k: Option<usize>,
        /// Output table (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Within-class and cross-class NCC grids of a feature CSV
    Correlate {
        /// Labelled feature CSV
        features: PathBuf,
        /// Rows per class in the within-class grids
        #[arg(long, default_value_t = 6)]
        per_class: usize,
        /// Output directory for the grid files
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic trace corpus as one CSV per trace
    Synth {
        #[arg(long, default_value_t = 6)]
        classes: usize,
        #[arg(long, default_value_t = 40)]
        per_class: usize,
        #[arg(long, default_value_t = 8192)]
        length: usize,
        /// Gaussian noise standard deviation in watts
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Generator seed (default 42)
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Thre,
    Kernel,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.display().to_string(), e)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(io_err(path)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io("stdout".into(), e)),
    }
}

fn comment_block(header: &str, lines: &[String]) -> String {
    let mut s = format!("# {header}\n");
    for l in lines {
        s.push_str("# ");
        s.push_str(l);
        s.push('\n');
    }
    s
}

fn extract_dataset(input: &Path, cfg: &ExtractionConfig, schema: &datasets::TraceSchema) -> Result<FeatureDataset> {
    let traces = datasets::load_trace_csv(input, schema)?;
    let rows = features::extract_all(&traces.signals, cfg)?;
    Ok(FeatureDataset {
        labels: traces.labels(),
        rows,
        classes: traces.classes,
        source: traces.source,
    })
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Extract {
            input,
            extract,
            schema,
            out,
        } => {
            let cfg = config::resolve_extraction(&extract, &file)?;
            let schema = config::resolve_schema(&schema, &file)?;
            let ds = extract_dataset(&input, &cfg, &schema)?;
            let mut lines = vec!["lbpbevm extract".to_string(), format!("input = {}", input.display())];
            lines.extend(config::extraction_lines(&cfg));
            lines.extend(config::schema_lines(&schema));
            let mut buf = Vec::new();
            datasets::write_features(&mut buf, &ds, &lines).map_err(|e| CliError::Io("buffer".into(), e))?;
            write_output(out.as_deref(), &String::from_utf8_lossy(&buf))
        }
        Command::Train { features, ebt, out } => {
            let params = config::resolve_ebt(&ebt, &file)?;
            let ds = datasets::load_features(&features)?;
            let model = ebt::train_ebt(&ds.rows, &ds.labels, &ds.classes, params)?;
            fs::write(&out, model.to_json()).map_err(io_err(&out))?;
            let splits: usize = model.trees().iter().map(|t| t.split_count()).sum();
            println!(
                "trained {} trees ({} splits) on {} rows, {} classes -> {}",
                model.trees().len(),
                splits,
                ds.len(),
                ds.classes.len(),
                out.display()
            );
            Ok(())
        }
        Command::Classify { features, model, out } => {
            let text = fs::read_to_string(&model).map_err(io_err(&model))?;
            let model_path = model;
            let model = EbtModel::from_json(&text)?;
            let ds = datasets::load_features(&features)?;
            let predicted = model.predict_all(&ds.rows)?;
            let mut s = comment_block(
                "lbpbevm classify",
                &[
                    format!("model = {}", model_path.display()),
                    format!("features = {}", features.display()),
                ],
            );
            s.push_str("row,label,predicted\n");
            for (i, (&label, &p)) in ds.labels.iter().zip(&predicted).enumerate() {
                s.push_str(&format!("{i},{},{}\n", ds.classes[label], model.classes()[p]));
            }
            write_output(out.as_deref(), &s)
        }
        Command::Evaluate { features, ebt, k, out } => {
            let params = config::resolve_ebt(&ebt, &file)?;
            let k = file.pick(k, "k")?.unwrap_or(DEFAULT_K);
            let ds = datasets::load_features(&features)?;
            let report = metrics::kfold_evaluate(&ds, k, params, params.seed)?;
            let mut lines = vec![format!("features = {}", features.display()), format!("k = {k}")];
            lines.extend(config::ebt_lines(&params));
            let table = format!("{}{report}", comment_block("lbpbevm evaluate", &lines));
            if let Some(dir) = &out {
                write_report(dir, &report, &lines, &table)?;
            }
            write_output(None, &table)
        }
        Command::Sweep {
            input,
            param,
            values,
            extract,
            schema,
            ebt,
            k,
            out,
        } => {
            let base = config::resolve_extraction(&extract, &file)?;
            let schema = config::resolve_schema(&schema, &file)?;
            let params = config::resolve_ebt(&ebt, &file)?;
            let k = file.pick(k, "k")?.unwrap_or(DEFAULT_K);
            let table = sweep(&input, param, &values, base, &schema, params, k)?;
            write_output(out.as_deref(), &table)
        }
        Command::Correlate {
            features,
            per_class,
            out,
        } => {
            let ds = datasets::load_features(&features)?;
            let summary = correlate(&ds, per_class, &out)?;
            write_output(None, &summary)
        }
        Command::Synth {
            classes,
            per_class,
            length,
            noise,
            seed,
            out,
        } => {
            let seed = file.pick(seed, "seed")?.unwrap_or(DEFAULT_SEED);
            let mut spec = SynthSpec::new(classes, per_class, length, seed);
            spec.noise_sigma = noise;
            let ds = datasets::generate_synthetic(&spec)?;
            let written = datasets::write_trace_dir(&out, &ds)?;
            let manifest = out.join("synth.json");
            let json = serde_json::to_string_pretty(&spec).expect("spec serializes");
            fs::write(&manifest, json).map_err(io_err(&manifest))?;
            println!("wrote {} traces to {}", written.len(), out.display());
            Ok(())
        }
    }
}

fn write_report(dir: &Path, report: &EvalReport, lines: &[String], table: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = serde_json::json!({ "config": lines, "report": report });
    let json_path = dir.join("report.json");
    fs::write(&json_path, serde_json::to_string_pretty(&json).expect("json")).map_err(io_err(&json_path))?;
    let txt = dir.join("report.txt");
    fs::write(&txt, table).map_err(io_err(&txt))?;
    let csv = dir.join("confusion.csv");
    fs::write(&csv, report.confusion.to_csv()).map_err(io_err(&csv))
}

/// Re-extracts the corpus once per value and cross-validates each.
pub fn sweep(
    input: &Path,
    param: SweepParam,
    values: &[f64],
    base: ExtractionConfig,
    schema: &datasets::TraceSchema,
    params: ebt::EbtParams,
    k: usize,
) -> Result<String> {
    if values.len() < 2 {
        return Err(CliError::Usage(format!(
            "a sweep needs at least 2 values, got {}",
            values.len()
        )));
    }
    let configs: Vec<ExtractionConfig> = values
        .iter()
        .map(|&v| match param {
            SweepParam::Thre => Ok(ExtractionConfig { threshold: v, ..base }),
            SweepParam::Kernel => {
                let n = v as usize;
                if v.fract() != 0.0 || v < 0.0 || lbpbevm::bevm::check_kernel(n).is_err() {
                    return Err(CliError::Core(lbpbevm::Error::EvenKernel(v as usize)));
                }
                Ok(ExtractionConfig { kernel: n, ..base })
            }
        })
        .collect::<Result<_>>()?;
    let traces = datasets::load_trace_csv(input, schema)?;
    let labels = traces.labels();
    let name = match param {
        SweepParam::Thre => "thre",
        SweepParam::Kernel => "kernel",
    };
    let mut lines = vec![
        format!("input = {}", input.display()),
        format!("param = {name}"),
        format!("k = {k}"),
    ];
    lines.extend(
        config::extraction_lines(&base)
            .into_iter()
            .filter(|l| !l.starts_with(&format!("{name} = "))),
    );
    lines.extend(config::ebt_lines(&params));
    let mut table = comment_block("lbpbevm sweep", &lines);
    table.push_str(&format!("{name},accuracy,macro_f1\n"));
    for (v, cfg) in values.iter().zip(&configs) {
        let ds = FeatureDataset {
            rows: features::extract_all(&traces.signals, cfg)?,
            labels: labels.clone(),
            classes: traces.classes.clone(),
            source: traces.source.clone(),
        };
        let report = metrics::kfold_evaluate(&ds, k, params, params.seed)?;
        table.push_str(&format!("{v},{},{}\n", report.accuracy, report.macro_f1));
    }
    Ok(table)
}

fn grid_csv(names: &[String], grid: &[Vec<f64>]) -> String {
    let mut s = String::from("row");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (n, row) in names.iter().zip(grid) {
        s.push_str(n);
        for v in row {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

fn off_diagonal_mean(grid: &[Vec<f64>]) -> f64 {
    let n = grid.len();
    let sum: f64 = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| grid[a][b])
        .sum();
    sum / (n * (n - 1)) as f64
}

/// NCC grids for the first `per_class` rows of each class and for the first
/// row of every class; returns a summary of the off-diagonal means.
pub fn correlate(ds: &FeatureDataset, per_class: usize, out: &Path) -> Result<String> {
    if ds.len() < 2 {
        return Err(CliError::Usage("correlate needs at least 2 rows".into()));
    }
    if let Some(row) = ds.rows.iter().position(|r| r.iter().all(|&v| v == 0.0)) {
        return Err(lbpbevm::Error::ZeroVector { index: row }.into());
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut summary = String::from("# lbpbevm correlate\ngrid,size,mean_off_diagonal_ncc\n");
    let mut within_means = Vec::new();
    let mut firsts: Vec<(usize, usize)> = Vec::new();
    for (c, class) in ds.classes.iter().enumerate() {
        let members: Vec<usize> = (0..ds.len())
            .filter(|&i| ds.labels[i] == c)
            .take(per_class.max(1))
            .collect();
        if let Some(&first) = members.first() {
            firsts.push((c, first));
        }
        if members.len() < 2 {
            continue;
        }
        let vectors: Vec<&[f64]> = members.iter().map(|&i| ds.rows[i].as_slice()).collect();
        let grid = metrics::ncc_matrix(&vectors)?;
        let names: Vec<String> = members.iter().map(|i| format!("{class}#{i}")).collect();
        let path = out.join(format!("within_{class}.csv"));
        fs::write(&path, grid_csv(&names, &grid)).map_err(io_err(&path))?;
        let mean = off_diagonal_mean(&grid);
        within_means.push(mean);
        summary.push_str(&format!("within_{class},{},{mean}\n", members.len()));
    }
    if firsts.len() >= 2 {
        let vectors: Vec<&[f64]> = firsts.iter().map(|&(_, i)| ds.rows[i].as_slice()).collect();
        let grid = metrics::ncc_matrix(&vectors)?;
        let names: Vec<String> = firsts.iter().map(|&(c, _)| ds.classes[c].clone()).collect();
        let path = out.join("cross.csv");
        fs::write(&path, grid_csv(&names, &grid)).map_err(io_err(&path))?;
        summary.push_str(&format!("cross,{},{}\n", firsts.len(), off_diagonal_mean(&grid)));
    }
    if !within_means.is_empty() {
        let mean = within_means.iter().sum::<f64>() / within_means.len() as f64;
        summary.push_str(&format!("within_mean,{},{mean}\n", within_means.len()));
    }
    Ok(summary)
}
