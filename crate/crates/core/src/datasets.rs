//! Labeled trace and feature datasets: trace CSV ingestion, the feature CSV
//! format, and a seeded generator of synthetic appliance traces.
//!
//! Feature CSV rows are `label,v1,...,vD`. Lines starting with `#` carry
//! free-form metadata (the resolved extraction config) and are skipped on
//! load, as are blank lines. Values are written in Rust's shortest
//! round-trip decimal form, so a save/load cycle is exact.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal2d::PowerSignal;

/// Default cap on samples kept per signature (leading segment).
pub const DEFAULT_MAX_SAMPLES: usize = 1 << 20;

/// Power traces with class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceDataset {
    pub signals: Vec<PowerSignal>,
    pub classes: Vec<String>,
    pub source: String,
}

impl TraceDataset {
    pub fn labels(&self) -> Vec<usize> {
        self.signals.iter().map(|s| s.label.unwrap_or(0)).collect()
    }
}

/// Pre-extracted feature rows with class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
    pub source: String,
}

impl FeatureDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Builds a dataset from `(label name, row)` pairs; classes are sorted by name.
    pub fn from_named(named: Vec<(String, Vec<f64>)>, source: impl Into<String>) -> Result<Self> {
        let classes: Vec<String> = named
            .iter()
            .map(|(n, _)| n.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut rows = Vec::with_capacity(named.len());
        let mut labels = Vec::with_capacity(named.len());
        for (name, row) in named {
            labels.push(classes.binary_search(&name).expect("class collected above"));
            rows.push(row);
        }
        Ok(Self {
            rows,
            labels,
            classes,
            source: source.into(),
        })
    }

    /// Samples per class, indexed like `classes`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows with the given label, in dataset order.
    pub fn rows_of(&self, label: usize) -> Vec<&[f64]> {
        self.rows
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == label)
            .map(|(r, _)| r.as_slice())
            .collect()
    }
}

/// Where a trace's class label comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelSource {
    /// File stem up to the first `_` (`kettle_07.csv` is a kettle).
    Filename,
    /// A column holding the label; each run of equal labels is one signature.
    Column(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSchema {
    /// 0-based column holding real power in watts.
    pub power_col: usize,
    /// Optional 0-based timestamp column; only checked for being numeric.
    pub time_col: Option<usize>,
    pub label: LabelSource,
    pub has_header: bool,
    pub sample_rate_hz: f64,
    /// Keep at most this many leading samples per signature.
    pub max_samples: usize,
}

impl Default for TraceSchema {
    fn default() -> Self {
        Self {
            power_col: 1,
            time_col: None,
            label: LabelSource::Filename,
            has_header: false,
            sample_rate_hz: 1.0,
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }
}

fn label_from_filename(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match stem.split_once('_') {
        Some((head, _)) => head.to_string(),
        None => stem,
    }
}

fn parse_field(path: &Path, row: usize, col: usize, field: Option<&str>) -> Result<f64> {
    let field = field.ok_or_else(|| Error::MissingColumn {
        path: path.to_path_buf(),
        row,
        col,
    })?;
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            col,
            message: format!("non-finite value {v}"),
        }),
        Err(e) => Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            col,
            message: format!("'{field}': {e}"),
        }),
    }
}

/// Named signatures from one trace file.
fn read_trace_file(path: &Path, schema: &TraceSchema) -> Result<Vec<(String, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let file_label = label_from_filename(path);
    let mut segments: Vec<(String, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if let Some(tc) = schema.time_col {
            parse_field(path, row, tc, record.get(tc))?;
        }
        let power = parse_field(path, row, schema.power_col, record.get(schema.power_col))?;
        if power < 0.0 {
            return Err(Error::NegativePower {
                path: path.to_path_buf(),
                row,
                value: power,
            });
        }
        let label = match schema.label {
            LabelSource::Filename => file_label.as_str(),
            LabelSource::Column(c) => record.get(c).ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                row,
                col: c,
            })?,
        };
        match segments.last_mut() {
            Some((name, samples)) if name == label => samples.push(power),
            _ => segments.push((label.to_string(), vec![power])),
        }
    }
    for (_, samples) in &mut segments {
        samples.truncate(schema.max_samples);
    }
    Ok(segments)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.to_path_buf(),
            row,
            col: 0,
            message: format!("{other:?}"),
        },
    }
}

/// CSV files under `path` (or `path` itself), sorted lexicographically.
pub fn trace_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        let is_csv = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if p.is_file() && is_csv {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads one file or every `*.csv` in a directory into labeled signals.
pub fn load_trace_csv(path: &Path, schema: &TraceSchema) -> Result<TraceDataset> {
    let files = trace_files(path)?;
    let per_file: Vec<Vec<(String, Vec<f64>)>> = files
        .par_iter()
        .map(|f| read_trace_file(f, schema))
        .collect::<Result<_>>()?;
    let named: Vec<(String, Vec<f64>)> = per_file.into_iter().flatten().collect();
    if named.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes: Vec<String> = named
        .iter()
        .map(|(n, _)| n.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let signals = named
        .into_iter()
        .map(|(name, samples)| {
            let label = classes.binary_search(&name).expect("class collected above");
            Ok(PowerSignal::new(samples, schema.sample_rate_hz)?.with_label(label))
        })
        .collect::<Result<_>>()?;
    Ok(TraceDataset {
        signals,
        classes,
        source: path.display().to_string(),
    })
}

/// Writes `label,v1,...,vD` rows preceded by `# `-prefixed comment lines.
pub fn write_features<W: Write>(mut w: W, ds: &FeatureDataset, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    for (row, &label) in ds.rows.iter().zip(&ds.labels) {
        write!(w, "{}", ds.classes[label])?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn read_features<R: BufRead>(r: R, source: &str) -> Result<FeatureDataset> {
    let path = PathBuf::from(source);
    let mut named = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or_default().trim().to_string();
        let values = fields
            .enumerate()
            .map(|(c, f)| parse_field(&path, row, c + 1, Some(f.trim())))
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: values.len(),
                })
            }
            _ => {}
        }
        named.push((label, values));
    }
    if named.is_empty() {
        return Err(Error::EmptyDataset);
    }
    FeatureDataset::from_named(named, source)
}

pub fn save_features(path: &Path, ds: &FeatureDataset, comments: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_features(BufWriter::new(file), ds, comments).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: &Path) -> Result<FeatureDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_features(BufReader::new(file), &path.display().to_string())
}

/// Behaviour of one synthetic appliance class: a base load plus a cycling
/// square wave, with occasional switching spikes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    /// Always-on draw in watts.
    pub base_load: f64,
    /// Extra draw while the cycle is on, in watts.
    pub cycle_amplitude: f64,
    /// Cycle length in samples.
    pub cycle_period: usize,
    /// Fraction of each cycle spent on, in (0, 1).
    pub duty_cycle: f64,
    /// Per-sample probability of a transient spike.
    pub spike_rate: f64,
}

impl Archetype {
    fn numeric(&self) -> [f64; 5] {
        [
            self.base_load,
            self.cycle_amplitude,
            self.cycle_period as f64,
            self.duty_cycle,
            self.spike_rate,
        ]
    }
}

fn archetype(
    name: &str,
    base_load: f64,
    cycle_amplitude: f64,
    cycle_period: usize,
    duty_cycle: f64,
    spike_rate: f64,
) -> Archetype {
    Archetype {
        name: name.to_string(),
        base_load,
        cycle_amplitude,
        cycle_period,
        duty_cycle,
        spike_rate,
    }
}

/// The built-in appliance table, extended procedurally past six classes.
pub fn default_archetypes(class_count: usize) -> Vec<Archetype> {
    let mut table = vec![
        archetype("fridge", 3.0, 110.0, 1500, 0.4, 0.0005),
        archetype("kettle", 0.0, 2000.0, 4096, 0.06, 0.0),
        archetype("tv", 60.0, 25.0, 91, 0.5, 0.002),
        archetype("lamp", 40.0, 0.0, 2, 0.5, 0.0),
        archetype("dishwasher", 5.0, 1900.0, 700, 0.25, 0.004),
        archetype("radio", 8.0, 4.0, 23, 0.3, 0.01),
    ];
    let mut k = table.len();
    while table.len() < class_count {
        table.push(archetype(
            &format!("appliance{k}"),
            10.0 + 15.0 * k as f64,
            50.0 * k as f64,
            64 + 37 * k,
            0.1 + 0.8 * ((k * 7) % 10) as f64 / 10.0,
            0.001 * (k % 4) as f64,
        ));
        k += 1;
    }
    table.truncate(class_count);
    table
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub signatures_per_class: usize,
    pub trace_length: usize,
    /// Standard deviation of additive Gaussian noise, in watts.
    pub noise_sigma: f64,
    pub seed: u64,
    pub sample_rate_hz: f64,
    /// One entry per class.
    pub archetypes: Vec<Archetype>,
}

impl SynthSpec {
    /// `class_count` default archetypes with the standard noise level.
    pub fn new(class_count: usize, signatures_per_class: usize, trace_length: usize, seed: u64) -> Self {
        Self {
            signatures_per_class,
            trace_length,
            noise_sigma: 1.0,
            seed,
            sample_rate_hz: 1.0,
            archetypes: default_archetypes(class_count),
        }
    }

    /// Six classes, forty 8192-sample signatures each.
    pub fn desk_scale(seed: u64) -> Self {
        Self::new(6, 40, 8192, seed)
    }

    pub fn class_count(&self) -> usize {
        self.archetypes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSpec(m));
        if self.archetypes.len() < 2 {
            return bad(format!("need at least 2 classes, got {}", self.archetypes.len()));
        }
        if self.signatures_per_class == 0 || self.trace_length == 0 {
            return bad("signatures per class and trace length must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad(format!("sample rate must be positive, got {}", self.sample_rate_hz));
        }
        for a in &self.archetypes {
            if !(a.duty_cycle > 0.0 && a.duty_cycle < 1.0) {
                return bad(format!("{}: duty cycle {} outside (0, 1)", a.name, a.duty_cycle));
            }
            if a.cycle_period < 2 {
                return bad(format!("{}: cycle period must be at least 2", a.name));
            }
            if !(a.base_load >= 0.0 && a.cycle_amplitude >= 0.0) {
                return bad(format!("{}: loads must be non-negative", a.name));
            }
            if !(0.0..=1.0).contains(&a.spike_rate) {
                return bad(format!("{}: spike rate {} outside [0, 1]", a.name, a.spike_rate));
            }
        }
        for (i, a) in self.archetypes.iter().enumerate() {
            for b in &self.archetypes[i + 1..] {
                let differing = a.numeric().iter().zip(b.numeric()).filter(|(x, y)| **x != *y).count();
                if differing < 2 {
                    return bad(format!(
                        "archetypes {} and {} differ in fewer than two parameters",
                        a.name, b.name
                    ));
                }
                if a.name == b.name {
                    return bad(format!("duplicate archetype name {}", a.name));
                }
            }
        }
        Ok(())
    }
}

/// One trace of archetype `a`; `rng` fixes the cycle phase, noise and spikes.
fn synth_trace(a: &Archetype, spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let phase = rng.random_range(0..a.cycle_period);
    let on_len = a.duty_cycle * a.cycle_period as f64;
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
    let peak = a.base_load + a.cycle_amplitude;
    (0..spec.trace_length)
        .map(|t| {
            let on = (((t + phase) % a.cycle_period) as f64) < on_len;
            let mut p = a.base_load + if on { a.cycle_amplitude } else { 0.0 };
            if spec.noise_sigma > 0.0 {
                p += noise.sample(rng);
            }
            if a.spike_rate > 0.0 && rng.random::<f64>() < a.spike_rate {
                p += rng.random_range(0.5..1.5) * peak.max(1.0);
            }
            p.max(0.0)
        })
        .collect()
}

/// Generates `signatures_per_class` traces per archetype, class-major.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<TraceDataset> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.class_count())
        .flat_map(|c| (0..spec.signatures_per_class).map(move |k| (c, k)))
        .collect();
    let signals = jobs
        .par_iter()
        .map(|&(c, k)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(((c as u64) << 32) | k as u64);
            let samples = synth_trace(&spec.archetypes[c], spec, &mut rng);
            Ok(PowerSignal::new(samples, spec.sample_rate_hz)?.with_label(c))
        })
        .collect::<Result<_>>()?;
    Ok(TraceDataset {
        signals,
        classes: spec.archetypes.iter().map(|a| a.name.clone()).collect(),
        source: format!("synthetic(seed={})", spec.seed),
    })
}

/// Writes each trace as `<class>_<index>.csv` with `index,power` rows.
pub fn write_trace_dir(dir: &Path, ds: &TraceDataset) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut seen = vec![0usize; ds.classes.len()];
    let mut written = Vec::with_capacity(ds.signals.len());
    for s in &ds.signals {
        let label = s.label.unwrap_or(0);
        let path = dir.join(format!("{}_{:04}.csv", ds.classes[label], seen[label]));
        seen[label] += 1;
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for (t, v) in s.samples().iter().enumerate() {
            writeln!(w, "{t},{v}").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn three_row_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "fridge_1.csv", "0,120.5\n1,121.0\n2,0.0\n");
        let ds = load_trace_csv(&p, &TraceSchema::default()).unwrap();
        assert_eq!(ds.signals.len(), 1);
        assert_eq!(ds.signals[0].samples(), &[120.5, 121.0, 0.0]);
        assert_eq!(ds.classes, vec!["fridge"]);
    }

    #[test]
    fn nan_reports_row_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x.csv", "0,NaN\n1,121.0\n");
        match load_trace_csv(&p, &TraceSchema::default()) {
            Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (1, 1)),
            other => panic!("expected a parse error, got {other:?}"),
        }
        let p = write(dir.path(), "y.csv", "0,12\n1,abc\n");
        assert!(matches!(
            load_trace_csv(&p, &TraceSchema::default()),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn negative_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "neg.csv", "0,1\n1,-3\n");
        assert!(matches!(
            load_trace_csv(&p, &TraceSchema::default()),
            Err(Error::NegativePower { row: 2, .. })
        ));
        let p = write(dir.path(), "short.csv", "0,1\n1\n");
        assert!(matches!(
            load_trace_csv(&p, &TraceSchema::default()),
            Err(Error::MissingColumn { row: 2, col: 1, .. })
        ));
    }

    #[test]
    fn directory_labels_from_filenames() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "tv_2.csv",
            "coffee_1.csv",
            "tv_1.csv",
            "coffee_3.csv",
            "coffee_2.csv",
            "tv_3.csv",
        ] {
            write(dir.path(), name, "0,1\n1,2\n");
        }
        write(dir.path(), "notes.txt", "ignored");
        let ds = load_trace_csv(dir.path(), &TraceSchema::default()).unwrap();
        assert_eq!(ds.classes, vec!["coffee", "tv"]);
        assert_eq!(ds.labels(), vec![0, 0, 0, 1, 1, 1]);
        let again = load_trace_csv(dir.path(), &TraceSchema::default()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn label_column_segments_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "house.csv",
            "t,w,appliance\n0,1,tv\n1,2,tv\n2,3,fan\n3,4,tv\n",
        );
        let schema = TraceSchema {
            label: LabelSource::Column(2),
            has_header: true,
            time_col: Some(0),
            ..Default::default()
        };
        let ds = load_trace_csv(&p, &schema).unwrap();
        assert_eq!(ds.signals.len(), 3);
        assert_eq!(ds.classes, vec!["fan", "tv"]);
        assert_eq!(ds.labels(), vec![1, 0, 1]);
        assert_eq!(ds.signals[0].samples(), &[1.0, 2.0]);
    }

    #[test]
    fn max_samples_keeps_leading_segment() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a_1.csv", "0,1\n1,2\n2,3\n3,4\n");
        let schema = TraceSchema {
            max_samples: 3,
            ..Default::default()
        };
        assert_eq!(
            load_trace_csv(&p, &schema).unwrap().signals[0].samples(),
            &[1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn feature_csv_round_trip() {
        let ds = FeatureDataset::from_named(
            vec![
                ("b".into(), vec![0.1, 1.0 / 3.0, 1e-300]),
                ("a".into(), vec![2.5, 0.0, std::f64::consts::PI]),
            ],
            "mem",
        )
        .unwrap();
        let mut buf = Vec::new();
        write_features(&mut buf, &ds, &["kernel = 15".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# kernel = 15\nb,0.1,"));
        let back = read_features(Cursor::new(text), "mem").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn feature_csv_errors() {
        assert!(matches!(read_features(Cursor::new(""), "e"), Err(Error::EmptyDataset)));
        assert!(matches!(
            read_features(Cursor::new("# only\n"), "e"),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            read_features(Cursor::new("a,1,2\nb,1\n"), "e"),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
        assert!(matches!(
            read_features(Cursor::new("a,1,x\n"), "e"),
            Err(Error::Parse { row: 1, col: 2, .. })
        ));
    }

    #[test]
    fn noiseless_square_wave() {
        let mut spec = SynthSpec::new(2, 2, 64, 1);
        spec.noise_sigma = 0.0;
        spec.archetypes = vec![
            archetype("a", 1.0, 10.0, 8, 0.5, 0.0),
            archetype("b", 2.0, 5.0, 16, 0.25, 0.0),
        ];
        let ds = generate_synthetic(&spec).unwrap();
        let s = ds.signals[0].samples();
        for t in 0..56 {
            assert_eq!(s[t], s[t + 8]);
        }
        assert_eq!(s.iter().filter(|&&v| v == 11.0).count(), 32);
        assert_eq!(s.iter().filter(|&&v| v == 1.0).count(), 32);
        assert_ne!(ds.signals[0].samples(), ds.signals[2].samples());
        assert_eq!(ds, generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn generator_is_deterministic_and_class_major() {
        let spec = SynthSpec::new(3, 4, 500, 42);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels(), vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        assert!(a.signals.iter().all(|s| s.samples().iter().all(|&v| v >= 0.0)));
        let c = generate_synthetic(&SynthSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spec_validation() {
        assert!(SynthSpec::desk_scale(1).validate().is_ok());
        assert!(SynthSpec::new(9, 1, 10, 1).validate().is_ok());
        assert!(matches!(SynthSpec::new(1, 1, 10, 1).validate(), Err(Error::BadSpec(_))));
        let mut spec = SynthSpec::new(2, 1, 10, 1);
        spec.archetypes[0].duty_cycle = 1.0;
        assert!(matches!(generate_synthetic(&spec), Err(Error::BadSpec(_))));
        let mut spec = SynthSpec::new(2, 1, 10, 1);
        spec.archetypes[1] = Archetype {
            name: "twin".into(),
            base_load: 99.0,
            ..spec.archetypes[0].clone()
        };
        assert!(matches!(spec.validate(), Err(Error::BadSpec(_))));
    }

    #[test]
    fn trace_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_synthetic(&SynthSpec::new(2, 3, 50, 5)).unwrap();
        let files = write_trace_dir(dir.path(), &ds).unwrap();
        assert_eq!(files.len(), 6);
        let back = load_trace_csv(dir.path(), &TraceSchema::default()).unwrap();
        assert_eq!(back.classes, vec!["fridge", "kettle"]);
        assert_eq!(back.signals, ds.signals);
    }
}
