//! Batch measurement over a corpus of CSV images.
//!
//! Every `*.csv` file below the corpus directory is compressed and
//! decompressed. Files in a first-level subdirectory belong to the partition
//! named after it (e.g. `healthy/`, `sick/`); files directly in the corpus
//! root belong to partition `"."`. Timings cover the in-memory pipeline
//! only: each file is read fully before its clock starts.
//!
//! # JSON report schema
//!
//! ```text
//! {
//!   "spec":        { "seams": {"count": N} | {"fraction": F}, "codec": "lzw" },
//!   "records":     [ BenchRecord, ... ]    sorted by file_id
//!   "errors":      [ { "file_id", "partition", "message" }, ... ]
//!   "aggregates":  [ { "partition", "metric", "count", "mean", "median", "min", "max" }, ... ]
//!   "environment": { "host", "timestamp", "parallelism" }
//! }
//! ```
//!
//! Aggregates are listed per partition (sorted) and then for partition `"*"`
//! covering all records, each over [`METRICS`] in order. Partitions with no
//! successful records get no aggregate rows.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::image::{self, GrayImage};
use crate::pipeline::{self, compression_ratio, CompressionSpec, PipelineError};

/// Partition label for files directly inside the corpus directory.
pub const ROOT_PARTITION: &str = ".";
/// Partition label for corpus-wide aggregates.
pub const ALL_PARTITIONS: &str = "*";
/// Relative tolerance when checking aggregates against records.
pub const AGGREGATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no CSV files found under {0}")]
    EmptyCorpus(PathBuf),
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("aggregate {metric} for partition {partition:?} does not match its records")]
    AggregateMismatch { partition: String, metric: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Measurements for one successfully processed file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub file_id: String,
    pub partition: String,
    pub orig_rows: usize,
    pub orig_cols: usize,
    pub carved_rows: usize,
    pub carved_cols: usize,
    pub seams_removed: usize,
    pub orig_csv_bytes: u64,
    pub raw_pixel_bytes: u64,
    pub container_bytes: u64,
    pub csv_ratio: f64,
    pub raw_ratio: f64,
    pub compress_seconds: f64,
    pub decompress_seconds: f64,
    pub compress_peak_bytes: u64,
    pub decompress_peak_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileError {
    pub file_id: String,
    pub partition: String,
    pub message: String,
}

/// Summary statistics of one metric over one partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub partition: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub host: String,
    pub timestamp: String,
    pub parallelism: usize,
}

impl Environment {
    pub fn capture(parallelism: usize) -> Self {
        let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self {
            host: format!(
                "{}-{} ({cpus} cpus), plfc {}",
                std::env::consts::OS,
                std::env::consts::ARCH,
                env!("CARGO_PKG_VERSION")
            ),
            timestamp: chrono::Utc::now().to_rfc3339(),
            parallelism,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub spec: CompressionSpec,
    pub records: Vec<BenchRecord>,
    pub errors: Vec<FileError>,
    pub aggregates: Vec<Aggregate>,
    pub environment: Environment,
}

/// Reads one metric from a record.
pub type MetricFn = fn(&BenchRecord) -> f64;

/// Metric names in report order, with their accessor.
pub const METRICS: [(&str, MetricFn); 9] = [
    ("orig_csv_bytes", |r| r.orig_csv_bytes as f64),
    ("raw_pixel_bytes", |r| r.raw_pixel_bytes as f64),
    ("container_bytes", |r| r.container_bytes as f64),
    ("csv_ratio", |r| r.csv_ratio),
    ("raw_ratio", |r| r.raw_ratio),
    ("compress_seconds", |r| r.compress_seconds),
    ("decompress_seconds", |r| r.decompress_seconds),
    ("compress_peak_bytes", |r| r.compress_peak_bytes as f64),
    ("decompress_peak_bytes", |r| r.decompress_peak_bytes as f64),
];

const TIMING_METRICS: [&str; 2] = ["compress_seconds", "decompress_seconds"];

/// Computes aggregates for every non-empty partition, then for all records.
pub fn aggregate(records: &[BenchRecord]) -> Vec<Aggregate> {
    let mut partitions: Vec<&str> = records.iter().map(|r| r.partition.as_str()).collect();
    partitions.sort_unstable();
    partitions.dedup();

    let mut out = Vec::new();
    let groups = partitions
        .into_iter()
        .map(|p| {
            (
                p,
                records
                    .iter()
                    .filter(|r| r.partition == p)
                    .collect::<Vec<_>>(),
            )
        })
        .chain(std::iter::once((ALL_PARTITIONS, records.iter().collect())));
    for (partition, members) in groups {
        if members.is_empty() {
            continue;
        }
        for (metric, get) in METRICS {
            let values: Vec<f64> = members.iter().map(|r| get(r)).collect();
            out.push(summarize(partition, metric, &values));
        }
    }
    out
}

fn summarize(partition: &str, metric: &str, values: &[f64]) -> Aggregate {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Aggregate {
        partition: partition.to_string(),
        metric: metric.to_string(),
        count: n,
        mean: values.iter().sum::<f64>() / n as f64,
        median,
        min: sorted[0],
        max: sorted[n - 1],
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= AGGREGATE_TOLERANCE * a.abs().max(b.abs())
}

impl BenchReport {
    /// Checks that the stored aggregates match a recomputation from records.
    pub fn validate(&self) -> Result<(), BenchError> {
        let expected = aggregate(&self.records);
        let mismatch = |a: &Aggregate| BenchError::AggregateMismatch {
            partition: a.partition.clone(),
            metric: a.metric.clone(),
        };
        if expected.len() != self.aggregates.len() {
            let culprit = expected.first().or(self.aggregates.first()).unwrap();
            return Err(mismatch(culprit));
        }
        for (want, got) in expected.iter().zip(&self.aggregates) {
            let same = want.partition == got.partition
                && want.metric == got.metric
                && want.count == got.count
                && close(want.mean, got.mean)
                && close(want.median, got.median)
                && close(want.min, got.min)
                && close(want.max, got.max);
            if !same {
                return Err(mismatch(got));
            }
        }
        Ok(())
    }

    /// Parses a JSON report and validates its aggregates.
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let report: Self = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }

    /// Copy with timing fields, timing aggregates and the environment zeroed,
    /// for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.records {
            r.compress_seconds = 0.0;
            r.decompress_seconds = 0.0;
        }
        for a in &mut out.aggregates {
            if TIMING_METRICS.contains(&a.metric.as_str()) {
                (a.mean, a.median, a.min, a.max) = (0.0, 0.0, 0.0, 0.0);
            }
        }
        out.environment = Environment {
            host: String::new(),
            timestamp: String::new(),
            parallelism: 0,
        };
        out
    }

    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// A CSV file found in a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub path: PathBuf,
    pub file_id: String,
    pub partition: String,
}

/// Lists files with `extension` under `dir`, sorted by id.
pub fn discover(dir: &Path, extension: &str) -> Result<Vec<CorpusFile>, BenchError> {
    let mut files = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| BenchError::Io {
            path: dir.to_path_buf(),
            source: e.into(),
        })?;
        let path = entry.path();
        let matches = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case(extension));
        if !entry.file_type().is_file() || !matches {
            continue;
        }
        let rel = path.strip_prefix(dir).unwrap_or(path);
        let parts: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let partition = if parts.len() > 1 {
            parts[0].clone()
        } else {
            ROOT_PARTITION.to_string()
        };
        files.push(CorpusFile {
            path: path.to_path_buf(),
            file_id: parts.join("/"),
            partition,
        });
    }
    files.sort_by(|a, b| a.file_id.cmp(&b.file_id));
    Ok(files)
}

/// Runs `f` on a pool of `parallelism` workers (at least one).
pub fn with_pool<T: Send>(
    parallelism: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T, BenchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map(|pool| pool.install(f))
        .map_err(|e| BenchError::Pool(e.to_string()))
}

pub fn run_bench(
    corpus_dir: &Path,
    spec: &CompressionSpec,
    parallelism: usize,
) -> Result<BenchReport, BenchError> {
    let files = discover(corpus_dir, "csv")?;
    if files.is_empty() {
        return Err(BenchError::EmptyCorpus(corpus_dir.to_path_buf()));
    }
    let outcomes: Vec<Result<BenchRecord, FileError>> = with_pool(parallelism, || {
        files.par_iter().map(|f| bench_file(f, spec)).collect()
    })?;

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    let aggregates = aggregate(&records);
    Ok(BenchReport {
        spec: *spec,
        records,
        errors,
        aggregates,
        environment: Environment::capture(parallelism.max(1)),
    })
}

fn bench_file(file: &CorpusFile, spec: &CompressionSpec) -> Result<BenchRecord, FileError> {
    let fail = |message: String| FileError {
        file_id: file.file_id.clone(),
        partition: file.partition.clone(),
        message,
    };
    let text = std::fs::read(&file.path).map_err(|e| fail(e.to_string()))?;
    measure(&text, spec)
        .map_err(|e| fail(e.to_string()))
        .map(|m| BenchRecord {
            file_id: file.file_id.clone(),
            partition: file.partition.clone(),
            ..m
        })
}

/// Measures one in-memory CSV image. `file_id` and `partition` are left empty.
pub fn measure(csv_text: &[u8], spec: &CompressionSpec) -> Result<BenchRecord, PipelineError> {
    let start = Instant::now();
    let img = image::parse_csv(csv_text)?;
    let compressed = pipeline::compress_detailed(&img, spec)?;
    let compress_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let decompressed = pipeline::decompress_detailed(&compressed.container)?;
    let decompress_seconds = start.elapsed().as_secs_f64();

    if decompressed.image != compressed.carved {
        return Err(PipelineError::Image(image::ImageError::DimensionMismatch {
            rows: compressed.carved.rows(),
            cols: compressed.carved.cols(),
            expected: compressed.carved.pixel_count(),
            actual: decompressed.image.pixel_count(),
        }));
    }

    let orig_csv_bytes = csv_text.len() as u64;
    let raw_pixel_bytes = img.pixel_count() as u64;
    let container_bytes = compressed.container.len() as u64;
    Ok(BenchRecord {
        file_id: String::new(),
        partition: String::new(),
        orig_rows: img.rows(),
        orig_cols: img.cols(),
        carved_rows: compressed.carved.rows(),
        carved_cols: compressed.carved.cols(),
        seams_removed: compressed.seams_removed,
        orig_csv_bytes,
        raw_pixel_bytes,
        container_bytes,
        csv_ratio: compression_ratio(orig_csv_bytes, container_bytes)?.value(),
        raw_ratio: compression_ratio(raw_pixel_bytes, container_bytes)?.value(),
        compress_seconds,
        decompress_seconds,
        compress_peak_bytes: compressed.peak_buffer_bytes,
        decompress_peak_bytes: decompressed.peak_buffer_bytes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!(
                "unknown report format {other:?} (expected json or csv)"
            )),
        }
    }
}

/// Column order of record rows in CSV reports.
pub const CSV_RECORD_HEADER: [&str; 16] = [
    "file_id",
    "partition",
    "orig_rows",
    "orig_cols",
    "carved_rows",
    "carved_cols",
    "seams_removed",
    "orig_csv_bytes",
    "raw_pixel_bytes",
    "container_bytes",
    "csv_ratio",
    "raw_ratio",
    "compress_seconds",
    "decompress_seconds",
    "compress_peak_bytes",
    "decompress_peak_bytes",
];

/// Serializes a report.
///
/// CSV output is a header line, one row per record, one `AGG` row per
/// aggregate (`AGG,partition,metric,count,mean,median,min,max`) and one
/// `ERR` row per failed file (`ERR,file_id,partition,message`).
pub fn emit_report(report: &BenchReport, format: ReportFormat) -> Result<Vec<u8>, BenchError> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .flexible(true)
                .from_writer(Vec::new());
            w.write_record(CSV_RECORD_HEADER)?;
            for r in &report.records {
                w.write_record([
                    r.file_id.clone(),
                    r.partition.clone(),
                    r.orig_rows.to_string(),
                    r.orig_cols.to_string(),
                    r.carved_rows.to_string(),
                    r.carved_cols.to_string(),
                    r.seams_removed.to_string(),
                    r.orig_csv_bytes.to_string(),
                    r.raw_pixel_bytes.to_string(),
                    r.container_bytes.to_string(),
                    r.csv_ratio.to_string(),
                    r.raw_ratio.to_string(),
                    r.compress_seconds.to_string(),
                    r.decompress_seconds.to_string(),
                    r.compress_peak_bytes.to_string(),
                    r.decompress_peak_bytes.to_string(),
                ])?;
            }
            for a in &report.aggregates {
                w.write_record([
                    "AGG".to_string(),
                    a.partition.clone(),
                    a.metric.clone(),
                    a.count.to_string(),
                    a.mean.to_string(),
                    a.median.to_string(),
                    a.min.to_string(),
                    a.max.to_string(),
                ])?;
            }
            for e in &report.errors {
                w.write_record(["ERR", &e.file_id, &e.partition, &e.message])?;
            }
            w.into_inner().map_err(|e| BenchError::Io {
                path: PathBuf::new(),
                source: e.into_error(),
            })
        }
    }
}

/// One row of [`scaling_probe`] output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub rows: usize,
    pub cols: usize,
    pub pixels: usize,
    pub seams_removed: usize,
    pub carve_seconds: f64,
    pub encode_seconds: f64,
    pub total_seconds: f64,
    pub container_bytes: u64,
}

/// Seed for probe images, fixed so that runs are comparable.
pub const PROBE_SEED: u64 = 0x504C_4643;

/// Times compression of uniformly random images at each `(rows, cols)` size.
/// Only measures; makes no judgement about growth rates.
pub fn scaling_probe(
    sizes: &[(usize, usize)],
    spec: &CompressionSpec,
) -> Result<Vec<ProbeRow>, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut rows_out = Vec::with_capacity(sizes.len());
    for &(rows, cols) in sizes {
        let pixels = (0..rows * cols).map(|_| rng.gen()).collect();
        let img = GrayImage::new(rows, cols, pixels).map_err(PipelineError::from)?;
        let k = spec.seams.resolve(cols)?;

        let start = Instant::now();
        let carved = crate::seam::carve(&img, k).map_err(PipelineError::from)?;
        let carve_seconds = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let payload = crate::codecs::encode(spec.codec, &image::flatten(&carved));
        let encode_seconds = start.elapsed().as_secs_f64();

        rows_out.push(ProbeRow {
            rows,
            cols,
            pixels: rows * cols,
            seams_removed: k,
            carve_seconds,
            encode_seconds,
            total_seconds: carve_seconds + encode_seconds,
            container_bytes: crate::container::HEADER_LEN as u64 + payload.bytes.len() as u64,
        });
    }
    Ok(rows_out)
}

/// Probe table as CSV, or as a JSON array.
pub fn emit_probe(rows: &[ProbeRow], format: ReportFormat) -> Result<Vec<u8>, BenchError> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(rows)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| BenchError::Io {
                path: PathBuf::new(),
                source: e.into_error(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codecs::CodecId;
    use crate::pipeline::SeamCount;

    fn record(partition: &str, ratio: f64, bytes: u64) -> BenchRecord {
        BenchRecord {
            file_id: format!("{partition}/{bytes}.csv"),
            partition: partition.into(),
            orig_rows: 1,
            orig_cols: 1,
            carved_rows: 1,
            carved_cols: 1,
            seams_removed: 0,
            orig_csv_bytes: bytes,
            raw_pixel_bytes: 1,
            container_bytes: 31,
            csv_ratio: ratio,
            raw_ratio: 1.0 / 31.0,
            compress_seconds: 0.5,
            decompress_seconds: 0.25,
            compress_peak_bytes: 100,
            decompress_peak_bytes: 50,
        }
    }

    #[test]
    fn aggregates_by_partition() {
        let records = vec![
            record("healthy", 2.0, 10),
            record("healthy", 4.0, 20),
            record("sick", 1.0, 30),
        ];
        let aggs = aggregate(&records);
        assert_eq!(aggs.len(), 3 * METRICS.len());
        let find = |p: &str, m: &str| {
            aggs.iter()
                .find(|a| a.partition == p && a.metric == m)
                .unwrap()
        };
        let h = find("healthy", "csv_ratio");
        assert_eq!(
            (h.count, h.mean, h.median, h.min, h.max),
            (2, 3.0, 3.0, 2.0, 4.0)
        );
        let all = find("*", "csv_ratio");
        assert_eq!((all.count, all.median), (3, 2.0));
        assert!((all.mean - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(aggs[0].partition, "healthy");
        assert_eq!(aggs.last().unwrap().partition, "*");
    }

    #[test]
    fn empty_records_have_no_aggregates() {
        assert!(aggregate(&[]).is_empty());
    }

    #[test]
    fn validate_catches_tampering() {
        let records = vec![record("a", 2.0, 10), record("b", 3.0, 10)];
        let mut report = BenchReport {
            spec: CompressionSpec::default(),
            aggregates: aggregate(&records),
            records,
            errors: vec![],
            environment: Environment::capture(1),
        };
        assert!(report.validate().is_ok());
        report.records[0].csv_ratio = 2.5;
        assert!(matches!(
            report.validate(),
            Err(BenchError::AggregateMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_csv_rows() {
        let records = vec![record("a", 2.0, 10), record("b", 1.0 / 3.0, 11)];
        let report = BenchReport {
            spec: CompressionSpec::new(SeamCount::Count(3), CodecId::Huffman),
            aggregates: aggregate(&records),
            records,
            errors: vec![],
            environment: Environment::capture(2),
        };
        let json = emit_report(&report, ReportFormat::Json).unwrap();
        let back = BenchReport::from_json(std::str::from_utf8(&json).unwrap()).unwrap();
        assert_eq!(back, report);

        let csv_text = String::from_utf8(emit_report(&report, ReportFormat::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = csv_text.lines().collect();
        assert_eq!(
            lines.len(),
            1 + report.records.len() + report.aggregates.len()
        );
        assert!(lines[0].starts_with("file_id,partition,"));
        assert_eq!(
            lines.iter().filter(|l| l.starts_with("AGG,")).count(),
            report.aggregates.len()
        );
    }

    #[test]
    fn measure_store_without_carving() {
        let img = GrayImage::filled(8, 8, 5).unwrap();
        let spec = CompressionSpec::new(SeamCount::Count(0), CodecId::Store);
        let r = measure(&image::to_csv(&img), &spec).unwrap();
        assert_eq!(r.raw_pixel_bytes, 64);
        assert_eq!(r.container_bytes, 30 + 64);
        assert_eq!(r.orig_csv_bytes, 128);
        assert_eq!(r.csv_ratio, 128.0 / 94.0);
        assert!(r.compress_peak_bytes >= 64);
        assert!(r.compress_seconds >= 0.0 && r.decompress_seconds >= 0.0);
    }

    #[test]
    fn probe_rows() {
        let spec = CompressionSpec::new(SeamCount::Count(2), CodecId::Lzw);
        let rows = scaling_probe(&[(8, 8), (16, 16)], &spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].pixels, rows[1].pixels), (64, 256));
        let csv_text = String::from_utf8(emit_probe(&rows, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv_text.lines().count(), 3);
    }
}
