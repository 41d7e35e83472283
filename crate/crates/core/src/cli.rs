//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 when any input file failed (bad data,
//! corrupt container, I/O), 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::bench::{self, emit_probe, emit_report, run_bench, with_pool, BenchError, ReportFormat};
use crate::codecs::CodecId;
use crate::container::{ContainerHeader, HEADER_LEN};
use crate::image;
use crate::pipeline::{self, compression_ratio, CompressionSpec, SeamCount};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "plfc",
    version,
    about = "Seam-carving compression for CSV grayscale images"
)]
pub struct Cli {
    /// More output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a CSV image, or every CSV under a directory.
    Compress {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Decompress a .plfc container, or every container under a directory.
    Decompress {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Print a container's header without decoding its payload.
    Inspect { input: PathBuf },
    /// Compress and decompress a corpus, reporting sizes, times and memory.
    Bench {
        corpus: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "json")]
        report: ReportFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Time compression of random images of increasing size.
    Probe {
        /// Comma-separated sizes: `N` for N×N or `RxC`.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<Size>,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "csv")]
        report: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    #[command(flatten)]
    pub seams: SeamArgs,
    #[arg(long, default_value = "lzw")]
    pub codec: CodecId,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SeamArgs {
    /// Number of vertical seams to remove.
    #[arg(long)]
    pub seams: Option<usize>,
    /// Fraction of the width to remove, in [0, 1).
    #[arg(long)]
    pub seam_frac: Option<f64>,
}

impl SpecArgs {
    pub fn to_spec(&self) -> CompressionSpec {
        let seams = match (self.seams.seams, self.seams.seam_frac) {
            (Some(k), _) => SeamCount::Count(k),
            (None, Some(f)) => SeamCount::Fraction(f),
            (None, None) => unreachable!("clap enforces one of --seams/--seam-frac"),
        };
        CompressionSpec::new(seams, self.codec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct JobsArg {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "PLFC_JOBS", value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
}

impl JobsArg {
    pub fn get(&self) -> usize {
        self.jobs.map_or_else(
            || std::thread::available_parallelism().map_or(1, |n| n.get()),
            |j| j as usize,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad size {s:?} (expected N or RxC)");
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(bad)
        };
        match s.split_once(['x', 'X']) {
            Some((r, c)) => Ok(Size {
                rows: parse(r)?,
                cols: parse(c)?,
            }),
            None => {
                let n = parse(s)?;
                Ok(Size { rows: n, cols: n })
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let verbose = cli.verbose;
    match cli.command {
        Command::Compress {
            input,
            out,
            spec,
            jobs,
        } => batch(&input, &out, "csv", "plfc", jobs.get(), verbose, |bytes| {
            compress_one(bytes, &spec.to_spec())
        }),
        Command::Decompress { input, out, jobs } => batch(
            &input,
            &out,
            "plfc",
            "csv",
            jobs.get(),
            verbose,
            decompress_one,
        ),
        Command::Inspect { input } => match inspect(&input) {
            Ok(text) => {
                print!("{text}");
                EXIT_OK
            }
            Err(msg) => {
                eprintln!("error: {}: {msg}", input.display());
                EXIT_DATA
            }
        },
        Command::Bench {
            corpus,
            spec,
            report,
            out,
            jobs,
        } => cmd_bench(
            &corpus,
            &spec.to_spec(),
            report,
            out.as_deref(),
            jobs.get(),
            verbose,
        ),
        Command::Probe {
            sizes,
            spec,
            report,
            out,
        } => cmd_probe(&sizes, &spec.to_spec(), report, out.as_deref(), verbose),
    }
}

/// Output of one file conversion: bytes to write and the line to print.
struct Converted {
    bytes: Vec<u8>,
    summary: String,
}

fn compress_one(csv_text: &[u8], spec: &CompressionSpec) -> Result<Converted, String> {
    let img = image::parse_csv(csv_text).map_err(|e| e.to_string())?;
    let c = pipeline::compress_detailed(&img, spec).map_err(|e| e.to_string())?;
    let container = c.container.len() as u64;
    let csv_ratio =
        compression_ratio(csv_text.len() as u64, container).map_err(|e| e.to_string())?;
    let raw_ratio =
        compression_ratio(img.pixel_count() as u64, container).map_err(|e| e.to_string())?;
    Ok(Converted {
        summary: format!(
            "{}x{} -> {}x{}, {} -> {} bytes, ratio {csv_ratio} (raw {raw_ratio})",
            img.rows(),
            img.cols(),
            c.carved.rows(),
            c.carved.cols(),
            csv_text.len(),
            container,
        ),
        bytes: c.container,
    })
}

fn decompress_one(container: &[u8]) -> Result<Converted, String> {
    let d = pipeline::decompress_detailed(container).map_err(|e| e.to_string())?;
    Ok(Converted {
        summary: format!(
            "{}x{}, {} -> {} bytes",
            d.image.rows(),
            d.image.cols(),
            container.len(),
            d.csv.len()
        ),
        bytes: d.csv,
    })
}

/// Converts one file, or every `in_ext` file under a directory into a
/// mirrored tree of `out_ext` files. Failures are reported per file and do
/// not stop the batch.
fn batch<F>(
    input: &Path,
    out: &Path,
    in_ext: &str,
    out_ext: &str,
    jobs: usize,
    verbose: u8,
    convert: F,
) -> i32
where
    F: Fn(&[u8]) -> Result<Converted, String> + Sync,
{
    let jobs_list: Vec<(String, PathBuf, PathBuf)> = if input.is_dir() {
        let files = match bench::discover(input, in_ext) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        if files.is_empty() {
            eprintln!("error: no .{in_ext} files under {}", input.display());
            return EXIT_USAGE;
        }
        files
            .into_iter()
            .map(|f| {
                let target = out.join(&f.file_id).with_extension(out_ext);
                (f.file_id, f.path, target)
            })
            .collect()
    } else if input.is_file() {
        vec![(
            input.display().to_string(),
            input.to_path_buf(),
            out.to_path_buf(),
        )]
    } else {
        eprintln!("error: {} does not exist", input.display());
        return EXIT_USAGE;
    };

    let work = || {
        jobs_list
            .par_iter()
            .map(|(_, src, dst)| {
                let bytes = std::fs::read(src).map_err(|e| e.to_string())?;
                let converted = convert(&bytes)?;
                write_atomic(dst, &converted.bytes)
                    .map_err(|e| format!("writing {}: {e}", dst.display()))?;
                Ok(converted.summary)
            })
            .collect::<Vec<Result<String, String>>>()
    };
    let results = match with_pool(jobs, work) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };

    let mut failed = 0;
    for ((id, _, dst), result) in jobs_list.iter().zip(results) {
        match result {
            Ok(summary) => {
                println!("{id}: {summary}");
                if verbose > 0 {
                    eprintln!("wrote {}", dst.display());
                }
            }
            Err(msg) => {
                eprintln!("error: {id}: {msg}");
                failed += 1;
            }
        }
    }
    if verbose > 0 {
        eprintln!("{} ok, {failed} failed", jobs_list.len() - failed);
    }
    if failed > 0 {
        EXIT_DATA
    } else {
        EXIT_OK
    }
}

/// Writes via a temporary file in the target directory, renamed into place
/// once complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Header summary of a container file. Reads the header only.
pub fn inspect(path: &Path) -> Result<String, String> {
    let mut file = File::open(path).map_err(|e| e.to_string())?;
    let size = file.metadata().map_err(|e| e.to_string())?.len();
    let h = ContainerHeader::read_from(&mut file).map_err(|e| e.to_string())?;
    if size != h.container_len() {
        return Err(format!(
            "file is {size} bytes but its header describes {} bytes",
            h.container_len()
        ));
    }
    Ok(format_header(&h, size))
}

pub fn format_header(h: &ContainerHeader, container_bytes: u64) -> String {
    let ratio = |pixels: u64| {
        compression_ratio(pixels, container_bytes)
            .map_or_else(|_| "n/a".to_string(), |r| r.to_string())
    };
    format!(
        "codec: {}\n\
         original: {}x{} ({} pixels)\n\
         carved: {}x{} ({} pixels, {} seams removed)\n\
         payload: {} bits ({} bytes)\n\
         container: {container_bytes} bytes ({HEADER_LEN} header)\n\
         raw ratio: {}\n\
         carved raw ratio: {}\n",
        h.codec,
        h.orig_rows,
        h.orig_cols,
        h.orig_pixels(),
        h.carved_rows,
        h.carved_cols,
        h.carved_pixels(),
        h.orig_cols - h.carved_cols,
        h.payload_bit_length,
        h.payload_byte_len(),
        ratio(h.orig_pixels()),
        ratio(h.carved_pixels()),
    )
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), String> {
    match out {
        Some(path) => {
            write_atomic(path, bytes).map_err(|e| format!("writing {}: {e}", path.display()))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| e.to_string()),
    }
}

fn cmd_bench(
    corpus: &Path,
    spec: &CompressionSpec,
    format: ReportFormat,
    out: Option<&Path>,
    jobs: usize,
    verbose: u8,
) -> i32 {
    let report = match run_bench(corpus, spec, jobs) {
        Ok(r) => r,
        Err(e @ (BenchError::EmptyCorpus(_) | BenchError::Io { .. })) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    for e in &report.errors {
        eprintln!("error: {}: {}", e.file_id, e.message);
    }
    if verbose > 0 {
        eprintln!(
            "{} files ok, {} failed, {} workers",
            report.records.len(),
            report.errors.len(),
            report.environment.parallelism
        );
    }
    let emitted = emit_report(&report, format).map_err(|e| e.to_string());
    if let Err(msg) = emitted.and_then(|bytes| write_output(out, &bytes)) {
        eprintln!("error: {msg}");
        return EXIT_DATA;
    }
    if report.has_errors() {
        EXIT_DATA
    } else {
        EXIT_OK
    }
}

fn cmd_probe(
    sizes: &[Size],
    spec: &CompressionSpec,
    format: ReportFormat,
    out: Option<&Path>,
    verbose: u8,
) -> i32 {
    let dims: Vec<(usize, usize)> = sizes.iter().map(|s| (s.rows, s.cols)).collect();
    let rows = match bench::scaling_probe(&dims, spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if verbose > 0 {
        for r in &rows {
            eprintln!("{}x{}: {:.6} s", r.rows, r.cols, r.total_seconds);
        }
    }
    let emitted = emit_probe(&rows, format).map_err(|e| e.to_string());
    match emitted.and_then(|bytes| write_output(out, &bytes)) {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_DATA
        }
    }
}
