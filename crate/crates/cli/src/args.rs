//! Command-line surface: subcommands, flags, and their defaults.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use roix::codec::CodecId;

#[derive(Parser, Debug)]
#[command(
    name = "roix",
    version,
    about = "ROI-based error-bounded image compression",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Segment images and pack each ROI into a .roix archive.
    Compress(CompressArgs),
    /// Reconstruct images from .roix archives.
    Decompress(DecompressArgs),
    /// Segment images and write the ROI masks.
    Segment(SegmentArgs),
    /// Score a prediction/reconstruction against a reference image.
    Metrics(MetricsArgs),
    /// Sweep codec × error-bound over inputs and tabulate the results.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodecArg {
    Store,
    Gzip,
    Zstd,
}

impl From<CodecArg> for CodecId {
    fn from(value: CodecArg) -> Self {
        match value {
            CodecArg::Store => CodecId::Store,
            CodecArg::Gzip => CodecId::Gzip,
            CodecArg::Zstd => CodecId::Zstd,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    /// Binary PGM (P5), 16-bit samples big-endian per the format.
    Pgm,
    /// Headerless little-endian raster.
    Raw,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(clap::Args, Debug)]
pub struct CompressArgs {
    /// Input PGM images (paths or globs).
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Lossless backend for the pixel payload.
    #[arg(long, value_enum, default_value_t = CodecArg::Zstd)]
    pub codec: CodecArg,
    /// Absolute error bound E applied to normalized ROI intensities.
    #[arg(long = "error-bound", value_name = "E", default_value_t = 0.0)]
    pub error_bound: f64,
    /// Number of intensity classes for threshold selection.
    #[arg(long, value_name = "N", default_value_t = roix::DEFAULT_CLASS_COUNT)]
    pub classes: usize,
    /// Background reference scan (PGM) subtracted before normalization.
    #[arg(long, value_name = "PATH")]
    pub background: Option<PathBuf>,
    /// Estimate a constant background from a border frame of this fraction.
    #[arg(
        long = "estimate-background",
        value_name = "FRACTION",
        conflicts_with = "background"
    )]
    pub estimate_background: Option<f64>,
    /// Store the background raster inside the archive.
    #[arg(long = "embed-background")]
    pub embed_background: bool,
    /// Directory for the .roix archives (default: next to each input).
    #[arg(long = "output-dir", value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Summary report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long = "report-path", value_name = "PATH")]
    pub report_path: Option<PathBuf>,
    /// Worker pool size.
    #[arg(long, value_name = "N", default_value_t = default_workers())]
    pub workers: usize,
}

#[derive(clap::Args, Debug)]
pub struct DecompressArgs {
    /// Input .roix archives (paths or globs).
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Background reference (PGM) for archives that do not embed one.
    #[arg(long, value_name = "PATH")]
    pub background: Option<PathBuf>,
    /// Directory for reconstructed images (default: next to each archive).
    #[arg(long = "output-dir", value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Output image format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Pgm)]
    pub format: OutputFormat,
    /// Summary report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long = "report-path", value_name = "PATH")]
    pub report_path: Option<PathBuf>,
    /// Worker pool size.
    #[arg(long, value_name = "N", default_value_t = default_workers())]
    pub workers: usize,
}

#[derive(clap::Args, Debug)]
pub struct SegmentArgs {
    /// Input PGM images (paths or globs).
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Number of intensity classes for threshold selection.
    #[arg(long, value_name = "N", default_value_t = roix::DEFAULT_CLASS_COUNT)]
    pub classes: usize,
    /// Background reference scan (PGM) subtracted before normalization.
    #[arg(long, value_name = "PATH")]
    pub background: Option<PathBuf>,
    /// Estimate a constant background from a border frame of this fraction.
    #[arg(
        long = "estimate-background",
        value_name = "FRACTION",
        conflicts_with = "background"
    )]
    pub estimate_background: Option<f64>,
    /// Directory for the mask images (default: next to each input).
    #[arg(long = "output-dir", value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Summary report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long = "report-path", value_name = "PATH")]
    pub report_path: Option<PathBuf>,
    /// Worker pool size.
    #[arg(long, value_name = "N", default_value_t = default_workers())]
    pub workers: usize,
}

#[derive(clap::Args, Debug)]
pub struct MetricsArgs {
    /// Predicted or reconstructed image (PGM).
    pub predicted: PathBuf,
    /// Reference or original image (PGM).
    pub reference: PathBuf,
    /// Report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long = "report-path", value_name = "PATH")]
    pub report_path: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// Input PGM images (paths or globs).
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Codecs to sweep.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_values_t = [CodecArg::Store, CodecArg::Gzip, CodecArg::Zstd]
    )]
    pub codecs: Vec<CodecArg>,
    /// Error bounds to sweep.
    #[arg(
        long = "error-bounds",
        value_name = "E,E,...",
        value_delimiter = ',',
        default_values_t = [0.1, 1.0, 5.0, 10.0, 15.0]
    )]
    pub error_bounds: Vec<f64>,
    /// Number of intensity classes for threshold selection.
    #[arg(long, value_name = "N", default_value_t = roix::DEFAULT_CLASS_COUNT)]
    pub classes: usize,
    /// Background reference scan (PGM) subtracted before normalization.
    #[arg(long, value_name = "PATH")]
    pub background: Option<PathBuf>,
    /// Estimate a constant background from a border frame of this fraction.
    #[arg(
        long = "estimate-background",
        value_name = "FRACTION",
        conflicts_with = "background"
    )]
    pub estimate_background: Option<f64>,
    /// Store the background raster inside each archive.
    #[arg(long = "embed-background")]
    pub embed_background: bool,
    /// Report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long = "report-path", value_name = "PATH")]
    pub report_path: Option<PathBuf>,
    /// Worker pool size.
    #[arg(long, value_name = "N", default_value_t = default_workers())]
    pub workers: usize,
}
