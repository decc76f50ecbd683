//! Subcommand implementations: per-file pipelines plus the batch plumbing
//! (glob expansion, worker pool, order-stable report aggregation).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use roix::codec::{
    compress_payload, compression_ratio, decode_archive, encode_archive, reconstruct_image,
    relative_improvement, CodecId,
};
use roix::imaging::{
    estimate_background, load_pgm, normalize_intensity, save_pgm, save_raw, subtract_background,
    BackgroundModel, BackgroundSource, BitDepth, GrayImage,
};
use roix::metrics::{ahd, confusion, overlap_metrics, spatial_reduction, ssim};
use roix::quantizer::QuantizationSpec;
use roix::segmentation::{segment_roi_scaled, BinaryMask, RoiBundle};

use crate::args::{
    BenchArgs, CompressArgs, DecompressArgs, MetricsArgs, OutputFormat, SegmentArgs,
};
use crate::report::{write_report, MetricsRow, ReportRow, METRICS_COLUMNS, REPORT_COLUMNS};

// ---------------------------------------------------------------------------
// Batch plumbing.

fn has_glob_meta(pattern: &str) -> bool {
    pattern.contains(['*', '?', '['])
}

/// Expand path-or-glob arguments into a sorted, deduplicated path list.
/// A pattern with glob metacharacters may legitimately match nothing; a
/// literal path that does not exist counts as a failure.
fn expand_inputs(patterns: &[String]) -> (Vec<PathBuf>, usize) {
    let mut paths = BTreeSet::new();
    let mut failures = 0usize;
    for pattern in patterns {
        match glob::glob(pattern) {
            Ok(entries) => {
                let mut matched = false;
                for entry in entries {
                    match entry {
                        Ok(path) => {
                            matched = true;
                            paths.insert(path);
                        }
                        Err(err) => {
                            eprintln!("error: {pattern}: {err}");
                            failures += 1;
                        }
                    }
                }
                if !matched && !has_glob_meta(pattern) {
                    eprintln!("error: {pattern}: no such file");
                    failures += 1;
                }
            }
            Err(err) => {
                eprintln!("error: {pattern}: invalid pattern: {err}");
                failures += 1;
            }
        }
    }
    (paths.into_iter().collect(), failures)
}

/// Run `op` over the inputs on a bounded worker pool. Rows keep input order;
/// failures are reported per file and counted.
fn run_batch<F>(
    inputs: &[PathBuf],
    workers: usize,
    op: F,
) -> anyhow::Result<(Vec<ReportRow>, usize)>
where
    F: Fn(&Path) -> anyhow::Result<Vec<ReportRow>> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    let results: Vec<anyhow::Result<Vec<ReportRow>>> =
        pool.install(|| inputs.par_iter().map(|path| op(path)).collect());

    let mut rows = Vec::new();
    let mut failures = 0usize;
    for (path, result) in inputs.iter().zip(results) {
        match result {
            Ok(mut file_rows) => rows.append(&mut file_rows),
            Err(err) => {
                eprintln!("error: {}: {:#}", path.display(), err);
                failures += 1;
            }
        }
    }
    Ok((rows, failures))
}

fn stem(input: &Path) -> String {
    input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into())
}

fn output_path(input: &Path, dir: Option<&Path>, file_name: String) -> PathBuf {
    match dir {
        Some(dir) => dir.join(file_name),
        None => input.with_file_name(file_name),
    }
}

// ---------------------------------------------------------------------------
// Background policy.

enum BackgroundPolicy {
    None,
    External(PathBuf),
    Estimate(f64),
}

impl BackgroundPolicy {
    fn from_flags(background: Option<&PathBuf>, estimate: Option<f64>) -> Self {
        match (background, estimate) {
            (Some(path), _) => Self::External(path.clone()),
            (None, Some(fraction)) => Self::Estimate(fraction),
            (None, None) => Self::None,
        }
    }

    fn resolve(&self, image: &GrayImage) -> anyhow::Result<Option<BackgroundModel>> {
        match self {
            Self::None => Ok(None),
            Self::External(path) => {
                let bg = load_pgm(path)
                    .with_context(|| format!("reading background {}", path.display()))?;
                Ok(Some(BackgroundModel {
                    image: bg,
                    source: BackgroundSource::ReferenceScan,
                }))
            }
            Self::Estimate(fraction) => Ok(Some(estimate_background(image, *fraction)?)),
        }
    }
}

// ---------------------------------------------------------------------------
// Shared pipeline front half.

struct SegmentedImage {
    original: GrayImage,
    background: Option<BackgroundModel>,
    bundle: RoiBundle,
}

fn segment_input(
    path: &Path,
    classes: usize,
    policy: &BackgroundPolicy,
) -> anyhow::Result<SegmentedImage> {
    let original = load_pgm(path).with_context(|| format!("reading {}", path.display()))?;
    let background = policy.resolve(&original)?;
    let working = match &background {
        Some(bg) => subtract_background(&original, bg)?,
        None => original.clone(),
    };
    let (normalized, scale) = normalize_intensity(&working);
    let bundle = segment_roi_scaled(&normalized, classes, scale)?;
    Ok(SegmentedImage {
        original,
        background,
        bundle,
    })
}

/// Spatial reduction, absent when the ROI is empty.
fn reduction(bundle: &RoiBundle) -> anyhow::Result<Option<f64>> {
    Ok((bundle.geometry.row_count() > 0)
        .then(|| spatial_reduction(&bundle.geometry, bundle.width, bundle.height))
        .transpose()?)
}

// ---------------------------------------------------------------------------
// Commands. Each returns the number of failed per-file operations.

pub fn cmd_compress(args: &CompressArgs) -> anyhow::Result<usize> {
    let (inputs, mut failures) = expand_inputs(&args.inputs);
    let policy = BackgroundPolicy::from_flags(args.background.as_ref(), args.estimate_background);
    let spec = QuantizationSpec::new(args.error_bound)?;
    let codec: CodecId = args.codec.into();

    let (rows, batch_failures) = run_batch(&inputs, args.workers, |path| {
        let seg = segment_input(path, args.classes, &policy)?;
        let embedded = args
            .embed_background
            .then_some(())
            .and(seg.background.as_ref());
        let start = Instant::now();
        let bytes = encode_archive(&seg.bundle, embedded, codec, spec)?;
        let compress_ms = start.elapsed().as_secs_f64() * 1e3;

        let out = output_path(
            path,
            args.output_dir.as_deref(),
            format!("{}.roix", stem(path)),
        );
        fs::write(&out, &bytes).with_context(|| format!("writing {}", out.display()))?;

        Ok(vec![ReportRow {
            dataset: path.display().to_string(),
            codec: Some(codec.name().to_string()),
            e_abs: Some(args.error_bound),
            cr: Some(compression_ratio(
                seg.original.raster_byte_len(),
                bytes.len() as u64,
            )?),
            rel_improvement: None,
            compress_ms: Some(compress_ms),
            decompress_ms: None,
            ssim: None,
            spatial_reduction: reduction(&seg.bundle)?,
        }])
    })?;
    failures += batch_failures;
    write_report(&rows, &REPORT_COLUMNS, args.report, args.report_path.as_deref())?;
    Ok(failures)
}

pub fn cmd_decompress(args: &DecompressArgs) -> anyhow::Result<usize> {
    let (inputs, mut failures) = expand_inputs(&args.inputs);

    let (rows, batch_failures) = run_batch(&inputs, args.workers, |path| {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let start = Instant::now();
        let (bundle, embedded_bg, header) = decode_archive(&bytes)?;
        let mut elapsed = start.elapsed();

        let background = match embedded_bg {
            Some(bg) => Some(bg),
            None => match &args.background {
                Some(bg_path) => Some(BackgroundModel {
                    image: load_pgm(bg_path)
                        .with_context(|| format!("reading background {}", bg_path.display()))?,
                    source: BackgroundSource::ReferenceScan,
                }),
                None => {
                    eprintln!(
                        "warning: {}: archive has no embedded background and none was \
                         supplied; reconstructing over zeros",
                        path.display()
                    );
                    None
                }
            },
        };

        let start = Instant::now();
        let image = reconstruct_image(&bundle, background.as_ref())?;
        elapsed += start.elapsed();

        let out_name = match args.format {
            OutputFormat::Pgm => format!("{}.recon.pgm", stem(path)),
            OutputFormat::Raw => format!("{}.recon.raw", stem(path)),
        };
        let out = output_path(path, args.output_dir.as_deref(), out_name);
        match args.format {
            OutputFormat::Pgm => save_pgm(&image, &out),
            OutputFormat::Raw => save_raw(&image, &out),
        }
        .with_context(|| format!("writing {}", out.display()))?;

        Ok(vec![ReportRow {
            dataset: path.display().to_string(),
            codec: Some(header.codec.name().to_string()),
            e_abs: Some(header.e_abs as f64),
            cr: Some(compression_ratio(image.raster_byte_len(), bytes.len() as u64)?),
            rel_improvement: None,
            compress_ms: None,
            decompress_ms: Some(elapsed.as_secs_f64() * 1e3),
            ssim: None,
            spatial_reduction: reduction(&bundle)?,
        }])
    })?;
    failures += batch_failures;
    write_report(&rows, &REPORT_COLUMNS, args.report, args.report_path.as_deref())?;
    Ok(failures)
}

pub fn cmd_segment(args: &SegmentArgs) -> anyhow::Result<usize> {
    let (inputs, mut failures) = expand_inputs(&args.inputs);
    let policy = BackgroundPolicy::from_flags(args.background.as_ref(), args.estimate_background);

    let (rows, batch_failures) = run_batch(&inputs, args.workers, |path| {
        let seg = segment_input(path, args.classes, &policy)?;
        let mask = seg
            .bundle
            .geometry
            .rasterize(seg.original.width(), seg.original.height())?;
        let mask_image = GrayImage::from_fn_depth8(mask.width(), mask.height(), |x, y| {
            if mask.get(x, y) {
                255
            } else {
                0
            }
        });
        let out = output_path(
            path,
            args.output_dir.as_deref(),
            format!("{}.mask.pgm", stem(path)),
        );
        save_pgm(&mask_image, &out).with_context(|| format!("writing {}", out.display()))?;

        Ok(vec![ReportRow {
            dataset: path.display().to_string(),
            codec: None,
            e_abs: None,
            cr: None,
            rel_improvement: None,
            compress_ms: None,
            decompress_ms: None,
            ssim: None,
            spatial_reduction: reduction(&seg.bundle)?,
        }])
    })?;
    failures += batch_failures;
    write_report(&rows, &REPORT_COLUMNS, args.report, args.report_path.as_deref())?;
    Ok(failures)
}

fn nonzero_mask(image: &GrayImage) -> BinaryMask {
    BinaryMask::from_fn(image.width(), image.height(), |x, y| image.get(x, y) != 0)
}

pub fn cmd_metrics(args: &MetricsArgs) -> anyhow::Result<usize> {
    let outcome = (|| -> anyhow::Result<MetricsRow> {
        let predicted = load_pgm(&args.predicted)
            .with_context(|| format!("reading {}", args.predicted.display()))?;
        let reference = load_pgm(&args.reference)
            .with_context(|| format!("reading {}", args.reference.display()))?;
        let overlap = overlap_metrics(&confusion(
            &nonzero_mask(&predicted),
            &nonzero_mask(&reference),
        )?);
        let ahd_value = match ahd(&nonzero_mask(&predicted), &nonzero_mask(&reference)) {
            Ok(value) => value,
            Err(roix::metrics::MetricsError::TooManyPairs { pairs, limit }) => {
                eprintln!(
                    "warning: metrics: {pairs} point pairs exceed the {limit}-pair \
                     distance guard; ahd omitted"
                );
                None
            }
            Err(err) => return Err(err.into()),
        };
        let ssim_value = ssim(&predicted, &reference)?;
        Ok(MetricsRow {
            dsc: overlap.dsc,
            iou: overlap.iou,
            sensitivity: overlap.sensitivity,
            specificity: overlap.specificity,
            accuracy: overlap.accuracy,
            f_c: overlap.f_c,
            kappa: overlap.kappa,
            auc: overlap.auc,
            ahd: ahd_value,
            ssim: Some(ssim_value),
        })
    })();

    match outcome {
        Ok(row) => {
            write_report(&[row], &METRICS_COLUMNS, args.report, args.report_path.as_deref())?;
            Ok(0)
        }
        Err(err) => {
            eprintln!("error: metrics: {err:#}");
            Ok(1)
        }
    }
}

pub fn cmd_bench(args: &BenchArgs) -> anyhow::Result<usize> {
    let (inputs, mut failures) = expand_inputs(&args.inputs);
    let policy = BackgroundPolicy::from_flags(args.background.as_ref(), args.estimate_background);
    let codecs: Vec<CodecId> = args.codecs.iter().map(|&c| c.into()).collect();

    let (rows, batch_failures) = run_batch(&inputs, args.workers, |path| {
        let seg = segment_input(path, args.classes, &policy)?;
        let raw = seg.original.raster_bytes();
        let raw_len = seg.original.raster_byte_len();
        let eight_bit = seg.original.bit_depth() == BitDepth::Eight;
        let sr = reduction(&seg.bundle)?;

        let mut rows = Vec::with_capacity(codecs.len() * args.error_bounds.len());
        for &codec in &codecs {
            // "Standard" baseline: the same backend applied to the raw
            // raster bytes, no ROI pipeline.
            let baseline = compress_payload(&raw, codec)?;
            let standard_ratio = compression_ratio(raw_len, baseline.len() as u64)?;

            for &e in &args.error_bounds {
                let spec = QuantizationSpec::new(e)?;
                let embedded = args
                    .embed_background
                    .then_some(())
                    .and(seg.background.as_ref());

                let start = Instant::now();
                let bytes = encode_archive(&seg.bundle, embedded, codec, spec)?;
                let compress_ms = start.elapsed().as_secs_f64() * 1e3;

                let start = Instant::now();
                let (decoded, decoded_bg, _) = decode_archive(&bytes)?;
                let mut elapsed = start.elapsed();
                let recon_bg = match decoded_bg {
                    Some(bg) => Some(bg),
                    None => seg.background.clone(),
                };
                let start = Instant::now();
                let recon = reconstruct_image(&decoded, recon_bg.as_ref())?;
                elapsed += start.elapsed();

                let cr = compression_ratio(raw_len, bytes.len() as u64)?;
                rows.push(ReportRow {
                    dataset: path.display().to_string(),
                    codec: Some(codec.name().to_string()),
                    e_abs: Some(e),
                    cr: Some(cr),
                    rel_improvement: Some(relative_improvement(cr, standard_ratio)?),
                    compress_ms: Some(compress_ms),
                    decompress_ms: Some(elapsed.as_secs_f64() * 1e3),
                    ssim: eight_bit.then(|| ssim(&recon, &seg.original)).transpose()?,
                    spatial_reduction: sr,
                });
            }
        }
        Ok(rows)
    })?;
    failures += batch_failures;
    write_report(&rows, &REPORT_COLUMNS, args.report, args.report_path.as_deref())?;
    Ok(failures)
}
