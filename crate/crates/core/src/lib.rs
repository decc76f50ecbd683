//! ROI-centric compression for grayscale CT-style images.
//!
//! The pipeline: subtract a background reference, normalize to 8 bits,
//! threshold with exhaustive multi-Otsu, keep the largest connected object,
//! store its per-row spans exactly and its pixels under absolute
//! error-bounded quantization, compress with a pluggable lossless backend
//! into a bit-exact archive, and reconstruct. A metrics suite (overlap
//! scores, Average Hausdorff Distance, SSIM, spatial reduction) evaluates
//! segmentation and reconstruction quality.
//!
//! Modules follow the pipeline order:
//!
//! - [`imaging`]: image model, PGM/raw I/O, background handling,
//!   normalization
//! - [`segmentation`]: histogram → thresholds → mask → largest component →
//!   row spans + pixel sections
//! - [`quantizer`]: absolute error-bounded quantization plus its
//!   verification oracle
//! - [`codec`]: the ROIX archive container, compression backends,
//!   reconstruction
//! - [`metrics`]: evaluation battery
//! - [`phantom`]: deterministic synthetic images for tests and benches

pub mod codec;
pub mod imaging;
pub mod metrics;
pub mod phantom;
pub mod quantizer;
pub mod segmentation;

pub use codec::{
    compression_ratio, decode_archive, encode_archive, reconstruct_image, relative_improvement,
    ArchiveHeader, CodecError, CodecId,
};
pub use imaging::{
    denormalize, estimate_background, load_pgm, load_raw, normalize_intensity, save_pgm, save_raw,
    subtract_background, BackgroundModel, BackgroundSource, BitDepth, GrayImage, ImagingError,
    NormalizationScale,
};
pub use metrics::{
    ahd, confusion, overlap_metrics, spatial_reduction, ssim, ConfusionCounts, MetricsError,
    MetricsReport, OverlapMetrics,
};
pub use quantizer::{
    oracle_quantize, quantize_abs, verify_bound, QuantizationSpec, QuantizedRun, QuantizerError,
};
pub use segmentation::{
    binarize, extract_row_spans, gather_pixels, histogram, largest_component, multi_otsu,
    segment_roi, segment_roi_scaled, BinaryMask, GeometryTable, Histogram, PixelSections,
    RoiBundle, RowSpan, SegmentationError, DEFAULT_CLASS_COUNT,
};
