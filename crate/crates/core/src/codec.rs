//! The ROIX archive container: pluggable lossless backends, bit-exact
//! encode/decode of extracted-ROI bundles, and image reconstruction.
//!
//! # Container layout (version 1, all integers little-endian)
//!
//! ```text
//! offset  size  field
//!      0     4  magic "ROIX"
//!      4     1  version (= 1)
//!      5     1  flags: bit 0 = background block present,
//!                      bit 1 = background was estimated (not a reference scan),
//!                      bits 2–7 must be zero
//!      6     1  pixel codec id (0 store, 1 gzip, 2 zstd, 3–15 reserved)
//!      7     1  source bit depth (8 or 16)
//!      8     4  e_abs (f32): the quantization tolerance the encoder promised
//!     12     4  i_max (u32): normalization scale for reconstruction
//!     16     4  width (u32)
//!     20     4  height (u32)
//!     24     4  geometry row count m (u32)
//!     28     …  geometry block:  comp_len (u64) + raw-deflate bytes of
//!               m × 12-byte records (row u32, x_start u32, x_end u32);
//!               raw size is m × 12 by construction
//!      …     …  pixel block:     raw_len (u64) + comp_len (u64) + codec
//!               bytes of the quantized pixel stream (raw_len must equal
//!               Σ n_i of the geometry)
//!      …     …  background block (only when flags bit 0): raw_len (u64) +
//!               comp_len (u64) + raw-deflate bytes of the source-depth
//!               raster (16-bit samples little-endian)
//!   last     4  CRC32 (IEEE) over every preceding byte
//! ```
//!
//! Geometry and background blocks always use raw deflate (RFC 1951):
//! they must be lossless regardless of the pixel codec choice. The pixel
//! block uses the declared codec: gzip framing per RFC 1952 or a zstd
//! frame per RFC 8878.
//!
//! Decoding is phased so malformed inputs fail with their designated error
//! and bounded work: magic/version checks, structural slicing from declared
//! lengths (`Truncated`/`TrailingBytes`), CRC verification (`CrcMismatch`),
//! then decompression and semantic validation (`Inconsistent` and friends).
//! Declared sizes never drive allocations directly: every decompressor is
//! wrapped in a `take` limit and checked for exact output size.

use std::io::{Read, Write};

use thiserror::Error;

use crate::imaging::{BackgroundModel, BackgroundSource, BitDepth, GrayImage, ImagingError};
use crate::quantizer::{quantize_abs, QuantizationSpec};
use crate::segmentation::{
    GeometryTable, PixelSections, RoiBundle, RowSpan, SegmentationError,
};

pub const MAGIC: [u8; 4] = *b"ROIX";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 28;

/// Upper bound on any single decompressed block; declared sizes above this
/// are rejected before any decompression work.
pub const MAX_RAW_BLOCK: u64 = 1 << 30;

const FLAG_BACKGROUND: u8 = 0b01;
const FLAG_BG_ESTIMATED: u8 = 0b10;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("bad magic {found:02x?}, expected \"ROIX\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported archive version {0}, this reader handles version 1")]
    UnsupportedVersion(u8),
    #[error("archive truncated: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("archive has {actual} bytes but its blocks account for {expected}")]
    TrailingBytes { expected: usize, actual: usize },
    #[error("CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("codec id {0} is reserved for external compressors and not implemented")]
    UnimplementedCodec(u8),
    #[error("codec id {0} is not defined")]
    InvalidCodecId(u8),
    #[error("declared {what} size {declared} exceeds the {limit}-byte block limit")]
    Oversize {
        what: &'static str,
        declared: u64,
        limit: u64,
    },
    #[error("inconsistent archive: {0}")]
    Inconsistent(String),
    #[error("compression backend failure: {0}")]
    Backend(#[from] std::io::Error),
    #[error("{what} must be positive")]
    NonPositive { what: &'static str },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
}

/// Pixel-payload compression backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodecId {
    /// Identity: payload stored as-is.
    Store,
    /// DEFLATE (RFC 1951) in gzip framing (RFC 1952).
    Gzip,
    /// Zstandard frame (RFC 8878).
    Zstd,
}

impl CodecId {
    pub const ALL: [CodecId; 3] = [CodecId::Store, CodecId::Gzip, CodecId::Zstd];

    pub fn to_u8(self) -> u8 {
        match self {
            CodecId::Store => 0,
            CodecId::Gzip => 1,
            CodecId::Zstd => 2,
        }
    }

    pub fn from_u8(id: u8) -> Result<Self, CodecError> {
        match id {
            0 => Ok(CodecId::Store),
            1 => Ok(CodecId::Gzip),
            2 => Ok(CodecId::Zstd),
            3..=15 => Err(CodecError::UnimplementedCodec(id)),
            _ => Err(CodecError::InvalidCodecId(id)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Store => "store",
            CodecId::Gzip => "gzip",
            CodecId::Zstd => "zstd",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "store" => Some(CodecId::Store),
            "gzip" => Some(CodecId::Gzip),
            "zstd" => Some(CodecId::Zstd),
            _ => None,
        }
    }
}

/// Decoded archive header fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchiveHeader {
    pub codec: CodecId,
    pub e_abs: f32,
    pub i_max: u32,
    pub width: u32,
    pub height: u32,
    pub source_depth: BitDepth,
    pub row_count: u32,
    pub has_background: bool,
}

/// Compress a payload with the chosen backend.
pub fn compress_payload(bytes: &[u8], codec: CodecId) -> Result<Vec<u8>, CodecError> {
    match codec {
        CodecId::Store => Ok(bytes.to_vec()),
        CodecId::Gzip => {
            let mut encoder =
                flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
            encoder.write_all(bytes)?;
            Ok(encoder.finish()?)
        }
        CodecId::Zstd => Ok(zstd::stream::encode_all(
            bytes,
            zstd::DEFAULT_COMPRESSION_LEVEL,
        )?),
    }
}

/// Invert [`compress_payload`]. Output is capped at `limit` bytes; a stream
/// that would exceed it or that fails to parse is rejected.
pub fn decompress_payload(
    bytes: &[u8],
    codec: CodecId,
    limit: u64,
) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    let result = match codec {
        CodecId::Store => {
            if bytes.len() as u64 > limit {
                return Err(CodecError::Oversize {
                    what: "stored payload",
                    declared: bytes.len() as u64,
                    limit,
                });
            }
            out.extend_from_slice(bytes);
            Ok(out.len() as u64)
        }
        CodecId::Gzip => flate2::read::GzDecoder::new(bytes)
            .take(limit + 1)
            .read_to_end(&mut out)
            .map(|n| n as u64)
            .map_err(|e| CodecError::Inconsistent(format!("gzip stream: {e}"))),
        CodecId::Zstd => zstd::stream::read::Decoder::new(bytes)
            .and_then(|d| {
                let mut n = 0u64;
                let mut taken = d.take(limit + 1);
                taken.read_to_end(&mut out).map(|read| {
                    n = read as u64;
                    n
                })
            })
            .map_err(|e| CodecError::Inconsistent(format!("zstd stream: {e}"))),
    }?;
    if result > limit {
        return Err(CodecError::Oversize {
            what: "decompressed payload",
            declared: result,
            limit,
        });
    }
    Ok(out)
}

/// Raw-deflate (RFC 1951) used for the always-lossless blocks.
fn deflate_block(bytes: &[u8]) -> Result<Vec<u8>, CodecError> {
    let mut encoder =
        flate2::write::DeflateEncoder::new(Vec::new(), flate2::Compression::default());
    encoder.write_all(bytes)?;
    Ok(encoder.finish()?)
}

fn inflate_block_exact(bytes: &[u8], expected: u64, what: &'static str) -> Result<Vec<u8>, CodecError> {
    if expected > MAX_RAW_BLOCK {
        return Err(CodecError::Oversize {
            what,
            declared: expected,
            limit: MAX_RAW_BLOCK,
        });
    }
    let mut out = Vec::new();
    flate2::read::DeflateDecoder::new(bytes)
        .take(expected + 1)
        .read_to_end(&mut out)
        .map_err(|e| CodecError::Inconsistent(format!("{what} deflate stream: {e}")))?;
    if out.len() as u64 != expected {
        return Err(CodecError::Inconsistent(format!(
            "{what} decompressed to {} bytes, expected {expected}",
            out.len()
        )));
    }
    Ok(out)
}

fn decompress_pixel_exact(
    bytes: &[u8],
    codec: CodecId,
    expected: u64,
) -> Result<Vec<u8>, CodecError> {
    if expected > MAX_RAW_BLOCK {
        return Err(CodecError::Oversize {
            what: "pixel stream",
            declared: expected,
            limit: MAX_RAW_BLOCK,
        });
    }
    let out = decompress_payload(bytes, codec, expected)?;
    if out.len() as u64 != expected {
        return Err(CodecError::Inconsistent(format!(
            "pixel stream decompressed to {} bytes, declared raw length {expected}",
            out.len()
        )));
    }
    Ok(out)
}

fn geometry_payload(geometry: &GeometryTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(geometry.row_count() * 12);
    for s in geometry.rows() {
        out.extend_from_slice(&s.row.to_le_bytes());
        out.extend_from_slice(&s.x_start.to_le_bytes());
        out.extend_from_slice(&s.x_end.to_le_bytes());
    }
    out
}

fn parse_geometry(payload: &[u8]) -> Result<GeometryTable, CodecError> {
    debug_assert_eq!(payload.len() % 12, 0);
    let rows = payload
        .chunks_exact(12)
        .map(|c| RowSpan {
            row: u32::from_le_bytes(c[0..4].try_into().expect("chunk size")),
            x_start: u32::from_le_bytes(c[4..8].try_into().expect("chunk size")),
            x_end: u32::from_le_bytes(c[8..12].try_into().expect("chunk size")),
        })
        .collect();
    GeometryTable::new(rows).map_err(|e| CodecError::Inconsistent(format!("geometry: {e}")))
}

/// Serialize a bundle into archive bytes: geometry kept exact, pixels
/// quantized per `spec` then compressed with `codec`, background embedded
/// when supplied.
pub fn encode_archive(
    bundle: &RoiBundle,
    background: Option<&BackgroundModel>,
    codec: CodecId,
    spec: QuantizationSpec,
) -> Result<Vec<u8>, CodecError> {
    if let Some(bg) = background {
        if bg.image.width() != bundle.width || bg.image.height() != bundle.height {
            return Err(ImagingError::DimensionMismatch {
                a_width: bundle.width,
                a_height: bundle.height,
                b_width: bg.image.width(),
                b_height: bg.image.height(),
            }
            .into());
        }
        if bg.image.bit_depth() != bundle.scale.source_depth() {
            return Err(ImagingError::BitDepthMismatch {
                a: bundle.scale.source_depth(),
                b: bg.image.bit_depth(),
            }
            .into());
        }
    }

    let stream = bundle.pixels.concatenated();
    if stream.len() as u64 > MAX_RAW_BLOCK {
        return Err(CodecError::Oversize {
            what: "pixel stream",
            declared: stream.len() as u64,
            limit: MAX_RAW_BLOCK,
        });
    }
    let quantized = quantize_abs(&stream, spec);
    let pixel_comp = compress_payload(quantized.values(), codec)?;
    let geometry_comp = deflate_block(&geometry_payload(&bundle.geometry))?;

    let mut flags = 0u8;
    if let Some(bg) = background {
        flags |= FLAG_BACKGROUND;
        if bg.source == BackgroundSource::Estimated {
            flags |= FLAG_BG_ESTIMATED;
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(flags);
    out.push(codec.to_u8());
    out.push(bundle.scale.source_depth().bits());
    out.extend_from_slice(&(spec.e_abs() as f32).to_le_bytes());
    out.extend_from_slice(&bundle.scale.i_max().to_le_bytes());
    out.extend_from_slice(&bundle.width.to_le_bytes());
    out.extend_from_slice(&bundle.height.to_le_bytes());
    out.extend_from_slice(&(bundle.geometry.row_count() as u32).to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_LEN);

    out.extend_from_slice(&(geometry_comp.len() as u64).to_le_bytes());
    out.extend_from_slice(&geometry_comp);

    out.extend_from_slice(&(quantized.len() as u64).to_le_bytes());
    out.extend_from_slice(&(pixel_comp.len() as u64).to_le_bytes());
    out.extend_from_slice(&pixel_comp);

    if let Some(bg) = background {
        let raster = bg.image.raster_bytes();
        if raster.len() as u64 > MAX_RAW_BLOCK {
            return Err(CodecError::Oversize {
                what: "background raster",
                declared: raster.len() as u64,
                limit: MAX_RAW_BLOCK,
            });
        }
        let bg_comp = deflate_block(&raster)?;
        out.extend_from_slice(&(raster.len() as u64).to_le_bytes());
        out.extend_from_slice(&(bg_comp.len() as u64).to_le_bytes());
        out.extend_from_slice(&bg_comp);
    }

    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn need(&self, n: usize) -> Result<(), CodecError> {
        let expected = self
            .pos
            .checked_add(n)
            .ok_or(CodecError::Truncated {
                expected: usize::MAX,
                actual: self.bytes.len(),
            })?;
        if expected > self.bytes.len() {
            return Err(CodecError::Truncated {
                expected,
                actual: self.bytes.len(),
            });
        }
        Ok(())
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        self.need(n)?;
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("len 8")))
    }

    /// A declared block length, bounded by what the file can still hold.
    fn block_len(&mut self) -> Result<usize, CodecError> {
        let declared = self.u64()?;
        let available = (self.bytes.len() - self.pos) as u64;
        if declared > available {
            return Err(CodecError::Truncated {
                expected: self.pos + declared.min(u64::MAX - 1) as usize,
                actual: self.bytes.len(),
            });
        }
        Ok(declared as usize)
    }
}

/// Parse and validate archive bytes back into a bundle, optional background,
/// and the header fields. See the module docs for the validation phases.
pub fn decode_archive(
    bytes: &[u8],
) -> Result<(RoiBundle, Option<BackgroundModel>, ArchiveHeader), CodecError> {
    // Phase 1: identity checks.
    if bytes.len() < 4 {
        return Err(CodecError::Truncated {
            expected: 4,
            actual: bytes.len(),
        });
    }
    if bytes[0..4] != MAGIC {
        return Err(CodecError::BadMagic {
            found: bytes[0..4].try_into().expect("len 4"),
        });
    }
    if bytes.len() < 5 {
        return Err(CodecError::Truncated {
            expected: 5,
            actual: bytes.len(),
        });
    }
    if bytes[4] != VERSION {
        return Err(CodecError::UnsupportedVersion(bytes[4]));
    }

    // Phase 2: structural slicing from declared lengths, no decompression.
    let mut cur = Cursor { bytes, pos: 0 };
    let header_bytes = cur.take(HEADER_LEN)?;
    let flags = header_bytes[5];
    let codec_byte = header_bytes[6];
    let depth_byte = header_bytes[7];
    let e_abs = f32::from_le_bytes(header_bytes[8..12].try_into().expect("len 4"));
    let i_max = u32::from_le_bytes(header_bytes[12..16].try_into().expect("len 4"));
    let width = u32::from_le_bytes(header_bytes[16..20].try_into().expect("len 4"));
    let height = u32::from_le_bytes(header_bytes[20..24].try_into().expect("len 4"));
    let row_count = u32::from_le_bytes(header_bytes[24..28].try_into().expect("len 4"));
    let has_background = flags & FLAG_BACKGROUND != 0;

    let geom_comp_len = cur.block_len()?;
    let geom_comp = cur.take(geom_comp_len)?;

    let pixel_raw_len = cur.u64()?;
    let pixel_comp_len = cur.block_len()?;
    let pixel_comp = cur.take(pixel_comp_len)?;

    let background_block = if has_background {
        let raw_len = cur.u64()?;
        let comp_len = cur.block_len()?;
        Some((raw_len, cur.take(comp_len)?))
    } else {
        None
    };

    cur.need(4)?;
    if cur.pos + 4 != bytes.len() {
        return Err(CodecError::TrailingBytes {
            expected: cur.pos + 4,
            actual: bytes.len(),
        });
    }

    // Phase 3: integrity. Everything after this point trusts the bytes.
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("len 4"));
    let computed = crc32fast::hash(&bytes[..bytes.len() - 4]);
    if stored != computed {
        return Err(CodecError::CrcMismatch { stored, computed });
    }

    // Phase 4: semantic validation and decompression.
    if flags & !(FLAG_BACKGROUND | FLAG_BG_ESTIMATED) != 0 {
        return Err(CodecError::Inconsistent(format!(
            "unknown flag bits {flags:#04x}"
        )));
    }
    let codec = CodecId::from_u8(codec_byte)?;
    let source_depth = BitDepth::from_bits(depth_byte).ok_or_else(|| {
        CodecError::Inconsistent(format!("invalid source bit depth {depth_byte}"))
    })?;
    if i_max == 0 || i_max > source_depth.max_value() as u32 {
        return Err(CodecError::Inconsistent(format!(
            "normalization scale {i_max} out of range for {source_depth}"
        )));
    }
    if !e_abs.is_finite() || e_abs < 0.0 {
        return Err(CodecError::Inconsistent(format!(
            "tolerance {e_abs} is not a finite non-negative value"
        )));
    }
    if row_count as u64 > height as u64 {
        return Err(CodecError::Inconsistent(format!(
            "geometry declares {row_count} rows in a {height}-row image"
        )));
    }

    let geom_raw = inflate_block_exact(geom_comp, row_count as u64 * 12, "geometry block")?;
    let geometry = parse_geometry(&geom_raw)?;
    geometry
        .check_bounds(width, height)
        .map_err(|e| CodecError::Inconsistent(format!("geometry: {e}")))?;

    if pixel_raw_len != geometry.total_span_pixels() {
        return Err(CodecError::Inconsistent(format!(
            "pixel raw length {pixel_raw_len} does not match geometry total {}",
            geometry.total_span_pixels()
        )));
    }
    let stream = decompress_pixel_exact(pixel_comp, codec, pixel_raw_len)?;
    let mut sections = Vec::with_capacity(geometry.row_count());
    let mut offset = 0usize;
    for span in geometry.rows() {
        let n = span.len();
        sections.push(stream[offset..offset + n].to_vec());
        offset += n;
    }

    let background = match background_block {
        Some((raw_len, comp)) => {
            let expected = width as u64 * height as u64 * source_depth.bytes_per_sample() as u64;
            if raw_len != expected {
                return Err(CodecError::Inconsistent(format!(
                    "background raw length {raw_len}, expected {expected} for {width}x{height} {source_depth}"
                )));
            }
            let raster = inflate_block_exact(comp, raw_len, "background block")?;
            let image = crate::imaging::parse_raw(&raster, width, height, source_depth)
                .map_err(|e| CodecError::Inconsistent(format!("background raster: {e}")))?;
            let source = if flags & FLAG_BG_ESTIMATED != 0 {
                BackgroundSource::Estimated
            } else {
                BackgroundSource::ReferenceScan
            };
            Some(BackgroundModel { image, source })
        }
        None => None,
    };

    let scale = crate::imaging::NormalizationScale::new(i_max, source_depth)
        .map_err(|e| CodecError::Inconsistent(format!("scale: {e}")))?;
    let bundle = RoiBundle::new(
        geometry,
        PixelSections::new(sections),
        width,
        height,
        scale,
    )
    .map_err(|e| CodecError::Inconsistent(format!("bundle: {e}")))?;

    let header = ArchiveHeader {
        codec,
        e_abs,
        i_max,
        width,
        height,
        source_depth,
        row_count,
        has_background,
    };
    Ok((bundle, background, header))
}

/// Paint the bundle onto its background (or a zero canvas) at source depth:
/// each stored pixel is denormalized and added to the background value,
/// clamped to the depth's range. Rows outside the geometry stay pure
/// background.
pub fn reconstruct_image(
    bundle: &RoiBundle,
    background: Option<&BackgroundModel>,
) -> Result<GrayImage, CodecError> {
    let depth = bundle.scale.source_depth();
    if let Some(bg) = background {
        if bg.image.width() != bundle.width || bg.image.height() != bundle.height {
            return Err(ImagingError::DimensionMismatch {
                a_width: bundle.width,
                a_height: bundle.height,
                b_width: bg.image.width(),
                b_height: bg.image.height(),
            }
            .into());
        }
        if bg.image.bit_depth() != depth {
            return Err(ImagingError::BitDepthMismatch {
                a: depth,
                b: bg.image.bit_depth(),
            }
            .into());
        }
    }

    let mut pixels: Vec<u16> = match background {
        Some(bg) => bg.image.pixels().to_vec(),
        None => vec![0; bundle.width as usize * bundle.height as usize],
    };
    let max = depth.max_value() as u32;
    for (span, section) in bundle.geometry.rows().iter().zip(bundle.pixels.sections()) {
        let base = span.row as usize * bundle.width as usize + span.x_start as usize;
        for (j, &p) in section.iter().enumerate() {
            let roi = crate::imaging::denormalize_value(p, &bundle.scale) as u32;
            let combined = roi + pixels[base + j] as u32;
            pixels[base + j] = combined.min(max) as u16;
        }
    }
    Ok(GrayImage::new(bundle.width, bundle.height, depth, pixels)?)
}

/// original size ÷ archive size.
pub fn compression_ratio(original_size: u64, archive_size: u64) -> Result<f64, CodecError> {
    if archive_size == 0 {
        return Err(CodecError::NonPositive {
            what: "archive size",
        });
    }
    Ok(original_size as f64 / archive_size as f64)
}

/// ROI-pipeline ratio ÷ baseline ratio.
pub fn relative_improvement(roix_ratio: f64, standard_ratio: f64) -> Result<f64, CodecError> {
    if !(standard_ratio > 0.0) {
        return Err(CodecError::NonPositive {
            what: "baseline compression ratio",
        });
    }
    Ok(roix_ratio / standard_ratio)
}
