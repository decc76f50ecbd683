//! Grayscale image model, PGM/raw file I/O, background subtraction and
//! 8-bit intensity normalization.
//!
//! Images are row-major rasters of 8- or 16-bit samples. All operations are
//! pure: they take references and return new values.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

/// Sample width of a [`GrayImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    /// Largest representable sample value.
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }

    /// Bytes per sample in raw serialized form.
    pub fn bytes_per_sample(self) -> usize {
        match self {
            BitDepth::Eight => 1,
            BitDepth::Sixteen => 2,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            8 => Some(BitDepth::Eight),
            16 => Some(BitDepth::Sixteen),
            _ => None,
        }
    }
}

impl fmt::Display for BitDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-bit", self.bits())
    }
}

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("payload size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("pixel buffer length {actual} does not match {width}x{height}")]
    PixelCountMismatch {
        width: u32,
        height: u32,
        actual: usize,
    },
    #[error("pixel value {value} exceeds {depth} maximum")]
    PixelOutOfRange { value: u16, depth: BitDepth },
    #[error("dimension mismatch: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error("bit depth mismatch: {a} vs {b}")]
    BitDepthMismatch { a: BitDepth, b: BitDepth },
    #[error("degenerate image: zero area")]
    DegenerateImage,
    #[error("border fraction {fraction} must lie in (0, 0.5) and span at least one pixel")]
    InvalidBorderFraction { fraction: f64 },
    #[error("normalization scale i_max must be >= 1, got {0}")]
    InvalidScale(u32),
}

/// A 2-D grayscale raster. Samples are stored as `u16` regardless of depth;
/// the constructor enforces that every value fits the declared depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    bit_depth: BitDepth,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(
        width: u32,
        height: u32,
        bit_depth: BitDepth,
        pixels: Vec<u16>,
    ) -> Result<Self, ImagingError> {
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImagingError::PixelCountMismatch {
                width,
                height,
                actual: pixels.len(),
            });
        }
        if bit_depth == BitDepth::Eight {
            if let Some(&value) = pixels.iter().find(|&&p| p > 255) {
                return Err(ImagingError::PixelOutOfRange {
                    value,
                    depth: bit_depth,
                });
            }
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            pixels,
        })
    }

    /// Depth-8 image from a per-pixel function over (x, y).
    pub fn from_fn_depth8(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y) as u16);
            }
        }
        Self {
            width,
            height,
            bit_depth: BitDepth::Eight,
            pixels,
        }
    }

    /// Constant-valued image.
    pub fn constant(
        width: u32,
        height: u32,
        bit_depth: BitDepth,
        value: u16,
    ) -> Result<Self, ImagingError> {
        if value > bit_depth.max_value() {
            return Err(ImagingError::PixelOutOfRange {
                value,
                depth: bit_depth,
            });
        }
        Self::new(
            width,
            height,
            bit_depth,
            vec![value; width as usize * height as usize],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.len()
    }

    /// Sample at column `x`, row `y`. Panics when out of bounds.
    pub fn get(&self, x: u32, y: u32) -> u16 {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// One raster row.
    pub fn row(&self, y: u32) -> &[u16] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.pixels[start..start + w]
    }

    /// Maximum sample value, or 0 for an empty raster.
    pub fn max_pixel(&self) -> u16 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }

    /// Raw row-major sample bytes: 1 byte per sample at depth 8,
    /// little-endian pairs at depth 16.
    pub fn raster_bytes(&self) -> Vec<u8> {
        match self.bit_depth {
            BitDepth::Eight => self.pixels.iter().map(|&p| p as u8).collect(),
            BitDepth::Sixteen => self
                .pixels
                .iter()
                .flat_map(|&p| p.to_le_bytes())
                .collect(),
        }
    }

    /// Byte size of the raw raster payload.
    pub fn raster_byte_len(&self) -> u64 {
        self.pixel_count() as u64 * self.bit_depth.bytes_per_sample() as u64
    }
}

/// Where a background raster came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundSource {
    /// Acquired as a calibration scan with no sample present.
    ReferenceScan,
    /// Derived from the image itself.
    Estimated,
}

/// Background raster paired with its provenance. Dimensions and depth must
/// match the image it will be subtracted from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackgroundModel {
    pub image: GrayImage,
    pub source: BackgroundSource,
}

/// Scale information needed to invert [`normalize_intensity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizationScale {
    i_max: u32,
    source_depth: BitDepth,
}

impl NormalizationScale {
    pub fn new(i_max: u32, source_depth: BitDepth) -> Result<Self, ImagingError> {
        if i_max == 0 {
            return Err(ImagingError::InvalidScale(i_max));
        }
        Ok(Self {
            i_max,
            source_depth,
        })
    }

    /// Scale of an image that was already 8-bit: a no-op on both directions.
    pub fn identity() -> Self {
        Self {
            i_max: 255,
            source_depth: BitDepth::Eight,
        }
    }

    pub fn i_max(&self) -> u32 {
        self.i_max
    }

    pub fn source_depth(&self) -> BitDepth {
        self.source_depth
    }
}

fn round_half_up(v: f64) -> u64 {
    (v + 0.5).floor() as u64
}

/// Parse a binary (P5) PGM byte stream.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, ImagingError> {
    let mut pos = 0usize;

    fn skip_whitespace(bytes: &[u8], pos: &mut usize) {
        while *pos < bytes.len() {
            match bytes[*pos] {
                b' ' | b'\t' | b'\r' | b'\n' => *pos += 1,
                b'#' => {
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn read_token(bytes: &[u8], pos: &mut usize) -> Option<Vec<u8>> {
        skip_whitespace(bytes, pos);
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (*pos > start).then(|| bytes[start..*pos].to_vec())
    }

    fn read_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u64, ImagingError> {
        let token = read_token(bytes, pos)
            .ok_or_else(|| ImagingError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(&token)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| ImagingError::MalformedHeader(format!("invalid {what}")))
    }

    let magic = read_token(bytes, &mut pos)
        .ok_or_else(|| ImagingError::MalformedHeader("empty file".into()))?;
    if magic != b"P5" {
        return Err(ImagingError::MalformedHeader(
            "expected P5 magic".to_string(),
        ));
    }
    let width = read_number(bytes, &mut pos, "width")?;
    let height = read_number(bytes, &mut pos, "height")?;
    let maxval = read_number(bytes, &mut pos, "maxval")?;
    if width > u32::MAX as u64 || height > u32::MAX as u64 {
        return Err(ImagingError::MalformedHeader("dimensions too large".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(ImagingError::MalformedHeader(format!(
            "maxval {maxval} out of range"
        )));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
        pos += 1;
    } else {
        return Err(ImagingError::MalformedHeader(
            "missing separator before payload".into(),
        ));
    }

    let depth = if maxval <= 255 {
        BitDepth::Eight
    } else {
        BitDepth::Sixteen
    };
    let count = width as usize * height as usize;
    let expected = count * depth.bytes_per_sample();
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(ImagingError::SizeMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let pixels: Vec<u16> = match depth {
        BitDepth::Eight => payload.iter().map(|&b| b as u16).collect(),
        // Netpbm stores 2-byte samples big-endian.
        BitDepth::Sixteen => payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
    };
    GrayImage::new(width as u32, height as u32, depth, pixels)
}

/// Serialize to binary (P5) PGM bytes.
pub fn to_pgm_bytes(image: &GrayImage) -> Vec<u8> {
    let maxval = image.bit_depth.max_value();
    let mut out = format!("P5\n{} {}\n{}\n", image.width, image.height, maxval).into_bytes();
    match image.bit_depth {
        BitDepth::Eight => out.extend(image.pixels.iter().map(|&p| p as u8)),
        BitDepth::Sixteen => out.extend(image.pixels.iter().flat_map(|&p| p.to_be_bytes())),
    }
    out
}

/// Load a binary PGM file.
pub fn load_pgm(path: &Path) -> Result<GrayImage, ImagingError> {
    parse_pgm(&fs::read(path)?)
}

/// Write a binary PGM file.
pub fn save_pgm(image: &GrayImage, path: &Path) -> Result<(), ImagingError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&to_pgm_bytes(image))?;
    Ok(())
}

/// Parse a headerless raw raster: row-major samples, little-endian when
/// 16-bit. Dimensions and depth come from the caller.
pub fn parse_raw(
    bytes: &[u8],
    width: u32,
    height: u32,
    bit_depth: BitDepth,
) -> Result<GrayImage, ImagingError> {
    let count = width as usize * height as usize;
    let expected = count * bit_depth.bytes_per_sample();
    if bytes.len() != expected {
        return Err(ImagingError::SizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let pixels: Vec<u16> = match bit_depth {
        BitDepth::Eight => bytes.iter().map(|&b| b as u16).collect(),
        BitDepth::Sixteen => bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect(),
    };
    GrayImage::new(width, height, bit_depth, pixels)
}

/// Load a headerless raw raster file.
pub fn load_raw(
    path: &Path,
    width: u32,
    height: u32,
    bit_depth: BitDepth,
) -> Result<GrayImage, ImagingError> {
    parse_raw(&fs::read(path)?, width, height, bit_depth)
}

/// Write a headerless raw raster file.
pub fn save_raw(image: &GrayImage, path: &Path) -> Result<(), ImagingError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&image.raster_bytes())?;
    Ok(())
}

/// Pixel-wise background removal: `out = max(0, image − background)`.
/// Negative differences clamp to zero.
pub fn subtract_background(
    image: &GrayImage,
    background: &BackgroundModel,
) -> Result<GrayImage, ImagingError> {
    let bg = &background.image;
    if image.width != bg.width || image.height != bg.height {
        return Err(ImagingError::DimensionMismatch {
            a_width: image.width,
            a_height: image.height,
            b_width: bg.width,
            b_height: bg.height,
        });
    }
    if image.bit_depth != bg.bit_depth {
        return Err(ImagingError::BitDepthMismatch {
            a: image.bit_depth,
            b: bg.bit_depth,
        });
    }
    let pixels = image
        .pixels
        .iter()
        .zip(&bg.pixels)
        .map(|(&i, &b)| i.saturating_sub(b))
        .collect();
    GrayImage::new(image.width, image.height, image.bit_depth, pixels)
}

/// Estimate a static background as the constant median intensity of the
/// border frame of thickness `ceil(border_fraction * min(W, H))`.
pub fn estimate_background(
    image: &GrayImage,
    border_fraction: f64,
) -> Result<BackgroundModel, ImagingError> {
    if image.pixel_count() == 0 {
        return Err(ImagingError::DegenerateImage);
    }
    let min_dim = image.width.min(image.height) as f64;
    if !(border_fraction > 0.0 && border_fraction < 0.5) || border_fraction * min_dim < 1.0 {
        return Err(ImagingError::InvalidBorderFraction {
            fraction: border_fraction,
        });
    }
    let thickness = (border_fraction * min_dim).ceil() as u32;
    let (w, h) = (image.width, image.height);
    let mut border: Vec<u16> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if x < thickness || x >= w - thickness || y < thickness || y >= h - thickness {
                border.push(image.get(x, y));
            }
        }
    }
    border.sort_unstable();
    let median = border[border.len() / 2];
    Ok(BackgroundModel {
        image: GrayImage::constant(w, h, image.bit_depth, median)?,
        source: BackgroundSource::Estimated,
    })
}

/// Rescale intensities into 8 bits: `out = round(p / I_max * 255)` with
/// `I_max` the maximum sample of the input (1 for an all-zero image).
/// 8-bit inputs pass through unchanged so the round trip stays bit-exact.
pub fn normalize_intensity(image: &GrayImage) -> (GrayImage, NormalizationScale) {
    if image.bit_depth == BitDepth::Eight {
        return (image.clone(), NormalizationScale::identity());
    }
    let i_max = image.max_pixel().max(1) as u32;
    let pixels = image
        .pixels
        .iter()
        .map(|&p| round_half_up(p as f64 / i_max as f64 * 255.0) as u16)
        .collect();
    let normalized = GrayImage::new(image.width, image.height, BitDepth::Eight, pixels)
        .expect("normalized samples fit 8 bits");
    let scale = NormalizationScale {
        i_max,
        source_depth: image.bit_depth,
    };
    (normalized, scale)
}

/// Map one normalized sample back to source intensity.
pub fn denormalize_value(p: u8, scale: &NormalizationScale) -> u16 {
    let v = round_half_up(p as f64 / 255.0 * scale.i_max as f64);
    v.min(scale.source_depth.max_value() as u64) as u16
}

/// Invert [`normalize_intensity`]: `out = round(p / 255 * i_max)` clamped to
/// the source depth range. Exact inverse when the source depth is 8.
pub fn denormalize(
    image: &GrayImage,
    scale: &NormalizationScale,
) -> Result<GrayImage, ImagingError> {
    if image.bit_depth != BitDepth::Eight {
        return Err(ImagingError::BitDepthMismatch {
            a: image.bit_depth,
            b: BitDepth::Eight,
        });
    }
    let pixels = image
        .pixels
        .iter()
        .map(|&p| denormalize_value(p as u8, scale))
        .collect();
    GrayImage::new(image.width, image.height, scale.source_depth, pixels)
}
