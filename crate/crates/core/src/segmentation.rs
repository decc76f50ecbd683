//! ROI extraction: histogramming, multi-Otsu thresholding, binarization,
//! largest-component isolation, and the row-span geometry/pixel-section
//! representation of the extracted object.

use thiserror::Error;

use crate::imaging::{BitDepth, GrayImage, NormalizationScale};

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("expected {expected} image, got {actual}")]
    WrongDepth { expected: BitDepth, actual: BitDepth },
    #[error("class count must be at least 2, got {0}")]
    ClassCountTooSmall(usize),
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("histogram has {distinct} distinct intensities, need at least {requested} classes")]
    InsufficientIntensities { distinct: usize, requested: usize },
    #[error("mask bits length {actual} does not match {width}x{height}")]
    MaskLengthMismatch {
        width: u32,
        height: u32,
        actual: usize,
    },
    #[error("row {row}: invalid span [{x_start}, {x_end})")]
    InvalidSpan { row: u32, x_start: u32, x_end: u32 },
    #[error("geometry row indices must be strictly increasing (row {row} repeated or out of order)")]
    UnorderedRows { row: u32 },
    #[error("geometry record (row {row}, x_end {x_end}) exceeds image bounds {width}x{height}")]
    GeometryOutOfBounds {
        row: u32,
        x_end: u32,
        width: u32,
        height: u32,
    },
    #[error("pixel sections count {sections} does not match geometry row count {rows}")]
    SectionCountMismatch { sections: usize, rows: usize },
    #[error("row {row}: section length {actual} does not match span length {expected}")]
    SectionLengthMismatch {
        row: u32,
        expected: usize,
        actual: usize,
    },
}

/// 256-bin intensity histogram of a depth-8 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; 256],
}

impl Histogram {
    pub fn from_counts(bins: [u64; 256]) -> Self {
        Self { bins }
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn count(&self, value: u8) -> u64 {
        self.bins[value as usize]
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn distinct_populated(&self) -> usize {
        self.bins.iter().filter(|&&c| c > 0).count()
    }
}

/// Boolean raster marking ROI pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, SegmentationError> {
        if bits.len() != width as usize * height as usize {
            return Err(SegmentationError::MaskLengthMismatch {
                width,
                height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    /// Build from a per-pixel predicate over (x, y).
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        assert!(x < self.width && y < self.height, "mask index out of bounds");
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// One object row: `row` index, inclusive `x_start`, exclusive `x_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowSpan {
    pub row: u32,
    pub x_start: u32,
    pub x_end: u32,
}

impl RowSpan {
    /// Pixel count n_i = x_end − x_start.
    pub fn len(&self) -> usize {
        (self.x_end - self.x_start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered per-row extent records of the extracted object.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeometryTable {
    rows: Vec<RowSpan>,
}

impl GeometryTable {
    /// Validates strictly increasing row indices and non-empty spans.
    pub fn new(rows: Vec<RowSpan>) -> Result<Self, SegmentationError> {
        for pair in rows.windows(2) {
            if pair[1].row <= pair[0].row {
                return Err(SegmentationError::UnorderedRows { row: pair[1].row });
            }
        }
        for s in &rows {
            if s.x_start >= s.x_end {
                return Err(SegmentationError::InvalidSpan {
                    row: s.row,
                    x_start: s.x_start,
                    x_end: s.x_end,
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[RowSpan] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Total ROI pixel count Σ n_i.
    pub fn total_span_pixels(&self) -> u64 {
        self.rows.iter().map(|s| s.len() as u64).sum()
    }

    /// Every record lies inside a width × height raster.
    pub fn check_bounds(&self, width: u32, height: u32) -> Result<(), SegmentationError> {
        for s in &self.rows {
            if s.row >= height || s.x_end > width {
                return Err(SegmentationError::GeometryOutOfBounds {
                    row: s.row,
                    x_end: s.x_end,
                    width,
                    height,
                });
            }
        }
        Ok(())
    }

    /// Rasterize spans back into a mask (fills interior gaps the spans cover).
    pub fn rasterize(&self, width: u32, height: u32) -> Result<BinaryMask, SegmentationError> {
        self.check_bounds(width, height)?;
        let mut bits = vec![false; width as usize * height as usize];
        for s in &self.rows {
            let base = s.row as usize * width as usize;
            for x in s.x_start..s.x_end {
                bits[base + x as usize] = true;
            }
        }
        BinaryMask::new(width, height, bits)
    }
}

/// Intensity runs aligned 1:1 with [`GeometryTable`] rows.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PixelSections {
    sections: Vec<Vec<u8>>,
}

impl PixelSections {
    pub fn new(sections: Vec<Vec<u8>>) -> Self {
        Self { sections }
    }

    pub fn sections(&self) -> &[Vec<u8>] {
        &self.sections
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    /// All sections concatenated in geometry order.
    pub fn concatenated(&self) -> Vec<u8> {
        self.sections.iter().flatten().copied().collect()
    }

    pub fn total_pixels(&self) -> u64 {
        self.sections.iter().map(|s| s.len() as u64).sum()
    }
}

/// The complete extracted-object representation: geometry + pixel sections
/// plus what reconstruction needs (source dimensions and intensity scale).
#[derive(Debug, Clone, PartialEq)]
pub struct RoiBundle {
    pub geometry: GeometryTable,
    pub pixels: PixelSections,
    pub width: u32,
    pub height: u32,
    pub scale: NormalizationScale,
}

impl RoiBundle {
    pub fn new(
        geometry: GeometryTable,
        pixels: PixelSections,
        width: u32,
        height: u32,
        scale: NormalizationScale,
    ) -> Result<Self, SegmentationError> {
        geometry.check_bounds(width, height)?;
        if pixels.len() != geometry.row_count() {
            return Err(SegmentationError::SectionCountMismatch {
                sections: pixels.len(),
                rows: geometry.row_count(),
            });
        }
        for (span, section) in geometry.rows().iter().zip(pixels.sections()) {
            if section.len() != span.len() {
                return Err(SegmentationError::SectionLengthMismatch {
                    row: span.row,
                    expected: span.len(),
                    actual: section.len(),
                });
            }
        }
        Ok(Self {
            geometry,
            pixels,
            width,
            height,
            scale,
        })
    }
}

/// Count depth-8 intensities per bin.
pub fn histogram(image: &GrayImage) -> Result<Histogram, SegmentationError> {
    if image.bit_depth() != BitDepth::Eight {
        return Err(SegmentationError::WrongDepth {
            expected: BitDepth::Eight,
            actual: image.bit_depth(),
        });
    }
    let mut bins = [0u64; 256];
    for &p in image.pixels() {
        bins[p as usize] += 1;
    }
    Ok(Histogram { bins })
}

/// Between-class variance objective for a threshold tuple, up to constants:
/// Σ_k S_k²/N_k over classes [0, t₁], (t₁, t₂], …, (t_last, 255], where S_k
/// and N_k are the exact integer intensity sum and count of class k. Empty
/// classes contribute 0. Maximizing this over tuples is equivalent to
/// maximizing Σ_k ω_k(μ_k − μ_T)², and the all-integer class statistics make
/// the value bit-reproducible by any recount.
pub fn between_class_objective(hist: &Histogram, thresholds: &[u8]) -> f64 {
    let mut objective = 0.0f64;
    let mut lo = 0usize;
    for class in 0..=thresholds.len() {
        let hi = if class < thresholds.len() {
            thresholds[class] as usize
        } else {
            255
        };
        let mut n = 0u64;
        let mut s = 0u64;
        for v in lo..=hi {
            n += hist.bins[v];
            s += hist.bins[v] * v as u64;
        }
        if n > 0 {
            objective += (s as f64 * s as f64) / (n as f64);
        }
        lo = hi + 1;
    }
    objective
}

/// Exhaustive multi-Otsu: the ascending `class_count − 1` threshold tuple
/// (each threshold in 0..=254) maximizing between-class variance, ties broken
/// by the lexicographically smallest tuple.
pub fn multi_otsu(hist: &Histogram, class_count: usize) -> Result<Vec<u8>, SegmentationError> {
    if class_count < 2 {
        return Err(SegmentationError::ClassCountTooSmall(class_count));
    }
    if hist.total() == 0 {
        return Err(SegmentationError::EmptyHistogram);
    }
    let distinct = hist.distinct_populated();
    if class_count > distinct {
        return Err(SegmentationError::InsufficientIntensities {
            distinct,
            requested: class_count,
        });
    }

    // Prefix sums give each class's exact (count, intensity-sum) pair; the
    // objective arithmetic then matches `between_class_objective` bit for bit.
    let mut count_prefix = [0u64; 257];
    let mut sum_prefix = [0u64; 257];
    for v in 0..256 {
        count_prefix[v + 1] = count_prefix[v] + hist.bins[v];
        sum_prefix[v + 1] = sum_prefix[v] + hist.bins[v] * v as u64;
    }
    let objective_of = |thresholds: &[u8]| -> f64 {
        let mut objective = 0.0f64;
        let mut lo = 0usize;
        for class in 0..=thresholds.len() {
            let hi = if class < thresholds.len() {
                thresholds[class] as usize
            } else {
                255
            };
            let n = count_prefix[hi + 1] - count_prefix[lo];
            let s = sum_prefix[hi + 1] - sum_prefix[lo];
            if n > 0 {
                objective += (s as f64 * s as f64) / (n as f64);
            }
            lo = hi + 1;
        }
        objective
    };

    let slots = class_count - 1;
    let mut best_objective = f64::NEG_INFINITY;
    let mut best: Vec<u8> = Vec::new();
    let mut tuple: Vec<u8> = Vec::with_capacity(slots);
    // Lexicographic enumeration with strict improvement keeps the
    // lexicographically smallest maximizer.
    fn enumerate(
        tuple: &mut Vec<u8>,
        start: u16,
        remaining: usize,
        visit: &mut impl FnMut(&[u8]),
    ) {
        if remaining == 0 {
            visit(tuple);
            return;
        }
        // Leave room so each later threshold can still fit below 255.
        let last = 255 - remaining as u16;
        for t in start..=last {
            tuple.push(t as u8);
            enumerate(tuple, t + 1, remaining - 1, visit);
            tuple.pop();
        }
    }
    enumerate(&mut tuple, 0, slots, &mut |candidate| {
        let objective = objective_of(candidate);
        if objective > best_objective {
            best_objective = objective;
            best = candidate.to_vec();
        }
    });
    Ok(best)
}

/// Foreground = pixels strictly greater than the threshold.
pub fn binarize(image: &GrayImage, threshold: u8) -> Result<BinaryMask, SegmentationError> {
    if image.bit_depth() != BitDepth::Eight {
        return Err(SegmentationError::WrongDepth {
            expected: BitDepth::Eight,
            actual: image.bit_depth(),
        });
    }
    let bits = image
        .pixels()
        .iter()
        .map(|&p| p > threshold as u16)
        .collect();
    BinaryMask::new(image.width(), image.height(), bits)
}

/// Keep only the 8-connected foreground component with the most pixels.
/// Ties go to the component whose first pixel comes earliest in raster
/// order. All-zero input maps to all-zero output.
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let w = mask.width as usize;
    let h = mask.height as usize;
    let bits = &mask.bits;
    let mut visited = vec![false; bits.len()];
    let mut best: Vec<usize> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();

    for seed in 0..bits.len() {
        if !bits[seed] || visited[seed] {
            continue;
        }
        current.clear();
        visited[seed] = true;
        stack.push(seed);
        while let Some(p) = stack.pop() {
            current.push(p);
            let x = p % w;
            let y = p / w;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if bits[q] && !visited[q] {
                        visited[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        // Raster-order scan + strict improvement = smallest-anchor tie-break.
        if current.len() > best.len() {
            std::mem::swap(&mut best, &mut current);
        }
    }

    let mut out = vec![false; bits.len()];
    for idx in best {
        out[idx] = true;
    }
    BinaryMask {
        width: mask.width,
        height: mask.height,
        bits: out,
    }
}

/// One record per row that contains any set bit: leftmost set column and
/// rightmost set column + 1. Interior gaps are covered by the span.
pub fn extract_row_spans(mask: &BinaryMask) -> GeometryTable {
    let w = mask.width as usize;
    let mut rows = Vec::new();
    for y in 0..mask.height {
        let row = &mask.bits[y as usize * w..(y as usize + 1) * w];
        let first = row.iter().position(|&b| b);
        if let Some(first) = first {
            let last = row.iter().rposition(|&b| b).expect("row has a set bit");
            rows.push(RowSpan {
                row: y,
                x_start: first as u32,
                x_end: last as u32 + 1,
            });
        }
    }
    GeometryTable { rows }
}

/// Copy the image pixels each geometry record covers.
pub fn gather_pixels(
    image: &GrayImage,
    geometry: &GeometryTable,
) -> Result<PixelSections, SegmentationError> {
    if image.bit_depth() != BitDepth::Eight {
        return Err(SegmentationError::WrongDepth {
            expected: BitDepth::Eight,
            actual: image.bit_depth(),
        });
    }
    geometry.check_bounds(image.width(), image.height())?;
    let sections = geometry
        .rows()
        .iter()
        .map(|s| {
            image.row(s.row)[s.x_start as usize..s.x_end as usize]
                .iter()
                .map(|&p| p as u8)
                .collect()
        })
        .collect();
    Ok(PixelSections::new(sections))
}

/// Default class count of the full extraction pipeline.
pub const DEFAULT_CLASS_COUNT: usize = 3;

/// Full extraction on a depth-8 image with an explicit intensity scale
/// (carried into the bundle for later reconstruction): histogram → multi-Otsu
/// → binarize at the lowest threshold → largest component → row spans →
/// pixel sections.
pub fn segment_roi_scaled(
    image8: &GrayImage,
    class_count: usize,
    scale: NormalizationScale,
) -> Result<RoiBundle, SegmentationError> {
    let hist = histogram(image8)?;
    let thresholds = multi_otsu(&hist, class_count)?;
    let lowest = thresholds[0];
    let mask = binarize(image8, lowest)?;
    let object = largest_component(&mask);
    let geometry = extract_row_spans(&object);
    let pixels = gather_pixels(image8, &geometry)?;
    RoiBundle::new(geometry, pixels, image8.width(), image8.height(), scale)
}

/// [`segment_roi_scaled`] for a stand-alone depth-8 image (identity scale).
pub fn segment_roi(image8: &GrayImage, class_count: usize) -> Result<RoiBundle, SegmentationError> {
    segment_roi_scaled(image8, class_count, NormalizationScale::identity())
}
