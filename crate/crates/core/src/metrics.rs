//! Segmentation and reconstruction quality metrics: confusion-matrix
//! overlap scores, Average Hausdorff Distance, windowed SSIM, and the
//! spatial reduction factor.
//!
//! Every ratio with a zero denominator is reported as an explicit undefined
//! marker (`None`), never a silent default — honest reporting matters more
//! than a tidy number when class imbalance makes a metric meaningless.

use thiserror::Error;

use crate::imaging::{BitDepth, GrayImage};
use crate::segmentation::{BinaryMask, GeometryTable};

pub const SSIM_WINDOW: u32 = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const SSIM_L: f64 = 255.0;

/// Brute-force AHD refuses beyond this many pixel pairs.
pub const AHD_PAIR_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error("SSIM requires 8-bit images, got {0}")]
    WrongDepth(BitDepth),
    #[error("image {width}x{height} is smaller than the {window}x{window} SSIM window")]
    ImageTooSmall { width: u32, height: u32, window: u32 },
    #[error("hausdorff pair count {pairs} exceeds the {limit}-pair brute-force guard")]
    TooManyPairs { pairs: u64, limit: u64 },
    #[error("geometry covers no pixels")]
    EmptyGeometry,
}

/// Per-pixel agreement tallies between a predicted and a truth mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }
}

/// Confusion-derived scores; `None` marks a zero-denominator case.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OverlapMetrics {
    pub dsc: Option<f64>,
    pub iou: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    /// Expected agreement by chance (kappa's reference level), in pixels.
    pub f_c: Option<f64>,
    pub kappa: Option<f64>,
    pub auc: Option<f64>,
}

/// The full evaluation battery for one image or mask pair. Fields the
/// caller could not compute stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    pub overlap: OverlapMetrics,
    pub ahd: Option<f64>,
    pub ssim: Option<f64>,
    pub spatial_reduction: Option<f64>,
    pub compression_ratio: Option<f64>,
}

/// Tally agreement between prediction and truth.
pub fn confusion(pred: &BinaryMask, truth: &BinaryMask) -> Result<ConfusionCounts, MetricsError> {
    if pred.width() != truth.width() || pred.height() != truth.height() {
        return Err(MetricsError::DimensionMismatch {
            a_width: pred.width(),
            a_height: pred.height(),
            b_width: truth.width(),
            b_height: truth.height(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.bits().iter().zip(truth.bits()) {
        match (p, t) {
            (true, true) => c.true_pos += 1,
            (false, false) => c.true_neg += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

/// All confusion-derived scores:
/// dsc = 2·tp/(2·tp+fp+fn), iou = tp/(tp+fp+fn), sensitivity = tp/(tp+fn),
/// specificity = tn/(tn+fp), accuracy = (tp+tn)/N,
/// f_c = ((tn+fn)(tn+fp) + (fp+tp)(fn+tp))/N, kappa = ((tp+tn)−f_c)/(N−f_c),
/// auc = 1 − ½(fp/(fp+tn) + fn/(fn+tp)).
pub fn overlap_metrics(c: &ConfusionCounts) -> OverlapMetrics {
    let (tp, tn, fp, fne) = (c.true_pos, c.true_neg, c.false_pos, c.false_neg);
    let n = c.total();

    let f_c = (n != 0).then(|| {
        ((tn + fne) as f64 * (tn + fp) as f64 + (fp + tp) as f64 * (fne + tp) as f64) / n as f64
    });
    let kappa = f_c.and_then(|f_c| {
        let den = n as f64 - f_c;
        (den != 0.0).then(|| ((tp + tn) as f64 - f_c) / den)
    });
    let auc = match (ratio(fp, fp + tn), ratio(fne, fne + tp)) {
        (Some(fpr), Some(fnr)) => Some(1.0 - 0.5 * (fpr + fnr)),
        _ => None,
    };

    OverlapMetrics {
        dsc: ratio(2 * tp, 2 * tp + fp + fne),
        iou: ratio(tp, tp + fp + fne),
        sensitivity: ratio(tp, tp + fne),
        specificity: ratio(tn, tn + fp),
        accuracy: ratio(tp + tn, n),
        f_c,
        kappa,
        auc,
    }
}

fn mask_points(mask: &BinaryMask) -> Vec<(f64, f64)> {
    let mut points = Vec::new();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                points.push((x as f64, y as f64));
            }
        }
    }
    points
}

/// Average Hausdorff Distance over all set pixels: the larger of the two
/// directed mean nearest-neighbor Euclidean distances. `None` when either
/// mask is empty. Brute force, guarded at [`AHD_PAIR_LIMIT`] pairs.
pub fn ahd(a: &BinaryMask, b: &BinaryMask) -> Result<Option<f64>, MetricsError> {
    let pa = mask_points(a);
    let pb = mask_points(b);
    if pa.is_empty() || pb.is_empty() {
        return Ok(None);
    }
    let pairs = pa.len() as u64 * pb.len() as u64;
    if pairs > AHD_PAIR_LIMIT {
        return Err(MetricsError::TooManyPairs {
            pairs,
            limit: AHD_PAIR_LIMIT,
        });
    }

    // Track each point's nearest squared distance in both directions in a
    // single pass over the pair grid.
    let mut min_a = vec![f64::INFINITY; pa.len()];
    let mut min_b = vec![f64::INFINITY; pb.len()];
    for (i, &(ax, ay)) in pa.iter().enumerate() {
        for (j, &(bx, by)) in pb.iter().enumerate() {
            let d2 = (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
            if d2 < min_a[i] {
                min_a[i] = d2;
            }
            if d2 < min_b[j] {
                min_b[j] = d2;
            }
        }
    }
    let mean = |mins: &[f64]| mins.iter().map(|&d2| d2.sqrt()).sum::<f64>() / mins.len() as f64;
    Ok(Some(mean(&min_a).max(mean(&min_b))))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW as usize] {
    let mut k = [0.0; SSIM_WINDOW as usize];
    let center = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - center;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable valid-region convolution; returns the (w−10)×(h−10) result.
fn conv_valid(data: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let ow = w - (k - 1);
    let oh = h - (k - 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (t, &kv) in kernel.iter().enumerate() {
                acc += data[y * w + x + t] * kv;
            }
            horiz[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (t, &kv) in kernel.iter().enumerate() {
                acc += horiz[(y + t) * ow + x] * kv;
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean local SSIM between two depth-8 images: Gaussian 11×11 window with
/// σ = 1.5, K1 = 0.01, K2 = 0.03, L = 255, pooled over the valid (unpadded)
/// region. Bit-identical inputs score exactly 1.0.
pub fn ssim(x: &GrayImage, y: &GrayImage) -> Result<f64, MetricsError> {
    for image in [x, y] {
        if image.bit_depth() != BitDepth::Eight {
            return Err(MetricsError::WrongDepth(image.bit_depth()));
        }
    }
    if x.width() != y.width() || x.height() != y.height() {
        return Err(MetricsError::DimensionMismatch {
            a_width: x.width(),
            a_height: x.height(),
            b_width: y.width(),
            b_height: y.height(),
        });
    }
    if x.width() < SSIM_WINDOW || x.height() < SSIM_WINDOW {
        return Err(MetricsError::ImageTooSmall {
            width: x.width(),
            height: x.height(),
            window: SSIM_WINDOW,
        });
    }

    let w = x.width() as usize;
    let h = x.height() as usize;
    let xf: Vec<f64> = x.pixels().iter().map(|&p| p as f64).collect();
    let yf: Vec<f64> = y.pixels().iter().map(|&p| p as f64).collect();
    let xx: Vec<f64> = xf.iter().map(|&v| v * v).collect();
    let yy: Vec<f64> = yf.iter().map(|&v| v * v).collect();
    let xy: Vec<f64> = xf.iter().zip(&yf).map(|(&a, &b)| a * b).collect();

    let kernel = gaussian_kernel();
    let mu_x = conv_valid(&xf, w, h, &kernel);
    let mu_y = conv_valid(&yf, w, h, &kernel);
    let e_xx = conv_valid(&xx, w, h, &kernel);
    let e_yy = conv_valid(&yy, w, h, &kernel);
    let e_xy = conv_valid(&xy, w, h, &kernel);

    let c1 = (SSIM_K1 * SSIM_L) * (SSIM_K1 * SSIM_L);
    let c2 = (SSIM_K2 * SSIM_L) * (SSIM_K2 * SSIM_L);
    let mut sum = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        sum += num / den;
    }
    Ok(sum / mu_x.len() as f64)
}

/// Full raster area ÷ total span pixels: how many times smaller the stored
/// ROI is than the image.
pub fn spatial_reduction(
    geometry: &GeometryTable,
    width: u32,
    height: u32,
) -> Result<f64, MetricsError> {
    let span = geometry.total_span_pixels();
    if span == 0 {
        return Err(MetricsError::EmptyGeometry);
    }
    Ok(width as f64 * height as f64 / span as f64)
}
