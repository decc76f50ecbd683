//! Deterministic synthetic phantoms for tests, benchmarks and demos.
//!
//! Every generator is seed-stable across platforms: the same inputs always
//! produce the same raster, so downstream tests can freeze derived values.

use crate::imaging::{BackgroundModel, BackgroundSource, GrayImage};
use crate::segmentation::BinaryMask;

/// SplitMix64: a tiny, seedable, platform-stable PRNG. Statistical quality
/// is ample for phantom noise and randomized test corpora.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish value in [0, bound). Modulo bias is irrelevant at test
    /// scale.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        self.next_u64() % bound
    }

    pub fn next_u8(&mut self) -> u8 {
        (self.next_u64() >> 56) as u8
    }
}

fn disk_contains(x: u32, y: u32, cx: f64, cy: f64, r: f64) -> bool {
    let dx = x as f64 - cx;
    let dy = y as f64 - cy;
    dx * dx + dy * dy <= r * r
}

/// Bright disk (radius min(W,H)/4, intensities 190..=210) on a near-dark
/// noisy background (0..=3), plus the analytic disk membership as ground
/// truth. The intensity gap guarantees thresholding can recover the disk
/// exactly.
pub fn noisy_disk_phantom(width: u32, height: u32, seed: u64) -> (GrayImage, BinaryMask) {
    let mut rng = SplitMix64::new(seed);
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let r = width.min(height) as f64 / 4.0;
    let truth = BinaryMask::from_fn(width, height, |x, y| disk_contains(x, y, cx, cy, r));
    let image = GrayImage::from_fn_depth8(width, height, |x, y| {
        if disk_contains(x, y, cx, cy, r) {
            190 + rng.next_below(21) as u8
        } else {
            rng.next_below(4) as u8
        }
    });
    (image, truth)
}

/// Textured image whose off-disk pixels exactly equal the returned
/// background raster; inside the disk the image adds a bright textured
/// delta. Subtracting the background leaves zeros outside and 150..=169
/// inside, so the whole pipeline (segment, archive with the background
/// embedded, reconstruct) is bit-exact at zero tolerance.
pub fn background_matched_disk(width: u32, height: u32) -> (GrayImage, BackgroundModel) {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let r = width.min(height) as f64 / 4.0;
    let bg_value = |x: u32, y: u32| 20 + ((x * 7 + y * 3) % 10) as u8;
    let image = GrayImage::from_fn_depth8(width, height, |x, y| {
        let b = bg_value(x, y);
        if disk_contains(x, y, cx, cy, r) {
            b + 150 + ((x + y) % 20) as u8
        } else {
            b
        }
    });
    let background = BackgroundModel {
        image: GrayImage::from_fn_depth8(width, height, bg_value),
        source: BackgroundSource::ReferenceScan,
    };
    (image, background)
}

/// Smooth radial ramp disk (radius min(W,H)/3, 40 at the rim rising to 220
/// at the center) with ±2 deterministic noise, on an exactly-zero
/// background. Neighboring intensities differ slightly, so widening an
/// absolute error tolerance merges ever longer constant runs — the phantom
/// for compression-ratio trend tests.
pub fn smooth_ramp_disk(width: u32, height: u32, seed: u64) -> GrayImage {
    let mut rng = SplitMix64::new(seed);
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let r = width.min(height) as f64 / 3.0;
    GrayImage::from_fn_depth8(width, height, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let d = (dx * dx + dy * dy).sqrt();
        if d <= r {
            let base = 40.0 + 180.0 * (1.0 - d / r);
            let noise = rng.next_below(5) as i64 - 2;
            (base.round() as i64 + noise).clamp(1, 255) as u8
        } else {
            0
        }
    })
}
