use std::sync::atomic::{AtomicU32, Ordering};

use crate::camera::{project_to_pixel, CameraView};
use crate::cloud::{PointCloud, Rgb};
use crate::exec::Executor;
use crate::packed::RgbImage;

use super::CHUNK_POINTS;

/// Pixels receiving more than this many points are flagged as hot spots.
pub const DEFAULT_HOT_THRESHOLD: u32 = 10_000;

const HOT_COLOR: Rgb = Rgb([255, 0, 255]);

/// Number of visible points landing in each pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentHistogram {
    width: u32,
    height: u32,
    counts: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct HistogramSummary {
    pub total: u64,
    pub max: u32,
    /// Pixel ID holding `max` (lowest ID on ties); `None` for an empty image.
    pub argmax: Option<u32>,
    /// Mean points per pixel over the whole image.
    pub mean: f64,
    /// Mean points per pixel over pixels that received at least one point.
    pub mean_covered: f64,
    pub covered_pixels: u64,
    pub threshold: u32,
    pub pixels_over_threshold: u64,
}

pub fn fragment_histogram(cloud: &PointCloud, view: &CameraView, exec: &Executor) -> FragmentHistogram {
    let counts: Vec<AtomicU32> = (0..view.pixel_count()).map(|_| AtomicU32::new(0)).collect();
    let positions = cloud.positions();
    exec.for_each_chunk(cloud.len(), CHUNK_POINTS, |range| {
        for p in &positions[range] {
            if let Some(f) = project_to_pixel(*p, view) {
                counts[f.pixel as usize].fetch_add(1, Ordering::Relaxed);
            }
        }
    });
    FragmentHistogram {
        width: view.width(),
        height: view.height(),
        counts: counts.into_iter().map(AtomicU32::into_inner).collect(),
    }
}

impl FragmentHistogram {
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn summary(&self, threshold: u32) -> HistogramSummary {
        let total = self.total();
        let covered = self.counts.iter().filter(|&&c| c > 0).count() as u64;
        let (argmax, max) = self
            .counts
            .iter()
            .enumerate()
            .fold((None, 0u32), |(arg, max), (i, &c)| match arg {
                None => (Some(i as u32), c),
                Some(_) if c > max => (Some(i as u32), c),
                _ => (arg, max),
            });
        let n = self.counts.len().max(1) as f64;
        HistogramSummary {
            total,
            max,
            argmax,
            mean: total as f64 / n,
            mean_covered: if covered > 0 { total as f64 / covered as f64 } else { 0.0 },
            covered_pixels: covered,
            threshold,
            pixels_over_threshold: self.counts.iter().filter(|&&c| c > threshold).count() as u64,
        }
    }

    /// Log-scaled false-color heatmap. Empty pixels are black, the ramp runs
    /// through blue, cyan, yellow and red to white at the maximum count, and
    /// pixels above `threshold` are drawn magenta.
    pub fn heatmap(&self, threshold: u32) -> RgbImage {
        let mut img = RgbImage::new(self.width, self.height, Rgb::BLACK);
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let denom = (1.0 + max as f64).ln();
        for (id, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let color = if c > threshold {
                HOT_COLOR
            } else {
                heat_ramp((1.0 + c as f64).ln() / denom)
            };
            img.set_by_id(id as u32, color);
        }
        img
    }
}

/// Piecewise-linear ramp over `t` in `[0, 1]`; only `t == 1` maps to white.
fn heat_ramp(t: f64) -> Rgb {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [0.0, 0.0, 96.0]),
        (0.3, [0.0, 160.0, 255.0]),
        (0.6, [255.0, 230.0, 0.0]),
        (0.9, [255.0, 40.0, 0.0]),
        (1.0, [255.0, 255.0, 255.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    if t >= 1.0 {
        return Rgb::WHITE;
    }
    let k = STOPS.windows(2).position(|w| t < w[1].0).unwrap_or(STOPS.len() - 2);
    let (t0, c0) = STOPS[k];
    let (t1, c1) = STOPS[k + 1];
    let f = (t - t0) / (t1 - t0);
    let mut out = [0u8; 3];
    for i in 0..3 {
        out[i] = (c0[i] + (c1[i] - c0[i]) * f).round().min(254.0) as u8;
    }
    Rgb(out)
}
