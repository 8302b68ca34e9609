//! Blended high-quality rendering: a depth pass that finds the closest
//! point per pixel, then a color pass that averages every point within
//! `closest * epsilon_factor` of it.
//!
//! Three accumulation layouts:
//!
//! - `Hqs`: two 64-bit words per pixel, `rg = Σr << 32 | Σg` and
//!   `ba = Σb << 32 | N`; two atomic adds per point.
//! - `Hqs1x`: one word, 18-18-18-10 bits (r at 46, g at 28, b at 10, count
//!   at 0); one atomic add per point, silently wraps past 1023 points.
//! - `Hqs1r`: one word, 16-16-16-16 bits, plus an `Hqs`-layout fallback pair.
//!   A point that sees a prior count of 255 zeroes the main word and moves
//!   its contents into the fallback; points that see a larger count go to
//!   the fallback directly.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::camera::{project_to_pixel, CameraView, Fragment};
use crate::cloud::{PointCloud, Rgb};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::packed::{depth_image, AtomicOpCounters, RgbImage};
use crate::raster::CHUNK_POINTS;

pub const DEPTH_CLEAR: u32 = u32::MAX;
pub const DEFAULT_EPSILON_FACTOR: f32 = 1.01;

/// Count at which an `Hqs1r` main word is drained into the fallback.
pub const HQS1R_DRAIN_COUNT: u64 = 255;

/// Largest number of contributions that may land on one pixel between a
/// drain detection and its exchange without wrapping the 16-bit counter.
pub const HQS1R_RACE_BOUND: u64 = (1 << 16) - 255;

const LOW32: u64 = 0xFFFF_FFFF;
const MASK16: u64 = 0xFFFF;
const MASK18: u64 = 0x3_FFFF;
const MASK10: u64 = 0x3FF;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HqsVariant {
    Hqs,
    Hqs1x,
    Hqs1r,
}

impl HqsVariant {
    pub const ALL: [HqsVariant; 3] = [HqsVariant::Hqs, HqsVariant::Hqs1x, HqsVariant::Hqs1r];

    pub fn name(self) -> &'static str {
        match self {
            HqsVariant::Hqs => "hqs",
            HqsVariant::Hqs1x => "hqs1x",
            HqsVariant::Hqs1r => "hqs1r",
        }
    }
}

impl fmt::Display for HqsVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HqsVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HqsVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown HQS variant {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HqsParams {
    epsilon_factor: f32,
}

impl HqsParams {
    pub fn new(epsilon_factor: f32) -> Result<Self> {
        if !(epsilon_factor >= 1.0) || !epsilon_factor.is_finite() {
            return Err(Error::invalid_argument(format!(
                "epsilon factor {epsilon_factor} must be a finite value >= 1"
            )));
        }
        Ok(HqsParams { epsilon_factor })
    }

    pub fn epsilon_factor(&self) -> f32 {
        self.epsilon_factor
    }

    #[inline]
    fn accepts(&self, depth: f32, closest_bits: u32) -> bool {
        depth <= f32::from_bits(closest_bits) * self.epsilon_factor
    }
}

impl Default for HqsParams {
    fn default() -> Self {
        HqsParams {
            epsilon_factor: DEFAULT_EPSILON_FACTOR,
        }
    }
}

/// Per-pixel f32 bits of the minimum linear depth.
pub struct DepthBuffer32 {
    words: Vec<AtomicU32>,
    width: u32,
    height: u32,
}

impl DepthBuffer32 {
    pub fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        DepthBuffer32 {
            words: (0..n).map(|_| AtomicU32::new(DEPTH_CLEAR)).collect(),
            width,
            height,
        }
    }

    pub fn clear(&mut self) {
        for w in &mut self.words {
            *w.get_mut() = DEPTH_CLEAR;
        }
    }

    pub fn get(&self, pixel: u32) -> u32 {
        self.words[pixel as usize].load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> Vec<u32> {
        self.words.iter().map(|w| w.load(Ordering::Relaxed)).collect()
    }

    /// Grayscale rendering of the stored depths.
    pub fn to_image(&self) -> RgbImage {
        let depths = self
            .words
            .iter()
            .map(|w| {
                let bits = w.load(Ordering::Relaxed);
                (bits != DEPTH_CLEAR).then(|| f32::from_bits(bits))
            })
            .collect();
        depth_image(self.width, self.height, depths)
    }
}

/// Color sums for one variant. Clear value is zero everywhere.
pub struct HqsAccumulators {
    variant: HqsVariant,
    /// `Hqs`: 2 words per pixel; otherwise 1.
    main: Vec<AtomicU64>,
    /// `Hqs1r` only: 2 words per pixel in the `Hqs` layout.
    fallback: Vec<AtomicU64>,
    width: u32,
    height: u32,
}

fn zeroed(n: usize) -> Vec<AtomicU64> {
    (0..n).map(|_| AtomicU64::new(0)).collect()
}

impl HqsAccumulators {
    pub fn new(variant: HqsVariant, width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        let (main, fallback) = match variant {
            HqsVariant::Hqs => (zeroed(2 * n), Vec::new()),
            HqsVariant::Hqs1x => (zeroed(n), Vec::new()),
            HqsVariant::Hqs1r => (zeroed(n), zeroed(2 * n)),
        };
        HqsAccumulators {
            variant,
            main,
            fallback,
            width,
            height,
        }
    }

    pub fn variant(&self) -> HqsVariant {
        self.variant
    }

    pub fn clear(&mut self) {
        for w in self.main.iter_mut().chain(self.fallback.iter_mut()) {
            *w.get_mut() = 0;
        }
    }

    /// Raw main-buffer words.
    pub fn main_words(&self) -> Vec<u64> {
        self.main.iter().map(|w| w.load(Ordering::Relaxed)).collect()
    }

    /// Raw fallback words (`Hqs1r` only).
    pub fn fallback_words(&self) -> Vec<u64> {
        self.fallback.iter().map(|w| w.load(Ordering::Relaxed)).collect()
    }

    /// Per-pixel `[Σr, Σg, Σb, N]` as decoded from the buffers. For `Hqs1x`
    /// this is whatever the packed word holds, including wrapped fields.
    pub fn sums(&self) -> Vec<[u64; 4]> {
        let n = self.width as usize * self.height as usize;
        let load = |v: &[AtomicU64], i: usize| v[i].load(Ordering::Relaxed);
        (0..n)
            .map(|p| match self.variant {
                HqsVariant::Hqs => unpack_pair(load(&self.main, 2 * p), load(&self.main, 2 * p + 1)),
                HqsVariant::Hqs1x => {
                    let w = load(&self.main, p);
                    [w >> 46, (w >> 28) & MASK18, (w >> 10) & MASK18, w & MASK10]
                }
                HqsVariant::Hqs1r => {
                    let w = load(&self.main, p);
                    let f = unpack_pair(load(&self.fallback, 2 * p), load(&self.fallback, 2 * p + 1));
                    [
                        (w >> 48) + f[0],
                        ((w >> 32) & MASK16) + f[1],
                        ((w >> 16) & MASK16) + f[2],
                        (w & MASK16) + f[3],
                    ]
                }
            })
            .collect()
    }

    /// Average color per pixel with truncating division; `background` where
    /// nothing was accumulated.
    pub fn resolve(&self, background: Rgb) -> RgbImage {
        resolve_sums(&self.sums(), self.width, self.height, background)
    }
}

#[inline]
fn unpack_pair(rg: u64, ba: u64) -> [u64; 4] {
    [rg >> 32, rg & LOW32, ba >> 32, ba & LOW32]
}

/// Divides accumulated sums by their count. Channel averages above 255
/// (only possible from a wrapped `Hqs1x` word) saturate.
pub fn resolve_sums(sums: &[[u64; 4]], width: u32, height: u32, background: Rgb) -> RgbImage {
    let mut img = RgbImage::new(width, height, background);
    for (id, s) in sums.iter().enumerate() {
        let n = s[3];
        if n == 0 {
            continue;
        }
        let ch = |v: u64| (v / n).min(255) as u8;
        img.set_by_id(id as u32, Rgb([ch(s[0]), ch(s[1]), ch(s[2])]));
    }
    img
}

fn check_size(view: &CameraView, width: u32, height: u32) -> Result<()> {
    if view.width() != width || view.height() != height {
        return Err(Error::invalid_argument(format!(
            "buffer is {width}x{height} but the view is {}x{}",
            view.width(),
            view.height()
        )));
    }
    Ok(())
}

fn for_each_fragment<F>(cloud: &PointCloud, view: &CameraView, exec: &Executor, visit: F) -> AtomicOpCounters
where
    F: Fn(Fragment, Rgb, &mut AtomicOpCounters) + Sync + Send,
{
    let positions = cloud.positions();
    let colors = cloud.colors();
    exec.fold_chunks(
        cloud.len(),
        CHUNK_POINTS,
        AtomicOpCounters::default,
        |mut c, range| {
            for i in range {
                if let Some(f) = project_to_pixel(positions[i], view) {
                    c.candidate_points += 1;
                    visit(f, colors[i], &mut c);
                }
            }
            c
        },
        |a, b| a + b,
    )
}

/// 32-bit atomic minimum of depth bits, behind an early depth test.
pub fn depth_pass(cloud: &PointCloud, view: &CameraView, db: &DepthBuffer32, exec: &Executor) -> Result<AtomicOpCounters> {
    check_size(view, db.width, db.height)?;
    Ok(for_each_fragment(cloud, view, exec, |f, _, c| {
        let word = &db.words[f.pixel as usize];
        let bits = f.depth.to_bits();
        if bits < word.load(Ordering::Relaxed) {
            c.min_calls += 1;
            word.fetch_min(bits, Ordering::Relaxed);
        }
    }))
}

#[allow(clippy::too_many_arguments)]
fn color_pass<F>(
    variant: HqsVariant,
    cloud: &PointCloud,
    view: &CameraView,
    db: &DepthBuffer32,
    acc: &HqsAccumulators,
    params: &HqsParams,
    exec: &Executor,
    accumulate: F,
) -> Result<AtomicOpCounters>
where
    F: Fn(usize, Rgb, &mut AtomicOpCounters) + Sync + Send,
{
    if acc.variant != variant {
        return Err(Error::invalid_argument(format!(
            "{variant} color pass given {} accumulators",
            acc.variant
        )));
    }
    check_size(view, db.width, db.height)?;
    check_size(view, acc.width, acc.height)?;
    Ok(for_each_fragment(cloud, view, exec, |f, rgb, c| {
        let closest = db.words[f.pixel as usize].load(Ordering::Relaxed);
        if params.accepts(f.depth, closest) {
            accumulate(f.pixel as usize, rgb, c);
        }
    }))
}

pub fn color_pass_hqs(
    cloud: &PointCloud,
    view: &CameraView,
    db: &DepthBuffer32,
    acc: &HqsAccumulators,
    params: &HqsParams,
    exec: &Executor,
) -> Result<AtomicOpCounters> {
    color_pass(HqsVariant::Hqs, cloud, view, db, acc, params, exec, |p, rgb, c| {
        let rg = ((rgb.r() as u64) << 32) | rgb.g() as u64;
        let ba = ((rgb.b() as u64) << 32) | 1;
        acc.main[2 * p].fetch_add(rg, Ordering::Relaxed);
        acc.main[2 * p + 1].fetch_add(ba, Ordering::Relaxed);
        c.add_calls += 2;
    })
}

pub fn color_pass_hqs1x(
    cloud: &PointCloud,
    view: &CameraView,
    db: &DepthBuffer32,
    acc: &HqsAccumulators,
    params: &HqsParams,
    exec: &Executor,
) -> Result<AtomicOpCounters> {
    color_pass(HqsVariant::Hqs1x, cloud, view, db, acc, params, exec, |p, rgb, c| {
        let v = ((rgb.r() as u64) << 46) | ((rgb.g() as u64) << 28) | ((rgb.b() as u64) << 10) | 1;
        acc.main[p].fetch_add(v, Ordering::Relaxed);
        c.add_calls += 1;
    })
}

/// Fails when the worker count could break the overflow protocol.
pub fn check_hqs1r_workers(workers: usize) -> Result<()> {
    if workers as u64 >= HQS1R_RACE_BOUND {
        return Err(Error::Config(format!(
            "{workers} workers may race past the 16-bit HQS1R counter (limit {})",
            HQS1R_RACE_BOUND - 1
        )));
    }
    Ok(())
}

#[inline]
fn hqs1r_word(rgb: Rgb) -> u64 {
    ((rgb.r() as u64) << 48) | ((rgb.g() as u64) << 32) | ((rgb.b() as u64) << 16) | 1
}

/// Second half of an `Hqs1r` update, given the main word's value before
/// this point's add.
#[inline]
fn hqs1r_settle(main: &AtomicU64, fallback: &[AtomicU64], old: u64, rgb: Rgb, c: &mut AtomicOpCounters) {
    let count = old & MASK16;
    if count < HQS1R_DRAIN_COUNT {
        return;
    }
    let (mut r, mut g, mut b, mut a) = (rgb.r() as u64, rgb.g() as u64, rgb.b() as u64, 1u64);
    if count == HQS1R_DRAIN_COUNT {
        main.swap(0, Ordering::Relaxed);
        c.exchange_calls += 1;
        r += (old >> 48) & MASK16;
        g += (old >> 32) & MASK16;
        b += (old >> 16) & MASK16;
        a += HQS1R_DRAIN_COUNT;
    }
    fallback[0].fetch_add((r << 32) | g, Ordering::Relaxed);
    fallback[1].fetch_add((b << 32) | a, Ordering::Relaxed);
    c.add_calls += 2;
}

pub fn color_pass_hqs1r(
    cloud: &PointCloud,
    view: &CameraView,
    db: &DepthBuffer32,
    acc: &HqsAccumulators,
    params: &HqsParams,
    exec: &Executor,
) -> Result<AtomicOpCounters> {
    check_hqs1r_workers(exec.workers())?;
    color_pass(HqsVariant::Hqs1r, cloud, view, db, acc, params, exec, |p, rgb, c| {
        let main = &acc.main[p];
        let old = main.fetch_add(hqs1r_word(rgb), Ordering::Relaxed);
        c.add_calls += 1;
        hqs1r_settle(main, &acc.fallback[2 * p..2 * p + 2], old, rgb, c);
    })
}

pub fn resolve_hqs(acc: &HqsAccumulators, background: Rgb) -> RgbImage {
    debug_assert_eq!(acc.variant, HqsVariant::Hqs);
    acc.resolve(background)
}

pub fn resolve_hqs1x(acc: &HqsAccumulators, background: Rgb) -> RgbImage {
    debug_assert_eq!(acc.variant, HqsVariant::Hqs1x);
    acc.resolve(background)
}

/// Main-word fields plus fallback sums, divided by the combined count.
pub fn resolve_hqs1r(acc: &HqsAccumulators, background: Rgb) -> RgbImage {
    debug_assert_eq!(acc.variant, HqsVariant::Hqs1r);
    acc.resolve(background)
}

/// Depth buffer and accumulators for one frame of a given variant.
pub struct HqsBuffers {
    pub depth: DepthBuffer32,
    pub acc: HqsAccumulators,
}

impl HqsBuffers {
    pub fn new(variant: HqsVariant, width: u32, height: u32) -> Self {
        HqsBuffers {
            depth: DepthBuffer32::new(width, height),
            acc: HqsAccumulators::new(variant, width, height),
        }
    }

    pub fn clear(&mut self) {
        self.depth.clear();
        self.acc.clear();
    }
}

/// Depth pass followed by the variant's color pass. Counters of both passes
/// are summed; `candidate_points` counts each visible point once.
pub fn render_hqs(
    cloud: &PointCloud,
    view: &CameraView,
    buffers: &HqsBuffers,
    params: &HqsParams,
    exec: &Executor,
) -> Result<AtomicOpCounters> {
    let depth = depth_pass(cloud, view, &buffers.depth, exec)?;
    let color = match buffers.acc.variant {
        HqsVariant::Hqs => color_pass_hqs(cloud, view, &buffers.depth, &buffers.acc, params, exec)?,
        HqsVariant::Hqs1x => color_pass_hqs1x(cloud, view, &buffers.depth, &buffers.acc, params, exec)?,
        HqsVariant::Hqs1r => color_pass_hqs1r(cloud, view, &buffers.depth, &buffers.acc, params, exec)?,
    };
    Ok(AtomicOpCounters {
        candidate_points: depth.candidate_points,
        ..depth + color
    })
}

/// Exact per-pixel `[Σr, Σg, Σb, N]` computed sequentially with plain
/// integer arithmetic; the expected result of every layout that does not
/// overflow.
pub fn reference_sums(cloud: &PointCloud, view: &CameraView, params: &HqsParams) -> Vec<[u64; 4]> {
    let frags: Vec<Option<Fragment>> = cloud.positions().iter().map(|p| project_to_pixel(*p, view)).collect();
    let mut closest = vec![DEPTH_CLEAR; view.pixel_count()];
    for f in frags.iter().flatten() {
        let c = &mut closest[f.pixel as usize];
        *c = (*c).min(f.depth.to_bits());
    }
    let mut sums = vec![[0u64; 4]; view.pixel_count()];
    for (f, rgb) in frags.iter().zip(cloud.colors()) {
        let Some(f) = f else { continue };
        if params.accepts(f.depth, closest[f.pixel as usize]) {
            let s = &mut sums[f.pixel as usize];
            s[0] += rgb.r() as u64;
            s[1] += rgb.g() as u64;
            s[2] += rgb.b() as u64;
            s[3] += 1;
        }
    }
    sums
}
