//! Packed 64-bit depth|color points, the atomic framebuffer and the basic
//! resolve.
//!
//! Layout of a packed point:
//!
//! ```text
//!  63      56 55                      24 23        0
//! +----------+--------------------------+-----------+
//! |    0     |  f32 bits of linear depth |  R  G  B  |
//! +----------+--------------------------+-----------+
//! ```
//!
//! For positive finite floats the IEEE-754 bit pattern is monotone in the
//! value, so the unsigned minimum of packed points picks the closest point,
//! and on equal depth the numerically smaller color.

use std::ops::{Add, AddAssign};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::cloud::Rgb;
use crate::error::{Error, Result};

pub const CLEAR_VALUE: u64 = u64::MAX;
const RGB_MASK: u64 = 0x00FF_FFFF;

/// Packs a positive finite depth and a 24-bit color.
pub fn encode_point64(depth: f32, rgb: u32) -> Result<u64> {
    if !depth.is_finite() || depth <= 0.0 {
        return Err(Error::invalid_argument(format!(
            "depth {depth} must be positive and finite"
        )));
    }
    if rgb > RGB_MASK as u32 {
        return Err(Error::invalid_argument(format!("color {rgb:#x} exceeds 24 bits")));
    }
    Ok(pack(depth, rgb))
}

/// Unchecked variant for callers that have already culled.
#[inline(always)]
pub(crate) fn pack(depth: f32, rgb: u32) -> u64 {
    ((depth.to_bits() as u64) << 24) | rgb as u64
}

/// Returns `(depth_bits, rgb)`.
#[inline]
pub fn decode_point64(point: u64) -> (u32, u32) {
    ((point >> 24) as u32, (point & RGB_MASK) as u32)
}

/// One 64-bit word per pixel, updated with atomic minimum.
pub struct PackedFramebuffer64 {
    pixels: Vec<AtomicU64>,
    width: u32,
    height: u32,
}

impl PackedFramebuffer64 {
    pub fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        PackedFramebuffer64 {
            pixels: (0..n).map(|_| AtomicU64::new(CLEAR_VALUE)).collect(),
            width,
            height,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn clear(&mut self) {
        for p in &mut self.pixels {
            *p.get_mut() = CLEAR_VALUE;
        }
    }

    #[inline]
    pub fn word(&self, pixel: u32) -> &AtomicU64 {
        &self.pixels[pixel as usize]
    }

    pub fn get(&self, pixel: u32) -> u64 {
        self.pixels[pixel as usize].load(Ordering::Relaxed)
    }

    /// Plain copy of the current contents.
    pub fn snapshot(&self) -> Vec<u64> {
        self.pixels.iter().map(|p| p.load(Ordering::Relaxed)).collect()
    }
}

impl std::fmt::Debug for PackedFramebuffer64 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PackedFramebuffer64")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

/// Per-pass instrumentation. Workers keep private counters that are summed
/// when the pass ends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AtomicOpCounters {
    /// Points surviving the frustum cull.
    pub candidate_points: u64,
    /// Atomic minimum calls (64-bit framebuffer or 32-bit depth buffer).
    pub min_calls: u64,
    pub add_calls: u64,
    /// Atomic exchanges, including busy-loop lock acquisitions.
    pub exchange_calls: u64,
}

impl Add for AtomicOpCounters {
    type Output = AtomicOpCounters;

    fn add(self, o: Self) -> Self {
        AtomicOpCounters {
            candidate_points: self.candidate_points + o.candidate_points,
            min_calls: self.min_calls + o.min_calls,
            add_calls: self.add_calls + o.add_calls,
            exchange_calls: self.exchange_calls + o.exchange_calls,
        }
    }
}

impl AddAssign for AtomicOpCounters {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// 8-bit RGB image stored top row first, as it is displayed and written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&fill.0);
        }
        RgbImage {
            width,
            height,
            data,
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(Error::invalid_argument(format!(
                "{} bytes do not form a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    /// `(x, y)` with `y = 0` at the top.
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        Rgb([self.data[i], self.data[i + 1], self.data[i + 2]])
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&c.0);
    }

    /// Pixel addressed by framebuffer pixel ID (row 0 at the bottom).
    pub fn get_by_id(&self, pixel: u32) -> Rgb {
        let (x, y) = self.id_to_xy(pixel);
        self.get(x, y)
    }

    pub fn set_by_id(&mut self, pixel: u32, c: Rgb) {
        let (x, y) = self.id_to_xy(pixel);
        self.set(x, y, c);
    }

    fn id_to_xy(&self, pixel: u32) -> (u32, u32) {
        let x = pixel % self.width;
        let row = pixel / self.width;
        (x, self.height - 1 - row)
    }
}

/// Writes the low 24 bits of every written pixel, `background` elsewhere.
pub fn resolve_basic(fb: &PackedFramebuffer64, background: Rgb) -> RgbImage {
    let mut img = RgbImage::new(fb.width(), fb.height(), background);
    for (id, word) in fb.pixels.iter().enumerate() {
        let v = word.load(Ordering::Relaxed);
        if v != CLEAR_VALUE {
            img.set_by_id(id as u32, Rgb::from_u24(decode_point64(v).1));
        }
    }
    img
}

/// Grayscale linear depth, nearest written depth white and farthest dark
/// gray; unwritten pixels black.
pub fn resolve_depth(fb: &PackedFramebuffer64) -> RgbImage {
    let depths = fb.pixels.iter().map(|w| {
        let v = w.load(Ordering::Relaxed);
        (v != CLEAR_VALUE).then(|| f32::from_bits(decode_point64(v).0))
    });
    depth_image(fb.width(), fb.height(), depths.collect())
}

/// Grayscale image from per-pixel-ID depths.
pub(crate) fn depth_image(width: u32, height: u32, depths: Vec<Option<f32>>) -> RgbImage {
    let (lo, hi) = depths
        .iter()
        .flatten()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    let span = (hi - lo).max(f32::MIN_POSITIVE);
    let mut img = RgbImage::new(width, height, Rgb::BLACK);
    for (id, d) in depths.iter().enumerate() {
        if let Some(d) = d {
            let t = (d - lo) / span;
            let g = (255.0 - t * 223.0).round() as u8;
            img.set_by_id(id as u32, Rgb([g, g, g]));
        }
    }
    img
}
