//! Deterministic synthetic scenes.
//!
//! Generators use only integer-seeded draws and basic float arithmetic
//! (plus `sqrt`), in a fixed order, so a spec yields the same cloud on
//! every platform.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, Rgb};
use crate::error::{Error, Result};
use crate::rng::{SplitMix64, Xoshiro256StarStar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    /// Uniform fill of the cube `[-extent/2, extent/2]^3`.
    UniformCube,
    /// Thin spherical shell of radius `extent/2` around the origin.
    SphereSurface,
    /// Heightfield over `[0, extent]^2`, sampled row by row like an aerial
    /// scan, heights up to `extent / 10`.
    Terrain,
}

impl SceneKind {
    pub const ALL: [SceneKind; 3] = [SceneKind::UniformCube, SceneKind::SphereSurface, SceneKind::Terrain];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::UniformCube => "uniform_cube",
            SceneKind::SphereSurface => "sphere_surface",
            SceneKind::Terrain => "terrain",
        }
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scene kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_extent")]
    pub extent: f32,
}

fn default_extent() -> f32 {
    10.0
}

impl SceneSpec {
    pub fn new(kind: SceneKind, n: usize, seed: u64) -> Self {
        SceneSpec {
            kind,
            n,
            seed,
            extent: default_extent(),
        }
    }
}

/// `kind:n[:seed[:extent]]`, e.g. `terrain:1000000:42`.
impl FromStr for SceneSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("scene {s:?} is not kind:n[:seed[:extent]]"));
        if parts.len() < 2 || parts.len() > 4 {
            return Err(bad());
        }
        let mut spec = SceneSpec::new(parts[0].parse()?, parts[1].parse().map_err(|_| bad())?, 0);
        if let Some(seed) = parts.get(2) {
            spec.seed = seed.parse().map_err(|_| bad())?;
        }
        if let Some(extent) = parts.get(3) {
            spec.extent = extent.parse().map_err(|_| bad())?;
            if !(spec.extent > 0.0 && spec.extent.is_finite()) {
                return Err(bad());
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for SceneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.kind.name(), self.n, self.seed, self.extent)
    }
}

pub fn generate_scene(spec: &SceneSpec) -> PointCloud {
    let mut rng = Xoshiro256StarStar::seed_from_u64(spec.seed);
    let extent = spec.extent as f64;
    let (positions, colors) = match spec.kind {
        SceneKind::UniformCube => uniform_cube(&mut rng, spec.n, extent),
        SceneKind::SphereSurface => sphere_surface(&mut rng, spec.n, extent),
        SceneKind::Terrain => terrain(&mut rng, spec.seed, spec.n, extent),
    };
    PointCloud::new(positions, colors).expect("generators emit finite points")
}

fn channel(t: f64) -> u8 {
    (t.clamp(0.0, 1.0) * 255.0) as u8
}

fn uniform_cube(rng: &mut Xoshiro256StarStar, n: usize, extent: f64) -> (Vec<[f32; 3]>, Vec<Rgb>) {
    let mut pos = Vec::with_capacity(n);
    let mut col = Vec::with_capacity(n);
    for _ in 0..n {
        let t = [rng.next_f64(), rng.next_f64(), rng.next_f64()];
        pos.push(t.map(|v| ((v - 0.5) * extent) as f32));
        col.push(Rgb(t.map(channel)));
    }
    (pos, col)
}

fn sphere_surface(rng: &mut Xoshiro256StarStar, n: usize, extent: f64) -> (Vec<[f32; 3]>, Vec<Rgb>) {
    let radius = 0.5 * extent;
    let shell = 0.01 * radius;
    let mut pos = Vec::with_capacity(n);
    let mut col = Vec::with_capacity(n);
    while pos.len() < n {
        let d = [
            2.0 * rng.next_f64() - 1.0,
            2.0 * rng.next_f64() - 1.0,
            2.0 * rng.next_f64() - 1.0,
        ];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if !(r2 > 1e-6 && r2 <= 1.0) {
            continue;
        }
        let inv = 1.0 / r2.sqrt();
        let normal = d.map(|v| v * inv);
        let r = radius - shell * rng.next_f64();
        pos.push(normal.map(|v| (v * r) as f32));
        // Banded coloring keeps neighbouring pixels distinguishable.
        let band = ((normal[2] + 1.0) * 8.0) as u32 % 2;
        col.push(Rgb([
            channel(0.5 * (normal[0] + 1.0)),
            channel(0.5 * (normal[1] + 1.0)),
            if band == 0 { 200 } else { 60 },
        ]));
    }
    (pos, col)
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise on an integer lattice, four octaves, result in `[0, 1)`.
fn height(seed: u64, x: f64, y: f64) -> f64 {
    let lattice = |ix: i64, iy: i64, octave: u64| {
        let key = seed
            ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
            ^ octave.wrapping_mul(0x1656_67B1_9E37_79F9);
        (SplitMix64::new(key).next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    };
    let mut total = 0.0;
    let mut amp = 0.5;
    let mut freq = 4.0;
    let mut norm = 0.0;
    for octave in 0..4u64 {
        let (fx, fy) = (x * freq, y * freq);
        let (ix, iy) = (fx.floor(), fy.floor());
        let (tx, ty) = (smoothstep(fx - ix), smoothstep(fy - iy));
        let (ix, iy) = (ix as i64, iy as i64);
        let a = lattice(ix, iy, octave);
        let b = lattice(ix + 1, iy, octave);
        let c = lattice(ix, iy + 1, octave);
        let d = lattice(ix + 1, iy + 1, octave);
        let top = a + (b - a) * tx;
        let bottom = c + (d - c) * tx;
        total += amp * (top + (bottom - top) * ty);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    total / norm
}

fn terrain(rng: &mut Xoshiro256StarStar, seed: u64, n: usize, extent: f64) -> (Vec<[f32; 3]>, Vec<Rgb>) {
    let mut pos = Vec::with_capacity(n);
    let mut col = Vec::with_capacity(n);
    if n == 0 {
        return (pos, col);
    }
    let cols = ((n as f64).sqrt().ceil() as usize).max(1);
    let rows = n.div_ceil(cols);
    let cell_x = 1.0 / cols as f64;
    let cell_y = 1.0 / rows as f64;
    'scan: for row in 0..rows {
        for c in 0..cols {
            if pos.len() == n {
                break 'scan;
            }
            let u = (c as f64 + rng.next_f64()) * cell_x;
            let v = (row as f64 + rng.next_f64()) * cell_y;
            let h = height(seed, u, v);
            pos.push([(u * extent) as f32, (v * extent) as f32, (h * 0.1 * extent) as f32]);
            let jitter = rng.next_f64() * 0.08;
            let rgb = if h < 0.35 {
                [0.15 + jitter, 0.45 + h, 0.15]
            } else if h < 0.6 {
                [0.45 + h * 0.3 + jitter, 0.35 + h * 0.2, 0.2]
            } else {
                [0.8 + jitter, 0.8 + jitter, 0.85 + jitter]
            };
            col.push(Rgb(rgb.map(channel)));
        }
    }
    (pos, col)
}
