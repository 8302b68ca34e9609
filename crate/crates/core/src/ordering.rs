//! Vertex orderings: Morton (Z-curve) sort, full shuffle and shuffled
//! Morton batches.
//!
//! Morton codes interleave three 21-bit axis coordinates with x in the
//! least significant slot: bit `i` of x lands at `3i`, y at `3i + 1`, z at
//! `3i + 2`. Sorting by this code visits points in depth-first octree order
//! with children numbered `x + 2y + 4z`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::Xoshiro256StarStar;

pub const MORTON_BITS: u32 = 21;
pub const GRID_MAX: u32 = (1 << MORTON_BITS) - 1;
pub const DEFAULT_BATCH_SIZE: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MortonCode(pub u64);

fn spread_bits(v: u32) -> u64 {
    let mut x = v as u64 & 0x1F_FFFF;
    x = (x | (x << 32)) & 0x001F_0000_0000_FFFF;
    x = (x | (x << 16)) & 0x001F_0000_FF00_00FF;
    x = (x | (x << 8)) & 0x100F_00F0_0F00_F00F;
    x = (x | (x << 4)) & 0x10C3_0C30_C30C_30C3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

fn compact_bits(code: u64) -> u32 {
    let mut x = code & 0x1249_2492_4924_9249;
    x = (x | (x >> 2)) & 0x10C3_0C30_C30C_30C3;
    x = (x | (x >> 4)) & 0x100F_00F0_0F00_F00F;
    x = (x | (x >> 8)) & 0x001F_0000_FF00_00FF;
    x = (x | (x >> 16)) & 0x001F_0000_0000_FFFF;
    x = (x | (x >> 32)) & 0x1F_FFFF;
    x as u32
}

pub fn morton_encode21(ix: u32, iy: u32, iz: u32) -> Result<MortonCode> {
    if ix > GRID_MAX || iy > GRID_MAX || iz > GRID_MAX {
        return Err(Error::invalid_argument(format!(
            "grid coordinate ({ix}, {iy}, {iz}) exceeds 21 bits"
        )));
    }
    Ok(interleave([ix, iy, iz]))
}

#[inline]
fn interleave(v: [u32; 3]) -> MortonCode {
    MortonCode(spread_bits(v[0]) | (spread_bits(v[1]) << 1) | (spread_bits(v[2]) << 2))
}

pub fn morton_decode21(code: MortonCode) -> [u32; 3] {
    [
        compact_bits(code.0),
        compact_bits(code.0 >> 1),
        compact_bits(code.0 >> 2),
    ]
}

/// Maps every point onto a cubic 2^21 grid spanning the bounding box. The
/// cell edge is the largest box extent divided by 2^21, so all axes share
/// one scale; coordinates are clamped to `[0, 2^21 - 1]`.
pub fn quantize_to_grid(cloud: &PointCloud) -> Result<Vec<[u32; 3]>> {
    let aabb = cloud.aabb();
    if !aabb.min.iter().chain(aabb.max.iter()).all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("bounding box is not finite".into()));
    }
    let extent = aabb
        .extent()
        .iter()
        .fold(0.0f64, |m, &e| m.max(e as f64));
    if extent == 0.0 {
        return Ok(vec![[0; 3]; cloud.len()]);
    }
    let inv_cell = (1u64 << MORTON_BITS) as f64 / extent;
    let min = aabb.min.map(|v| v as f64);
    cloud
        .positions()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} is not finite")));
            }
            Ok([0, 1, 2].map(|k| {
                let q = ((p[k] as f64 - min[k]) * inv_cell).floor();
                q.clamp(0.0, GRID_MAX as f64) as u32
            }))
        })
        .collect()
}

pub fn morton_codes(cloud: &PointCloud) -> Result<Vec<MortonCode>> {
    Ok(quantize_to_grid(cloud)?.into_iter().map(interleave).collect())
}

/// Stable sort of point indices by Morton code.
pub fn sort_morton(cloud: &PointCloud) -> Result<Vec<usize>> {
    let codes = morton_codes(cloud)?;
    let mut keyed: Vec<(u64, usize)> = codes.iter().enumerate().map(|(i, c)| (c.0, i)).collect();
    // (code, index) keys are unique, so an unstable sort yields the stable order.
    #[cfg(feature = "parallel")]
    {
        use rayon::slice::ParallelSliceMut;
        keyed.par_sort_unstable();
    }
    #[cfg(not(feature = "parallel"))]
    keyed.sort_unstable();
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Fisher-Yates permutation of `0..count` driven by xoshiro256**.
pub fn shuffle(count: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..count).collect();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    for i in (1..count).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Morton order cut into contiguous batches whose order is shuffled; each
/// batch keeps its internal Morton order. The last batch may be short.
pub fn shuffle_morton(cloud: &PointCloud, seed: u64, batch_size: usize) -> Result<Vec<usize>> {
    if batch_size == 0 {
        return Err(Error::invalid_argument("batch size must be at least 1"));
    }
    let sorted = sort_morton(cloud)?;
    let batches: Vec<&[usize]> = sorted.chunks(batch_size).collect();
    let order = shuffle(batches.len(), seed);
    Ok(order.into_iter().flat_map(|b| batches[b].iter().copied()).collect())
}

pub fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    perm.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// Reorders positions and colors in lockstep; output point `k` is input
/// point `perm[k]`.
pub fn apply_permutation(cloud: &PointCloud, perm: &[usize]) -> Result<PointCloud> {
    if !is_permutation(perm, cloud.len()) {
        return Err(Error::invalid_argument(format!(
            "not a permutation of 0..{}",
            cloud.len()
        )));
    }
    let positions = perm.iter().map(|&i| cloud.positions()[i]).collect();
    let colors = perm.iter().map(|&i| cloud.colors()[i]).collect();
    Ok(PointCloud::from_parts(positions, colors, cloud.aabb()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingKind {
    Original,
    Morton,
    Shuffled,
    ShuffledMorton,
}

impl OrderingKind {
    pub const ALL: [OrderingKind; 4] = [
        OrderingKind::Original,
        OrderingKind::Morton,
        OrderingKind::Shuffled,
        OrderingKind::ShuffledMorton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingKind::Original => "original",
            OrderingKind::Morton => "morton",
            OrderingKind::Shuffled => "shuffled",
            OrderingKind::ShuffledMorton => "shuffled_morton",
        }
    }
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OrderingKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown ordering {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingSpec {
    pub kind: OrderingKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

impl OrderingSpec {
    pub fn new(kind: OrderingKind, seed: u64) -> Self {
        OrderingSpec {
            kind,
            seed,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    pub fn permutation(&self, cloud: &PointCloud) -> Result<Vec<usize>> {
        match self.kind {
            OrderingKind::Original => Ok((0..cloud.len()).collect()),
            OrderingKind::Morton => sort_morton(cloud),
            OrderingKind::Shuffled => Ok(shuffle(cloud.len(), self.seed)),
            OrderingKind::ShuffledMorton => shuffle_morton(cloud, self.seed, self.batch_size),
        }
    }

    pub fn apply(&self, cloud: &PointCloud) -> Result<PointCloud> {
        if self.kind == OrderingKind::Original {
            return Ok(cloud.clone());
        }
        apply_permutation(cloud, &self.permutation(cloud)?)
    }
}
