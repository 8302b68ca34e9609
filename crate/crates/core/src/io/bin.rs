//! Raw little-endian cloud format.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "PCRB"
//!      4     4  u32 version (1)
//!      8     8  u64 point count
//!     16    48  f64 AABB: min x, y, z, max x, y, z
//!     64  16*n  records: 3 x f32 position, 3 x u8 color, 1 pad byte
//! ```
//!
//! An optional trailer may follow the records: magic "PCRM", a u32 byte
//! length, then UTF-8 JSON metadata.

use std::fs;
use std::path::Path;

use crate::cloud::{Aabb, PointCloud, Rgb};
use crate::error::{Error, Result};

use super::Reader;

pub const BIN_MAGIC: &[u8; 4] = b"PCRB";
pub const BIN_VERSION: u32 = 1;
pub const BIN_HEADER_LEN: usize = 4 + 4 + 8 + 6 * 8;
pub const BIN_RECORD_LEN: usize = 16;
const META_MAGIC: &[u8; 4] = b"PCRM";

pub fn encode_bin(cloud: &PointCloud, metadata: Option<&serde_json::Value>) -> Vec<u8> {
    let mut out = Vec::with_capacity(BIN_HEADER_LEN + cloud.len() * BIN_RECORD_LEN);
    out.extend_from_slice(BIN_MAGIC);
    out.extend_from_slice(&BIN_VERSION.to_le_bytes());
    out.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    let aabb = cloud.aabb();
    for v in aabb.min.iter().chain(aabb.max.iter()) {
        out.extend_from_slice(&(*v as f64).to_le_bytes());
    }
    for (p, c) in cloud.positions().iter().zip(cloud.colors()) {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&c.0);
        out.push(0);
    }
    if let Some(meta) = metadata {
        let text = meta.to_string();
        out.extend_from_slice(META_MAGIC);
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
    }
    out
}

pub fn decode_bin(data: &[u8]) -> Result<(PointCloud, Option<serde_json::Value>)> {
    let mut r = Reader::new(data);
    let magic = r.array::<4>("magic")?;
    if &magic != BIN_MAGIC {
        return Err(Error::parse(0, format!("bad magic {magic:?}, expected \"PCRB\"")));
    }
    let version = r.u32("version")?;
    if version != BIN_VERSION {
        return Err(Error::parse(4, format!("unsupported version {version}")));
    }
    let count = r.u64("point count")?;
    let mut bounds = [0.0f64; 6];
    for b in &mut bounds {
        *b = r.f64("bounding box")?;
    }
    let fits = (count as usize)
        .checked_mul(BIN_RECORD_LEN)
        .is_some_and(|n| n <= r.remaining());
    if !fits {
        return Err(Error::parse(
            r.offset(),
            format!("truncated payload: {count} points declared, {} bytes left", r.remaining()),
        ));
    }
    let mut positions = Vec::with_capacity(count as usize);
    let mut colors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let at = r.offset();
        let p = [r.f32("x")?, r.f32("y")?, r.f32("z")?];
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::parse(at, "non-finite position"));
        }
        let c = r.array::<3>("color")?;
        r.u8("padding")?;
        positions.push(p);
        colors.push(Rgb(c));
    }
    let metadata = if r.remaining() > 0 {
        let at = r.offset();
        let magic = r.array::<4>("trailer magic")?;
        if &magic != META_MAGIC {
            return Err(Error::parse(at, "unexpected bytes after point records"));
        }
        let len = r.u32("trailer length")? as usize;
        let text_at = r.offset();
        let text = r.take(len, "trailer")?;
        if r.remaining() > 0 {
            return Err(Error::parse(r.offset(), "unexpected bytes after trailer"));
        }
        Some(serde_json::from_slice(text).map_err(|e| Error::parse(text_at, format!("trailer JSON: {e}")))?)
    } else {
        None
    };
    let cloud = PointCloud::new(positions, colors)?;
    let declared = Aabb {
        min: [bounds[0] as f32, bounds[1] as f32, bounds[2] as f32],
        max: [bounds[3] as f32, bounds[4] as f32, bounds[5] as f32],
    };
    if declared != cloud.aabb() {
        return Err(Error::parse(16, "bounding box does not match the points"));
    }
    Ok((cloud, metadata))
}

pub fn read_bin(path: &Path) -> Result<PointCloud> {
    Ok(read_bin_with_metadata(path)?.0)
}

pub fn read_bin_with_metadata(path: &Path) -> Result<(PointCloud, Option<serde_json::Value>)> {
    decode_bin(&fs::read(path)?)
}

pub fn write_bin(path: &Path, cloud: &PointCloud) -> Result<()> {
    Ok(fs::write(path, encode_bin(cloud, None))?)
}

pub fn write_bin_with_metadata(path: &Path, cloud: &PointCloud, metadata: &serde_json::Value) -> Result<()> {
    Ok(fs::write(path, encode_bin(cloud, Some(metadata)))?)
}
