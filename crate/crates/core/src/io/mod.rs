//! Point-cloud files, synthetic scenes and image output.

mod bin;
mod ply;
mod ppm;
mod scene;

use std::path::Path;

pub use bin::{decode_bin, encode_bin, read_bin, read_bin_with_metadata, write_bin, write_bin_with_metadata, BIN_HEADER_LEN, BIN_MAGIC, BIN_RECORD_LEN, BIN_VERSION};
pub use ply::{decode_ply, encode_ply, read_ply, write_ply};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};
pub use scene::{generate_scene, SceneKind, SceneSpec};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Loads a cloud, choosing the reader by extension (`.ply`, `.bin` or
/// `.pcrb`).
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("ply") => read_ply(path),
        Some("bin") | Some("pcrb") => read_bin(path),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: expected a .ply, .bin or .pcrb file",
            path.display()
        ))),
    }
}

/// Little-endian cursor that reports the byte offset of every failure.
pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub(crate) fn at(data: &'a [u8], pos: usize) -> Self {
        Reader { data, pos }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::parse(
                self.pos as u64,
                format!("truncated {what}: need {n} bytes, {} left", self.remaining()),
            ));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.array::<1>(what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array(what)?))
    }
}
