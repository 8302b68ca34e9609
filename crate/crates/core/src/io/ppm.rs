//! Binary P6 PPM: `"P6\n{w} {h}\n255\n"` followed by `w * h * 3` bytes,
//! top row first.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::packed::RgbImage;

pub fn encode_ppm(image: &RgbImage) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.as_bytes().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(image.as_bytes());
    out
}

pub fn write_ppm(image: &RgbImage, path: &Path) -> Result<()> {
    Ok(fs::write(path, encode_ppm(image))?)
}

/// Parses the header fields separated by single whitespace characters, as
/// produced by [`encode_ppm`] and most other writers. Comments are not
/// supported.
pub fn decode_ppm(data: &[u8]) -> Result<RgbImage> {
    let mut pos = 0;
    let mut fields = [0u32; 3];
    if !data.starts_with(b"P6") {
        return Err(Error::parse(0, "missing P6 magic"));
    }
    pos += 2;
    for (i, field) in fields.iter_mut().enumerate() {
        let ws = data.get(pos).copied();
        if !matches!(ws, Some(b' ' | b'\n' | b'\t' | b'\r')) {
            return Err(Error::parse(pos as u64, "expected whitespace"));
        }
        pos += 1;
        let start = pos;
        while data.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&data[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(start as u64, format!("bad header field {i}")))?;
    }
    if fields[2] != 255 {
        return Err(Error::UnsupportedFormat(format!("PPM max value {}", fields[2])));
    }
    if !matches!(data.get(pos), Some(b' ' | b'\n' | b'\t' | b'\r')) {
        return Err(Error::parse(pos as u64, "expected whitespace before pixel data"));
    }
    pos += 1;
    let need = fields[0] as usize * fields[1] as usize * 3;
    if data.len() - pos != need {
        return Err(Error::parse(
            pos as u64,
            format!("pixel data is {} bytes, expected {need}", data.len() - pos),
        ));
    }
    RgbImage::from_raw(fields[0], fields[1], data[pos..].to_vec())
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    decode_ppm(&fs::read(path)?)
}
