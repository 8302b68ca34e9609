//! Binary little-endian PLY, vertex element only.
//!
//! The vertex element must carry `x`, `y`, `z` as `float`. Colors come from
//! `red`, `green`, `blue` as `uchar` when present and default to white.
//! Other scalar vertex properties are skipped. Elements declared before
//! `vertex` are skipped when all their properties are scalars; elements
//! after it are ignored.

use std::fs;
use std::path::Path;

use crate::cloud::{PointCloud, Rgb};
use crate::error::{Error, Result};

use super::Reader;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }
}

#[derive(Debug)]
struct Property {
    name: String,
    ty: Option<ScalarType>, // None for list properties
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct VertexLayout {
    stride: usize,
    xyz: [usize; 3],
    rgb: Option<[usize; 3]>,
}

fn parse_header(data: &[u8]) -> Result<(Vec<Element>, usize)> {
    let mut pos = 0;
    let mut elements: Vec<Element> = Vec::new();
    let mut first = true;
    let mut saw_format = false;
    loop {
        let line_start = pos;
        let Some(nl) = data[pos..].iter().position(|&b| b == b'\n') else {
            return Err(Error::parse(pos as u64, "header is missing end_header"));
        };
        let raw = &data[pos..pos + nl];
        pos += nl + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| Error::parse(line_start as u64, "header line is not UTF-8"))?
            .trim_end_matches('\r');
        let mut words = line.split_whitespace();
        let keyword = words.next().unwrap_or("");
        let err = |msg: String| Error::parse(line_start as u64, msg);
        if first {
            if line != "ply" {
                return Err(err("missing 'ply' magic".into()));
            }
            first = false;
            continue;
        }
        match keyword {
            "format" => {
                let fmt = words.next().unwrap_or("");
                if fmt != "binary_little_endian" {
                    return Err(Error::UnsupportedFormat(format!(
                        "PLY format {fmt:?} (only binary_little_endian is read)"
                    )));
                }
                saw_format = true;
            }
            "comment" | "obj_info" | "" => {}
            "element" => {
                let name = words.next().ok_or_else(|| err("element without name".into()))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| err(format!("element {name} has no valid count")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            "property" => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| err("property before any element".into()))?;
                let ty = words.next().unwrap_or("");
                let prop = if ty == "list" {
                    let name = words.nth(2).ok_or_else(|| err("list property without name".into()))?;
                    Property {
                        name: name.to_string(),
                        ty: None,
                    }
                } else {
                    let scalar = ScalarType::parse(ty)
                        .ok_or_else(|| Error::UnsupportedFormat(format!("PLY property type {ty:?} at byte {line_start}")))?;
                    let name = words.next().ok_or_else(|| err("property without name".into()))?;
                    Property {
                        name: name.to_string(),
                        ty: Some(scalar),
                    }
                };
                el.props.push(prop);
            }
            "end_header" => break,
            other => return Err(err(format!("unknown header keyword {other:?}"))),
        }
    }
    if !saw_format {
        return Err(Error::parse(0, "header has no format line"));
    }
    Ok((elements, pos))
}

fn vertex_layout(el: &Element) -> Result<VertexLayout> {
    let mut offset = 0;
    let mut xyz = [None; 3];
    let mut rgb = [None; 3];
    for p in &el.props {
        let Some(ty) = p.ty else {
            return Err(Error::UnsupportedFormat(format!("list property {:?} on vertex", p.name)));
        };
        let slot = |names: [&str; 3]| names.iter().position(|n| *n == p.name);
        if let Some(k) = slot(["x", "y", "z"]) {
            if ty != ScalarType::F32 {
                return Err(Error::UnsupportedFormat(format!("vertex {} must be float, found {ty:?}", p.name)));
            }
            xyz[k] = Some(offset);
        } else if let Some(k) = slot(["red", "green", "blue"]) {
            if ty != ScalarType::U8 {
                return Err(Error::UnsupportedFormat(format!("vertex {} must be uchar, found {ty:?}", p.name)));
            }
            rgb[k] = Some(offset);
        }
        offset += ty.size();
    }
    let xyz = match xyz {
        [Some(x), Some(y), Some(z)] => [x, y, z],
        _ => return Err(Error::UnsupportedFormat("vertex element lacks x, y or z".into())),
    };
    let rgb = match rgb {
        [Some(r), Some(g), Some(b)] => Some([r, g, b]),
        [None, None, None] => None,
        _ => return Err(Error::UnsupportedFormat("vertex color needs red, green and blue".into())),
    };
    Ok(VertexLayout { stride: offset, xyz, rgb })
}

pub fn decode_ply(data: &[u8]) -> Result<PointCloud> {
    let (elements, body) = parse_header(data)?;
    let mut r = Reader::at(data, body);
    for el in &elements {
        if el.name == "vertex" {
            let layout = vertex_layout(el)?;
            return read_vertices(&mut r, el.count, &layout);
        }
        if el.props.iter().any(|p| p.ty.is_none()) {
            return Err(Error::UnsupportedFormat(format!(
                "element {:?} with list properties precedes vertex",
                el.name
            )));
        }
        let stride: usize = el.props.iter().map(|p| p.ty.map_or(0, ScalarType::size)).sum();
        r.take(stride * el.count, &format!("element {}", el.name))?;
    }
    Err(Error::parse(body as u64, "no vertex element"))
}

fn read_vertices(r: &mut Reader<'_>, count: usize, layout: &VertexLayout) -> Result<PointCloud> {
    let mut positions = Vec::with_capacity(count.min(r.remaining() / layout.stride.max(1)));
    let mut colors = Vec::with_capacity(positions.capacity());
    let f32_at = |rec: &[u8], o: usize| f32::from_le_bytes(rec[o..o + 4].try_into().expect("4 bytes"));
    for _ in 0..count {
        let at = r.offset();
        let rec = r.take(layout.stride, "vertex")?;
        let p = layout.xyz.map(|o| f32_at(rec, o));
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::parse(at, "non-finite vertex position"));
        }
        positions.push(p);
        colors.push(layout.rgb.map_or(Rgb::WHITE, |o| Rgb(o.map(|o| rec[o]))));
    }
    PointCloud::new(positions, colors)
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    decode_ply(&fs::read(path)?)
}

pub fn encode_ply(cloud: &PointCloud) -> Vec<u8> {
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        cloud.len()
    );
    let mut out = Vec::with_capacity(header.len() + cloud.len() * 15);
    out.extend_from_slice(header.as_bytes());
    for (p, c) in cloud.positions().iter().zip(cloud.colors()) {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&c.0);
    }
    out
}

pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    Ok(fs::write(path, encode_ply(cloud))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_white_vertex() {
        let cloud = PointCloud::new(vec![[0.0; 3]], vec![Rgb::WHITE]).unwrap();
        let back = decode_ply(&encode_ply(&cloud)).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back.aabb().min, [0.0; 3]);
        assert_eq!(back.aabb().max, [0.0; 3]);
        assert_eq!(back.colors()[0], Rgb::WHITE);
    }

    #[test]
    fn ascii_is_unsupported() {
        let data = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n";
        assert!(matches!(decode_ply(data), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn skips_extra_properties_and_elements() {
        let mut data = b"ply\nformat binary_little_endian 1.0\ncomment test\n\
            element camera 1\nproperty double focal\n\
            element vertex 2\nproperty float x\nproperty float y\nproperty float z\n\
            property float nx\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar alpha\n\
            element face 0\nproperty list uchar int vertex_indices\nend_header\n"
            .to_vec();
        data.extend_from_slice(&2.5f64.to_le_bytes());
        for (i, c) in [(1.0f32, [1u8, 2, 3]), (2.0, [4, 5, 6])] {
            for v in [i, -i, 0.5 * i, 9.0] {
                data.extend_from_slice(&v.to_le_bytes());
            }
            data.extend_from_slice(&c);
            data.push(255);
        }
        let cloud = decode_ply(&data).unwrap();
        assert_eq!(cloud.positions(), &[[1.0, -1.0, 0.5], [2.0, -2.0, 1.0]]);
        assert_eq!(cloud.colors(), &[Rgb::new(1, 2, 3), Rgb::new(4, 5, 6)]);
    }

    #[test]
    fn missing_color_defaults_to_white() {
        let mut data = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\n\
            property float x\nproperty float y\nproperty float z\nend_header\n"
            .to_vec();
        data.extend_from_slice(&[0u8; 12]);
        assert_eq!(decode_ply(&data).unwrap().colors(), &[Rgb::WHITE]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(decode_ply(b"plx\n"), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(decode_ply(b"ply\nformat binary_little_endian 1.0\n"), Err(Error::Parse { .. })));
        let double_x = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\n\
            property double x\nproperty float y\nproperty float z\nend_header\n";
        assert!(matches!(decode_ply(double_x), Err(Error::UnsupportedFormat(_))));
        let bad_type = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty half x\nend_header\n";
        assert!(matches!(decode_ply(bad_type), Err(Error::UnsupportedFormat(_))));

        let cloud = PointCloud::new(vec![[1.0; 3]; 2], vec![Rgb::BLACK; 2]).unwrap();
        let bytes = encode_ply(&cloud);
        let header_len = bytes.len() - 30;
        let err = decode_ply(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, Error::Parse { offset, .. } if offset == (header_len + 15) as u64), "{err}");
    }
}
