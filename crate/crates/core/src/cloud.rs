use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-bit per channel color.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const BLACK: Rgb = Rgb([0, 0, 0]);
    pub const WHITE: Rgb = Rgb([255, 255, 255]);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb([r, g, b])
    }

    /// Packs as `0xRRGGBB`.
    pub const fn to_u24(self) -> u32 {
        ((self.0[0] as u32) << 16) | ((self.0[1] as u32) << 8) | self.0[2] as u32
    }

    pub const fn from_u24(v: u32) -> Self {
        Rgb([(v >> 16) as u8, (v >> 8) as u8, v as u8])
    }

    pub const fn r(self) -> u8 {
        self.0[0]
    }

    pub const fn g(self) -> u8 {
        self.0[1]
    }

    pub const fn b(self) -> u8 {
        self.0[2]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f32; 3],
    pub max: [f32; 3],
}

impl Aabb {
    /// Zero box, used for empty clouds.
    pub const EMPTY: Aabb = Aabb {
        min: [0.0; 3],
        max: [0.0; 3],
    };

    pub fn from_points(points: &[[f32; 3]]) -> Aabb {
        let Some(first) = points.first() else {
            return Aabb::EMPTY;
        };
        let mut aabb = Aabb {
            min: *first,
            max: *first,
        };
        for p in &points[1..] {
            for ((lo, hi), v) in aabb.min.iter_mut().zip(&mut aabb.max).zip(p) {
                *lo = lo.min(*v);
                *hi = hi.max(*v);
            }
        }
        aabb
    }

    pub fn contains(&self, p: [f32; 3]) -> bool {
        (0..3).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }

    pub fn extent(&self) -> [f32; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] as f64 + self.max[0] as f64),
            0.5 * (self.min[1] as f64 + self.max[1] as f64),
            0.5 * (self.min[2] as f64 + self.max[2] as f64),
        ]
    }

    /// Length of the box diagonal.
    pub fn diagonal(&self) -> f64 {
        let e = self.extent();
        e.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }
}

/// Structure-of-arrays point cloud. Immutable once built; reorderings
/// produce a new cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    positions: Vec<[f32; 3]>,
    colors: Vec<Rgb>,
    aabb: Aabb,
}

impl PointCloud {
    /// Builds a cloud and computes its bounding box. Rejects mismatched
    /// lengths and non-finite coordinates.
    pub fn new(positions: Vec<[f32; 3]>, colors: Vec<Rgb>) -> Result<Self> {
        if positions.len() != colors.len() {
            return Err(Error::InvalidInput(format!(
                "{} positions but {} colors",
                positions.len(),
                colors.len()
            )));
        }
        if let Some(i) = positions
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidInput(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        let aabb = Aabb::from_points(&positions);
        Ok(PointCloud {
            positions,
            colors,
            aabb,
        })
    }

    pub fn empty() -> Self {
        PointCloud {
            positions: Vec::new(),
            colors: Vec::new(),
            aabb: Aabb::EMPTY,
        }
    }

    pub(crate) fn from_parts(positions: Vec<[f32; 3]>, colors: Vec<Rgb>, aabb: Aabb) -> Self {
        debug_assert_eq!(positions.len(), colors.len());
        PointCloud {
            positions,
            colors,
            aabb,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f32; 3]] {
        &self.positions
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    pub fn aabb(&self) -> Aabb {
        self.aabb
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_u24_layout() {
        assert_eq!(Rgb::new(0x12, 0x34, 0x56).to_u24(), 0x123456);
        assert_eq!(Rgb::from_u24(0xFF0000), Rgb::new(255, 0, 0));
    }

    #[test]
    fn aabb_bounds_all_points() {
        let pts = vec![[1.0, -2.0, 3.0], [-1.0, 5.0, 0.5], [0.0, 0.0, 0.0]];
        let cloud = PointCloud::new(pts.clone(), vec![Rgb::BLACK; 3]).unwrap();
        assert_eq!(cloud.aabb().min, [-1.0, -2.0, 0.0]);
        assert_eq!(cloud.aabb().max, [1.0, 5.0, 3.0]);
        assert!(pts.iter().all(|&p| cloud.aabb().contains(p)));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PointCloud::new(vec![[0.0; 3]], vec![]).is_err());
        assert!(PointCloud::new(vec![[f32::NAN, 0.0, 0.0]], vec![Rgb::BLACK]).is_err());
        assert!(PointCloud::new(vec![[f32::INFINITY, 0.0, 0.0]], vec![Rgb::BLACK]).is_err());
    }
}
