//! Camera construction and point projection.
//!
//! Pixel mapping: `ndc = clip.xy / clip.w` must lie in the half-open range
//! `[-1, 1)` on both axes, `px = floor((ndc.x * 0.5 + 0.5) * width)` and
//! likewise for `py`. Pixel IDs are row-major with row 0 at `ndc.y = -1`
//! (the bottom of the view). The stored depth is `clip.w`, the linear
//! view-space distance along the viewing direction.

use crate::error::{Error, Result};

/// Points with `clip.w` at or below this are culled.
pub const MIN_CLIP_W: f64 = 1e-6;

pub type Mat4 = [[f64; 4]; 4];

#[derive(Clone, Debug, PartialEq)]
pub struct CameraView {
    /// Row-major world-view-projection matrix; `clip = wvp * (p, 1)`.
    pub wvp: Mat4,
    width: u32,
    height: u32,
}

/// A point that survived projection: target pixel and linear depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fragment {
    pub pixel: u32,
    pub depth: f32,
}

impl CameraView {
    pub fn new(wvp: Mat4, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid_argument("image dimensions must be positive"));
        }
        if (width as u64) * (height as u64) > 1u64 << 31 {
            return Err(Error::invalid_argument(format!(
                "{width}x{height} exceeds 2^31 pixels"
            )));
        }
        Ok(CameraView { wvp, width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// `wvp * (p, 1)`.
    #[inline]
    pub fn clip(&self, p: [f32; 3]) -> [f64; 4] {
        let (x, y, z) = (p[0] as f64, p[1] as f64, p[2] as f64);
        let m = &self.wvp;
        let row = |r: &[f64; 4]| r[0] * x + r[1] * y + r[2] * z + r[3];
        [row(&m[0]), row(&m[1]), row(&m[2]), row(&m[3])]
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Look-at view composed with an OpenGL-style perspective projection.
/// The projection's last row is `(0, 0, -1, 0)`, so `clip.w` equals the
/// distance in front of the eye along the viewing direction.
#[allow(clippy::too_many_arguments)]
pub fn build_camera(
    eye: [f64; 3],
    target: [f64; 3],
    up: [f64; 3],
    fovy: f64,
    width: u32,
    height: u32,
    near: f64,
    far: f64,
) -> Result<CameraView> {
    if !(near > 0.0) || !(far > near) {
        return Err(Error::invalid_argument(format!(
            "clip planes must satisfy 0 < near < far (near={near}, far={far})"
        )));
    }
    if !(fovy > 0.0 && fovy < std::f64::consts::PI) {
        return Err(Error::invalid_argument(format!("fovy {fovy} outside (0, pi)")));
    }
    if width == 0 || height == 0 {
        return Err(Error::invalid_argument("image dimensions must be positive"));
    }
    let dir = sub(target, eye);
    let dist = norm(dir);
    if !(dist > 0.0) || !dist.is_finite() {
        return Err(Error::invalid_argument("eye and target coincide"));
    }
    let f = scale(dir, 1.0 / dist);
    let side = cross(f, up);
    let side_len = norm(side);
    let up_len = norm(up);
    if !(up_len > 0.0) || !(side_len > 1e-9 * up_len) {
        return Err(Error::invalid_argument(
            "up vector is parallel to the viewing direction",
        ));
    }
    let s = scale(side, 1.0 / side_len);
    let u = cross(s, f);

    let view: Mat4 = [
        [s[0], s[1], s[2], -dot(s, eye)],
        [u[0], u[1], u[2], -dot(u, eye)],
        [-f[0], -f[1], -f[2], dot(f, eye)],
        [0.0, 0.0, 0.0, 1.0],
    ];

    let focal = 1.0 / (fovy * 0.5).tan();
    let aspect = width as f64 / height as f64;
    let proj: Mat4 = [
        [focal / aspect, 0.0, 0.0, 0.0],
        [0.0, focal, 0.0, 0.0],
        [
            0.0,
            0.0,
            (far + near) / (near - far),
            2.0 * far * near / (near - far),
        ],
        [0.0, 0.0, -1.0, 0.0],
    ];

    CameraView::new(mat_mul(&proj, &view), width, height)
}

/// Projects a world position. `None` when the point is behind the near
/// threshold or outside the half-open NDC square.
#[inline]
pub fn project_to_pixel(position: [f32; 3], view: &CameraView) -> Option<Fragment> {
    // Only x, y and w of the clip position are needed.
    let (x, y, z) = (position[0] as f64, position[1] as f64, position[2] as f64);
    let m = &view.wvp;
    let w = m[3][0] * x + m[3][1] * y + m[3][2] * z + m[3][3];
    if !(w > MIN_CLIP_W) {
        return None;
    }
    let nx = (m[0][0] * x + m[0][1] * y + m[0][2] * z + m[0][3]) / w;
    let ny = (m[1][0] * x + m[1][1] * y + m[1][2] * z + m[1][3]) / w;
    if !(-1.0..1.0).contains(&nx) || !(-1.0..1.0).contains(&ny) {
        return None;
    }
    let depth = w as f32;
    if !depth.is_finite() {
        return None;
    }
    let (width, height) = (view.width, view.height);
    // The scaled coordinates are non-negative here, so truncation is floor.
    // (ndc * 0.5 + 0.5) can round up to exactly 1.0 for ndc just below 1.
    let px = (((nx * 0.5 + 0.5) * width as f64) as u32).min(width - 1);
    let py = (((ny * 0.5 + 0.5) * height as f64) as u32).min(height - 1);
    Some(Fragment {
        pixel: px + py * width,
        depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    // Scalar reference: transform to camera space by hand, then project.
    fn reference_clip_w(eye: [f64; 3], target: [f64; 3], p: [f64; 3]) -> f64 {
        let d = sub(target, eye);
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let rel = sub(p, eye);
        (rel[0] * d[0] + rel[1] * d[1] + rel[2] * d[2]) / len
    }

    fn unit_camera() -> CameraView {
        build_camera(
            [0.0, 0.0, 1.0],
            [0.0; 3],
            [0.0, 1.0, 0.0],
            FRAC_PI_2,
            100,
            100,
            0.1,
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn origin_projects_to_center_with_unit_depth() {
        let cam = unit_camera();
        let clip = cam.clip([0.0, 0.0, 0.0]);
        assert!(clip[0].abs() < 1e-12 && clip[1].abs() < 1e-12);
        assert!((clip[3] - 1.0).abs() < 1e-12);
        let frag = project_to_pixel([0.0; 3], &cam).unwrap();
        assert_eq!(frag.pixel, 50 + 50 * 100);
        assert_eq!(frag.depth, 1.0);
    }

    #[test]
    fn eye_has_zero_depth_and_is_culled() {
        let cam = unit_camera();
        assert!(cam.clip([0.0, 0.0, 1.0])[3].abs() < 1e-12);
        assert_eq!(project_to_pixel([0.0, 0.0, 1.0], &cam), None);
    }

    #[test]
    fn optical_axis_depth_matches_reference() {
        let eye = [1.0, 2.0, 3.0];
        let target = [-2.0, 0.5, -1.0];
        let cam = build_camera(eye, target, [0.0, 0.0, 1.0], 1.0, 64, 48, 0.01, 100.0).unwrap();
        let d = sub(target, eye);
        let len = norm(d);
        for dist in [0.5, 1.0, 7.25, 42.0] {
            let p = [
                eye[0] + d[0] / len * dist,
                eye[1] + d[1] / len * dist,
                eye[2] + d[2] / len * dist,
            ];
            let w = cam.clip([p[0] as f32, p[1] as f32, p[2] as f32])[3];
            let reference = reference_clip_w(eye, target, [p[0] as f32 as f64, p[1] as f32 as f64, p[2] as f32 as f64]);
            assert!((w - reference).abs() < 1e-9, "{w} vs {reference}");
            assert!((w - dist).abs() < 1e-5);
        }
        // Off-axis points share the depth of their projection onto the axis.
        let off = [0.3f32, -0.2, 0.9];
        let off64 = [off[0] as f64, off[1] as f64, off[2] as f64];
        assert!((cam.clip(off)[3] - reference_clip_w(eye, target, off64)).abs() < 1e-9);
    }

    #[test]
    fn behind_camera_is_culled() {
        let mut wvp = [[0.0; 4]; 4];
        wvp[0][0] = 1.0;
        wvp[1][1] = 1.0;
        wvp[3][3] = -2.0;
        let cam = CameraView::new(wvp, 10, 10).unwrap();
        assert_eq!(project_to_pixel([0.0, 0.0, 0.0], &cam), None);
    }

    #[test]
    fn half_open_ndc_bounds() {
        // Identity wvp: ndc == (x, y), w == 1.
        let mut wvp = [[0.0; 4]; 4];
        for (i, row) in wvp.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let cam = CameraView::new(wvp, 100, 100).unwrap();
        assert_eq!(project_to_pixel([1.0, 0.0, 0.0], &cam), None);
        assert_eq!(project_to_pixel([0.0, 1.0, 0.0], &cam), None);
        assert_eq!(project_to_pixel([-1.0, -1.0, 0.0], &cam).unwrap().pixel, 0);
        let below_one = f32::from_bits(1.0f32.to_bits() - 1);
        let f = project_to_pixel([below_one, below_one, 0.0], &cam).unwrap();
        assert_eq!(f.pixel, 99 + 99 * 100);
        assert_eq!(project_to_pixel([0.0, 0.0, 0.0], &cam).unwrap().pixel, 5050);
        assert_eq!(project_to_pixel([0.0, -1.0, 0.0], &cam).unwrap().pixel, 50);
    }

    #[test]
    fn rejects_degenerate_parameters() {
        let ok = |eye, target, up, fovy, w, h, near, far| {
            build_camera(eye, target, up, fovy, w, h, near, far).is_ok()
        };
        let (e, t, up) = ([0.0, 0.0, 1.0], [0.0; 3], [0.0, 1.0, 0.0]);
        assert!(ok(e, t, up, 1.0, 10, 10, 0.1, 10.0));
        assert!(!ok(e, t, [0.0, 0.0, 1.0], 1.0, 10, 10, 0.1, 10.0));
        assert!(!ok(e, e, up, 1.0, 10, 10, 0.1, 10.0));
        assert!(!ok(e, t, up, 0.0, 10, 10, 0.1, 10.0));
        assert!(!ok(e, t, up, std::f64::consts::PI, 10, 10, 0.1, 10.0));
        assert!(!ok(e, t, up, 1.0, 0, 10, 0.1, 10.0));
        assert!(!ok(e, t, up, 1.0, 10, 10, 0.0, 10.0));
        assert!(!ok(e, t, up, 1.0, 10, 10, 1.0, 0.5));
        assert!(CameraView::new([[0.0; 4]; 4], 65536, 32769).is_err());
        assert!(CameraView::new([[0.0; 4]; 4], 65536, 32768).is_ok());
    }
}
