use serde::{Deserialize, Serialize};

use crate::camera::{build_camera, CameraView};
use crate::cloud::Aabb;
use crate::error::{Error, Result};

/// Preset names, framed relative to the cloud's bounding box.
pub const VIEWPOINT_PRESETS: [&str; 4] = ["overview", "closeup", "far", "top"];

/// Explicit camera parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub name: String,
    pub eye: [f64; 3],
    pub target: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    #[serde(default = "default_fovy_deg")]
    pub fovy_deg: f64,
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_fovy_deg() -> f64 {
    60.0
}

/// Either a preset name or an explicit camera.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ViewpointSpec {
    Preset(String),
    Explicit(Viewpoint),
}

impl ViewpointSpec {
    pub fn name(&self) -> &str {
        match self {
            ViewpointSpec::Preset(n) => n,
            ViewpointSpec::Explicit(v) => &v.name,
        }
    }

    /// Checks preset names without needing a cloud.
    pub fn validate(&self) -> Result<()> {
        match self {
            ViewpointSpec::Preset(n) if !VIEWPOINT_PRESETS.contains(&n.as_str()) => Err(Error::Config(format!(
                "unknown viewpoint {n:?} (presets: {})",
                VIEWPOINT_PRESETS.join(", ")
            ))),
            ViewpointSpec::Explicit(v) if v.name.contains(',') => {
                Err(Error::Config(format!("viewpoint name {:?} contains a comma", v.name)))
            }
            _ => Ok(()),
        }
    }

    pub fn resolve(&self, aabb: &Aabb) -> Result<Viewpoint> {
        self.validate()?;
        let name = match self {
            ViewpointSpec::Explicit(v) => return Ok(v.clone()),
            ViewpointSpec::Preset(n) => n.as_str(),
        };
        let c = aabb.center();
        let diag = aabb.diagonal().max(1e-3);
        let oblique = {
            let d: [f64; 3] = [-0.55, -0.7, 0.45];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            d.map(|v| v / len)
        };
        let at = |dir: [f64; 3], dist: f64| [c[0] + dir[0] * dist, c[1] + dir[1] * dist, c[2] + dir[2] * dist];
        let (eye, up) = match name {
            "overview" => (at(oblique, 1.2 * diag), default_up()),
            "closeup" => (at(oblique, 0.35 * diag), default_up()),
            "far" => (at(oblique, 6.0 * diag), default_up()),
            "top" => (at([0.0, 0.0, 1.0], 1.2 * diag), [0.0, 1.0, 0.0]),
            _ => unreachable!("validated above"),
        };
        Ok(Viewpoint {
            name: name.to_string(),
            eye,
            target: c,
            up,
            fovy_deg: default_fovy_deg(),
        })
    }
}

impl From<&str> for ViewpointSpec {
    fn from(s: &str) -> Self {
        ViewpointSpec::Preset(s.to_string())
    }
}

impl Viewpoint {
    /// Camera with clip planes wide enough for any point near the target.
    pub fn camera(&self, width: u32, height: u32) -> Result<CameraView> {
        let d = [
            self.target[0] - self.eye[0],
            self.target[1] - self.eye[1],
            self.target[2] - self.eye[2],
        ];
        let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let near = (dist * 1e-3).max(1e-6);
        build_camera(
            self.eye,
            self.target,
            self.up,
            self.fovy_deg.to_radians(),
            width,
            height,
            near,
            (dist * 4.0).max(near * 2.0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_and_unknown_fails() {
        let aabb = Aabb { min: [0.0; 3], max: [10.0, 10.0, 1.0] };
        for p in VIEWPOINT_PRESETS {
            let v = ViewpointSpec::from(p).resolve(&aabb).unwrap();
            assert!(v.camera(64, 64).is_ok(), "{p}");
        }
        assert!(ViewpointSpec::from("nowhere").resolve(&aabb).is_err());
    }

    #[test]
    fn degenerate_box_still_has_camera() {
        let v = ViewpointSpec::from("overview").resolve(&Aabb::EMPTY).unwrap();
        assert!(v.camera(8, 8).is_ok());
    }

    #[test]
    fn json_forms() {
        let p: ViewpointSpec = serde_json::from_str("\"far\"").unwrap();
        assert_eq!(p, ViewpointSpec::from("far"));
        let e: ViewpointSpec = serde_json::from_str(r#"{"name":"x","eye":[0,0,5],"target":[0,0,0],"up":[0,1,0]}"#).unwrap();
        assert_eq!(e.name(), "x");
    }
}
