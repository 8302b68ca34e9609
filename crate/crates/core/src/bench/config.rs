use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, Rgb};
use crate::error::{Error, Result};
use crate::hqs::DEFAULT_EPSILON_FACTOR;
use crate::io::{self, SceneSpec};
use crate::ordering::{OrderingKind, OrderingSpec};

use super::frame::MethodId;
use super::viewpoint::ViewpointSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpec {
    File(PathBuf),
    Scene(SceneSpec),
}

impl InputSpec {
    /// A path, or a scene string `kind:n[:seed[:extent]]` when prefixed
    /// with `scene:`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.strip_prefix("scene:") {
            Some(rest) => Ok(InputSpec::Scene(rest.parse()?)),
            None => Ok(InputSpec::File(PathBuf::from(s))),
        }
    }

    pub fn load(&self) -> Result<PointCloud> {
        match self {
            InputSpec::File(p) => io::read_cloud(p),
            InputSpec::Scene(s) => Ok(io::generate_scene(s)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InputSpec::File(p) => p.display().to_string(),
            InputSpec::Scene(s) => format!("scene:{s}"),
        }
    }
}

fn default_frames() -> usize {
    20
}

fn default_warmup() -> usize {
    3
}

fn default_epsilon() -> f32 {
    DEFAULT_EPSILON_FACTOR
}

fn default_size() -> u32 {
    512
}

fn default_orderings() -> Vec<OrderingSpec> {
    vec![OrderingSpec::new(OrderingKind::Original, 0)]
}

fn default_viewpoints() -> Vec<ViewpointSpec> {
    vec![ViewpointSpec::from("overview")]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub input: InputSpec,
    pub methods: Vec<MethodId>,
    #[serde(default = "default_orderings")]
    pub orderings: Vec<OrderingSpec>,
    #[serde(default = "default_viewpoints")]
    pub viewpoints: Vec<ViewpointSpec>,
    #[serde(default = "default_size")]
    pub width: u32,
    #[serde(default = "default_size")]
    pub height: u32,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Falls back to `POINTRASTER_WORKERS`, then to the hardware thread count.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f32,
    #[serde(default)]
    pub background: Rgb,
    /// When set, each measurement renders frames until this many
    /// milliseconds have elapsed instead of a fixed count.
    #[serde(default)]
    pub duration_ms: Option<u64>,
    #[serde(default)]
    pub csv_out: Option<PathBuf>,
}

impl BenchConfig {
    pub fn new(input: InputSpec, methods: Vec<MethodId>) -> Self {
        BenchConfig {
            input,
            methods,
            orderings: default_orderings(),
            viewpoints: default_viewpoints(),
            width: default_size(),
            height: default_size(),
            frames: default_frames(),
            warmup: default_warmup(),
            workers: None,
            epsilon: default_epsilon(),
            background: Rgb::BLACK,
            duration_ms: None,
            csv_out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rejects configurations that could not run, before any work is done.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.frames == 0 {
            return fail("frames must be at least 1".into());
        }
        if self.width == 0 || self.height == 0 {
            return fail(format!("image size {}x{} is empty", self.width, self.height));
        }
        if (self.width as u64) * (self.height as u64) > 1 << 31 {
            return fail(format!("image size {}x{} exceeds 2^31 pixels", self.width, self.height));
        }
        if self.methods.is_empty() || self.orderings.is_empty() || self.viewpoints.is_empty() {
            return fail("methods, orderings and viewpoints must be non-empty".into());
        }
        if self.orderings.iter().any(|o| o.batch_size == 0) {
            return fail("ordering batch size must be at least 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        if !(self.epsilon >= 1.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon {} must be >= 1", self.epsilon));
        }
        for v in &self.viewpoints {
            v.validate()?;
        }
        if let InputSpec::File(p) = &self.input {
            if !p.is_file() {
                return fail(format!("input {} does not exist", p.display()));
            }
        }
        Ok(())
    }
}
