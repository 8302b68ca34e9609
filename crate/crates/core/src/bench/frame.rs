use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::camera::CameraView;
use crate::cloud::{PointCloud, Rgb};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::hqs::{self, HqsBuffers, HqsParams, HqsVariant};
use crate::packed::{resolve_basic, resolve_depth, AtomicOpCounters, PackedFramebuffer64, RgbImage};
use crate::raster::{self, RenderMethod};

/// Any renderer the harness can run: a closest-point method or an HQS
/// variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodId {
    Raster(RenderMethod),
    Hqs(HqsVariant),
}

impl MethodId {
    pub fn all() -> Vec<MethodId> {
        RenderMethod::ALL
            .into_iter()
            .map(MethodId::Raster)
            .chain(HqsVariant::ALL.into_iter().map(MethodId::Hqs))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Raster(m) => m.name(),
            MethodId::Hqs(v) => v.name(),
        }
    }

    /// Whether a frame can be checked against an oracle.
    pub fn is_checkable(self) -> bool {
        !matches!(self, MethodId::Raster(RenderMethod::JustSet))
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(m) = s.parse::<RenderMethod>() {
            return Ok(MethodId::Raster(m));
        }
        s.parse::<HqsVariant>()
            .map(MethodId::Hqs)
            .map_err(|_| Error::Config(format!("unknown method {s:?}")))
    }
}

enum Buffers {
    Packed(PackedFramebuffer64),
    Hqs(HqsBuffers),
}

/// Reusable per-method buffers; each [`render`](Self::render) call is one
/// full frame: clear, render pass(es), resolve.
pub struct FrameRenderer {
    method: MethodId,
    buffers: Buffers,
    params: HqsParams,
    background: Rgb,
}

impl FrameRenderer {
    pub fn new(method: MethodId, width: u32, height: u32, params: HqsParams, background: Rgb) -> Self {
        let buffers = match method {
            MethodId::Raster(_) => Buffers::Packed(PackedFramebuffer64::new(width, height)),
            MethodId::Hqs(v) => Buffers::Hqs(HqsBuffers::new(v, width, height)),
        };
        FrameRenderer {
            method,
            buffers,
            params,
            background,
        }
    }

    pub fn method(&self) -> MethodId {
        self.method
    }

    pub fn render(&mut self, cloud: &PointCloud, view: &CameraView, exec: &Executor) -> Result<(RgbImage, AtomicOpCounters)> {
        match (&mut self.buffers, self.method) {
            (Buffers::Packed(fb), MethodId::Raster(m)) => {
                fb.clear();
                let c = raster::render(m, cloud, view, fb, exec)?;
                Ok((resolve_basic(fb, self.background), c))
            }
            (Buffers::Hqs(b), MethodId::Hqs(_)) => {
                b.clear();
                let c = hqs::render_hqs(cloud, view, b, &self.params, exec)?;
                Ok((b.acc.resolve(self.background), c))
            }
            _ => unreachable!("buffers match the method"),
        }
    }

    /// Depth visualization of the most recent frame.
    pub fn depth_image(&self) -> RgbImage {
        match &self.buffers {
            Buffers::Packed(fb) => resolve_depth(fb),
            Buffers::Hqs(b) => b.depth.to_image(),
        }
    }

    /// Compares the most recent frame with a sequential oracle. `None` for
    /// methods whose output is schedule dependent.
    pub fn matches_oracle(&self, cloud: &PointCloud, view: &CameraView) -> Option<bool> {
        match &self.buffers {
            Buffers::Packed(fb) => {
                if !self.method.is_checkable() {
                    return None;
                }
                Some(fb.snapshot() == raster::reference_framebuffer(cloud, view))
            }
            Buffers::Hqs(b) => {
                let expected = hqs::reference_sums(cloud, view, &self.params);
                Some(b.acc.sums() == expected)
            }
        }
    }
}
