//! Single-shot operations used by the `render`, `order` and `stats`
//! subcommands.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::json;

use crate::cloud::Rgb;
use crate::error::Result;
use crate::exec::Executor;
use crate::hqs::HqsParams;
use crate::io::{self, write_ppm};
use crate::ordering::OrderingSpec;
use crate::packed::AtomicOpCounters;
use crate::raster::{fragment_histogram, HistogramSummary};

use super::config::InputSpec;
use super::frame::{FrameRenderer, MethodId};
use super::viewpoint::ViewpointSpec;

#[derive(Clone, Debug)]
pub struct RenderRequest {
    pub input: InputSpec,
    pub method: MethodId,
    pub ordering: OrderingSpec,
    pub viewpoint: ViewpointSpec,
    pub width: u32,
    pub height: u32,
    pub epsilon: f32,
    pub background: Rgb,
    pub out: PathBuf,
    pub depth_out: Option<PathBuf>,
}

/// Renders one frame to a PPM file (and optionally a depth PPM).
pub fn cmd_render(req: &RenderRequest, exec: &Executor) -> Result<AtomicOpCounters> {
    let params = HqsParams::new(req.epsilon)?;
    let cloud = req.ordering.apply(&req.input.load()?)?;
    let view = req.viewpoint.resolve(&cloud.aabb())?.camera(req.width, req.height)?;
    let mut renderer = FrameRenderer::new(req.method, req.width, req.height, params, req.background);
    let (image, counters) = renderer.render(&cloud, &view, exec)?;
    write_ppm(&image, &req.out)?;
    if let Some(path) = &req.depth_out {
        write_ppm(&renderer.depth_image(), path)?;
    }
    Ok(counters)
}

#[derive(Clone, Debug)]
pub struct OrderOutcome {
    pub points: usize,
    pub elapsed: Duration,
    pub metadata: serde_json::Value,
}

/// Reorders a cloud and writes it in the raw binary format with the ordering
/// recorded in the metadata trailer.
pub fn cmd_order(input: &InputSpec, ordering: &OrderingSpec, output: &Path) -> Result<OrderOutcome> {
    let cloud = input.load()?;
    let t0 = Instant::now();
    let reordered = ordering.apply(&cloud)?;
    let elapsed = t0.elapsed();
    let metadata = json!({
        "ordering": ordering.kind.name(),
        "seed": ordering.seed,
        "batch_size": ordering.batch_size,
        "source": input.describe(),
        "points": reordered.len(),
    });
    io::write_bin_with_metadata(output, &reordered, &metadata)?;
    Ok(OrderOutcome {
        points: reordered.len(),
        elapsed,
        metadata,
    })
}

#[derive(Clone, Debug)]
pub struct StatsOutcome {
    pub summary: HistogramSummary,
}

impl StatsOutcome {
    pub fn report(&self) -> String {
        let s = &self.summary;
        format!(
            "points in view: {}\nmax per pixel: {}\nmean per pixel: {:.3}\nmean per covered pixel: {:.3}\ncovered pixels: {}\npixels > {}: {}\n",
            s.total,
            s.max,
            s.mean,
            s.mean_covered,
            s.covered_pixels,
            format_threshold(s.threshold),
            s.pixels_over_threshold
        )
    }
}

/// `10000` -> `"10k"`; other values print as-is.
pub fn format_threshold(t: u32) -> String {
    if t >= 1000 && t.is_multiple_of(1000) {
        format!("{}k", t / 1000)
    } else {
        t.to_string()
    }
}

/// Per-pixel point counts for one view, plus an optional heatmap PPM.
pub fn cmd_stats(
    input: &InputSpec,
    viewpoint: &ViewpointSpec,
    width: u32,
    height: u32,
    threshold: u32,
    heatmap_out: Option<&Path>,
    exec: &Executor,
) -> Result<StatsOutcome> {
    let cloud = input.load()?;
    let view = viewpoint.resolve(&cloud.aabb())?.camera(width, height)?;
    let hist = fragment_histogram(&cloud, &view, exec);
    if let Some(path) = heatmap_out {
        write_ppm(&hist.heatmap(threshold), path)?;
    }
    Ok(StatsOutcome {
        summary: hist.summary(threshold),
    })
}
