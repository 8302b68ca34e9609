//! Closest-point render methods.
//!
//! Every method writes packed depth|color values into a
//! [`PackedFramebuffer64`]. All of them except `just_set` leave the buffer
//! bit-identical to a sequential per-pixel minimum over all visible points,
//! whatever the worker count or point order.

mod histogram;
pub mod lanes;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, Ordering};

use serde::{Deserialize, Serialize};

use crate::camera::{project_to_pixel, CameraView};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::packed::{pack, AtomicOpCounters, PackedFramebuffer64, CLEAR_VALUE};

pub use histogram::{fragment_histogram, FragmentHistogram, HistogramSummary, DEFAULT_HOT_THRESHOLD};
use lanes::{atomic_min, early_z_min, Lane, LaneGroup, LANES};

/// Points per scheduled task; a whole number of lane groups.
pub(crate) const CHUNK_POINTS: usize = 64 * LANES;

const SPINS_BEFORE_YIELD: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMethod {
    /// Non-atomic store; last writer wins. Benchmark floor only.
    JustSet,
    /// Per-pixel spin lock around a compare-and-store.
    BusyLoop,
    AtomicMin,
    EarlyZ,
    Reduce,
    ReduceEarlyZ,
    Dedup,
}

impl RenderMethod {
    pub const ALL: [RenderMethod; 7] = [
        RenderMethod::JustSet,
        RenderMethod::BusyLoop,
        RenderMethod::AtomicMin,
        RenderMethod::EarlyZ,
        RenderMethod::Reduce,
        RenderMethod::ReduceEarlyZ,
        RenderMethod::Dedup,
    ];

    /// Methods whose output is schedule independent.
    pub const DETERMINISTIC: [RenderMethod; 6] = [
        RenderMethod::BusyLoop,
        RenderMethod::AtomicMin,
        RenderMethod::EarlyZ,
        RenderMethod::Reduce,
        RenderMethod::ReduceEarlyZ,
        RenderMethod::Dedup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RenderMethod::JustSet => "just_set",
            RenderMethod::BusyLoop => "busy_loop",
            RenderMethod::AtomicMin => "atomic_min",
            RenderMethod::EarlyZ => "early_z",
            RenderMethod::Reduce => "reduce",
            RenderMethod::ReduceEarlyZ => "reduce_early_z",
            RenderMethod::Dedup => "dedup",
        }
    }

    pub fn is_deterministic(self) -> bool {
        self != RenderMethod::JustSet
    }
}

impl fmt::Display for RenderMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RenderMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RenderMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown render method {s:?}")))
    }
}

fn check_size(view: &CameraView, width: u32, height: u32) -> Result<()> {
    if view.width() != width || view.height() != height {
        return Err(Error::invalid_argument(format!(
            "buffer is {width}x{height} but the view is {}x{}",
            view.width(),
            view.height()
        )));
    }
    Ok(())
}

/// Runs one render pass. The framebuffer is expected to be cleared; the
/// pass only ever lowers pixel values (except `just_set`).
pub fn render(
    method: RenderMethod,
    cloud: &PointCloud,
    view: &CameraView,
    fb: &PackedFramebuffer64,
    exec: &Executor,
) -> Result<AtomicOpCounters> {
    check_size(view, fb.width(), fb.height())?;
    let counters = match method {
        RenderMethod::JustSet => per_point(cloud, view, exec, |lane, _| {
            fb.word(lane.pixel).store(lane.packed, Ordering::Relaxed);
        }),
        RenderMethod::AtomicMin => per_point(cloud, view, exec, |lane, c| atomic_min(fb, lane, c)),
        RenderMethod::EarlyZ => per_point(cloud, view, exec, |lane, c| early_z_min(fb, lane, c)),
        RenderMethod::BusyLoop => {
            let locks: Vec<AtomicU32> = (0..fb.len()).map(|_| AtomicU32::new(0)).collect();
            per_point(cloud, view, exec, |lane, c| busy_loop_write(fb, &locks, lane, c))
        }
        RenderMethod::Reduce => per_group(cloud, view, exec, |g, c| {
            g.reduce_writers(|lane| atomic_min(fb, lane, c));
        }),
        RenderMethod::ReduceEarlyZ => per_group(cloud, view, exec, |g, c| {
            g.reduce_writers(|lane| early_z_min(fb, lane, c));
        }),
        RenderMethod::Dedup => per_group(cloud, view, exec, |g, c| {
            g.dedup_writers(|lane| early_z_min(fb, lane, c));
        }),
    };
    Ok(counters)
}

/// Each point is handled independently, as one shader invocation.
fn per_point<F>(cloud: &PointCloud, view: &CameraView, exec: &Executor, write: F) -> AtomicOpCounters
where
    F: Fn(Lane, &mut AtomicOpCounters) + Sync + Send,
{
    exec.fold_chunks(
        cloud.len(),
        CHUNK_POINTS,
        AtomicOpCounters::default,
        |mut c, range| {
            point_chunk(cloud, view, range, &write, &mut c);
            c
        },
        |a, b| a + b,
    )
}

// The chunk loops are kept out of line so they are optimized on their own,
// independent of how the executor instantiates its closures.
#[inline(never)]
fn point_chunk<F>(cloud: &PointCloud, view: &CameraView, range: Range<usize>, write: &F, c: &mut AtomicOpCounters)
where
    F: Fn(Lane, &mut AtomicOpCounters),
{
    let positions = &cloud.positions()[range.clone()];
    let colors = &cloud.colors()[range];
    for (p, rgb) in positions.iter().zip(colors) {
        if let Some(f) = project_to_pixel(*p, view) {
            c.candidate_points += 1;
            let lane = Lane {
                pixel: f.pixel,
                packed: pack(f.depth, rgb.to_u24()),
            };
            write(lane, c);
        }
    }
}

/// Points are gathered into 32-lane groups; each group is processed by one
/// worker as a unit.
fn per_group<F>(cloud: &PointCloud, view: &CameraView, exec: &Executor, process: F) -> AtomicOpCounters
where
    F: Fn(&LaneGroup, &mut AtomicOpCounters) + Sync + Send,
{
    exec.fold_chunks(
        cloud.len(),
        CHUNK_POINTS,
        AtomicOpCounters::default,
        |mut c, range| {
            group_chunk(cloud, view, range, &process, &mut c);
            c
        },
        |a, b| a + b,
    )
}

#[inline(never)]
fn group_chunk<F>(cloud: &PointCloud, view: &CameraView, range: Range<usize>, process: &F, c: &mut AtomicOpCounters)
where
    F: Fn(&LaneGroup, &mut AtomicOpCounters),
{
    let mut g = LaneGroup::blank(0);
    for base in range.step_by(LANES) {
        g.refill(cloud, view, base);
        c.candidate_points += g.active_count() as u64;
        process(&g, c);
    }
}

/// Early depth test, then a spin lock on the pixel's lock word around a
/// compare-and-store. Packed values are compared in full so that depth ties
/// resolve the same way as the atomic-min methods.
fn busy_loop_write(fb: &PackedFramebuffer64, locks: &[AtomicU32], lane: Lane, c: &mut AtomicOpCounters) {
    let word = fb.word(lane.pixel);
    if lane.packed >= word.load(Ordering::Relaxed) {
        return;
    }
    let lock = &locks[lane.pixel as usize];
    let mut spins = 0;
    while lock
        .compare_exchange_weak(0, 1, Ordering::Acquire, Ordering::Relaxed)
        .is_err()
    {
        spins += 1;
        if spins >= SPINS_BEFORE_YIELD {
            spins = 0;
            std::thread::yield_now();
        } else {
            std::hint::spin_loop();
        }
    }
    c.exchange_calls += 1;
    if lane.packed < word.load(Ordering::Relaxed) {
        word.store(lane.packed, Ordering::Relaxed);
    }
    lock.store(0, Ordering::Release);
}

/// Sequential per-pixel minimum over all visible points; the expected
/// framebuffer contents for every deterministic method.
pub fn reference_framebuffer(cloud: &PointCloud, view: &CameraView) -> Vec<u64> {
    let mut out = vec![CLEAR_VALUE; view.pixel_count()];
    for (p, c) in cloud.positions().iter().zip(cloud.colors()) {
        if let Some(f) = project_to_pixel(*p, view) {
            let v = &mut out[f.pixel as usize];
            *v = (*v).min(pack(f.depth, c.to_u24()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Rgb;
    use crate::packed::{encode_point64, resolve_basic};

    /// Identity projection: point (x, y) lands on ndc (x, y) with w = z.
    fn ortho_view(size: u32) -> CameraView {
        let wvp = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        CameraView::new(wvp, size, size).unwrap()
    }

    fn run(method: RenderMethod, cloud: &PointCloud, view: &CameraView) -> (PackedFramebuffer64, AtomicOpCounters) {
        let fb = PackedFramebuffer64::new(view.width(), view.height());
        let c = render(method, cloud, view, &fb, &Executor::sequential()).unwrap();
        (fb, c)
    }

    #[test]
    fn empty_cloud_leaves_buffer_clear() {
        let view = ortho_view(4);
        for m in RenderMethod::ALL {
            let (fb, c) = run(m, &PointCloud::empty(), &view);
            assert_eq!(c, AtomicOpCounters::default());
            assert!(fb.snapshot().iter().all(|&v| v == CLEAR_VALUE));
        }
    }

    #[test]
    fn single_point_is_written() {
        let view = ortho_view(4);
        let cloud = PointCloud::new(vec![[0.0, 0.0, 1.5]], vec![Rgb::new(1, 2, 3)]).unwrap();
        let expected = encode_point64(1.5, 0x010203).unwrap();
        for m in RenderMethod::ALL {
            let (fb, c) = run(m, &cloud, &view);
            assert_eq!(fb.get(2 + 2 * 4), expected, "{m}");
            assert_eq!(c.candidate_points, 1);
        }
        let (_, c) = run(RenderMethod::AtomicMin, &cloud, &view);
        assert_eq!(c.min_calls, 1);
        let (_, c) = run(RenderMethod::BusyLoop, &cloud, &view);
        assert_eq!(c.exchange_calls, 1);
    }

    #[test]
    fn closer_point_wins_and_ties_pick_smaller_color() {
        let view = ortho_view(2);
        let cloud = PointCloud::new(
            vec![[0.0, 0.0, 2.0], [0.0, 0.0, 1.0]],
            vec![Rgb::new(0, 0, 255), Rgb::new(255, 0, 0)],
        )
        .unwrap();
        let (fb, c) = run(RenderMethod::AtomicMin, &cloud, &view);
        assert_eq!(c.min_calls, 2);
        assert_eq!(resolve_basic(&fb, Rgb::BLACK).get_by_id(3), Rgb::new(255, 0, 0));

        let tie = PointCloud::new(
            vec![[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]],
            vec![Rgb::from_u24(2), Rgb::from_u24(1)],
        )
        .unwrap();
        for m in RenderMethod::DETERMINISTIC {
            let (fb, _) = run(m, &tie, &view);
            assert_eq!(fb.get(3) & 0xFF_FFFF, 1, "{m}");
        }
    }

    #[test]
    fn early_z_skips_occluded_points() {
        let view = ortho_view(2);
        let cloud = PointCloud::new(
            vec![[0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 0.0, 3.0]],
            vec![Rgb::BLACK; 3],
        )
        .unwrap();
        let (_, c) = run(RenderMethod::EarlyZ, &cloud, &view);
        assert_eq!(c.min_calls, 1);
        let (_, c) = run(RenderMethod::ReduceEarlyZ, &cloud, &view);
        assert_eq!(c.min_calls, 1);
    }

    #[test]
    fn just_set_single_worker_is_last_writer() {
        let view = ortho_view(2);
        let cloud = PointCloud::new(
            vec![[0.0, 0.0, 1.0], [0.0, 0.0, 9.0]],
            vec![Rgb::from_u24(1), Rgb::from_u24(2)],
        )
        .unwrap();
        let (fb, _) = run(RenderMethod::JustSet, &cloud, &view);
        assert_eq!(fb.get(3), encode_point64(9.0, 2).unwrap());
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let fb = PackedFramebuffer64::new(3, 3);
        let err = render(RenderMethod::AtomicMin, &PointCloud::empty(), &ortho_view(4), &fb, &Executor::sequential());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn method_names_roundtrip() {
        for m in RenderMethod::ALL {
            assert_eq!(m.name().parse::<RenderMethod>().unwrap(), m);
        }
    }
}
