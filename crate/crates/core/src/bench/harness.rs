//! Method x ordering x viewpoint benchmark matrix.
//!
//! Each measurement times full frames (clear, render passes, resolve) with
//! a monotonic clock after a few warmup frames. Reordering is done once per
//! ordering and timed separately.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::camera::CameraView;
use crate::cloud::PointCloud;
use crate::error::Result;
use crate::exec::Executor;
use crate::hqs::HqsParams;
use crate::ordering::OrderingSpec;
use crate::packed::AtomicOpCounters;

use super::config::BenchConfig;
use super::frame::{FrameRenderer, MethodId};

pub const CSV_HEADER: &str =
    "method,ordering,viewpoint,mean_ms,median_ms,min_ms,points_per_sec,candidates,min_calls,add_calls,exchange_calls,correct";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameStats {
    pub frames: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub min_ms: f64,
}

impl FrameStats {
    pub fn from_durations(times: &[Duration]) -> Self {
        assert!(!times.is_empty(), "at least one frame is timed");
        let mut ms: Vec<f64> = times.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let median = if n % 2 == 1 { ms[n / 2] } else { 0.5 * (ms[n / 2 - 1] + ms[n / 2]) };
        FrameStats {
            frames: n,
            mean_ms: ms.iter().sum::<f64>() / n as f64,
            median_ms: median,
            min_ms: ms[0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub method: MethodId,
    pub ordering: String,
    pub viewpoint: String,
    /// Withheld when the correctness check failed.
    pub stats: Option<FrameStats>,
    pub counters: AtomicOpCounters,
    /// `None` for methods that cannot be checked (just_set).
    pub correct: Option<bool>,
}

impl BenchRecord {
    pub fn points_per_sec(&self) -> Option<f64> {
        self.stats
            .map(|s| self.counters.candidate_points as f64 / (s.mean_ms * 1e-3).max(f64::MIN_POSITIVE))
    }

    pub fn csv_row(&self) -> String {
        let c = &self.counters;
        let (mean, median, min, pps) = match (self.stats, self.points_per_sec()) {
            (Some(s), Some(pps)) => (
                format!("{:.4}", s.mean_ms),
                format!("{:.4}", s.median_ms),
                format!("{:.4}", s.min_ms),
                format!("{pps:.0}"),
            ),
            _ => Default::default(),
        };
        let correct = match self.correct {
            Some(true) => "true",
            Some(false) => "false",
            None => "n/a",
        };
        format!(
            "{},{},{},{mean},{median},{min},{pps},{},{},{},{},{correct}",
            self.method, self.ordering, self.viewpoint, c.candidate_points, c.min_calls, c.add_calls, c.exchange_calls
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderingTiming {
    pub ordering: OrderingSpec,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub orderings: Vec<OrderingTiming>,
    pub workers: usize,
    pub points: usize,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }

    pub fn all_correct(&self) -> bool {
        self.records.iter().all(|r| r.correct != Some(false))
    }
}

fn measure(
    renderer: &mut FrameRenderer,
    cloud: &PointCloud,
    view: &CameraView,
    exec: &Executor,
    config: &BenchConfig,
) -> Result<BenchRecord> {
    for _ in 0..config.warmup {
        renderer.render(cloud, view, exec)?;
    }
    let mut times = Vec::with_capacity(config.frames);
    let window = config.duration_ms.map(Duration::from_millis);
    let started = Instant::now();
    let mut counters;
    loop {
        let t0 = Instant::now();
        let (_, c) = renderer.render(cloud, view, exec)?;
        times.push(t0.elapsed());
        counters = c;
        let done = match window {
            Some(w) => started.elapsed() >= w,
            None => times.len() >= config.frames,
        };
        if done {
            break;
        }
    }
    let correct = renderer.matches_oracle(cloud, view);
    Ok(BenchRecord {
        method: renderer.method(),
        ordering: String::new(),
        viewpoint: String::new(),
        stats: (correct != Some(false)).then(|| FrameStats::from_durations(&times)),
        counters,
        correct,
    })
}

/// Runs every (method, ordering, viewpoint) combination. Records are ordered
/// by method, then ordering, then viewpoint, as configured.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let exec = match config.workers {
        Some(n) => Executor::new(n)?,
        None => Executor::from_env()?,
    };
    let params = HqsParams::new(config.epsilon)?;
    let cloud = config.input.load()?;

    let mut ordered = Vec::with_capacity(config.orderings.len());
    let mut timings = Vec::with_capacity(config.orderings.len());
    for spec in &config.orderings {
        let t0 = Instant::now();
        let c = spec.apply(&cloud)?;
        timings.push(OrderingTiming {
            ordering: *spec,
            elapsed: t0.elapsed(),
        });
        ordered.push((spec.kind.name(), c));
    }

    let mut views = Vec::with_capacity(config.viewpoints.len());
    for v in &config.viewpoints {
        let vp = v.resolve(&cloud.aabb())?;
        views.push((vp.name.clone(), vp.camera(config.width, config.height)?));
    }

    let mut records = Vec::new();
    for &method in &config.methods {
        let mut renderer = FrameRenderer::new(method, config.width, config.height, params, config.background);
        for (ordering, c) in &ordered {
            for (vp_name, view) in &views {
                let mut rec = measure(&mut renderer, c, view, &exec, config)?;
                rec.ordering = ordering.to_string();
                rec.viewpoint = vp_name.clone();
                records.push(rec);
            }
        }
    }

    let report = BenchReport {
        records,
        orderings: timings,
        workers: exec.workers(),
        points: cloud.len(),
    };
    if let Some(path) = &config.csv_out {
        std::fs::write(path, report.to_csv())?;
    }
    Ok(report)
}
