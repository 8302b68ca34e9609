//! Benchmark harness and the operations behind the command-line tool.

mod commands;
mod config;
mod frame;
mod harness;
mod viewpoint;

pub use commands::{cmd_order, cmd_render, cmd_stats, format_threshold, OrderOutcome, RenderRequest, StatsOutcome};
pub use config::{BenchConfig, InputSpec};
pub use frame::{FrameRenderer, MethodId};
pub use harness::{run_benchmark, BenchRecord, BenchReport, FrameStats, OrderingTiming, CSV_HEADER};
pub use viewpoint::{Viewpoint, ViewpointSpec, VIEWPOINT_PRESETS};
