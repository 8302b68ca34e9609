//! Software point-cloud rasterizer.
//!
//! Points are projected by a world-view-projection matrix and written into a
//! framebuffer of 64-bit words that pack linear depth above a 24-bit RGB
//! color, so that an atomic minimum resolves visibility and color in one
//! operation. Render passes walk the point range in 32-lane groups that
//! emulate GPU subgroups, which is what the reduction and deduplication
//! methods operate on.
//!
//! Module map:
//!
//! - [`cloud`], [`camera`], [`packed`]: domain types, projection and the
//!   packed depth|color encoding.
//! - [`ordering`]: Morton sort, shuffles and shuffled-Morton batching.
//! - [`raster`]: the closest-point methods plus the just-set and busy-loop
//!   baselines, and the per-pixel fragment histogram.
//! - [`hqs`]: two-pass blended rendering with three accumulation layouts.
//! - [`io`]: PLY and raw binary clouds, synthetic scenes, PPM output.
//! - [`bench`]: the benchmark matrix and CSV reports.
//! - [`exec`]: worker pool (rayon when the `parallel` feature is on).

// `!(x > y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod camera;
pub mod cloud;
pub mod error;
pub mod exec;
pub mod hqs;
pub mod io;
pub mod ordering;
pub mod packed;
pub mod raster;
pub mod rng;

pub use camera::{build_camera, project_to_pixel, CameraView, Fragment};
pub use cloud::{Aabb, PointCloud, Rgb};
pub use error::{Error, Result};
pub use exec::Executor;
pub use packed::{
    decode_point64, encode_point64, resolve_basic, resolve_depth, AtomicOpCounters,
    PackedFramebuffer64, RgbImage, CLEAR_VALUE,
};
pub use raster::{fragment_histogram, render, FragmentHistogram, RenderMethod};
