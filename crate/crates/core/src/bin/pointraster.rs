use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pointraster::bench::{self, BenchConfig, InputSpec, MethodId, RenderRequest, ViewpointSpec};
use pointraster::exec::{Executor, WORKERS_ENV};
use pointraster::hqs::DEFAULT_EPSILON_FACTOR;
use pointraster::ordering::{OrderingKind, OrderingSpec, DEFAULT_BATCH_SIZE};
use pointraster::raster::DEFAULT_HOT_THRESHOLD;
use pointraster::Rgb;

#[derive(Parser)]
#[command(name = "pointraster", version, about = "Software point-cloud rasterizer and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one frame to a PPM image.
    Render(RenderArgs),
    /// Reorder a cloud and write it in the raw binary format.
    Order(OrderArgs),
    /// Per-pixel point counts and a heatmap for one view.
    Stats(StatsArgs),
    /// Run the method x ordering x viewpoint benchmark matrix.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// Cloud file (.ply, .bin, .pcrb) or `scene:kind:n[:seed[:extent]]`.
    input: Option<String>,
    /// Image size as WxH [default: 512x512].
    #[arg(long, value_parser = parse_size)]
    size: Option<(u32, u32)>,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "atomic_min")]
    method: String,
    #[arg(long, default_value = "original")]
    ordering: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "overview")]
    viewpoint: String,
    #[arg(long, default_value_t = DEFAULT_EPSILON_FACTOR)]
    epsilon: f32,
    /// Background color as RRGGBB hex.
    #[arg(long, default_value = "000000", value_parser = parse_rgb)]
    background: Rgb,
    #[arg(long)]
    out: PathBuf,
    /// Also write a grayscale depth image.
    #[arg(long)]
    depth_out: Option<PathBuf>,
}

#[derive(Args)]
struct OrderArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    ordering: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "overview")]
    viewpoint: String,
    #[arg(long, default_value_t = DEFAULT_HOT_THRESHOLD)]
    threshold: u32,
    /// Heatmap PPM output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// JSON config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Comma-separated ordering names.
    #[arg(long, value_delimiter = ',')]
    ordering: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated viewpoint presets.
    #[arg(long, value_delimiter = ',')]
    viewpoint: Vec<String>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Time each measurement over a wall-clock window instead of a frame count.
    #[arg(long)]
    duration_ms: Option<u64>,
    #[arg(long)]
    epsilon: Option<f32>,
    /// CSV output path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("{s:?} is not WxH"))?;
    let w: u32 = w.parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err(format!("{s:?} has a zero dimension"));
    }
    Ok((w, h))
}

fn parse_rgb(s: &str) -> Result<Rgb, String> {
    let s = s.trim_start_matches('#');
    if s.len() != 6 {
        return Err(format!("{s:?} is not RRGGBB"));
    }
    u32::from_str_radix(s, 16)
        .map(Rgb::from_u24)
        .map_err(|_| format!("{s:?} is not RRGGBB"))
}

impl Common {
    fn input(&self) -> Result<InputSpec> {
        let Some(s) = &self.input else {
            bail!("an input cloud or scene is required");
        };
        Ok(InputSpec::parse(s)?)
    }

    fn size(&self) -> (u32, u32) {
        self.size.unwrap_or((512, 512))
    }

    fn executor(&self) -> Result<Executor> {
        Ok(match self.workers {
            Some(n) => Executor::new(n)?,
            None => Executor::from_env()?,
        })
    }
}

fn ordering_spec(name: &str, seed: u64, batch_size: usize) -> Result<OrderingSpec> {
    Ok(OrderingSpec {
        kind: name.parse::<OrderingKind>()?,
        seed,
        batch_size,
    })
}

fn run_render(args: RenderArgs) -> Result<()> {
    let (width, height) = args.common.size();
    let req = RenderRequest {
        input: args.common.input()?,
        method: args.method.parse::<MethodId>()?,
        ordering: ordering_spec(&args.ordering, args.seed, DEFAULT_BATCH_SIZE)?,
        viewpoint: ViewpointSpec::from(args.viewpoint.as_str()),
        width,
        height,
        epsilon: args.epsilon,
        background: args.background,
        out: args.out,
        depth_out: args.depth_out,
    };
    let exec = args.common.executor()?;
    let c = bench::cmd_render(&req, &exec)?;
    eprintln!(
        "{}: {} candidates, {} min, {} add, {} exchange -> {}",
        req.method,
        c.candidate_points,
        c.min_calls,
        c.add_calls,
        c.exchange_calls,
        req.out.display()
    );
    Ok(())
}

fn run_order(args: OrderArgs) -> Result<()> {
    let spec = ordering_spec(&args.ordering, args.seed, args.batch_size)?;
    let outcome = bench::cmd_order(&args.common.input()?, &spec, &args.out)?;
    eprintln!(
        "{} points reordered ({}) in {:.3} ms -> {}",
        outcome.points,
        spec.kind,
        outcome.elapsed.as_secs_f64() * 1e3,
        args.out.display()
    );
    Ok(())
}

fn run_stats(args: StatsArgs) -> Result<()> {
    let (width, height) = args.common.size();
    let exec = args.common.executor()?;
    let outcome = bench::cmd_stats(
        &args.common.input()?,
        &ViewpointSpec::from(args.viewpoint.as_str()),
        width,
        height,
        args.threshold,
        args.out.as_deref(),
        &exec,
    )?;
    print!("{}", outcome.report());
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => BenchConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => BenchConfig::new(args.common.input()?, MethodId::all()),
    };
    if args.config.is_some() && args.common.input.is_some() {
        config.input = args.common.input()?;
    }
    if !args.method.is_empty() {
        config.methods = args.method.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
    }
    let seed = args.seed.unwrap_or(0);
    if !args.ordering.is_empty() {
        config.orderings = args
            .ordering
            .iter()
            .map(|o| ordering_spec(o, seed, DEFAULT_BATCH_SIZE))
            .collect::<Result<_>>()?;
    } else if let Some(seed) = args.seed {
        for o in &mut config.orderings {
            o.seed = seed;
        }
    }
    if !args.viewpoint.is_empty() {
        config.viewpoints = args.viewpoint.iter().map(|v| ViewpointSpec::from(v.as_str())).collect();
    }
    if args.config.is_none() || args.common.size.is_some() {
        (config.width, config.height) = args.common.size();
    }
    if let Some(w) = args.common.workers {
        config.workers = Some(w);
    }
    if let Some(f) = args.frames {
        config.frames = f;
    }
    if let Some(w) = args.warmup {
        config.warmup = w;
    }
    if let Some(d) = args.duration_ms {
        config.duration_ms = Some(d);
    }
    if let Some(e) = args.epsilon {
        config.epsilon = e;
    }
    if let Some(out) = args.out {
        config.csv_out = Some(out);
    }

    let report = bench::run_benchmark(&config)?;
    for t in &report.orderings {
        eprintln!("ordering {}: {:.3} ms", t.ordering.kind, t.elapsed.as_secs_f64() * 1e3);
    }
    eprintln!("{} points, {} workers", report.points, report.workers);
    if config.csv_out.is_none() {
        print!("{}", report.to_csv());
    }
    if !report.all_correct() {
        eprintln!("warning: some frames did not match their oracle; their timings are withheld");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(a) => run_render(a),
        Command::Order(a) => run_order(a),
        Command::Stats(a) => run_stats(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
