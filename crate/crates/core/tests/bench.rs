mod common;

use pointraster::bench::{
    cmd_order, cmd_render, cmd_stats, run_benchmark, BenchConfig, InputSpec, MethodId, RenderRequest, ViewpointSpec,
    CSV_HEADER,
};
use pointraster::hqs::HqsVariant;
use pointraster::io::{read_bin_with_metadata, read_ppm, SceneKind, SceneSpec};
use pointraster::ordering::{morton_codes, OrderingKind, OrderingSpec, DEFAULT_BATCH_SIZE};
use pointraster::raster::DEFAULT_HOT_THRESHOLD;
use pointraster::{fragment_histogram, Executor, RenderMethod, Rgb};

fn scene(kind: SceneKind, n: usize, seed: u64) -> InputSpec {
    InputSpec::Scene(SceneSpec::new(kind, n, seed))
}

fn request(input: InputSpec, method: MethodId, out: &std::path::Path) -> RenderRequest {
    RenderRequest {
        input,
        method,
        ordering: OrderingSpec::new(OrderingKind::Original, 0),
        viewpoint: ViewpointSpec::from("overview"),
        width: 96,
        height: 64,
        epsilon: 1.01,
        background: Rgb::BLACK,
        out: out.to_path_buf(),
        depth_out: None,
    }
}

fn small_config(methods: Vec<MethodId>) -> BenchConfig {
    let mut config = BenchConfig::new(scene(SceneKind::UniformCube, 5_000, 1), methods);
    config.width = 64;
    config.height = 64;
    config.frames = 2;
    config.warmup = 1;
    config.workers = Some(2);
    config
}

#[test]
fn matrix_cardinality_and_csv_shape() {
    let mut config = small_config(vec![MethodId::Raster(RenderMethod::AtomicMin), MethodId::Raster(RenderMethod::Dedup)]);
    config.orderings = vec![OrderingSpec::new(OrderingKind::Original, 0), OrderingSpec::new(OrderingKind::Morton, 0)];
    let report = run_benchmark(&config).unwrap();
    assert_eq!(report.records.len(), 4);
    let order: Vec<(String, String)> = report.records.iter().map(|r| (r.method.to_string(), r.ordering.clone())).collect();
    assert_eq!(
        order,
        [("atomic_min", "original"), ("atomic_min", "morton"), ("dedup", "original"), ("dedup", "morton")]
            .map(|(a, b)| (a.to_string(), b.to_string()))
    );
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 12);
        assert_eq!(cols[11], "true");
        let mean: f64 = cols[3].parse().unwrap();
        let pps: f64 = cols[6].parse().unwrap();
        let candidates: f64 = cols[7].parse().unwrap();
        assert!((pps - candidates / (mean * 1e-3)).abs() <= 1.0 + pps * 1e-3);
    }
    assert!(report.all_correct());
    assert_eq!(report.orderings.len(), 2);
}

#[test]
fn candidates_column_equals_histogram_total() {
    let config = small_config(vec![MethodId::Raster(RenderMethod::AtomicMin)]);
    let report = run_benchmark(&config).unwrap();
    let cloud = config.input.load().unwrap();
    let view = ViewpointSpec::from("overview").resolve(&cloud.aabb()).unwrap().camera(64, 64).unwrap();
    let hist = fragment_histogram(&cloud, &view, &Executor::sequential());
    assert_eq!(report.records[0].counters.candidate_points, hist.total());
    assert_eq!(report.records[0].counters.min_calls, hist.total());
}

#[test]
fn every_method_reports_correct_or_untestable() {
    let config = small_config(MethodId::all());
    let report = run_benchmark(&config).unwrap();
    for r in &report.records {
        match r.method {
            MethodId::Raster(RenderMethod::JustSet) => {
                assert_eq!(r.correct, None);
                assert!(r.csv_row().ends_with(",n/a"));
            }
            MethodId::Hqs(HqsVariant::Hqs1x) => assert_eq!(r.correct, Some(true), "no pixel exceeds the limits here"),
            _ => assert_eq!(r.correct, Some(true), "{}", r.method),
        }
        assert!(r.stats.is_some());
    }
    let again = run_benchmark(&config).unwrap();
    let flags = |rep: &pointraster::bench::BenchReport| rep.records.iter().map(|r| (r.correct, r.counters.candidate_points)).collect::<Vec<_>>();
    assert_eq!(flags(&report), flags(&again));
}

#[test]
fn failing_oracle_withholds_timings() {
    // 2000 identical points on one pixel wrap the 10-bit counter.
    let mut config = small_config(vec![MethodId::Hqs(HqsVariant::Hqs1x), MethodId::Hqs(HqsVariant::Hqs1r)]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pile.bin");
    let mut positions = vec![[0.0, 0.0, 0.0]; 2000];
    positions.extend([[-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]]);
    let cloud = pointraster::PointCloud::new(positions, vec![Rgb::new(200, 200, 200); 2002]).unwrap();
    pointraster::io::write_bin(&path, &cloud).unwrap();
    config.input = InputSpec::File(path);
    config.viewpoints = vec![ViewpointSpec::from("top")];
    let report = run_benchmark(&config).unwrap();
    assert_eq!(report.records[0].correct, Some(false));
    assert!(report.records[0].stats.is_none());
    assert!(report.records[0].csv_row().contains(",,,,"));
    assert_eq!(report.records[1].correct, Some(true));
    assert!(!report.all_correct());
}

#[test]
fn invalid_configs_fail_before_running() {
    let mut c = small_config(MethodId::all());
    c.frames = 0;
    assert!(run_benchmark(&c).is_err());
    let mut c = small_config(MethodId::all());
    c.width = 0;
    assert!(run_benchmark(&c).is_err());
    let mut c = small_config(MethodId::all());
    c.input = InputSpec::File("/nonexistent/cloud.ply".into());
    assert!(run_benchmark(&c).is_err());
    let mut c = small_config(vec![]);
    c.frames = 1;
    assert!(run_benchmark(&c).is_err());
    assert!(BenchConfig::from_json(r#"{"input": {"scene": {"kind": "terrain", "n": 10}}, "methods": ["warp_magic"]}"#).is_err());
    let ok = BenchConfig::from_json(
        r#"{"input": {"scene": {"kind": "terrain", "n": 10}}, "methods": ["atomic_min", "hqs1r"], "orderings": [{"kind": "shuffled_morton", "seed": 3}]}"#,
    )
    .unwrap();
    assert_eq!(ok.frames, 20);
    assert_eq!(ok.warmup, 3);
    assert_eq!(ok.orderings[0].batch_size, DEFAULT_BATCH_SIZE);
}

#[test]
fn render_equivalences_are_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let exec = Executor::new(3).unwrap();
    let sphere = scene(SceneKind::SphereSurface, 40_000, 5);
    let path = |name: &str| dir.path().join(name);
    cmd_render(&request(sphere.clone(), MethodId::Raster(RenderMethod::AtomicMin), &path("a.ppm")), &exec).unwrap();
    cmd_render(&request(sphere.clone(), MethodId::Raster(RenderMethod::Dedup), &path("b.ppm")), &exec).unwrap();
    assert_eq!(std::fs::read(path("a.ppm")).unwrap(), std::fs::read(path("b.ppm")).unwrap());

    cmd_render(&request(sphere.clone(), MethodId::Hqs(HqsVariant::Hqs), &path("c.ppm")), &exec).unwrap();
    cmd_render(&request(sphere, MethodId::Hqs(HqsVariant::Hqs1r), &path("d.ppm")), &exec).unwrap();
    assert_eq!(std::fs::read(path("c.ppm")).unwrap(), std::fs::read(path("d.ppm")).unwrap());
    assert_ne!(std::fs::read(path("a.ppm")).unwrap(), std::fs::read(path("c.ppm")).unwrap());
}

#[test]
fn empty_scene_renders_background() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.ppm");
    let mut req = request(scene(SceneKind::UniformCube, 0, 0), MethodId::Raster(RenderMethod::Reduce), &out);
    req.background = Rgb::new(10, 20, 30);
    req.depth_out = Some(dir.path().join("d.ppm"));
    let c = cmd_render(&req, &Executor::sequential()).unwrap();
    assert_eq!(c.candidate_points, 0);
    let img = read_ppm(&out).unwrap();
    assert_eq!((img.width(), img.height()), (96, 64));
    assert!(img.as_bytes().chunks(3).all(|p| p == [10, 20, 30]));
    assert!(read_ppm(&dir.path().join("d.ppm")).is_ok());
}

#[test]
fn order_command_records_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let input = scene(SceneKind::UniformCube, 300, 4);
    let original = input.load().unwrap();

    let out = dir.path().join("orig.bin");
    cmd_order(&input, &OrderingSpec::new(OrderingKind::Original, 0), &out).unwrap();
    let (same, meta) = read_bin_with_metadata(&out).unwrap();
    assert_eq!(
        pointraster::io::encode_bin(&same, None),
        pointraster::io::encode_bin(&original, None)
    );
    assert_eq!(meta.unwrap()["ordering"], "original");

    let spec = OrderingSpec::new(OrderingKind::ShuffledMorton, 17);
    let out = dir.path().join("sm.bin");
    let outcome = cmd_order(&input, &spec, &out).unwrap();
    assert_eq!(outcome.points, 300);
    let (sm, meta) = read_bin_with_metadata(&out).unwrap();
    let meta = meta.unwrap();
    assert_eq!(meta["ordering"], "shuffled_morton");
    assert_eq!(meta["seed"], 17);
    assert_eq!(meta["batch_size"], 128);
    // Batches of 128 (the last one 44 points) each keep Morton order.
    let codes = morton_codes(&sm).unwrap();
    let mut runs = Vec::new();
    let mut len = 1;
    for w in codes.windows(2) {
        if w[0] <= w[1] {
            len += 1;
        } else {
            runs.push(len);
            len = 1;
        }
    }
    runs.push(len);
    assert!(runs.iter().sum::<usize>() == 300 && runs.len() <= 3);

    let again = dir.path().join("sm2.bin");
    cmd_order(&input, &spec, &again).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn stats_summary_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let heat = dir.path().join("heat.ppm");
    let exec = Executor::new(2).unwrap();
    let input = scene(SceneKind::Terrain, 50_000, 3);
    let s = cmd_stats(&input, &ViewpointSpec::from("far"), 64, 64, DEFAULT_HOT_THRESHOLD, Some(&heat), &exec).unwrap();
    assert!(s.report().contains("pixels > 10k: "));
    assert_eq!(s.summary.total, 50_000);
    let img = read_ppm(&heat).unwrap();
    let argmax = s.summary.argmax.unwrap();
    let hottest = img.get_by_id(argmax);
    assert!(hottest == Rgb::WHITE || hottest == Rgb::new(255, 0, 255));

    let empty = cmd_stats(&scene(SceneKind::Terrain, 0, 3), &ViewpointSpec::from("far"), 8, 8, 10_000, None, &exec).unwrap();
    assert_eq!(empty.summary.total, 0);
    assert_eq!(empty.summary.max, 0);
    assert_eq!(empty.summary.covered_pixels, 0);
    assert_eq!(empty.summary.pixels_over_threshold, 0);
}
