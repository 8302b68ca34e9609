//! Helpers shared by the integration tests. The oracles here are written
//! against the documented behavior, not against library internals.

#![allow(dead_code)]

use pointraster::ordering::{is_permutation, morton_codes, shuffle, sort_morton};
use pointraster::{build_camera, project_to_pixel, CameraView, PointCloud, Rgb};

/// Small independent generator (splitmix64) so test scenes do not depend on
/// the library's PRNG.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn color(&mut self) -> Rgb {
        Rgb::from_u24((self.next_u64() & 0xFF_FFFF) as u32)
    }
}

/// Random cloud around the origin. Colors come from a small palette and
/// positions are snapped to a coarse lattice so exact depth ties occur.
pub fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = TestRng::new(seed);
    let palette: Vec<Rgb> = (0..8).map(|_| rng.color()).collect();
    let mut positions = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    for _ in 0..n {
        let p = [rng.range(-5.0, 5.0), rng.range(-5.0, 5.0), rng.range(-5.0, 5.0)];
        let p = p.map(|v| ((v * 64.0).round() / 64.0) as f32);
        positions.push(p);
        colors.push(palette[rng.below(8) as usize]);
    }
    PointCloud::new(positions, colors).unwrap()
}

/// Camera on a random orbit around the origin; some scenes put the eye
/// inside the cloud so culling is exercised.
pub fn random_view(seed: u64, width: u32, height: u32) -> CameraView {
    let mut rng = TestRng::new(seed ^ 0xABCD);
    let theta = rng.range(0.0, std::f64::consts::TAU);
    let phi = rng.range(-1.2, 1.2);
    let dist = rng.range(3.0, 25.0);
    let eye = [dist * phi.cos() * theta.cos(), dist * phi.cos() * theta.sin(), dist * phi.sin()];
    let fovy = rng.range(0.3, 1.8);
    build_camera(eye, [0.0; 3], [0.0, 0.0, 1.0], fovy, width, height, 0.01, 100.0).unwrap()
}

/// View where a point (x, y, z) lands on ndc (x, y) with clip.w = z.
pub fn ortho_view(width: u32, height: u32) -> CameraView {
    let wvp = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    CameraView::new(wvp, width, height).unwrap()
}

/// World position hitting the center of pixel (px, py) under `ortho_view`.
pub fn ortho_point(px: u32, py: u32, width: u32, height: u32, depth: f32) -> [f32; 3] {
    let x = (px as f64 + 0.5) / width as f64 * 2.0 - 1.0;
    let y = (py as f64 + 0.5) / height as f64 * 2.0 - 1.0;
    [(x * depth as f64) as f32, (y * depth as f64) as f32, depth]
}

pub fn pack(depth: f32, rgb: Rgb) -> u64 {
    ((depth.to_bits() as u64) << 24) | rgb.to_u24() as u64
}

/// Sequential fold: per-pixel minimum of packed values.
pub fn fold_oracle(cloud: &PointCloud, view: &CameraView) -> Vec<u64> {
    let mut fb = vec![u64::MAX; view.pixel_count()];
    for (p, c) in cloud.positions().iter().zip(cloud.colors()) {
        if let Some(f) = project_to_pixel(*p, view) {
            let slot = &mut fb[f.pixel as usize];
            *slot = (*slot).min(pack(f.depth, *c));
        }
    }
    fb
}

pub fn candidate_count(cloud: &PointCloud, view: &CameraView) -> u64 {
    cloud.positions().iter().filter(|p| project_to_pixel(**p, view).is_some()).count() as u64
}

/// Per-pixel sums `[r, g, b, count]` over points within `eps` of the
/// closest depth, using plain integer arithmetic.
pub fn blend_oracle(cloud: &PointCloud, view: &CameraView, eps: f32) -> Vec<[u64; 4]> {
    let frags: Vec<_> = cloud.positions().iter().map(|p| project_to_pixel(*p, view)).collect();
    let mut closest = vec![f32::INFINITY; view.pixel_count()];
    for f in frags.iter().flatten() {
        let c = &mut closest[f.pixel as usize];
        *c = c.min(f.depth);
    }
    let mut sums = vec![[0u64; 4]; view.pixel_count()];
    for (f, c) in frags.iter().zip(cloud.colors()) {
        let Some(f) = f else { continue };
        if f.depth <= closest[f.pixel as usize] * eps {
            let s = &mut sums[f.pixel as usize];
            s[0] += c.r() as u64;
            s[1] += c.g() as u64;
            s[2] += c.b() as u64;
            s[3] += 1;
        }
    }
    sums
}

/// Expected blended color of one pixel with truncating division.
pub fn blend_color(s: [u64; 4], background: Rgb) -> Rgb {
    if s[3] == 0 {
        return background;
    }
    let ch = |v: u64| (v / s[3]).min(255) as u8;
    Rgb::new(ch(s[0]), ch(s[1]), ch(s[2]))
}

/// Bit-by-bit Morton interleave, x in the lowest slot.
pub fn interleave_loop(ix: u32, iy: u32, iz: u32) -> u64 {
    let mut code = 0u64;
    for bit in 0..21 {
        code |= ((ix as u64 >> bit) & 1) << (3 * bit);
        code |= ((iy as u64 >> bit) & 1) << (3 * bit + 1);
        code |= ((iz as u64 >> bit) & 1) << (3 * bit + 2);
    }
    code
}

/// Depth-first traversal of a cubic octree over `points`, children visited
/// in (x, y, z) bit order with x least significant. Returns point indices.
pub fn octree_dfs(points: &[[f64; 3]], min: [f64; 3], size: f64, idx: Vec<usize>, out: &mut Vec<usize>) {
    if idx.len() <= 1 {
        out.extend(idx);
        return;
    }
    let half = size / 2.0;
    let mid = [min[0] + half, min[1] + half, min[2] + half];
    let mut children: [Vec<usize>; 8] = Default::default();
    for i in idx {
        let p = points[i];
        let o = (p[0] >= mid[0]) as usize | ((p[1] >= mid[1]) as usize) << 1 | ((p[2] >= mid[2]) as usize) << 2;
        children[o].push(i);
    }
    for (o, child) in children.into_iter().enumerate() {
        let cmin = [0, 1, 2].map(|k| if o >> k & 1 == 1 { mid[k] } else { min[k] });
        octree_dfs(points, cmin, half, child, out);
    }
}

/// Checks that `perm` is the Morton order cut into `batch`-sized runs, with
/// the runs permuted and each run intact.
pub fn check_batches(cloud: &PointCloud, perm: &[usize], batch: usize) {
    let n = cloud.len();
    assert!(is_permutation(perm, n));
    let sorted = sort_morton(cloud).unwrap();
    let mut rank = vec![0usize; n];
    for (r, &i) in sorted.iter().enumerate() {
        rank[i] = r;
    }
    let mut seen = vec![false; n.div_ceil(batch)];
    let mut p = 0;
    while p < n {
        let start = rank[perm[p]];
        assert_eq!(start % batch, 0, "run at output {p} starts mid-batch");
        let b = start / batch;
        assert!(!std::mem::replace(&mut seen[b], true), "batch {b} emitted twice");
        let len = batch.min(n - start);
        for j in 0..len {
            assert_eq!(rank[perm[p + j]], start + j, "batch {b} broken at offset {j}");
        }
        p += len;
    }
    assert!(seen.iter().all(|&s| s));

    let codes = morton_codes(cloud).unwrap();
    for (p, pair) in perm.windows(2).enumerate() {
        if rank[pair[0]] / batch == rank[pair[1]] / batch {
            assert!(codes[pair[0]] <= codes[pair[1]], "codes decrease inside a batch at {p}");
        }
    }
}

/// Integer lattice `0..k` on each axis, in scrambled order.
pub fn grid_cloud(k: u32, seed: u64) -> PointCloud {
    let mut cells: Vec<[f32; 3]> = Vec::new();
    for z in 0..k {
        for y in 0..k {
            for x in 0..k {
                cells.push([x as f32, y as f32, z as f32]);
            }
        }
    }
    // Scramble the input so the sort has real work to do.
    let perm = shuffle(cells.len(), seed);
    let positions: Vec<[f32; 3]> = perm.iter().map(|&i| cells[i]).collect();
    let colors = vec![Rgb::WHITE; positions.len()];
    PointCloud::new(positions, colors).unwrap()
}
