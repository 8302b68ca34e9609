//! Subgroup emulation: contiguous runs of 32 point indices processed as one
//! unit, with the reduction primitives the closest-point methods need.
//!
//! Group `g` covers indices `[32g, min(32(g+1), n))`. Lanes whose point was
//! culled are inactive and take no part in any reduction.

use std::sync::atomic::Ordering;

use crate::camera::{project_to_pixel, CameraView};
use crate::cloud::PointCloud;
use crate::packed::{pack, AtomicOpCounters, PackedFramebuffer64};

pub const LANES: usize = 32;

/// An active lane: target pixel and packed depth|color value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lane {
    pub pixel: u32,
    pub packed: u64,
}

#[derive(Clone, Debug)]
pub struct LaneGroup {
    pixel: [u32; LANES],
    packed: [u64; LANES],
    /// Bit `i` is set when lane `i` survived culling.
    active: u32,
    len: usize,
    /// Shared pixel of all active lanes, if there is one.
    uniform: Option<u32>,
    /// First active lane holding the smallest packed value.
    min_lane: usize,
}

impl LaneGroup {
    pub(crate) fn blank(len: usize) -> Self {
        LaneGroup {
            pixel: [0; LANES],
            packed: [u64::MAX; LANES],
            active: 0,
            len,
            uniform: None,
            min_lane: 0,
        }
    }

    /// Projects the points of the group starting at `base`.
    pub fn gather(cloud: &PointCloud, view: &CameraView, base: usize) -> Self {
        let mut g = Self::blank(0);
        g.refill(cloud, view, base);
        g
    }

    /// Reuses this group's storage for the group starting at `base`. Lanes
    /// left over from the previous contents are inactive and never read.
    #[inline]
    pub(crate) fn refill(&mut self, cloud: &PointCloud, view: &CameraView, base: usize) {
        let end = (base + LANES).min(cloud.len());
        let g = self;
        g.len = end - base;
        let points = cloud.positions()[base..end].iter().zip(&cloud.colors()[base..end]);
        let slots = g.pixel.iter_mut().zip(g.packed.iter_mut());
        let (mut active, mut first, mut same) = (0u32, u32::MAX, true);
        let (mut min, mut min_lane) = (u64::MAX, 0);
        for (i, ((p, c), (pixel, packed))) in points.zip(slots).enumerate() {
            let Some(f) = project_to_pixel(*p, view) else { continue };
            let v = pack(f.depth, c.to_u24());
            *pixel = f.pixel;
            *packed = v;
            if active == 0 {
                first = f.pixel;
            }
            same &= f.pixel == first;
            if v < min {
                min = v;
                min_lane = i;
            }
            active |= 1 << i;
        }
        g.active = active;
        g.min_lane = min_lane;
        g.uniform = (active != 0 && same).then_some(first);
    }

    /// Builds a group from explicit lane states; at most 32 entries.
    pub fn from_lanes(lanes: &[Option<Lane>]) -> Self {
        assert!(lanes.len() <= LANES, "a lane group holds at most 32 lanes");
        let mut g = Self::blank(lanes.len());
        for (i, l) in lanes.iter().enumerate() {
            if let Some(l) = l {
                g.pixel[i] = l.pixel;
                g.packed[i] = l.packed;
                if g.active == 0 || l.packed < g.packed[g.min_lane] {
                    g.min_lane = i;
                }
                g.active |= 1 << i;
            }
        }
        g.uniform = {
            let mut active = g.active();
            active.next().and_then(|f| active.all(|l| l.pixel == f.pixel).then_some(f.pixel))
        };
        g
    }

    /// Number of lanes, active or not. Below 32 only for the tail group.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn is_active(&self, i: usize) -> bool {
        self.active >> i & 1 == 1
    }

    #[inline]
    fn get(&self, i: usize) -> Lane {
        Lane {
            pixel: self.pixel[i],
            packed: self.packed[i],
        }
    }

    pub fn lane(&self, i: usize) -> Option<Lane> {
        assert!(i < self.len, "lane {i} out of range");
        self.is_active(i).then(|| self.get(i))
    }

    fn active_lanes(&self) -> impl Iterator<Item = (usize, Lane)> + '_ {
        (0..self.len).filter(|&i| self.is_active(i)).map(|i| (i, self.get(i)))
    }

    pub fn active(&self) -> impl Iterator<Item = Lane> + '_ {
        self.active_lanes().map(|(_, l)| l)
    }

    #[inline]
    pub fn active_count(&self) -> usize {
        self.active.count_ones() as usize
    }

    /// The shared pixel if every active lane targets the same one. `None`
    /// when no lane is active.
    pub fn all_equal_pixel(&self) -> Option<u32> {
        self.uniform
    }

    /// Writers chosen by the warp-wide reduction: the single minimum lane
    /// when all active lanes share a pixel, otherwise the clustered-pair
    /// rule where of two neighbouring lanes on the same pixel only the one
    /// with the lower packed value (the even lane on a tie) writes.
    #[inline]
    pub fn reduce_writers(&self, mut emit: impl FnMut(Lane)) {
        if self.uniform.is_some() {
            emit(self.get(self.min_lane));
            return;
        }
        for even in (0..self.len).step_by(2) {
            let odd = even + 1;
            let (a, b) = (self.is_active(even), odd < self.len && self.is_active(odd));
            match (a, b) {
                (true, true) if self.pixel[even] == self.pixel[odd] => {
                    emit(if self.packed[odd] < self.packed[even] { self.get(odd) } else { self.get(even) });
                }
                _ => {
                    if a {
                        emit(self.get(even));
                    }
                    if b {
                        emit(self.get(odd));
                    }
                }
            }
        }
    }

    /// Writers chosen by full deduplication: lanes are partitioned by pixel
    /// and every lane holding its partition's minimum writes. Exact
    /// duplicates of the minimum all write.
    #[inline]
    pub fn dedup_writers(&self, mut emit: impl FnMut(Lane)) {
        if self.uniform.is_some() {
            let min = self.packed[self.min_lane];
            for (_, l) in self.active_lanes().filter(|(_, l)| l.packed == min) {
                emit(l);
            }
            return;
        }
        let mut todo = self.active;
        while todo != 0 {
            let lead = todo.trailing_zeros() as usize;
            let px = self.pixel[lead];
            let mut members = 0u32;
            let mut min = u64::MAX;
            let mut rest = todo;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if self.pixel[j] == px {
                    members |= 1 << j;
                    min = min.min(self.packed[j]);
                }
            }
            todo &= !members;
            while members != 0 {
                let j = members.trailing_zeros() as usize;
                members &= members - 1;
                if self.packed[j] == min {
                    emit(self.get(j));
                }
            }
        }
    }
}

#[inline(always)]
pub(crate) fn atomic_min(fb: &PackedFramebuffer64, lane: Lane, c: &mut AtomicOpCounters) {
    c.min_calls += 1;
    fb.word(lane.pixel).fetch_min(lane.packed, Ordering::Relaxed);
}

/// The loaded value can only shrink while the pass runs, so skipping the
/// atomic when `packed >= loaded` never loses the winning point.
#[inline(always)]
pub(crate) fn early_z_min(fb: &PackedFramebuffer64, lane: Lane, c: &mut AtomicOpCounters) {
    if lane.packed < fb.word(lane.pixel).load(Ordering::Relaxed) {
        atomic_min(fb, lane, c);
    }
}
