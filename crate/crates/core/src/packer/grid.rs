//! Container state: per-column occupied runs, the height field and the hole
//! regions beneath it.

use super::raster::PartRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Run {
    z0: u32,
    z1: u32,
    part: u32,
}

/// Free interval `[z0, z1)` below the column height, tagged with its region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Gap {
    pub z0: u32,
    pub z1: u32,
    pub region: u32,
}

/// A maximal 6-connected set of hole voxels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleRegion {
    pub id: u32,
    pub volume: u64,
    /// Inclusive voxel bounds.
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl HoleRegion {
    pub fn extent(&self) -> [usize; 3] {
        [
            self.max[0] - self.min[0] + 1,
            self.max[1] - self.min[1] + 1,
            self.max[2] - self.min[2] + 1,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelClass {
    Occupied(u32),
    Hole(u32),
    Slot,
}

/// Highest occupied voxel top per column (0 for empty columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<u32>,
}

impl HeightField {
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.values[y * self.nx + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RasterError {
    #[error("part leaves the grid")]
    OutOfBounds,
    #[error("part touches a non-free voxel")]
    Collision,
}

/// Voxel container being filled.
#[derive(Debug, Clone)]
pub struct PackState {
    dims: [usize; 3],
    columns: Vec<Vec<Run>>,
    height: Vec<u32>,
    top: u32,
    gaps: Vec<Vec<Gap>>,
    regions: Vec<HoleRegion>,
}

impl PackState {
    pub fn new(dims: [usize; 3]) -> PackState {
        assert!(dims.iter().all(|&d| d >= 1 && d < u32::MAX as usize));
        let n = dims[0] * dims[1];
        PackState {
            dims,
            columns: vec![Vec::new(); n],
            height: vec![0; n],
            top: 0,
            gaps: vec![Vec::new(); n],
            regions: Vec::new(),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// `nx * ny * nz`.
    pub fn volume(&self) -> u64 {
        self.dims.iter().map(|&d| d as u64).product()
    }

    /// Current container height `h` in voxels.
    pub fn top(&self) -> u32 {
        self.top
    }

    pub(crate) fn heights(&self) -> &[u32] {
        &self.height
    }

    pub fn heightfield(&self) -> HeightField {
        HeightField {
            nx: self.dims[0],
            ny: self.dims[1],
            values: self.height.clone(),
        }
    }

    /// Height field rebuilt from the occupancy runs.
    pub fn recompute_heightfield(&self) -> HeightField {
        HeightField {
            nx: self.dims[0],
            ny: self.dims[1],
            values: self
                .columns
                .iter()
                .map(|c| c.iter().map(|r| r.z1).max().unwrap_or(0))
                .collect(),
        }
    }

    pub fn holes(&self) -> &[HoleRegion] {
        &self.regions
    }

    pub(crate) fn gaps(&self, x: usize, y: usize) -> &[Gap] {
        &self.gaps[y * self.dims[0] + x]
    }

    fn col(&self, x: usize, y: usize) -> usize {
        y * self.dims[0] + x
    }

    pub fn classify(&self, x: usize, y: usize, z: usize) -> VoxelClass {
        let c = self.col(x, y);
        let z = z as u32;
        if let Some(r) = self.columns[c].iter().find(|r| r.z0 <= z && z < r.z1) {
            return VoxelClass::Occupied(r.part);
        }
        match self.gaps[c].iter().find(|g| g.z0 <= z && z < g.z1) {
            Some(g) => VoxelClass::Hole(g.region),
            None => VoxelClass::Slot,
        }
    }

    pub fn occupied_voxels(&self) -> u64 {
        self.columns
            .iter()
            .flatten()
            .map(|r| (r.z1 - r.z0) as u64)
            .sum()
    }

    /// Checks that the raster placed at `offset` lies in the grid and only
    /// touches free voxels.
    pub fn try_rasterize(
        &self,
        raster: &PartRaster,
        offset: [usize; 3],
    ) -> Result<(), RasterError> {
        let d = raster.dims();
        for a in 0..3 {
            if offset[a] + d[a] > self.dims[a] {
                return Err(RasterError::OutOfBounds);
            }
        }
        for rc in raster.columns() {
            let col = &self.columns[self.col(offset[0] + rc.x as usize, offset[1] + rc.y as usize)];
            for &(z0, z1) in &rc.runs {
                let (z0, z1) = (z0 + offset[2] as u32, z1 + offset[2] as u32);
                if col.iter().any(|r| r.z0 < z1 && z0 < r.z1) {
                    return Err(RasterError::Collision);
                }
            }
        }
        Ok(())
    }

    /// Writes a part into the grid and refreshes heights and hole labels.
    pub fn commit(
        &mut self,
        raster: &PartRaster,
        offset: [usize; 3],
        part: u32,
    ) -> Result<(), RasterError> {
        self.try_rasterize(raster, offset)?;
        let oz = offset[2] as u32;
        for rc in raster.columns() {
            let c = self.col(offset[0] + rc.x as usize, offset[1] + rc.y as usize);
            let col = &mut self.columns[c];
            for &(z0, z1) in &rc.runs {
                let run = Run {
                    z0: z0 + oz,
                    z1: z1 + oz,
                    part,
                };
                let at = col.partition_point(|r| r.z0 < run.z0);
                col.insert(at, run);
            }
            let h = col.last().map_or(0, |r| r.z1);
            self.height[c] = h;
            self.top = self.top.max(h);
        }
        self.relabel_holes();
        Ok(())
    }

    /// Recomputes hole regions from scratch: free intervals under each
    /// column's height, joined across columns where their z-ranges overlap.
    fn relabel_holes(&mut self) {
        let [nx, ny, _] = self.dims;
        let mut gaps: Vec<Vec<Gap>> = Vec::with_capacity(nx * ny);
        let mut count = 0u32;
        for col in &self.columns {
            let mut g = Vec::new();
            let mut z = 0;
            for r in col {
                if r.z0 > z {
                    g.push(Gap {
                        z0: z,
                        z1: r.z0,
                        region: count,
                    });
                    count += 1;
                }
                z = r.z1;
            }
            gaps.push(g);
        }
        let mut uf = UnionFind::new(count as usize);
        for y in 0..ny {
            for x in 0..nx {
                let c = y * nx + x;
                if x + 1 < nx {
                    join_overlapping(&mut uf, &gaps[c], &gaps[c + 1]);
                }
                if y + 1 < ny {
                    join_overlapping(&mut uf, &gaps[c], &gaps[c + nx]);
                }
            }
        }
        // number regions in scan order of their first interval
        let mut label = vec![u32::MAX; count as usize];
        let mut regions: Vec<HoleRegion> = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                for g in gaps[y * nx + x].iter_mut() {
                    let root = uf.find(g.region as usize);
                    if label[root] == u32::MAX {
                        label[root] = regions.len() as u32;
                        regions.push(HoleRegion {
                            id: label[root],
                            volume: 0,
                            min: [x, y, g.z0 as usize],
                            max: [x, y, g.z1 as usize - 1],
                        });
                    }
                    let id = label[root];
                    g.region = id;
                    let r = &mut regions[id as usize];
                    r.volume += (g.z1 - g.z0) as u64;
                    for (a, v) in [(0, x), (1, y)] {
                        r.min[a] = r.min[a].min(v);
                        r.max[a] = r.max[a].max(v);
                    }
                    r.min[2] = r.min[2].min(g.z0 as usize);
                    r.max[2] = r.max[2].max(g.z1 as usize - 1);
                }
            }
        }
        self.gaps = gaps;
        self.regions = regions;
    }
}

fn join_overlapping(uf: &mut UnionFind, a: &[Gap], b: &[Gap]) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].z0 < b[j].z1 && b[j].z0 < a[i].z1 {
            uf.union(a[i].region as usize, b[j].region as usize);
        }
        if a[i].z1 <= b[j].z1 {
            i += 1;
        } else {
            j += 1;
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn slab(dims: [usize; 3]) -> PartRaster {
        PartRaster::from_bitmap(
            dims,
            &vec![true; dims[0] * dims[1] * dims[2]],
            Default::default(),
        )
    }

    /// Dense per-voxel classification with its own flood fill.
    fn brute_classes(s: &PackState) -> Vec<VoxelClass> {
        let [nx, ny, nz] = s.dims();
        let idx = |x: usize, y: usize, z: usize| (z * ny + y) * nx + x;
        let mut occ = vec![None; nx * ny * nz];
        for y in 0..ny {
            for x in 0..nx {
                for z in 0..nz {
                    if let VoxelClass::Occupied(p) = s.classify(x, y, z) {
                        occ[idx(x, y, z)] = Some(p);
                    }
                }
            }
        }
        let is_hole = |x: usize, y: usize, z: usize| {
            occ[idx(x, y, z)].is_none() && (z + 1..nz).any(|zz| occ[idx(x, y, zz)].is_some())
        };
        let mut out = vec![VoxelClass::Slot; nx * ny * nz];
        let mut seen = vec![false; nx * ny * nz];
        let mut next = 0;
        for y in 0..ny {
            for x in 0..nx {
                for z in 0..nz {
                    if let Some(p) = occ[idx(x, y, z)] {
                        out[idx(x, y, z)] = VoxelClass::Occupied(p);
                    }
                }
            }
        }
        for y in 0..ny {
            for x in 0..nx {
                for z in 0..nz {
                    if seen[idx(x, y, z)] || !is_hole(x, y, z) {
                        continue;
                    }
                    let mut q = VecDeque::from([(x, y, z)]);
                    seen[idx(x, y, z)] = true;
                    while let Some((a, b, c)) = q.pop_front() {
                        out[idx(a, b, c)] = VoxelClass::Hole(next);
                        let mut nb = Vec::new();
                        if a > 0 {
                            nb.push((a - 1, b, c));
                        }
                        if a + 1 < nx {
                            nb.push((a + 1, b, c));
                        }
                        if b > 0 {
                            nb.push((a, b - 1, c));
                        }
                        if b + 1 < ny {
                            nb.push((a, b + 1, c));
                        }
                        if c > 0 {
                            nb.push((a, b, c - 1));
                        }
                        if c + 1 < nz {
                            nb.push((a, b, c + 1));
                        }
                        for (p, r, t) in nb {
                            if !seen[idx(p, r, t)] && is_hole(p, r, t) {
                                seen[idx(p, r, t)] = true;
                                q.push_back((p, r, t));
                            }
                        }
                    }
                    next += 1;
                }
            }
        }
        out
    }

    /// Same partition up to a relabelling of hole ids.
    fn assert_same_partition(s: &PackState) {
        let [nx, ny, nz] = s.dims();
        let brute = brute_classes(s);
        let mut map = std::collections::HashMap::new();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let b = brute[(z * ny + y) * nx + x];
                    let f = s.classify(x, y, z);
                    match (b, f) {
                        (VoxelClass::Hole(i), VoxelClass::Hole(j)) => {
                            assert_eq!(*map.entry(i).or_insert(j), j);
                        }
                        _ => assert_eq!(b, f, "voxel {x} {y} {z}"),
                    }
                }
            }
        }
        assert_eq!(map.len(), s.holes().len());
        let total: u64 = s.holes().iter().map(|h| h.volume).sum();
        let brute_total = brute
            .iter()
            .filter(|c| matches!(c, VoxelClass::Hole(_)))
            .count() as u64;
        assert_eq!(total, brute_total);
    }

    #[test]
    fn empty_grid_has_only_slots() {
        let s = PackState::new([3, 3, 3]);
        assert!(s.holes().is_empty());
        assert_eq!(s.classify(1, 1, 1), VoxelClass::Slot);
        assert_eq!(s.top(), 0);
    }

    #[test]
    fn covered_top_layer_makes_one_hole() {
        let mut s = PackState::new([3, 3, 3]);
        s.commit(&slab([3, 3, 1]), [0, 0, 2], 1).unwrap();
        assert_eq!(s.holes().len(), 1);
        assert_eq!(s.holes()[0].volume, 18);
        assert_eq!(s.holes()[0].extent(), [3, 3, 2]);
        assert_same_partition(&s);
    }

    #[test]
    fn single_column_cap_makes_column_hole() {
        let mut s = PackState::new([3, 3, 3]);
        s.commit(&slab([1, 1, 1]), [1, 1, 2], 1).unwrap();
        assert_eq!(s.holes().len(), 1);
        assert_eq!(s.holes()[0].volume, 2);
        assert_eq!(s.classify(0, 0, 0), VoxelClass::Slot);
        assert_eq!(s.classify(1, 1, 0), VoxelClass::Hole(0));
        assert_same_partition(&s);
    }

    #[test]
    fn collisions_and_bounds() {
        let mut s = PackState::new([4, 4, 4]);
        s.commit(&slab([2, 2, 2]), [0, 0, 0], 1).unwrap();
        assert_eq!(
            s.try_rasterize(&slab([2, 2, 2]), [1, 1, 1]),
            Err(RasterError::Collision)
        );
        assert_eq!(
            s.try_rasterize(&slab([2, 2, 2]), [3, 0, 0]),
            Err(RasterError::OutOfBounds)
        );
        assert_eq!(s.try_rasterize(&slab([2, 2, 2]), [2, 0, 0]), Ok(()));
    }

    #[test]
    fn heights_track_commits() {
        let mut s = PackState::new([5, 5, 8]);
        s.commit(&slab([2, 5, 1]), [0, 0, 3], 1).unwrap();
        s.commit(&slab([3, 1, 2]), [2, 2, 0], 2).unwrap();
        s.commit(&slab([5, 1, 1]), [0, 2, 4], 3).unwrap();
        assert_eq!(s.heightfield(), s.recompute_heightfield());
        assert_eq!(s.top(), 5);
        assert_eq!(s.heightfield().get(4, 4), 0);
        assert_same_partition(&s);
    }

    #[test]
    fn random_stacks_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let mut s = PackState::new([6, 5, 7]);
            for part in 0..8 {
                let d = [
                    rng.random_range(1..4),
                    rng.random_range(1..4),
                    rng.random_range(1..3),
                ];
                let o = [
                    rng.random_range(0..=6 - d[0]),
                    rng.random_range(0..=5 - d[1]),
                    rng.random_range(0..=7 - d[2]),
                ];
                let _ = s.commit(&slab(d), o, part);
                assert_eq!(s.heightfield(), s.recompute_heightfield());
            }
            assert_same_partition(&s);
        }
    }
}
