//! Center-sampled voxelization of a posed part.

use nalgebra::Matrix3;

use crate::geometry::{Point3, Vector3};

/// Occupied z-runs `[z0, z1)` of one footprint column of a part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterColumn {
    pub x: u32,
    pub y: u32,
    pub runs: Vec<(u32, u32)>,
}

impl RasterColumn {
    pub fn bottom(&self) -> u32 {
        self.runs[0].0
    }

    pub fn top(&self) -> u32 {
        self.runs[self.runs.len() - 1].1
    }
}

/// A window of footprint columns used for lower-bounding the tangent lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Tile {
    pub dx: u32,
    pub dy: u32,
    pub max_bottom: u32,
}

/// Small fixed-size window of footprint columns with its bottom range; the
/// columns themselves sit in `PartRaster::block_cols[start..end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Block {
    pub dx: u32,
    pub dy: u32,
    pub min_bottom: u32,
    pub start: u32,
    pub end: u32,
}

/// Voxel set of a part in a fixed orientation, trimmed to its occupied box.
///
/// Placing local voxel `(0, 0, 0)` at grid voxel `o` corresponds to the
/// translation `grid_origin + o * voxel_size - anchor` applied to the posed
/// part.
#[derive(Debug, Clone)]
pub struct PartRaster {
    dims: [usize; 3],
    anchor: Vector3,
    columns: Vec<RasterColumn>,
    voxel_count: usize,
    pub(crate) full_rect: bool,
    pub(crate) sum_bottom: i64,
    /// Runs of consecutive footprint columns per row: `(y, x0, x1)`.
    pub(crate) row_runs: Vec<(u32, u32, u32)>,
    pub(crate) tile: (usize, usize),
    pub(crate) tiles: Vec<Tile>,
    /// A column whose bottom is 0.
    pub(crate) probe: (u32, u32),
    /// True when the tiles determine the tangent lift exactly.
    pub(crate) exact: bool,
    pub(crate) block: (usize, usize),
    pub(crate) blocks: Vec<Block>,
    /// `(x, y, bottom)` grouped by block.
    pub(crate) block_cols: Vec<(u32, u32, u32)>,
}

impl PartRaster {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn anchor(&self) -> Vector3 {
        self.anchor
    }

    pub fn columns(&self) -> &[RasterColumn] {
        &self.columns
    }

    pub fn voxel_count(&self) -> usize {
        self.voxel_count
    }

    /// Exclusive top of the highest voxel.
    pub fn height(&self) -> u32 {
        self.dims[2] as u32
    }

    pub fn footprint_area(&self) -> usize {
        self.columns.len()
    }

    pub fn voxels(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.columns.iter().flat_map(|c| {
            c.runs.iter().flat_map(move |&(z0, z1)| {
                (z0..z1).map(move |z| [c.x as usize, c.y as usize, z as usize])
            })
        })
    }

    /// Builds a raster from a dense occupancy bitmap (`x` fastest).
    pub(crate) fn from_bitmap(dims: [usize; 3], bits: &[bool], anchor: Vector3) -> PartRaster {
        let [nx, ny, nz] = dims;
        let mut columns = Vec::new();
        let mut voxel_count = 0;
        for y in 0..ny {
            for x in 0..nx {
                let mut runs: Vec<(u32, u32)> = Vec::new();
                for z in 0..nz {
                    if bits[(z * ny + y) * nx + x] {
                        voxel_count += 1;
                        match runs.last_mut() {
                            Some(r) if r.1 == z as u32 => r.1 += 1,
                            _ => runs.push((z as u32, z as u32 + 1)),
                        }
                    }
                }
                if !runs.is_empty() {
                    columns.push(RasterColumn {
                        x: x as u32,
                        y: y as u32,
                        runs,
                    });
                }
            }
        }
        assert!(!columns.is_empty(), "raster needs at least one voxel");
        let mut r = PartRaster {
            dims,
            anchor,
            columns,
            voxel_count,
            full_rect: false,
            sum_bottom: 0,
            row_runs: Vec::new(),
            tile: (1, 1),
            tiles: Vec::new(),
            probe: (0, 0),
            exact: false,
            block: (1, 1),
            blocks: Vec::new(),
            block_cols: Vec::new(),
        };
        r.build_search_data();
        r
    }

    fn build_search_data(&mut self) {
        let [fx, fy, _] = self.dims;
        let mut bottom = vec![u32::MAX; fx * fy];
        for c in &self.columns {
            bottom[c.y as usize * fx + c.x as usize] = c.bottom();
        }
        self.full_rect = self.columns.len() == fx * fy;
        self.sum_bottom = self.columns.iter().map(|c| c.bottom() as i64).sum();
        let probe = self
            .columns
            .iter()
            .find(|c| c.bottom() == 0)
            .expect("trimmed raster touches z = 0");
        self.probe = (probe.x, probe.y);

        self.row_runs.clear();
        for c in &self.columns {
            match self.row_runs.last_mut() {
                Some(run) if run.0 == c.y && run.2 == c.x => run.2 += 1,
                _ => self.row_runs.push((c.y, c.x, c.x + 1)),
            }
        }

        let flat = self.columns.iter().all(|c| c.bottom() == 0);
        let k = if self.full_rect && flat { 1 } else { 4 };
        let tx = fx.div_ceil(k).max(1);
        let ty = fy.div_ceil(k).max(1);
        self.tile = (tx, ty);
        let starts = |n: usize, t: usize| -> Vec<usize> {
            let mut v: Vec<usize> = (0..n).step_by(t).map(|s| s.min(n - t)).collect();
            v.dedup();
            v
        };
        self.tiles.clear();
        let mut all_flat = true;
        for &dy in &starts(fy, ty) {
            for &dx in &starts(fx, tx) {
                let mut max_b = 0;
                let mut min_b = u32::MAX;
                let mut full = true;
                'scan: for y in dy..dy + ty {
                    for x in dx..dx + tx {
                        let b = bottom[y * fx + x];
                        if b == u32::MAX {
                            full = false;
                            break 'scan;
                        }
                        max_b = max_b.max(b);
                        min_b = min_b.min(b);
                    }
                }
                if full {
                    all_flat &= max_b == min_b;
                    self.tiles.push(Tile {
                        dx: dx as u32,
                        dy: dy as u32,
                        max_bottom: max_b,
                    });
                }
            }
        }
        self.exact = self.full_rect && all_flat;

        let (bx, by) = (BLOCK.min(fx), BLOCK.min(fy));
        self.block = (bx, by);
        self.blocks.clear();
        self.block_cols.clear();
        for y0 in (0..fy).step_by(by) {
            for x0 in (0..fx).step_by(bx) {
                let start = self.block_cols.len() as u32;
                let mut min_b = u32::MAX;
                for y in y0..(y0 + by).min(fy) {
                    for x in x0..(x0 + bx).min(fx) {
                        let b = bottom[y * fx + x];
                        if b != u32::MAX {
                            min_b = min_b.min(b);
                            self.block_cols.push((x as u32, y as u32, b));
                        }
                    }
                }
                if min_b != u32::MAX {
                    // the window is shifted inward at the far edges; it still covers the columns
                    self.blocks.push(Block {
                        dx: x0.min(fx - bx) as u32,
                        dy: y0.min(fy - by) as u32,
                        min_bottom: min_b,
                        start,
                        end: self.block_cols.len() as u32,
                    });
                }
            }
        }
    }
}

const BLOCK: usize = 4;

/// Voxelizes a posed tetrahedron soup on a lattice of spacing `voxel_size`.
///
/// The lattice block is the smallest whole number of voxels covering the
/// soup's bounding box, centered on it; a voxel belongs to the part iff its
/// center lies in some tetrahedron. Parts too thin to contain any center get
/// the voxel under each tetrahedron's centroid instead.
pub fn rasterize_tets(tets: &[[Point3; 4]], voxel_size: f64) -> PartRaster {
    assert!(!tets.is_empty());
    assert!(voxel_size > 0.0);
    let s = voxel_size;
    let mut lo = tets[0][0];
    let mut hi = lo;
    for t in tets {
        for p in t {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
    }
    let ext = hi - lo;
    let mut block = [0usize; 3];
    let mut origin = lo;
    for a in 0..3 {
        block[a] = ((ext[a] / s - 1e-9).ceil() as usize).max(1);
        origin[a] = lo[a] - (block[a] as f64 * s - ext[a]) * 0.5;
    }
    let [bx, by, bz] = block;
    let mut bits = vec![false; bx * by * bz];
    let tol = 1e-9;
    for t in tets {
        let m = Matrix3::from_columns(&[t[1] - t[0], t[2] - t[0], t[3] - t[0]]);
        let Some(inv) = m.try_inverse() else { continue };
        let mut range = [(0usize, 0usize); 3];
        let mut empty = false;
        for a in 0..3 {
            let tlo = t.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
            let thi = t.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
            let i0 = ((tlo - origin[a]) / s - 0.5).ceil().max(0.0) as usize;
            let i1 = ((thi - origin[a]) / s - 0.5).floor();
            if i1 < 0.0 {
                empty = true;
                break;
            }
            let i1 = (i1 as usize).min(block[a] - 1);
            if i0 > i1 {
                empty = true;
                break;
            }
            range[a] = (i0, i1);
        }
        if empty {
            continue;
        }
        for k in range[2].0..=range[2].1 {
            for j in range[1].0..=range[1].1 {
                for i in range[0].0..=range[0].1 {
                    let c = Point3::new(
                        origin.x + (i as f64 + 0.5) * s,
                        origin.y + (j as f64 + 0.5) * s,
                        origin.z + (k as f64 + 0.5) * s,
                    );
                    let l = inv * (c - t[0]);
                    if l.x >= -tol && l.y >= -tol && l.z >= -tol && l.x + l.y + l.z <= 1.0 + tol {
                        bits[(k * by + j) * bx + i] = true;
                    }
                }
            }
        }
    }
    if !bits.iter().any(|&b| b) {
        for t in tets {
            let c = Point3::from((t[0].coords + t[1].coords + t[2].coords + t[3].coords) * 0.25);
            let idx: Vec<usize> = (0..3)
                .map(|a| (((c[a] - origin[a]) / s).floor().max(0.0) as usize).min(block[a] - 1))
                .collect();
            bits[(idx[2] * by + idx[1]) * bx + idx[0]] = true;
        }
    }

    // trim to the occupied box
    let mut tmin = [usize::MAX; 3];
    let mut tmax = [0usize; 3];
    for k in 0..bz {
        for j in 0..by {
            for i in 0..bx {
                if bits[(k * by + j) * bx + i] {
                    for (a, v) in [i, j, k].into_iter().enumerate() {
                        tmin[a] = tmin[a].min(v);
                        tmax[a] = tmax[a].max(v);
                    }
                }
            }
        }
    }
    let dims = [
        tmax[0] - tmin[0] + 1,
        tmax[1] - tmin[1] + 1,
        tmax[2] - tmin[2] + 1,
    ];
    let mut trimmed = vec![false; dims[0] * dims[1] * dims[2]];
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                trimmed[(k * dims[1] + j) * dims[0] + i] =
                    bits[((k + tmin[2]) * by + j + tmin[1]) * bx + i + tmin[0]];
            }
        }
    }
    let anchor = origin.coords + Vector3::new(tmin[0] as f64, tmin[1] as f64, tmin[2] as f64) * s;
    PartRaster::from_bitmap(dims, &trimmed, anchor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tetmesh::synth::{box5, l_shape};
    use crate::tetmesh::TetMesh;

    fn soup(m: &TetMesh) -> Vec<[Point3; 4]> {
        (0..m.num_tets()).map(|t| m.tet_points(t)).collect()
    }

    #[test]
    fn unit_cube_fills_its_block() {
        for n in [4usize, 7, 10, 16] {
            let r = rasterize_tets(&soup(&box5([1.0; 3])), 1.0 / n as f64);
            assert_eq!(r.dims(), [n, n, n]);
            assert_eq!(r.voxel_count(), n * n * n);
            assert!(r.exact && r.full_rect);
            assert_eq!(r.tiles.len(), 1);
        }
    }

    #[test]
    fn non_multiple_extent_rounds_up() {
        // 1.0 / 0.3 = 3.33 voxels; the centered block of 4 covers every center
        let r = rasterize_tets(&soup(&box5([1.0, 0.5, 0.25])), 0.3);
        assert_eq!(r.dims(), [4, 2, 1]);
        assert_eq!(r.voxel_count(), 8);
    }

    #[test]
    fn l_shape_has_holes_in_footprint() {
        let m = l_shape(4, 1, 1.0);
        let r = rasterize_tets(&soup(&m), 0.25);
        assert_eq!(r.dims(), [16, 16, 4]);
        assert_eq!(r.voxel_count(), 7 * 64);
        assert!(!r.full_rect);
        assert!(!r.exact);
        let area: usize = r.row_runs.iter().map(|&(_, a, b)| (b - a) as usize).sum();
        assert_eq!(area, r.footprint_area());
    }

    #[test]
    fn voxel_volume_tracks_exact_volume() {
        let q = crate::geometry::UnitQuaternion::from_euler_angles(0.3, 0.7, 1.1);
        let m = box5([1.0, 0.6, 0.3]);
        let posed: Vec<[Point3; 4]> = soup(&m).iter().map(|t| t.map(|p| q * p)).collect();
        let s = 1.0 / 128.0;
        let r = rasterize_tets(&posed, s);
        let vox = r.voxel_count() as f64 * s * s * s;
        assert!((vox - 0.18).abs() / 0.18 < 0.05, "{vox}");
    }

    #[test]
    fn thin_part_gets_at_least_one_voxel() {
        let m = box5([1.0, 1.0, 0.001]);
        let r = rasterize_tets(&soup(&m), 0.25);
        assert!(r.voxel_count() >= 1);
        assert_eq!(r.dims()[2], 1);
    }
}
