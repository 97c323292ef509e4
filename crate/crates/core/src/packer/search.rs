//! Placement search for one part: holes first, then the tangent position
//! on top of the height field with the least `dh * B + U`.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::rc::Rc;

use super::grid::{HeightField, HoleRegion, PackState};
use super::raster::PartRaster;
use super::PackError;

/// Where and how a part goes into the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub rotation: usize,
    pub offset: [usize; 3],
    /// Container height increase in voxels.
    pub delta_h: u32,
    /// Free voxels left between the part and the height field below it.
    pub underlying: i64,
    pub cost: i64,
    /// Hole region and `hole volume - part voxels` for hole placements.
    pub hole: Option<(u32, i64)>,
}

/// `dh * B + U` in 64-bit integers.
pub fn placement_cost(delta_h: i64, underlying: i64, grid_volume: i64) -> Result<i64, PackError> {
    delta_h
        .checked_mul(grid_volume)
        .and_then(|v| v.checked_add(underlying))
        .ok_or(PackError::Overflow)
}

/// Sum over the part's footprint of the gap between each column's lowest part
/// voxel and the height field, with negative columns counted as zero.
pub fn underlying_free_volume(raster: &PartRaster, offset: [usize; 3], hf: &HeightField) -> i64 {
    raster
        .columns()
        .iter()
        .map(|c| {
            let floor = hf.get(offset[0] + c.x as usize, offset[1] + c.y as usize) as i64;
            (c.bottom() as i64 + offset[2] as i64 - floor).max(0)
        })
        .sum()
}

/// Inclusive range of offsets per axis that keep the raster's box inside the
/// hole's box; `None` if the hole is too small on some axis.
pub fn shrink_hole(hole: &HoleRegion, raster: &PartRaster) -> Option<[(usize, usize); 3]> {
    let d = raster.dims();
    let mut out = [(0, 0); 3];
    for a in 0..3 {
        if hole.max[a] + 1 < hole.min[a] + d[a] {
            return None;
        }
        out[a] = (hole.min[a], hole.max[a] + 1 - d[a]);
    }
    Some(out)
}

fn fits_in_hole(state: &PackState, raster: &PartRaster, o: [usize; 3], region: u32) -> bool {
    let oz = o[2] as u32;
    raster.columns().iter().all(|c| {
        let gaps = state.gaps(o[0] + c.x as usize, o[1] + c.y as usize);
        c.runs.iter().all(|&(z0, z1)| {
            let (z0, z1) = (z0 + oz, z1 + oz);
            gaps.iter()
                .any(|g| g.region == region && g.z0 <= z0 && z1 <= g.z1)
        })
    })
}

/// Best hole placement for one orientation: least waste, then region id,
/// then lowest `(z, y, x)`.
fn best_in_holes(state: &PackState, raster: &PartRaster, rotation: usize) -> Option<Candidate> {
    let count = raster.voxel_count() as u64;
    let mut holes: Vec<&HoleRegion> = state.holes().iter().filter(|h| h.volume >= count).collect();
    holes.sort_by_key(|h| (h.volume, h.id));
    for h in holes {
        let Some(range) = shrink_hole(h, raster) else {
            continue;
        };
        for z in range[2].0..=range[2].1 {
            for y in range[1].0..=range[1].1 {
                for x in range[0].0..=range[0].1 {
                    if fits_in_hole(state, raster, [x, y, z], h.id) {
                        return Some(Candidate {
                            rotation,
                            offset: [x, y, z],
                            delta_h: 0,
                            underlying: 0,
                            cost: 0,
                            hole: Some((h.id, (h.volume - count) as i64)),
                        });
                    }
                }
            }
        }
    }
    None
}

fn hole_key(c: &Candidate) -> (i64, u32, usize, usize, usize, usize) {
    let (id, waste) = c.hole.expect("hole candidate");
    (waste, id, c.offset[2], c.offset[1], c.offset[0], c.rotation)
}

fn top_key(c: &Candidate) -> (i64, usize, usize, usize, usize) {
    (c.cost, c.offset[2], c.offset[1], c.offset[0], c.rotation)
}

/// Window maximum of a row-major `nx * ny` array over `wx * wy` windows;
/// output is `(nx - wx + 1) * (ny - wy + 1)`, row-major.
///
/// Separable van Herk / Gil-Werman passes: block-wise prefix and suffix
/// maxima, then one comparison per output.
pub(crate) fn sliding_max(values: &[u32], nx: usize, ny: usize, wx: usize, wy: usize) -> Vec<u32> {
    let px = nx - wx + 1;
    let py = ny - wy + 1;
    let mut rows = vec![0u32; px * ny];
    let mut g = vec![0u32; nx];
    let mut h = vec![0u32; nx];
    for y in 0..ny {
        let line = &values[y * nx..(y + 1) * nx];
        for x in 0..nx {
            g[x] = if x % wx == 0 {
                line[x]
            } else {
                g[x - 1].max(line[x])
            };
        }
        for x in (0..nx).rev() {
            h[x] = if x + 1 == nx || (x + 1) % wx == 0 {
                line[x]
            } else {
                h[x + 1].max(line[x])
            };
        }
        let out = &mut rows[y * px..(y + 1) * px];
        for x in 0..px {
            out[x] = h[x].max(g[x + wx - 1]);
        }
    }
    // same along y, a whole row at a time
    let mut g = vec![0u32; px * ny];
    let mut h = vec![0u32; px * ny];
    for y in 0..ny {
        let src = &rows[y * px..(y + 1) * px];
        if y % wy == 0 {
            g[y * px..(y + 1) * px].copy_from_slice(src);
        } else {
            let (prev, cur) = g.split_at_mut(y * px);
            let prev = &prev[(y - 1) * px..];
            for x in 0..px {
                cur[x] = prev[x].max(src[x]);
            }
        }
    }
    for y in (0..ny).rev() {
        let src = &rows[y * px..(y + 1) * px];
        if y + 1 == ny || (y + 1) % wy == 0 {
            h[y * px..(y + 1) * px].copy_from_slice(src);
        } else {
            let (cur, next) = h.split_at_mut((y + 1) * px);
            let cur = &mut cur[y * px..];
            for x in 0..px {
                cur[x] = next[x].max(src[x]);
            }
        }
    }
    let mut out = vec![0u32; px * py];
    for y in 0..py {
        let (hr, gr) = (
            &h[y * px..(y + 1) * px],
            &g[(y + wy - 1) * px..(y + wy) * px],
        );
        for (o, (a, b)) in out[y * px..(y + 1) * px].iter_mut().zip(hr.iter().zip(gr)) {
            *o = (*a).max(*b);
        }
    }
    out
}

/// Inclusive 2D prefix sums with a zero border: `(nx + 1) * (ny + 1)`.
fn prefix_sums(values: &[u32], nx: usize, ny: usize) -> Vec<i64> {
    let w = nx + 1;
    let mut p = vec![0i64; w * (ny + 1)];
    for y in 0..ny {
        let mut row = 0i64;
        for x in 0..nx {
            row += values[y * nx + x] as i64;
            p[(y + 1) * w + x + 1] = p[y * w + x + 1] + row;
        }
    }
    p
}

/// Window maxima of the height field, keyed by window size.
type WindowCache = RefCell<Vec<((usize, usize), Rc<Vec<u32>>)>>;

struct TopContext<'a> {
    heights: &'a [u32],
    prefix: Vec<i64>,
    /// Per-row prefix sums, `nx + 1` entries per row.
    row_prefix: Vec<i64>,
    nx: usize,
    ny: usize,
    nz: i64,
    top: i64,
    grid_volume: i64,
    window_max: WindowCache,
}

impl TopContext<'_> {
    fn window_max(&self, wx: usize, wy: usize) -> Rc<Vec<u32>> {
        let mut cache = self.window_max.borrow_mut();
        if let Some((_, v)) = cache.iter().find(|(k, _)| *k == (wx, wy)) {
            return v.clone();
        }
        let v = Rc::new(sliding_max(self.heights, self.nx, self.ny, wx, wy));
        cache.push(((wx, wy), v.clone()));
        v
    }

    fn rect_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> i64 {
        let w = self.nx + 1;
        self.prefix[y1 * w + x1] - self.prefix[y0 * w + x1] - self.prefix[y1 * w + x0]
            + self.prefix[y0 * w + x0]
    }
}

/// Best tangent placement on the height field for one orientation, or
/// `None` if nothing beats `bound`.
fn best_on_top(
    ctx: &TopContext,
    raster: &PartRaster,
    rotation: usize,
    bound: Option<Candidate>,
) -> Option<Candidate> {
    let [fx, fy, _] = raster.dims();
    let (nx, ny) = (ctx.nx, ctx.ny);
    let ptop = raster.height() as i64;
    if fx > nx || fy > ny || ptop > ctx.nz {
        return None;
    }
    let px = nx - fx + 1;
    let py = ny - fy + 1;
    let (tx, ty) = raster.tile;
    let sm = if raster.tiles.is_empty() {
        Rc::new(Vec::new())
    } else {
        ctx.window_max(tx, ty)
    };
    let (bx, by) = raster.block;
    let bm = if raster.exact {
        Rc::new(Vec::new())
    } else {
        ctx.window_max(bx, by)
    };
    let bpx = nx - bx + 1;
    let spx = nx - tx + 1;
    let n_cols = raster.footprint_area() as i64;
    let mut best = bound;
    for oy in 0..py {
        for ox in 0..px {
            let (prx, pry) = (raster.probe.0 as usize, raster.probe.1 as usize);
            let mut lb = ctx.heights[(oy + pry) * nx + ox + prx] as i64;
            for t in &raster.tiles {
                let v = sm[(oy + t.dy as usize) * spx + ox + t.dx as usize] as i64
                    - t.max_bottom as i64;
                lb = lb.max(v);
            }
            if lb + ptop > ctx.nz {
                continue;
            }
            // U < B, so a larger height increase loses whatever U is
            if best
                .as_ref()
                .is_some_and(|b| (lb + ptop - ctx.top).max(0) > b.delta_h as i64)
            {
                continue;
            }
            let sum_h = if raster.full_rect {
                ctx.rect_sum(ox, oy, ox + fx, oy + fy)
            } else {
                raster
                    .row_runs
                    .iter()
                    .map(|&(y, x0, x1)| {
                        let row = &ctx.row_prefix[(oy + y as usize) * (nx + 1)..];
                        row[ox + x1 as usize] - row[ox + x0 as usize]
                    })
                    .sum()
            };
            let cost_of = |tz: i64| {
                let dh = (tz + ptop - ctx.top).max(0);
                let u = n_cols * tz + raster.sum_bottom - sum_h;
                (dh, u, dh * ctx.grid_volume + u)
            };
            if let Some(b) = &best {
                if cost_of(lb).2 > b.cost {
                    continue;
                }
            }
            let tz = if raster.exact {
                lb
            } else {
                // blocks whose best case cannot beat the running lift are skipped
                let mut tz = lb;
                for b in &raster.blocks {
                    let ub = bm[(oy + b.dy as usize) * bpx + ox + b.dx as usize] as i64
                        - b.min_bottom as i64;
                    if ub <= tz {
                        continue;
                    }
                    for &(x, y, bot) in &raster.block_cols[b.start as usize..b.end as usize] {
                        let v = ctx.heights[(oy + y as usize) * nx + ox + x as usize] as i64
                            - bot as i64;
                        tz = tz.max(v);
                    }
                }
                if best.as_ref().is_some_and(|b| cost_of(tz).2 > b.cost) {
                    continue;
                }
                tz
            };
            if tz + ptop > ctx.nz {
                continue;
            }
            let (dh, u, cost) = cost_of(tz);
            let cand = Candidate {
                rotation,
                offset: [ox, oy, tz as usize],
                delta_h: dh as u32,
                underlying: u,
                cost,
                hole: None,
            };
            if best
                .as_ref()
                .is_none_or(|b| top_key(&cand).cmp(&top_key(b)) == Ordering::Less)
            {
                best = Some(cand);
            }
        }
    }
    best.filter(|b| b.rotation == rotation)
}

/// Chooses a placement for a part given one raster per rotation.
///
/// If some orientation fits entirely inside a hole region, the hole with the
/// least leftover volume wins. Otherwise every orientation is tried at every
/// footprint position, lifted until it rests on the height field, and the
/// cheapest by `dh * B + U` is taken; ties go to lower `(z, y, x)` and then
/// to the lower rotation index.
pub fn place_part(
    state: &PackState,
    rasters: &[PartRaster],
    holes_enabled: bool,
) -> Result<Candidate, PackError> {
    if holes_enabled && !state.holes().is_empty() {
        let best = rasters
            .iter()
            .enumerate()
            .filter_map(|(r, raster)| best_in_holes(state, raster, r))
            .min_by_key(hole_key);
        if let Some(b) = best {
            return Ok(b);
        }
    }
    let [nx, ny, nz] = state.dims();
    let grid_volume = i64::try_from(state.volume()).map_err(|_| PackError::Overflow)?;
    placement_cost(nz as i64, grid_volume, grid_volume)?;
    let ctx = TopContext {
        heights: state.heights(),
        prefix: prefix_sums(state.heights(), nx, ny),
        row_prefix: state
            .heights()
            .chunks(nx)
            .flat_map(|row| {
                std::iter::once(0).chain(row.iter().scan(0i64, |acc, &h| {
                    *acc += h as i64;
                    Some(*acc)
                }))
            })
            .collect(),
        nx,
        ny,
        nz: nz as i64,
        top: state.top() as i64,
        grid_volume,
        window_max: RefCell::new(Vec::new()),
    };
    let mut best: Option<Candidate> = None;
    for (r, raster) in rasters.iter().enumerate() {
        if let Some(c) = best_on_top(&ctx, raster, r, best) {
            best = Some(c);
        }
    }
    best.ok_or(PackError::NoPlacement)
}

/// Orientation for the first part: least vertical extent that fits, then the
/// smaller base; placed in the lower-left corner.
pub fn place_first(state: &PackState, rasters: &[PartRaster]) -> Result<Candidate, PackError> {
    let dims = state.dims();
    let (r, raster) = rasters
        .iter()
        .enumerate()
        .filter(|(_, ra)| (0..3).all(|a| ra.dims()[a] <= dims[a]))
        .min_by_key(|(r, ra)| (ra.dims()[2], ra.dims()[0] * ra.dims()[1], *r))
        .ok_or(PackError::NoPlacement)?;
    let offset = [0, 0, 0];
    let underlying = underlying_free_volume(raster, offset, &state.heightfield());
    let delta_h = (raster.height() as i64 - state.top() as i64).max(0);
    let grid_volume = i64::try_from(state.volume()).map_err(|_| PackError::Overflow)?;
    Ok(Candidate {
        rotation: r,
        offset,
        delta_h: delta_h as u32,
        underlying,
        cost: placement_cost(delta_h, underlying, grid_volume)?,
        hole: None,
    })
}
