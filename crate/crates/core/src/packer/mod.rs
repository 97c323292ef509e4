//! Single-container packing of rigid parts on a voxel grid.
//!
//! Parts are axis-aligned through their bounding boxes, tried in a fixed set
//! of orientations, and inserted one by one (largest first). Each insertion
//! prefers a hole (free space already covered from above) that the part fits
//! into; otherwise the part is rested on the current upper surface where it
//! raises the container least, then leaves the least free volume underneath.
//! The whole insertion is repeated for several base sizes of the container
//! and the tightest result is kept.

mod grid;
mod raster;
mod search;

pub use grid::{HeightField, HoleRegion, PackState, RasterError, VoxelClass};
pub use raster::{rasterize_tets, PartRaster, RasterColumn};
pub use search::{
    place_first, place_part, placement_cost, shrink_hole, underlying_free_volume, Candidate,
};

use std::collections::HashMap;

use nalgebra::Matrix3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    aabb, align_to_box, approximate_mbb, convex_hull, packing_rotations, OrientedBox, Point3,
    RigidTransform, UnitQuaternion, Vector3,
};
use crate::tetmesh::TetMesh;

/// RNG stream for the random insertion order.
pub const ORDER_STREAM: u64 = 3;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PackError {
    #[error("no valid position for a part in any orientation")]
    NoPlacement,
    #[error("placement cost exceeds 64-bit range; lower the grid budget")]
    Overflow,
    #[error("invalid packer configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InsertionOrder {
    /// Decreasing longest bounding-box edge.
    #[default]
    Sorted,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PackerConfig {
    /// Voxels along the container's longest axis.
    pub grid_budget: usize,
    pub rotations: usize,
    pub seed: u64,
    /// Relative growth of the container base, tried on X and Y independently.
    pub base_factors: Vec<f64>,
    pub base_max_x: Option<f64>,
    pub base_max_y: Option<f64>,
    pub holes_enabled: bool,
    pub insertion_order: InsertionOrder,
}

impl Default for PackerConfig {
    fn default() -> Self {
        PackerConfig {
            grid_budget: 256,
            rotations: 10,
            seed: 0,
            base_factors: vec![0.0, 0.25, 0.5, -0.25],
            base_max_x: None,
            base_max_y: None,
            holes_enabled: true,
            insertion_order: InsertionOrder::Sorted,
        }
    }
}

impl PackerConfig {
    fn validate(&self) -> Result<(), PackError> {
        if self.grid_budget == 0 {
            return Err(PackError::InvalidConfig("grid_budget must be positive"));
        }
        if self.rotations == 0 {
            return Err(PackError::InvalidConfig("rotations must be positive"));
        }
        if self.base_factors.is_empty() {
            return Err(PackError::InvalidConfig("base_factors is empty"));
        }
        if self
            .base_factors
            .iter()
            .any(|f| !f.is_finite() || *f <= -1.0)
        {
            return Err(PackError::InvalidConfig(
                "base factors must be finite and greater than -1",
            ));
        }
        Ok(())
    }
}

/// A rigid part to pack, as a soup of tetrahedra.
#[derive(Debug, Clone)]
pub struct PackPart {
    pub id: usize,
    pub tets: Vec<[Point3; 4]>,
    pub volume: f64,
    pub hull_points: Vec<Point3>,
    pub mbb: OrientedBox,
}

impl PackPart {
    pub fn new(id: usize, tets: Vec<[Point3; 4]>) -> PackPart {
        assert!(!tets.is_empty(), "a part needs at least one tetrahedron");
        let volume = tets
            .iter()
            .map(|t| crate::geometry::tet_volume(&t[0], &t[1], &t[2], &t[3]))
            .sum();
        let points: Vec<Point3> = tets.iter().flatten().copied().collect();
        let hull_points = match convex_hull(&points) {
            Ok(h) => h.vertices,
            Err(_) => points,
        };
        let mbb = approximate_mbb(&hull_points, 0.01);
        PackPart {
            id,
            tets,
            volume,
            hull_points,
            mbb,
        }
    }

    pub fn from_mesh(id: usize, mesh: &TetMesh) -> PackPart {
        Self::from_tets(id, mesh, &(0..mesh.num_tets()).collect::<Vec<_>>())
    }

    pub fn from_tets(id: usize, mesh: &TetMesh, tets: &[usize]) -> PackPart {
        PackPart::new(id, tets.iter().map(|&t| mesh.tet_points(t)).collect())
    }

    pub fn max_extent(&self) -> f64 {
        self.mbb.max_extent()
    }
}

/// Container extents with the longest axis on Z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Container {
    pub extents: [f64; 3],
}

impl Container {
    pub fn new(mut extents: [f64; 3]) -> Container {
        extents.sort_by(f64::total_cmp);
        Container { extents }
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }
}

/// Bounding box of all parts together, reoriented so its longest axis is
/// vertical.
pub fn init_container(parts: &[PackPart]) -> Container {
    let points: Vec<Point3> = parts
        .iter()
        .flat_map(|p| p.hull_points.iter().copied())
        .collect();
    Container::new(approximate_mbb(&points, 0.01).extents())
}

/// Grid size for a base variation: X and Y grown by the factors, height
/// chosen so the container volume stays the same; same voxel size for all.
pub fn grid_dims(
    container: &Container,
    voxel_size: f64,
    factor_x: f64,
    factor_y: f64,
) -> [usize; 3] {
    let [ex, ey, ez] = container.extents;
    let x = ex * (1.0 + factor_x);
    let y = ey * (1.0 + factor_y);
    let z = ex * ey * ez / (x * y);
    [x, y, z].map(|v| ((v / voxel_size - 1e-9).ceil() as usize).max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub part_id: usize,
    /// Position in the insertion sequence.
    pub order: usize,
    pub rotation_index: usize,
    /// `[w, x, y, z]`.
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
    pub voxel_offset: [usize; 3],
    pub delta_h: u32,
    pub underlying: i64,
    pub cost: i64,
    pub in_hole: bool,
}

impl Placement {
    pub fn transform(&self) -> RigidTransform {
        let [w, x, y, z] = self.quaternion;
        RigidTransform::new(
            UnitQuaternion::new_normalize(nalgebra::Quaternion::new(w, x, y, z)),
            Vector3::from(self.translation),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseVariation {
    pub index: usize,
    pub factor_x: f64,
    pub factor_y: f64,
    pub dims: [usize; 3],
    /// The volume-preserving height was too low and the grid was raised to
    /// the stacked height of all parts.
    pub raised: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    /// Sorted by part id.
    pub placements: Vec<Placement>,
    pub box_extents: [f64; 3],
    pub efficiency: f64,
    pub parts_volume: f64,
    pub variation: BaseVariation,
    pub voxel_size: f64,
    /// Grid corner in the result frame (box minimum at the origin).
    pub grid_origin: [f64; 3],
    pub elapsed_ms: f64,
}

impl PackingResult {
    pub fn box_volume(&self) -> f64 {
        self.box_extents.iter().product()
    }
}

struct Prepared {
    align: RigidTransform,
    rasters: Vec<PartRaster>,
}

fn prepare(part: &PackPart, rotations: &[UnitQuaternion], voxel_size: f64) -> Prepared {
    let align = align_to_box(&part.mbb);
    let aligned: Vec<[Point3; 4]> = part
        .tets
        .iter()
        .map(|t| t.map(|p| align.apply(&p)))
        .collect();
    let rasters = rotations
        .iter()
        .map(|q| {
            let posed: Vec<[Point3; 4]> = aligned.iter().map(|t| t.map(|p| q * p)).collect();
            rasterize_tets(&posed, voxel_size)
        })
        .collect();
    Prepared { align, rasters }
}

struct Outcome {
    variation: BaseVariation,
    placed: Vec<(usize, Candidate)>,
    box_min: Point3,
    box_extents: [f64; 3],
    efficiency: f64,
}

fn insert_all(
    prepared: &[Prepared],
    order: &[usize],
    dims: [usize; 3],
    holes: bool,
) -> Result<Vec<(usize, Candidate)>, PackError> {
    let mut state = PackState::new(dims);
    let mut placed = Vec::with_capacity(order.len());
    for (k, &p) in order.iter().enumerate() {
        let rasters = &prepared[p].rasters;
        let c = if k == 0 {
            place_first(&state, rasters)?
        } else {
            place_part(&state, rasters, holes)?
        };
        state
            .commit(&rasters[c.rotation], c.offset, p as u32 + 1)
            .expect("search returns free positions");
        placed.push((p, c));
    }
    Ok(placed)
}

fn posed_transform(
    prep: &Prepared,
    rotation: &UnitQuaternion,
    c: &Candidate,
    voxel_size: f64,
) -> RigidTransform {
    let raster = &prep.rasters[c.rotation];
    let o = Vector3::new(c.offset[0] as f64, c.offset[1] as f64, c.offset[2] as f64) * voxel_size;
    let t = o - raster.anchor();
    RigidTransform::new(
        rotation * prep.align.rotation,
        rotation * prep.align.translation + t,
    )
}

/// Packs the parts into the smallest container found over all base variations.
pub fn pack(
    parts: &[PackPart],
    container: &Container,
    config: &PackerConfig,
) -> Result<PackingResult, PackError> {
    config.validate()?;
    if parts.is_empty() {
        return Err(PackError::InvalidConfig("no parts to pack"));
    }
    let start = crate::Instant::now();
    let max_extent = container.extents[2];
    if max_extent.is_nan() || max_extent <= 0.0 {
        return Err(PackError::InvalidConfig("container has no extent"));
    }
    let voxel_size = max_extent / config.grid_budget as f64;
    let rotations = packing_rotations(config.rotations, config.seed);
    let prepared: Vec<Prepared> = parts
        .par_iter()
        .map(|p| prepare(p, &rotations, voxel_size))
        .collect();

    let mut order: Vec<usize> = (0..parts.len()).collect();
    match config.insertion_order {
        InsertionOrder::Sorted => order.sort_by(|&a, &b| {
            parts[b]
                .max_extent()
                .total_cmp(&parts[a].max_extent())
                .then(parts[a].id.cmp(&parts[b].id))
        }),
        InsertionOrder::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(ORDER_STREAM);
            order.shuffle(&mut rng);
        }
    }

    let mut variations = Vec::new();
    for &fx in &config.base_factors {
        for &fy in &config.base_factors {
            let (bx, by) = (
                container.extents[0] * (1.0 + fx),
                container.extents[1] * (1.0 + fy),
            );
            if config.base_max_x.is_some_and(|m| bx > m)
                || config.base_max_y.is_some_and(|m| by > m)
            {
                continue;
            }
            variations.push((variations.len(), fx, fy));
        }
    }
    if variations.is_empty() {
        return Err(PackError::InvalidConfig(
            "every base variation exceeds the base size limits",
        ));
    }
    let stacked: usize = prepared
        .iter()
        .map(|p| p.rasters.iter().map(|r| r.dims()[2]).max().unwrap_or(0))
        .sum();
    let parts_volume: f64 = parts.iter().map(|p| p.volume).sum();

    let outcomes: Vec<Result<Outcome, PackError>> = variations
        .par_iter()
        .map(|&(index, fx, fy)| {
            let mut dims = grid_dims(container, voxel_size, fx, fy);
            let mut raised = false;
            let placed = match insert_all(&prepared, &order, dims, config.holes_enabled) {
                Ok(p) => p,
                Err(PackError::NoPlacement) if stacked > dims[2] => {
                    dims[2] = stacked;
                    raised = true;
                    insert_all(&prepared, &order, dims, config.holes_enabled)?
                }
                Err(e) => return Err(e),
            };
            let mut lo = Point3::from(Vector3::repeat(f64::INFINITY));
            let mut hi = Point3::from(Vector3::repeat(f64::NEG_INFINITY));
            for (p, c) in &placed {
                let t = posed_transform(&prepared[*p], &rotations[c.rotation], c, voxel_size);
                let pts: Vec<Point3> = parts[*p].hull_points.iter().map(|q| t.apply(q)).collect();
                let (a, b) = aabb(&pts).expect("parts have points");
                lo = lo.inf(&a);
                hi = hi.sup(&b);
            }
            let ext = hi - lo;
            let box_extents = [ext.x, ext.y, ext.z];
            let vol: f64 = box_extents.iter().product();
            let efficiency = if vol > 0.0 { parts_volume / vol } else { 0.0 };
            log::debug!("variation {index} ({fx}, {fy}) dims {dims:?}: efficiency {efficiency:.4}");
            Ok(Outcome {
                variation: BaseVariation {
                    index,
                    factor_x: fx,
                    factor_y: fy,
                    dims,
                    raised,
                },
                placed,
                box_min: lo,
                box_extents,
                efficiency,
            })
        })
        .collect();

    let mut best: Option<Outcome> = None;
    let mut first_err = None;
    for o in outcomes {
        match o {
            Ok(o) => {
                if best.as_ref().is_none_or(|b| o.efficiency > b.efficiency) {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.unwrap_or(PackError::NoPlacement));
    };

    let shift = -best.box_min.coords;
    let mut placements: Vec<Placement> = best
        .placed
        .iter()
        .enumerate()
        .map(|(k, (p, c))| {
            let t = posed_transform(&prepared[*p], &rotations[c.rotation], c, voxel_size);
            let t = RigidTransform::new(t.rotation, t.translation + shift);
            Placement {
                part_id: parts[*p].id,
                order: k,
                rotation_index: c.rotation,
                quaternion: t.quaternion_wxyz(),
                translation: [t.translation.x, t.translation.y, t.translation.z],
                voxel_offset: c.offset,
                delta_h: c.delta_h,
                underlying: c.underlying,
                cost: c.cost,
                in_hole: c.hole.is_some(),
            }
        })
        .collect();
    placements.sort_by_key(|p| p.part_id);
    Ok(PackingResult {
        placements,
        box_extents: best.box_extents,
        efficiency: best.efficiency,
        parts_volume,
        variation: best.variation,
        voxel_size,
        grid_origin: [shift.x, shift.y, shift.z],
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Independent re-check of a packing by re-voxelizing every placed part on
/// the result's lattice.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    /// Voxels claimed by more than one part.
    pub overlaps: usize,
    /// Part voxels or vertices outside the reported box.
    pub out_of_box: usize,
    /// Largest relative change of a part's volume under its placement.
    pub max_volume_error: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.overlaps == 0 && self.out_of_box == 0 && self.max_volume_error <= 1e-9
    }
}

pub fn validate_packing(parts: &[PackPart], result: &PackingResult) -> ValidationReport {
    let s = result.voxel_size;
    let origin = Vector3::from(result.grid_origin);
    let ext = Vector3::from(result.box_extents);
    let tol = 1e-9 * (1.0 + ext.norm());
    let mut owner: HashMap<[i64; 3], usize> = HashMap::new();
    let mut report = ValidationReport::default();
    for pl in &result.placements {
        let part = parts
            .iter()
            .find(|p| p.id == pl.part_id)
            .expect("placement refers to a part");
        let t = pl.transform();
        let mut placed_volume = 0.0;
        let mut claimed: Vec<[i64; 3]> = Vec::new();
        for tet in &part.tets {
            let q = tet.map(|p| t.apply(&p));
            placed_volume += crate::geometry::tet_volume(&q[0], &q[1], &q[2], &q[3]);
            for p in &q {
                if (0..3).any(|a| p[a] < -tol || p[a] > ext[a] + tol) {
                    report.out_of_box += 1;
                }
            }
            let m = Matrix3::from_columns(&[q[1] - q[0], q[2] - q[0], q[3] - q[0]]);
            let Some(inv) = m.try_inverse() else { continue };
            let mut range = [(0i64, 0i64); 3];
            for a in 0..3 {
                let lo = q.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
                let hi = q.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
                range[a] = (
                    ((lo - origin[a]) / s - 0.5).ceil() as i64,
                    ((hi - origin[a]) / s - 0.5).floor() as i64,
                );
            }
            for k in range[2].0..=range[2].1 {
                for j in range[1].0..=range[1].1 {
                    for i in range[0].0..=range[0].1 {
                        let c = Point3::from(
                            origin
                                + Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * s,
                        );
                        let l = inv * (c - q[0]);
                        let m = 1e-9;
                        if l.x > m && l.y > m && l.z > m && l.x + l.y + l.z < 1.0 - m {
                            claimed.push([i, j, k]);
                        }
                    }
                }
            }
        }
        claimed.sort_unstable();
        claimed.dedup();
        for v in claimed {
            let c =
                origin + Vector3::new(v[0] as f64 + 0.5, v[1] as f64 + 0.5, v[2] as f64 + 0.5) * s;
            if (0..3).any(|a| c[a] < -tol || c[a] > ext[a] + tol) {
                report.out_of_box += 1;
            }
            if owner.insert(v, pl.part_id).is_some() {
                report.overlaps += 1;
            }
        }
        let err = (placed_volume - part.volume).abs() / part.volume.max(f64::MIN_POSITIVE);
        report.max_volume_error = report.max_volume_error.max(err);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tetmesh::synth::{box5, cube5, hollow_frame, l_shape};

    fn cfg(budget: usize) -> PackerConfig {
        PackerConfig {
            grid_budget: budget,
            ..Default::default()
        }
    }

    #[test]
    fn container_rules() {
        let cube = [PackPart::from_mesh(0, &cube5(1.0))];
        let c = init_container(&cube);
        assert_eq!(grid_dims(&c, 1.0 / 256.0, 0.0, 0.0), [256, 256, 256]);
        let bar = [PackPart::from_mesh(0, &box5([2.0, 1.0, 1.0]))];
        let c = init_container(&bar);
        assert_eq!(grid_dims(&c, 2.0 / 256.0, 0.0, 0.0), [128, 128, 256]);
        let plate = [PackPart::from_mesh(0, &box5([1.0, 1.0, 0.001]))];
        let c = init_container(&plate);
        assert_eq!(grid_dims(&c, 1.0 / 256.0, 0.0, 0.0)[0], 1);
        // growing the base keeps the volume
        let d = grid_dims(&Container::new([1.0, 1.0, 1.0]), 0.01, 0.25, 0.25);
        assert_eq!(d, [125, 125, 64]);
    }

    #[test]
    fn single_box_packs_tightly() {
        let parts = [PackPart::from_mesh(7, &box5([0.3, 0.5, 0.7]))];
        let r = pack(&parts, &init_container(&parts), &cfg(64)).unwrap();
        assert!(
            r.efficiency >= 0.95 && r.efficiency <= 1.0 + 1e-9,
            "{}",
            r.efficiency
        );
        assert_eq!(r.placements[0].part_id, 7);
        assert!(validate_packing(&parts, &r).is_valid());
    }

    #[test]
    fn two_cubes_pack_side_by_side() {
        let parts = [
            PackPart::from_mesh(0, &cube5(1.0)),
            PackPart::from_mesh(1, &cube5(1.0)),
        ];
        let r = pack(&parts, &init_container(&parts), &cfg(32)).unwrap();
        assert!(r.box_volume() <= 2.2, "{:?}", r.box_extents);
        assert!(validate_packing(&parts, &r).is_valid());
    }

    #[test]
    fn pieces_of_a_frame_pack_validly() {
        let frame = hollow_frame(5, 1, 2, 0.2);
        let l = l_shape(3, 1, 0.25);
        let parts = [
            PackPart::from_mesh(0, &frame),
            PackPart::from_mesh(1, &l),
            PackPart::from_mesh(2, &box5([0.3, 0.3, 0.3])),
            PackPart::from_mesh(3, &box5([0.2, 0.5, 0.1])),
        ];
        for holes in [true, false] {
            let c = PackerConfig {
                holes_enabled: holes,
                ..cfg(48)
            };
            let r = pack(&parts, &init_container(&parts), &c).unwrap();
            let v = validate_packing(&parts, &r);
            assert!(v.is_valid(), "{v:?}");
            assert!(r.efficiency > 0.0 && r.efficiency <= 1.0);
        }
    }

    #[test]
    fn deterministic() {
        let parts: Vec<PackPart> = (0..6)
            .map(|i| PackPart::from_mesh(i, &box5([0.1 + 0.05 * i as f64, 0.2, 0.15])))
            .collect();
        let c = Container::new([0.5, 0.5, 0.5]);
        let a = pack(&parts, &c, &cfg(40)).unwrap();
        let b = pack(&parts, &c, &cfg(40)).unwrap();
        assert_eq!(a.placements, b.placements);
        assert_eq!(a.efficiency, b.efficiency);
    }

    #[test]
    fn config_errors() {
        let parts = [PackPart::from_mesh(0, &cube5(1.0))];
        let c = init_container(&parts);
        let bad = PackerConfig {
            rotations: 0,
            ..Default::default()
        };
        assert!(matches!(
            pack(&parts, &c, &bad),
            Err(PackError::InvalidConfig(_))
        ));
        let limited = PackerConfig {
            base_max_x: Some(0.5),
            ..cfg(16)
        };
        assert!(matches!(
            pack(&parts, &c, &limited),
            Err(PackError::InvalidConfig(_))
        ));
        let ok = PackerConfig {
            base_max_x: Some(1.0),
            base_max_y: Some(1.0),
            ..cfg(16)
        };
        let r = pack(&parts, &c, &ok).unwrap();
        assert!(r.variation.factor_x <= 0.0 && r.variation.factor_y <= 0.0);
    }

    #[test]
    fn config_json_defaults() {
        let c: PackerConfig = serde_json::from_str(r#"{"seed": 5}"#).unwrap();
        assert_eq!(c.grid_budget, 256);
        assert_eq!(c.rotations, 10);
        assert_eq!(c.base_factors, vec![0.0, 0.25, 0.5, -0.25]);
        assert!(c.holes_enabled);
        assert_eq!(c.insertion_order, InsertionOrder::Sorted);
        let back: PackerConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
