//! WebAssembly bindings for the demo page in `www/`. Every entry point
//! returns JSON; the plain Rust versions are public for native use and tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use splitpack::bench::{random_boxes, run_bench, RandomBoxSpec};
use splitpack::geometry::{sample_rotations, Point3, Vector3};
use splitpack::packer::{PackPart, PackerConfig};
use splitpack::segmentation::{build_hierarchy, SegmentationConfig};
use splitpack::tetmesh::synth::{chair, elongated_l, hollow_frame, l_shape};
use splitpack::tetmesh::TetMesh;

#[derive(Serialize)]
struct ScenePart {
    id: usize,
    triangles: Vec<[[f64; 3]; 3]>,
}

/// Triangles to draw, plus the container when there is one.
#[derive(Serialize)]
struct Scene {
    #[serde(skip_serializing_if = "Option::is_none")]
    efficiency: Option<f64>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    box_extents: Option<[f64; 3]>,
    parts: Vec<ScenePart>,
}

fn triangles(mesh: &TetMesh, f: impl Fn(&Point3) -> Point3) -> Vec<[[f64; 3]; 3]> {
    mesh.boundary_surface()
        .iter()
        .map(|t| {
            t.map(|p| {
                let q = f(&p);
                [q.x, q.y, q.z]
            })
        })
        .collect()
}

/// Packs `count` random boxes (edges 0.1 to 0.3) and returns the scene.
pub fn pack_boxes_scene(
    count: usize,
    seed: u64,
    grid: usize,
    holes: bool,
) -> Result<String, String> {
    let spec = RandomBoxSpec {
        count,
        seed,
        ..Default::default()
    };
    let config = PackerConfig {
        grid_budget: grid,
        rotations: 6,
        holes_enabled: holes,
        base_factors: vec![0.0, 0.25, -0.25],
        ..Default::default()
    };
    let boxes = random_boxes(&spec).map_err(|e| e.to_string())?;
    let result = run_bench(&spec, &config).map_err(|e| e.to_string())?;
    let parts = result
        .placements
        .iter()
        .map(|pl| {
            let t = pl.transform();
            ScenePart {
                id: pl.part_id,
                triangles: triangles(&boxes[pl.part_id], |p| t.apply(p)),
            }
        })
        .collect();
    Ok(to_json(&Scene {
        efficiency: Some(result.efficiency),
        box_extents: Some(result.box_extents),
        parts,
    }))
}

fn shape(name: &str) -> Result<TetMesh, String> {
    Ok(match name {
        "chair" => chair(0.2),
        "l" => l_shape(4, 1, 0.25),
        "long-l" => elongated_l(0.1),
        "frame" => hollow_frame(6, 1, 2, 0.2),
        _ => return Err(format!("unknown shape `{name}`")),
    })
}

/// Splits a built-in shape into `parts` box-like parts; each part is pushed
/// away from the shape's center so the cut is visible.
pub fn segment_scene(name: &str, parts: usize) -> Result<String, String> {
    let mesh = shape(name)?;
    let tree = build_hierarchy(&mesh, &SegmentationConfig::default());
    let cut = tree.cut_with_parts(parts.max(1));
    let whole = PackPart::from_mesh(0, &mesh);
    let center = whole.mbb.center;
    let spread = 0.15 * whole.max_extent();
    let parts = cut
        .iter()
        .map(|&node| {
            let sub = mesh.submesh(&tree.tets_of(node));
            let c = sub
                .vertices()
                .iter()
                .fold(Vector3::zeros(), |a, p| a + p.coords)
                / sub.vertices().len() as f64;
            let dir = c - center.coords;
            let shift = if dir.norm() > 1e-12 {
                dir.normalize() * spread
            } else {
                Vector3::zeros()
            };
            ScenePart {
                id: node,
                triangles: triangles(&sub, |p| p + shift),
            }
        })
        .collect();
    Ok(to_json(&Scene {
        efficiency: None,
        box_extents: None,
        parts,
    }))
}

/// Sampled rotations as `[w, x, y, z]` quaternions.
pub fn rotations_json(count: usize, seed: u64) -> String {
    let qs: Vec<[f64; 4]> = sample_rotations(count, seed)
        .iter()
        .map(|q| [q.w, q.i, q.j, q.k])
        .collect();
    to_json(&qs)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("scenes serialize")
}

#[wasm_bindgen]
pub fn pack_boxes(count: usize, seed: u64, grid: usize, holes: bool) -> Result<String, JsValue> {
    pack_boxes_scene(count, seed, grid, holes).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn segment_shape(name: &str, parts: usize) -> Result<String, JsValue> {
    segment_scene(name, parts).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sample_rotation_quaternions(count: usize, seed: u64) -> String {
    rotations_json(count, seed)
}
