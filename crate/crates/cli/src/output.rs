//! Files written after a packing: placements, arrangement and part OBJs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use splitpack::geometry::Point3;
use splitpack::packer::{PackingResult, Placement};
use splitpack::tetmesh::{write_obj, ObjObject, TetMesh};

use crate::commands::{load_mesh, CliError};

/// One packed part and where its geometry comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedPart {
    pub part_id: usize,
    /// Mesh path as given on the command line.
    pub mesh: String,
    /// Tetrahedra of `mesh` forming the part; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tets: Option<Vec<usize>>,
    /// `[w, x, y, z]`.
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementsFile {
    pub box_extents: [f64; 3],
    pub efficiency: f64,
    pub parts: Vec<PlacedPart>,
}

/// Where part `i` of a packing comes from.
pub struct PartSource {
    pub mesh: String,
    pub tets: Option<Vec<usize>>,
}

impl PlacementsFile {
    pub fn new(result: &PackingResult, sources: &[PartSource]) -> PlacementsFile {
        PlacementsFile {
            box_extents: result.box_extents,
            efficiency: result.efficiency,
            parts: result
                .placements
                .iter()
                .map(|p| PlacedPart {
                    part_id: p.part_id,
                    mesh: sources[p.part_id].mesh.clone(),
                    tets: sources[p.part_id].tets.clone(),
                    quaternion: p.quaternion,
                    translation: p.translation,
                })
                .collect(),
        }
    }

    fn placement(p: &PlacedPart) -> Placement {
        Placement {
            part_id: p.part_id,
            order: 0,
            rotation_index: 0,
            quaternion: p.quaternion,
            translation: p.translation,
            voxel_offset: [0; 3],
            delta_h: 0,
            underlying: 0,
            cost: 0,
            in_hole: false,
        }
    }
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn part_mesh(mesh: &TetMesh, tets: &Option<Vec<usize>>) -> TetMesh {
    match tets {
        Some(t) => mesh.submesh(t),
        None => mesh.clone(),
    }
}

/// Writes `placements.json`, `packed.obj` (parts in their packed pose plus
/// the container as a wireframe) and `parts/part_<id>.obj` in model
/// coordinates. Meshes are looked up in `meshes` by path before loading.
pub fn write_arrangement(
    out_dir: &Path,
    file: &PlacementsFile,
    meshes: &mut HashMap<String, TetMesh>,
) -> Result<(), CliError> {
    let parts_dir = out_dir.join("parts");
    create_dir(&parts_dir)?;
    let mut packed = Vec::with_capacity(file.parts.len() + 1);
    for p in &file.parts {
        if !meshes.contains_key(&p.mesh) {
            let m = load_mesh(&PathBuf::from(&p.mesh))?.0;
            meshes.insert(p.mesh.clone(), m);
        }
        let mesh = part_mesh(&meshes[&p.mesh], &p.tets);
        let surface = mesh.boundary_surface();
        let t = PlacementsFile::placement(p).transform();
        let posed: Vec<[Point3; 3]> = surface.iter().map(|tri| tri.map(|v| t.apply(&v))).collect();
        packed.push(ObjObject::from_triangles(
            format!("part_{}", p.part_id),
            posed,
        ));
        write_file(
            &parts_dir.join(format!("part_{}.obj", p.part_id)),
            write_obj(&[ObjObject::from_triangles(
                format!("part_{}", p.part_id),
                surface,
            )]),
        )?;
    }
    packed.push(ObjObject::box_wireframe(
        "container",
        Point3::origin(),
        Point3::from(file.box_extents),
    ));
    write_file(&out_dir.join("packed.obj"), write_obj(&packed))?;
    write_file(
        &out_dir.join("placements.json"),
        serde_json::to_string_pretty(file).expect("placements serialize"),
    )
}
