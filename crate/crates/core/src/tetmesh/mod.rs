//! Tetrahedral meshes, parts (tet subsets) and the facet-adjacency dual graph.

mod dual;
mod io;
mod obj;
pub mod synth;

pub use dual::{build_dual_graph, DualGraph};
pub use io::{load_tetmesh, parse_ele, parse_node, tetgen_text, write_tetmesh};
pub use obj::{obj_vertices, write_obj, ObjObject};

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{
    aabb, approximate_mbb, convex_hull, signed_tet_volume, tet_volume, OrientedBox, Point3,
    RigidTransform,
};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("mesh has no tetrahedra")]
    Empty,
    #[error("tetrahedron {tet} references vertex {vertex}, but the mesh has {count} vertices")]
    IndexOutOfRange {
        tet: usize,
        vertex: usize,
        count: usize,
    },
    #[error("tetrahedron {0} has zero volume")]
    DegenerateTet(usize),
    #[error("tetrahedron {0} repeats the vertices of tetrahedron {1}")]
    DuplicateTet(usize, usize),
}

/// Vertices plus tetrahedra given as vertex-index quadruples.
#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Point3>,
    tets: Vec<[usize; 4]>,
}

impl TetMesh {
    /// Validates indices, rejects zero-volume and duplicate tetrahedra.
    /// Inverted (negatively oriented) elements are accepted.
    pub fn new(vertices: Vec<Point3>, tets: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        if tets.is_empty() {
            return Err(MeshError::Empty);
        }
        for (t, tet) in tets.iter().enumerate() {
            for &v in tet {
                if v >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        tet: t,
                        vertex: v,
                        count: vertices.len(),
                    });
                }
            }
        }
        let (lo, hi) = aabb(&vertices).expect("tets reference vertices");
        let scale = (hi - lo).norm();
        let min_volume = 1e-15 * scale.powi(3);
        let mut seen: HashMap<[usize; 4], usize> = HashMap::new();
        for (t, tet) in tets.iter().enumerate() {
            let [a, b, c, d] = tet.map(|i| vertices[i]);
            if tet_volume(&a, &b, &c, &d) <= min_volume {
                return Err(MeshError::DegenerateTet(t));
            }
            let mut key = *tet;
            key.sort_unstable();
            if let Some(&prev) = seen.get(&key) {
                return Err(MeshError::DuplicateTet(t, prev));
            }
            seen.insert(key, t);
        }
        Ok(TetMesh { vertices, tets })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_points(&self, t: usize) -> [Point3; 4] {
        self.tets[t].map(|i| self.vertices[i])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(t);
        tet_volume(&a, &b, &c, &d)
    }

    pub fn tet_centroid(&self, t: usize) -> Point3 {
        let p = self.tet_points(t);
        Point3::from((p[0].coords + p[1].coords + p[2].coords + p[3].coords) * 0.25)
    }

    /// Longest edge of a tetrahedron.
    pub fn tet_diameter(&self, t: usize) -> f64 {
        let p = self.tet_points(t);
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                d = d.max((p[i] - p[j]).norm());
            }
        }
        d
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn transformed(&self, t: &RigidTransform) -> TetMesh {
        TetMesh {
            vertices: self.vertices.iter().map(|p| t.apply(p)).collect(),
            tets: self.tets.clone(),
        }
    }

    /// Distinct vertex positions used by a set of tets.
    pub fn points_of(&self, tets: &[usize]) -> Vec<Point3> {
        let mut used: Vec<usize> = tets.iter().flat_map(|&t| self.tets[t]).collect();
        used.sort_unstable();
        used.dedup();
        used.into_iter().map(|v| self.vertices[v]).collect()
    }

    /// Copies a tet subset into a standalone mesh with compacted vertices.
    pub fn submesh(&self, tets: &[usize]) -> TetMesh {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut out = Vec::with_capacity(tets.len());
        for &t in tets {
            out.push(self.tets[t].map(|v| {
                *remap.entry(v).or_insert_with(|| {
                    vertices.push(self.vertices[v]);
                    vertices.len() - 1
                })
            }));
        }
        TetMesh {
            vertices,
            tets: out,
        }
    }

    /// Disjoint union of meshes.
    pub fn merge(meshes: &[TetMesh]) -> TetMesh {
        let mut vertices = Vec::new();
        let mut tets = Vec::new();
        for m in meshes {
            let off = vertices.len();
            vertices.extend_from_slice(&m.vertices);
            tets.extend(m.tets.iter().map(|t| t.map(|v| v + off)));
        }
        TetMesh { vertices, tets }
    }

    /// Boundary triangles of the whole mesh.
    pub fn boundary_surface(&self) -> Vec<[Point3; 3]> {
        let all: Vec<usize> = (0..self.tets.len()).collect();
        boundary_faces(self, &all)
            .into_iter()
            .map(|f| f.map(|v| self.vertices[v]))
            .collect()
    }
}

/// Sum of element volumes.
pub fn mesh_volume(mesh: &TetMesh) -> f64 {
    mesh.volume()
}

/// Facets of tet `t`, each oriented so its normal points away from the
/// opposite vertex.
pub fn oriented_facets(mesh: &TetMesh, t: usize) -> [[usize; 3]; 4] {
    let [a, b, c, d] = mesh.tets[t];
    let positive = {
        let p = mesh.tet_points(t);
        signed_tet_volume(&p[0], &p[1], &p[2], &p[3]) > 0.0
    };
    let faces = [[b, c, d], [a, d, c], [a, b, d], [a, c, b]];
    if positive {
        faces
    } else {
        faces.map(|[x, y, z]| [x, z, y])
    }
}

pub(crate) fn facet_key(f: &[usize; 3]) -> [usize; 3] {
    let mut k = *f;
    k.sort_unstable();
    k
}

/// Vertex-index triangles appearing in exactly one tet of `tets`, outward.
pub fn boundary_faces(mesh: &TetMesh, tets: &[usize]) -> Vec<[usize; 3]> {
    let mut count: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
    let mut order = Vec::new();
    for &t in tets {
        for f in oriented_facets(mesh, t) {
            let key = facet_key(&f);
            let e = count.entry(key).or_insert_with(|| {
                order.push(key);
                (0, f)
            });
            e.0 += 1;
        }
    }
    order
        .into_iter()
        .filter_map(|k| {
            let (n, f) = count[&k];
            (n == 1).then_some(f)
        })
        .collect()
}

/// A subset of a mesh's tetrahedra with cached volume, hull and box.
#[derive(Debug, Clone)]
pub struct PartRef {
    tets: Vec<usize>,
    volume: f64,
    hull_points: Vec<Point3>,
    mbb: OrientedBox,
}

impl PartRef {
    pub fn new(mesh: &TetMesh, mut tets: Vec<usize>, epsilon: f64) -> PartRef {
        assert!(!tets.is_empty(), "a part needs at least one tetrahedron");
        tets.sort_unstable();
        tets.dedup();
        let volume = tets.iter().map(|&t| mesh.tet_volume(t)).sum();
        let points = mesh.points_of(&tets);
        let hull_points = match convex_hull(&points) {
            Ok(h) => h.vertices,
            Err(_) => points,
        };
        let mbb = approximate_mbb(&hull_points, epsilon);
        PartRef {
            tets,
            volume,
            hull_points,
            mbb,
        }
    }

    pub fn from_cached(
        tets: Vec<usize>,
        volume: f64,
        hull_points: Vec<Point3>,
        mbb: OrientedBox,
    ) -> PartRef {
        PartRef {
            tets,
            volume,
            hull_points,
            mbb,
        }
    }

    pub fn tets(&self) -> &[usize] {
        &self.tets
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn hull_points(&self) -> &[Point3] {
        &self.hull_points
    }

    pub fn mbb(&self) -> &OrientedBox {
        &self.mbb
    }

    pub fn boundary_surface(&self, mesh: &TetMesh) -> Vec<[Point3; 3]> {
        part_boundary_surface(self, mesh)
    }
}

/// Outward boundary triangles of a part.
pub fn part_boundary_surface(part: &PartRef, mesh: &TetMesh) -> Vec<[Point3; 3]> {
    boundary_faces(mesh, part.tets())
        .into_iter()
        .map(|f| f.map(|v| mesh.vertices[v]))
        .collect()
}

/// Number of distinct vertex-sharing edges that do not bound exactly two
/// triangles; zero for a watertight surface.
pub fn open_edge_count(tris: &[[usize; 3]]) -> usize {
    let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *uses.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    uses.values().filter(|&&n| n != 2).count()
}

/// Groups tets into facet-connected components.
pub fn connected_components(mesh: &TetMesh, dual: &DualGraph) -> Vec<Vec<usize>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for start in 0..mesh.num_tets() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut i = 0;
        while i < comp.len() {
            for &n in dual.neighbors(comp[i]) {
                if seen.insert(n) {
                    comp.push(n);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
