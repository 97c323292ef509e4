//! Synthetic solids used by tests, benchmarks and the demo.

use std::collections::HashMap;

use super::TetMesh;
use crate::geometry::{Point3, Vector3};

/// Axis-aligned box `[0, ex] x [0, ey] x [0, ez]` split into five tetrahedra
/// (four corner tets around a central one). Vertex `i` sits at bit pattern
/// `(x, y, z) = (i & 1, i >> 1 & 1, i >> 2 & 1)`.
pub fn box5(extents: [f64; 3]) -> TetMesh {
    let vertices = (0..8)
        .map(|i| {
            Point3::new(
                (i & 1) as f64 * extents[0],
                (i >> 1 & 1) as f64 * extents[1],
                (i >> 2 & 1) as f64 * extents[2],
            )
        })
        .collect();
    let tets = vec![
        [0, 1, 2, 4],
        [3, 1, 2, 7],
        [5, 1, 4, 7],
        [6, 2, 4, 7],
        [1, 2, 4, 7],
    ];
    TetMesh::new(vertices, tets).expect("box with positive extents")
}

pub fn cube5(side: f64) -> TetMesh {
    box5([side; 3])
}

/// Union of unit lattice cells scaled by `cell`, each split into six
/// tetrahedra around its main diagonal. Shared faces are conforming, so the
/// result is a valid solid mesh.
pub fn kuhn_solid(cells: &[[i32; 3]], cell: f64) -> TetMesh {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut index: HashMap<[i32; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vid = |p: [i32; 3], vertices: &mut Vec<Point3>| {
        *index.entry(p).or_insert_with(|| {
            vertices.push(Point3::new(
                p[0] as f64 * cell,
                p[1] as f64 * cell,
                p[2] as f64 * cell,
            ));
            vertices.len() - 1
        })
    };
    let mut tets = Vec::with_capacity(cells.len() * 6);
    for c in cells {
        for perm in PERMS {
            let mut p = *c;
            let mut tet = [0usize; 4];
            tet[0] = vid(p, &mut vertices);
            for (k, &axis) in perm.iter().enumerate() {
                p[axis] += 1;
                tet[k + 1] = vid(p, &mut vertices);
            }
            tets.push(tet);
        }
    }
    TetMesh::new(vertices, tets).expect("distinct lattice cells")
}

/// All cells of an `nx x ny x nz` block with its minimum corner at `origin`.
pub fn block(origin: [i32; 3], dims: [i32; 3]) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                out.push([origin[0] + x, origin[1] + y, origin[2] + z]);
            }
        }
    }
    out
}

fn union(blocks: &[Vec<[i32; 3]>]) -> Vec<[i32; 3]> {
    let mut cells: Vec<[i32; 3]> = blocks.concat();
    cells.sort_unstable();
    cells.dedup();
    cells
}

/// L-shaped solid: two arms of `arm` cells with a square `thick` x `thick`
/// section meeting at a corner.
pub fn l_shape(arm: i32, thick: i32, cell: f64) -> TetMesh {
    kuhn_solid(
        &union(&[
            block([0, 0, 0], [arm, thick, thick]),
            block([0, 0, 0], [thick, arm, thick]),
        ]),
        cell,
    )
}

/// L with one arm much longer than the other: 12 x 2 x 2 cells along X and
/// 2 x 8 x 2 along Y, sharing the corner.
pub fn elongated_l(cell: f64) -> TetMesh {
    kuhn_solid(
        &union(&[block([0, 0, 0], [12, 2, 2]), block([0, 0, 0], [2, 8, 2])]),
        cell,
    )
}

/// Stylized chair: seat slab, backrest and four legs.
pub fn chair(cell: f64) -> TetMesh {
    kuhn_solid(
        &union(&[
            block([0, 0, 4], [5, 5, 1]),
            block([0, 4, 5], [5, 1, 5]),
            block([0, 0, 0], [1, 1, 4]),
            block([4, 0, 0], [1, 1, 4]),
            block([0, 4, 0], [1, 1, 4]),
            block([4, 4, 0], [1, 1, 4]),
        ]),
        cell,
    )
}

/// Square ring of `outer` cells with a `wall`-thick rim and height `height`.
pub fn hollow_frame(outer: i32, wall: i32, height: i32, cell: f64) -> TetMesh {
    kuhn_solid(
        &union(&[
            block([0, 0, 0], [outer, wall, height]),
            block([0, outer - wall, 0], [outer, wall, height]),
            block([0, 0, 0], [wall, outer, height]),
            block([outer - wall, 0, 0], [wall, outer, height]),
        ]),
        cell,
    )
}

/// Translates a mesh by `offset`.
pub fn translated(mesh: &TetMesh, offset: Vector3) -> TetMesh {
    mesh.transformed(&crate::geometry::RigidTransform::from_translation(offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_have_expected_volumes() {
        assert!((box5([2.0, 1.0, 0.5]).volume() - 1.0).abs() < 1e-12);
        assert!((l_shape(4, 1, 1.0).volume() - 7.0).abs() < 1e-9);
        assert_eq!(l_shape(4, 1, 1.0).num_tets(), 42);
        assert!((hollow_frame(4, 1, 1, 1.0).volume() - 12.0).abs() < 1e-9);
        assert!((chair(1.0).volume() - (25.0 + 25.0 + 16.0)).abs() < 1e-9);
    }
}
