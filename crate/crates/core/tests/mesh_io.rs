use std::fs;

use splitpack::report::{mesh_digest, sha256_hex};
use splitpack::tetmesh::synth::{chair, hollow_frame};
use splitpack::tetmesh::{
    load_tetmesh, obj_vertices, tetgen_text, write_obj, write_tetmesh, MeshError, ObjObject,
};

#[test]
fn tetgen_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (node, ele) = (dir.path().join("chair.node"), dir.path().join("chair.ele"));
    let mesh = chair(0.1);
    write_tetmesh(&mesh, &node, &ele).unwrap();
    let back = load_tetmesh(&node, &ele).unwrap();
    assert_eq!(back.tets(), mesh.tets());
    assert!((back.volume() - mesh.volume()).abs() < 1e-12);
    // the digest of what was written matches the in-memory digest
    let bytes = [fs::read(&node).unwrap(), fs::read(&ele).unwrap()];
    assert_eq!(
        sha256_hex(bytes.iter().map(|b| b.as_slice())),
        mesh_digest(&back)
    );
}

#[test]
fn zero_based_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let (node, ele) = (dir.path().join("t.node"), dir.path().join("t.ele"));
    fs::write(
        &node,
        "# one tet\n4 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0 0 1\n",
    )
    .unwrap();
    fs::write(&ele, "1 4 0\n0 0 1 2 3\n").unwrap();
    let mesh = load_tetmesh(&node, &ele).unwrap();
    assert_eq!(mesh.num_tets(), 1);
    assert!((mesh.volume() - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn bad_files_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let (node, ele) = (dir.path().join("t.node"), dir.path().join("t.ele"));
    fs::write(&node, "4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 x\n").unwrap();
    fs::write(&ele, "1 4 0\n1 1 2 3 4\n").unwrap();
    match load_tetmesh(&node, &ele) {
        Err(MeshError::Parse { line, .. }) => assert_eq!(line, 5),
        other => panic!("expected a parse error, got {other:?}"),
    }
    fs::write(&node, "4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n").unwrap();
    fs::write(&ele, "1 4 0\n1 1 2 3 9\n").unwrap();
    assert!(matches!(
        load_tetmesh(&node, &ele),
        Err(MeshError::IndexOutOfRange { .. })
    ));
    assert!(matches!(
        load_tetmesh(&dir.path().join("missing.node"), &ele),
        Err(MeshError::Io { .. })
    ));
}

#[test]
fn obj_export_keeps_vertices() {
    let mesh = hollow_frame(4, 1, 1, 0.5);
    let tris = mesh.boundary_surface();
    let (lo, hi) = splitpack::geometry::aabb(mesh.vertices()).unwrap();
    let text = write_obj(&[
        ObjObject::from_triangles("frame", tris.clone()),
        ObjObject::box_wireframe("box", lo, hi),
    ]);
    let verts = obj_vertices(&text);
    assert_eq!(verts.len(), tris.len() * 3 + 24);
    assert_eq!(verts[0], tris[0][0]);
    assert_eq!(text.lines().filter(|l| l.starts_with("l ")).count(), 12);
    let (n, e) = tetgen_text(&mesh);
    assert!(n.starts_with(&format!("{} 3 0 0", mesh.vertices().len())));
    assert!(e.starts_with(&format!("{} 4 0", mesh.num_tets())));
}
