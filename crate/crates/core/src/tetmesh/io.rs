//! TetGen-style ASCII `.node` / `.ele` files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{MeshError, TetMesh};
use crate::geometry::Point3;

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(
    tok: &str,
    path: &Path,
    line: usize,
    what: &str,
) -> Result<T, MeshError> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{tok}`")))
}

/// Parses a `.node` file. Returns the points and the index base (0 or 1) of
/// the first listed node.
pub fn parse_node(text: &str, path: &Path) -> Result<(Vec<Point3>, usize), MeshError> {
    let mut lines = data_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let count: usize = num(header[0], path, hline, "node count")?;
    if header.len() > 1 && header[1] != "3" {
        return Err(parse_err(
            path,
            hline,
            format!("expected dimension 3, found {}", header[1]),
        ));
    }
    if count == 0 {
        return Err(parse_err(path, hline, "no nodes"));
    }
    let mut points = Vec::with_capacity(count);
    let mut base = 0;
    for k in 0..count {
        let (ln, toks) = lines
            .next()
            .ok_or_else(|| parse_err(path, hline, format!("expected {count} nodes, found {k}")))?;
        if toks.len() < 4 {
            return Err(parse_err(
                path,
                ln,
                "node line needs an index and three coordinates",
            ));
        }
        let idx: usize = num(toks[0], path, ln, "node index")?;
        if k == 0 {
            if idx > 1 {
                return Err(parse_err(path, ln, "first node index must be 0 or 1"));
            }
            base = idx;
        }
        if idx != base + k {
            return Err(parse_err(
                path,
                ln,
                format!("expected node index {}, found {idx}", base + k),
            ));
        }
        let x: f64 = num(toks[1], path, ln, "coordinate")?;
        let y: f64 = num(toks[2], path, ln, "coordinate")?;
        let z: f64 = num(toks[3], path, ln, "coordinate")?;
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(parse_err(path, ln, "non-finite coordinate"));
        }
        points.push(Point3::new(x, y, z));
    }
    Ok((points, base))
}

/// Parses an `.ele` file whose vertex references use `base`.
pub fn parse_ele(text: &str, path: &Path, base: usize) -> Result<Vec<[usize; 4]>, MeshError> {
    let mut lines = data_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty element file"))?;
    let count: usize = num(header[0], path, hline, "element count")?;
    if count == 0 {
        return Err(parse_err(path, hline, "no elements"));
    }
    if header.len() > 1 && header[1] != "4" {
        return Err(parse_err(
            path,
            hline,
            format!("expected 4 nodes per element, found {}", header[1]),
        ));
    }
    let mut tets = Vec::with_capacity(count);
    for k in 0..count {
        let (ln, toks) = lines.next().ok_or_else(|| {
            parse_err(path, hline, format!("expected {count} elements, found {k}"))
        })?;
        if toks.len() < 5 {
            return Err(parse_err(
                path,
                ln,
                "element line needs an index and four vertices",
            ));
        }
        let mut tet = [0usize; 4];
        for (slot, tok) in tet.iter_mut().zip(&toks[1..5]) {
            let v: usize = num(tok, path, ln, "vertex index")?;
            *slot = v.checked_sub(base).ok_or_else(|| {
                parse_err(path, ln, format!("vertex index {v} below base {base}"))
            })?;
        }
        tets.push(tet);
    }
    Ok(tets)
}

/// Loads and validates a mesh from a `.node` / `.ele` pair.
pub fn load_tetmesh(node_path: &Path, ele_path: &Path) -> Result<TetMesh, MeshError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| MeshError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let (points, base) = parse_node(&read(node_path)?, node_path)?;
    let tets = parse_ele(&read(ele_path)?, ele_path, base)?;
    TetMesh::new(points, tets)
}

/// 1-based `.node` and `.ele` file contents.
pub fn tetgen_text(mesh: &TetMesh) -> (String, String) {
    let mut node = format!("{} 3 0 0\n", mesh.vertices().len());
    for (i, p) in mesh.vertices().iter().enumerate() {
        writeln!(node, "{} {} {} {}", i + 1, p.x, p.y, p.z).unwrap();
    }
    let mut ele = format!("{} 4 0\n", mesh.num_tets());
    for (i, t) in mesh.tets().iter().enumerate() {
        writeln!(
            ele,
            "{} {} {} {} {}",
            i + 1,
            t[0] + 1,
            t[1] + 1,
            t[2] + 1,
            t[3] + 1
        )
        .unwrap();
    }
    (node, ele)
}

/// Writes a 1-based `.node` / `.ele` pair.
pub fn write_tetmesh(mesh: &TetMesh, node_path: &Path, ele_path: &Path) -> std::io::Result<()> {
    let (node, ele) = tetgen_text(mesh);
    fs::write(node_path, node)?;
    fs::write(ele_path, ele)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tetmesh::synth::cube5;

    const CUBE_NODE: &str = "# unit cube\n8 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 1 1 0\n5 0 0 1\n6 1 0 1\n7 0 1 1\n8 1 1 1\n";
    const CUBE_ELE: &str =
        "5 4 0\n1 1 2 3 5\n2 4 2 3 8\n3 6 2 5 8\n4 7 3 5 8  # corner\n5 2 3 5 8\n";

    #[test]
    fn loads_one_based_cube_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (n, e) = (dir.path().join("c.node"), dir.path().join("c.ele"));
        fs::write(&n, CUBE_NODE).unwrap();
        fs::write(&e, CUBE_ELE).unwrap();
        let m = load_tetmesh(&n, &e).unwrap();
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.num_tets(), 5);
        assert!((m.volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_based_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (n, e) = (dir.path().join("c.node"), dir.path().join("c.ele"));
        let m = cube5(2.0);
        write_tetmesh(&m, &n, &e).unwrap();
        let back = load_tetmesh(&n, &e).unwrap();
        assert_eq!(back.tets(), m.tets());

        let node0 = "3 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n";
        let (pts, base) = parse_node(node0, Path::new("x.node")).unwrap();
        assert_eq!((pts.len(), base), (3, 0));
    }

    #[test]
    fn empty_ele_is_a_parse_error() {
        let p = Path::new("e.ele");
        assert!(matches!(parse_ele("", p, 1), Err(MeshError::Parse { .. })));
        assert!(matches!(
            parse_ele("0 4 0\n", p, 1),
            Err(MeshError::Parse { .. })
        ));
        assert!(matches!(
            parse_ele("2 4 0\n1 1 2 3 4\n", p, 1),
            Err(MeshError::Parse { .. })
        ));
        assert!(matches!(
            parse_ele("1 4 0\n1 1 2 x 4\n", p, 1),
            Err(MeshError::Parse { .. })
        ));
    }

    #[test]
    fn malformed_nodes() {
        let p = Path::new("n.node");
        assert!(parse_node("2 3 0 0\n1 0 0\n", p).is_err());
        assert!(parse_node("1 2 0 0\n1 0 0\n", p).is_err());
        assert!(parse_node("2 3 0 0\n1 0 0 0\n3 0 0 1\n", p).is_err());
    }

    #[test]
    fn inverted_tet_loads() {
        let node = "4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n";
        let ele = "1 4 0\n1 1 3 2 4\n";
        let (pts, base) = parse_node(node, Path::new("n")).unwrap();
        let tets = parse_ele(ele, Path::new("e"), base).unwrap();
        let m = TetMesh::new(pts, tets).unwrap();
        assert!((m.volume() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_tetmesh(
            Path::new("/nonexistent/a.node"),
            Path::new("/nonexistent/a.ele"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/a.node"));
    }
}
