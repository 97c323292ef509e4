use std::fmt::Write as _;

use crate::geometry::Point3;

/// A named object for Wavefront OBJ export: triangles and/or line segments.
#[derive(Debug, Clone, Default)]
pub struct ObjObject {
    pub name: String,
    pub triangles: Vec<[Point3; 3]>,
    pub lines: Vec<[Point3; 2]>,
}

impl ObjObject {
    pub fn from_triangles(name: impl Into<String>, triangles: Vec<[Point3; 3]>) -> Self {
        ObjObject {
            name: name.into(),
            triangles,
            lines: Vec::new(),
        }
    }

    /// The twelve edges of an axis-aligned box with corners `lo` and `hi`.
    pub fn box_wireframe(name: impl Into<String>, lo: Point3, hi: Point3) -> Self {
        let corner = |i: usize| {
            Point3::new(
                if i & 1 == 1 { hi.x } else { lo.x },
                if i & 2 == 2 { hi.y } else { lo.y },
                if i & 4 == 4 { hi.z } else { lo.z },
            )
        };
        let mut lines = Vec::with_capacity(12);
        for i in 0..8 {
            for bit in [1, 2, 4] {
                if i & bit == 0 {
                    lines.push([corner(i), corner(i | bit)]);
                }
            }
        }
        ObjObject {
            name: name.into(),
            triangles: Vec::new(),
            lines,
        }
    }
}

/// Serializes objects to ASCII OBJ text. Vertices are not shared between
/// objects.
pub fn write_obj(objects: &[ObjObject]) -> String {
    let mut out = String::new();
    let mut next = 1usize;
    for o in objects {
        writeln!(out, "o {}", o.name).unwrap();
        for t in &o.triangles {
            for p in t {
                writeln!(out, "v {} {} {}", p.x, p.y, p.z).unwrap();
            }
            writeln!(out, "f {} {} {}", next, next + 1, next + 2).unwrap();
            next += 3;
        }
        for l in &o.lines {
            for p in l {
                writeln!(out, "v {} {} {}", p.x, p.y, p.z).unwrap();
            }
            writeln!(out, "l {} {}", next, next + 1).unwrap();
            next += 2;
        }
    }
    out
}

/// Reads back the vertex positions of an OBJ file, in order.
pub fn obj_vertices(text: &str) -> Vec<Point3> {
    text.lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some("v")).then(|| {
                let c: Vec<f64> = it.take(3).filter_map(|t| t.parse().ok()).collect();
                Point3::new(c[0], c[1], c[2])
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wireframe_has_twelve_edges() {
        let o = ObjObject::box_wireframe("box", Point3::origin(), Point3::new(1.0, 2.0, 3.0));
        assert_eq!(o.lines.len(), 12);
        let text = write_obj(&[o]);
        assert_eq!(text.lines().filter(|l| l.starts_with("l ")).count(), 12);
        assert_eq!(obj_vertices(&text).len(), 24);
    }
}
