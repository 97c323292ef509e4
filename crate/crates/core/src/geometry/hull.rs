use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::{Point3, Vector3};

/// Why a point set has no full-dimensional hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    Empty,
    Coincident,
    Collinear,
    Coplanar,
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Degeneracy::Empty => "empty",
            Degeneracy::Coincident => "coincident",
            Degeneracy::Collinear => "collinear",
            Degeneracy::Coplanar => "coplanar",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("degenerate input: points are {0}")]
    Degenerate(Degeneracy),
}

/// Closed convex polyhedron with outward-oriented (counter-clockwise) faces.
#[derive(Debug, Clone)]
pub struct ConvexHull {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

impl ConvexHull {
    pub fn face_normal(&self, f: usize) -> Vector3 {
        let [a, b, c] = self.faces[f];
        let n = (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]));
        n.normalize()
    }

    pub fn volume(&self) -> f64 {
        let o = self.vertices[0];
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                super::signed_tet_volume(
                    &o,
                    &self.vertices[a],
                    &self.vertices[b],
                    &self.vertices[c],
                )
            })
            .sum()
    }

    /// Largest signed distance from `p` to any face plane; `<= 0` means inside.
    pub fn max_face_distance(&self, p: &Point3) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let n = self.face_normal(f);
                n.dot(&(p - self.vertices[self.faces[f][0]]))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        self.max_face_distance(p) <= tol
    }
}

struct Face {
    v: [usize; 3],
    normal: Vector3,
    offset: f64,
    alive: bool,
    outside: Vec<usize>,
}

impl Face {
    fn new(points: &[Point3], v: [usize; 3]) -> Face {
        let n = (points[v[1]] - points[v[0]]).cross(&(points[v[2]] - points[v[0]]));
        let normal = n.normalize();
        Face {
            v,
            normal,
            offset: normal.dot(&points[v[0]].coords),
            alive: true,
            outside: Vec::new(),
        }
    }

    fn distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }
}

/// Quickhull. Fails with [`HullError::Degenerate`] when the points do not
/// span three dimensions.
pub fn convex_hull(points: &[Point3]) -> Result<ConvexHull, HullError> {
    if points.is_empty() {
        return Err(HullError::Degenerate(Degeneracy::Empty));
    }
    let (lo, hi) = super::aabb(points).expect("non-empty");
    let scale = (hi - lo).norm();
    if scale == 0.0 {
        return Err(HullError::Degenerate(Degeneracy::Coincident));
    }
    let tol = scale * 1e-11;

    let initial = initial_simplex(points, tol)?;
    let mut faces: Vec<Face> = Vec::new();
    let [a, b, c, d] = initial;
    for (x, y, z, opposite) in [(a, b, c, d), (a, b, d, c), (a, c, d, b), (b, c, d, a)] {
        let f = Face::new(points, [x, y, z]);
        faces.push(if f.distance(&points[opposite]) > 0.0 {
            Face::new(points, [x, z, y])
        } else {
            f
        });
    }

    // directed edge (a, b) -> face that owns it
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            edges.insert((f.v[k], f.v[(k + 1) % 3]), fi);
        }
    }

    for (i, p) in points.iter().enumerate() {
        if initial.contains(&i) {
            continue;
        }
        let mut best = None;
        let mut best_d = tol;
        for (fi, f) in faces.iter().enumerate() {
            let d = f.distance(p);
            if d > best_d {
                best_d = d;
                best = Some(fi);
            }
        }
        if let Some(fi) = best {
            faces[fi].outside.push(i);
        }
    }

    let mut stack: Vec<usize> = (0..faces.len()).collect();
    while let Some(fi) = stack.pop() {
        if !faces[fi].alive || faces[fi].outside.is_empty() {
            continue;
        }
        // farthest conflict point of this face
        let eye = *faces[fi]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                faces[fi]
                    .distance(&points[a])
                    .total_cmp(&faces[fi].distance(&points[b]))
                    .then(b.cmp(&a))
            })
            .unwrap();
        let ep = points[eye];

        // visible region by flood fill across shared edges
        let mut visible = vec![fi];
        let mut seen: HashSet<usize> = HashSet::from([fi]);
        let mut q = 0;
        while q < visible.len() {
            let cur = visible[q];
            q += 1;
            let v = faces[cur].v;
            for k in 0..3 {
                if let Some(&nb) = edges.get(&(v[(k + 1) % 3], v[k])) {
                    if faces[nb].alive && !seen.contains(&nb) && faces[nb].distance(&ep) > tol {
                        seen.insert(nb);
                        visible.push(nb);
                    }
                }
            }
        }

        let mut horizon = Vec::new();
        for &vf in &visible {
            let v = faces[vf].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let twin = edges.get(&(b, a)).copied();
                if twin.is_none_or(|t| !seen.contains(&t)) {
                    horizon.push((a, b));
                }
            }
        }

        let mut orphans = Vec::new();
        for &vf in &visible {
            faces[vf].alive = false;
            let v = faces[vf].v;
            for k in 0..3 {
                let key = (v[k], v[(k + 1) % 3]);
                if edges.get(&key) == Some(&vf) {
                    edges.remove(&key);
                }
            }
            orphans.extend(faces[vf].outside.drain(..).filter(|&o| o != eye));
        }

        let first_new = faces.len();
        for &(a, b) in &horizon {
            let f = Face::new(points, [a, b, eye]);
            let id = faces.len();
            edges.insert((a, b), id);
            edges.insert((b, eye), id);
            edges.insert((eye, a), id);
            faces.push(f);
        }
        for o in orphans {
            let p = &points[o];
            let mut best = None;
            let mut best_d = tol;
            for (nf, face) in faces.iter().enumerate().skip(first_new) {
                let d = face.distance(p);
                if d > best_d {
                    best_d = d;
                    best = Some(nf);
                }
            }
            if let Some(nf) = best {
                faces[nf].outside.push(o);
            }
        }
        stack.extend(first_new..faces.len());
    }

    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut out_faces = Vec::new();
    for f in faces.iter().filter(|f| f.alive) {
        let mut tri = [0; 3];
        for k in 0..3 {
            tri[k] = *remap.entry(f.v[k]).or_insert_with(|| {
                vertices.push(points[f.v[k]]);
                vertices.len() - 1
            });
        }
        out_faces.push(tri);
    }
    Ok(ConvexHull {
        vertices,
        faces: out_faces,
    })
}

fn initial_simplex(points: &[Point3], tol: f64) -> Result<[usize; 4], HullError> {
    // axis extremes give a good first pair
    let mut extremes = Vec::with_capacity(6);
    for k in 0..3 {
        let mut lo = 0;
        let mut hi = 0;
        for (i, p) in points.iter().enumerate() {
            if p[k] < points[lo][k] {
                lo = i;
            }
            if p[k] > points[hi][k] {
                hi = i;
            }
        }
        extremes.push(lo);
        extremes.push(hi);
    }
    let mut a = extremes[0];
    let mut b = extremes[1];
    let mut best = -1.0;
    for &i in &extremes {
        for &j in &extremes {
            let d = (points[i] - points[j]).norm_squared();
            if d > best {
                best = d;
                a = i;
                b = j;
            }
        }
    }
    if best.sqrt() <= tol {
        return Err(HullError::Degenerate(Degeneracy::Coincident));
    }
    let dir = (points[b] - points[a]).normalize();
    let (c, dc) = farthest(points, |p| {
        let v = p - points[a];
        (v - dir * v.dot(&dir)).norm()
    });
    if dc <= tol {
        return Err(HullError::Degenerate(Degeneracy::Collinear));
    }
    let n = (points[b] - points[a])
        .cross(&(points[c] - points[a]))
        .normalize();
    let (d, dd) = farthest(points, |p| n.dot(&(p - points[a])).abs());
    if dd <= tol {
        return Err(HullError::Degenerate(Degeneracy::Coplanar));
    }
    Ok([a, b, c, d])
}

fn farthest(points: &[Point3], f: impl Fn(&Point3) -> f64) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = f(p);
        if d > best.1 {
            best = (i, d);
        }
    }
    best
}
