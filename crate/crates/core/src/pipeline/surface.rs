//! Split surfaces between sibling parts: height-field test and planar
//! refinement.

use std::collections::HashSet;

use nalgebra::SymmetricEigen;

use super::PipelineError;
use crate::geometry::{convex_hull, Degeneracy, HullError, Matrix3, Point3, Vector3};
use crate::segmentation::NodeId;
use crate::tetmesh::{oriented_facets, TetMesh};

/// Facets shared by two sibling parts plus their best-fit plane.
///
/// `normal` points from the first part into the second. Tets whose centroid
/// is within `band` of the plane and inside `[lo, hi]` are the ones plane
/// refinement may move.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSurface {
    pub node: NodeId,
    /// Oriented outward from the first part.
    pub triangles: Vec<[Point3; 3]>,
    pub normal: Vector3,
    /// Plane is `normal . x = offset`.
    pub offset: f64,
    pub band: f64,
    pub lo: Point3,
    pub hi: Point3,
}

impl SplitSurface {
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }
}

fn facet_keys(mesh: &TetMesh, tets: &[usize]) -> HashSet<[usize; 3]> {
    tets.iter()
        .flat_map(|&t| oriented_facets(mesh, t))
        .map(|mut f| {
            f.sort_unstable();
            f
        })
        .collect()
}

/// Least-squares plane through points: centroid and the direction of least
/// spread.
fn fit_plane(points: &[Point3]) -> (Vector3, Point3) {
    let n = points.len() as f64;
    let c = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    (
        eig.eigenvectors.column(k).into_owned().normalize(),
        Point3::from(c),
    )
}

/// Shared facets of parts `a` and `b` (tet index lists of `mesh`), or
/// `None` when the parts do not touch.
pub fn split_surface(
    mesh: &TetMesh,
    node: NodeId,
    a: &[usize],
    b: &[usize],
) -> Option<SplitSurface> {
    let b_keys = facet_keys(mesh, b);
    let mut faces = Vec::new();
    let mut touching = Vec::new();
    for &t in a {
        for f in oriented_facets(mesh, t) {
            let mut k = f;
            k.sort_unstable();
            if b_keys.contains(&k) {
                faces.push(f);
                touching.push(t);
            }
        }
    }
    if faces.is_empty() {
        return None;
    }
    let mut verts: Vec<usize> = faces.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();
    let points: Vec<Point3> = verts.iter().map(|&v| mesh.vertices()[v]).collect();
    let (mut normal, center) = fit_plane(&points);
    let triangles: Vec<[Point3; 3]> = faces
        .iter()
        .map(|f| f.map(|v| mesh.vertices()[v]))
        .collect();
    let flux: Vector3 = triangles
        .iter()
        .map(|t| (t[1] - t[0]).cross(&(t[2] - t[0])))
        .sum();
    if flux.dot(&normal) < 0.0 {
        normal = -normal;
    }
    let offset = normal.dot(&center.coords);

    // b-side tets on the surface count for the layer thickness too
    let a_keys: HashSet<[usize; 3]> = faces
        .iter()
        .map(|f| {
            let mut k = *f;
            k.sort_unstable();
            k
        })
        .collect();
    for &t in b {
        if oriented_facets(mesh, t).iter().any(|f| {
            let mut k = *f;
            k.sort_unstable();
            a_keys.contains(&k)
        }) {
            touching.push(t);
        }
    }
    let layer = touching
        .iter()
        .map(|&t| mesh.tet_diameter(t))
        .fold(0.0, f64::max);
    let spread = points
        .iter()
        .map(|p| (normal.dot(&p.coords) - offset).abs())
        .fold(0.0, f64::max);
    let band = spread + layer;
    let (lo, hi) = crate::geometry::aabb(&points).expect("surface has vertices");
    let pad = Vector3::repeat(band);
    Some(SplitSurface {
        node,
        triangles,
        normal,
        offset,
        band,
        lo: lo - pad,
        hi: hi + pad,
    })
}

/// True iff the surface is a height field over some direction, i.e. the
/// convex hull of its unit facet normals leaves out the origin. Normals
/// touching the origin only on the hull boundary count as containing it.
pub fn heightfield_check(surface: &SplitSurface) -> bool {
    let normals: Vec<Point3> = surface
        .triangles
        .iter()
        .filter_map(|t| {
            let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
            (n.norm() > 0.0).then(|| Point3::from(n.normalize()))
        })
        .collect();
    !origin_in_hull(&normals, 1e-9)
}

fn origin_in_hull(points: &[Point3], tol: f64) -> bool {
    if points.is_empty() {
        return false;
    }
    let origin = Point3::origin();
    match convex_hull(points) {
        Ok(h) => h.contains(&origin, tol),
        Err(HullError::Degenerate(Degeneracy::Empty | Degeneracy::Coincident)) => {
            points[0].coords.norm() <= tol
        }
        Err(HullError::Degenerate(Degeneracy::Collinear)) => {
            let p0 = points[0].coords;
            let far = points
                .iter()
                .max_by(|a, b| (a.coords - p0).norm().total_cmp(&(b.coords - p0).norm()))
                .unwrap();
            let u = (far.coords - p0).normalize();
            if (p0 - u * p0.dot(&u)).norm() > tol {
                return false;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                let s = p.coords.dot(&u);
                lo = lo.min(s);
                hi = hi.max(s);
            }
            lo <= tol && hi >= -tol
        }
        Err(HullError::Degenerate(Degeneracy::Coplanar)) => {
            let (m, c) = fit_plane(points);
            if m.dot(&c.coords).abs() > tol {
                return false;
            }
            let u = if m.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            let u = (u - m * m.dot(&u)).normalize();
            let v = m.cross(&u);
            let flat: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.coords.dot(&u), p.coords.dot(&v)))
                .collect();
            origin_in_polygon(&flat, tol)
        }
    }
}

/// Monotone-chain hull of 2D points, then an inside test for the origin.
fn origin_in_polygon(points: &[(f64, f64)], tol: f64) -> bool {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        // collinear input was handled by the caller
        return false;
    }
    (0..hull.len()).all(|i| {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        cross(a, b, (0.0, 0.0)) / len >= -tol
    })
}

/// Moves tets near the split to the side of the fitted plane their centroid
/// lies on: negative side to `a`, positive to `b`. Tets exactly on the plane
/// stay put. Fails if either part would end up empty.
pub fn plane_refine(
    mesh: &TetMesh,
    split: &SplitSurface,
    a: &[usize],
    b: &[usize],
) -> Result<(Vec<usize>, Vec<usize>), PipelineError> {
    let mut new_a = Vec::with_capacity(a.len());
    let mut new_b = Vec::with_capacity(b.len());
    let near = |c: &Point3| (0..3).all(|k| c[k] >= split.lo[k] && c[k] <= split.hi[k]);
    for (tets, from_a) in [(a, true), (b, false)] {
        for &t in tets {
            let c = mesh.tet_centroid(t);
            let d = split.signed_distance(&c);
            let to_a = if near(&c) && d.abs() <= split.band && d != 0.0 {
                d < 0.0
            } else {
                from_a
            };
            if to_a {
                new_a.push(t);
            } else {
                new_b.push(t);
            }
        }
    }
    if new_a.is_empty() || new_b.is_empty() {
        return Err(PipelineError::DegenerateSplit(split.node));
    }
    new_a.sort_unstable();
    new_b.sort_unstable();
    Ok((new_a, new_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tetmesh::synth::kuhn_solid;

    fn two_cubes() -> TetMesh {
        kuhn_solid(&[[0, 0, 0], [1, 0, 0]], 1.0)
    }

    fn by_centroid(mesh: &TetMesh, f: impl Fn(&Point3) -> bool) -> (Vec<usize>, Vec<usize>) {
        (0..mesh.num_tets()).partition(|&t| f(&mesh.tet_centroid(t)))
    }

    #[test]
    fn planar_split_is_left_alone() {
        let m = two_cubes();
        let (a, b) = by_centroid(&m, |c| c.x < 1.0);
        let s = split_surface(&m, 0, &a, &b).unwrap();
        assert!((s.normal - Vector3::x()).norm() < 1e-9);
        assert!((s.offset - 1.0).abs() < 1e-9);
        assert!(heightfield_check(&s));
        let (ra, rb) = plane_refine(&m, &s, &a, &b).unwrap();
        assert_eq!((ra, rb), (a, b));
    }

    #[test]
    fn jagged_split_is_flattened() {
        let m = two_cubes();
        // cube 0 plus two tets of cube 1 on one side
        let (mut a, mut b) = by_centroid(&m, |c| c.x < 1.0);
        let moved: Vec<usize> = b
            .iter()
            .copied()
            .filter(|&t| m.tet_centroid(t).x < 1.4)
            .take(2)
            .collect();
        assert!(!moved.is_empty());
        b.retain(|t| !moved.contains(t));
        a.extend(&moved);
        a.sort_unstable();
        let s = split_surface(&m, 0, &a, &b).unwrap();
        let (ra, rb) = plane_refine(&m, &s, &a, &b).unwrap();
        assert_eq!(ra.len() + rb.len(), m.num_tets());
        let after = split_surface(&m, 0, &ra, &rb).unwrap();
        let diam = (0..m.num_tets())
            .map(|t| m.tet_diameter(t))
            .fold(0.0, f64::max);
        for t in &after.triangles {
            for p in t {
                assert!(s.signed_distance(p).abs() <= diam + 1e-9);
            }
        }
        // second application with the same plane is a no-op
        assert_eq!(plane_refine(&m, &s, &ra, &rb).unwrap(), (ra, rb));
    }

    #[test]
    fn emptying_a_side_is_refused() {
        let m = two_cubes();
        let a = vec![0];
        let b: Vec<usize> = (1..m.num_tets()).collect();
        let mut s = split_surface(&m, 3, &a, &b).unwrap();
        // push the plane past the lone tet's centroid
        let c = m.tet_centroid(0);
        s.offset = s.normal.dot(&c.coords) - 1e-3;
        s.lo = c - Vector3::repeat(1e-6);
        s.hi = c + Vector3::repeat(1e-6);
        assert!(matches!(
            plane_refine(&m, &s, &a, &b),
            Err(PipelineError::DegenerateSplit(3))
        ));
    }

    #[test]
    fn disjoint_parts_have_no_surface() {
        let m = kuhn_solid(&[[0, 0, 0], [3, 0, 0]], 1.0);
        let (a, b) = by_centroid(&m, |c| c.x < 2.0);
        assert!(split_surface(&m, 0, &a, &b).is_none());
    }

    fn surface_of(normals: &[Vector3]) -> SplitSurface {
        let triangles = normals
            .iter()
            .map(|n| {
                let u = if n.x.abs() < 0.9 {
                    Vector3::x()
                } else {
                    Vector3::y()
                };
                let u = n.cross(&u).normalize();
                let v = n.cross(&u);
                [Point3::origin(), Point3::from(u), Point3::from(v)]
            })
            .collect();
        SplitSurface {
            node: 0,
            triangles,
            normal: Vector3::z(),
            offset: 0.0,
            band: 0.0,
            lo: Point3::origin(),
            hi: Point3::origin(),
        }
    }

    #[test]
    fn degenerate_normal_sets() {
        let z = Vector3::z();
        assert!(heightfield_check(&surface_of(&[z, z, z])));
        assert!(!heightfield_check(&surface_of(&[z, -z])));
        assert!(heightfield_check(&surface_of(&[z, Vector3::x()])));
        // coplanar through the origin, surrounding it
        let ring: Vec<Vector3> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 3.0;
                Vector3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        assert!(!heightfield_check(&surface_of(&ring)));
        assert!(heightfield_check(&surface_of(&ring[..3])));
        // coplanar, off the origin
        let tilted: Vec<Vector3> = ring
            .iter()
            .map(|v| (v + Vector3::z()).normalize())
            .collect();
        assert!(heightfield_check(&surface_of(&tilted)));
    }
}
