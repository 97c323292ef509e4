use std::cmp::Ordering;

use nalgebra::{Rotation3, SymmetricEigen};

use super::hull::{convex_hull, ConvexHull, Degeneracy, HullError};
use super::{Matrix3, Point3, Vector3};

/// Oriented box given by a center, three orthonormal axes and half extents
/// along those axes.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox {
    pub center: Point3,
    pub axes: [Vector3; 3],
    pub half_extents: [f64; 3],
}

impl OrientedBox {
    pub fn degenerate_at(p: Point3) -> Self {
        OrientedBox {
            center: p,
            axes: [Vector3::x(), Vector3::y(), Vector3::z()],
            half_extents: [0.0; 3],
        }
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.iter().product::<f64>()
    }

    /// Full edge lengths.
    pub fn extents(&self) -> [f64; 3] {
        self.half_extents.map(|h| 2.0 * h)
    }

    pub fn max_extent(&self) -> f64 {
        self.extents().into_iter().fold(0.0, f64::max)
    }

    /// Rotation whose rows are the box axes: maps world directions to box
    /// coordinates.
    pub fn frame(&self) -> Matrix3 {
        Matrix3::from_rows(&[
            self.axes[0].transpose(),
            self.axes[1].transpose(),
            self.axes[2].transpose(),
        ])
    }

    pub fn local(&self, p: &Point3) -> Vector3 {
        self.frame() * (p - self.center)
    }

    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        let l = self.local(p);
        (0..3).all(|k| l[k].abs() <= self.half_extents[k] + tol)
    }

    pub fn corners(&self) -> [Point3; 8] {
        let mut out = [self.center; 8];
        for (i, c) in out.iter_mut().enumerate() {
            for k in 0..3 {
                let s = if i >> k & 1 == 1 { 1.0 } else { -1.0 };
                *c += self.axes[k] * (s * self.half_extents[k]);
            }
        }
        out
    }
}

/// Box of a point set in a fixed frame (rows of `frame` are the axes).
fn box_in_frame(points: &[Point3], frame: &Matrix3) -> OrientedBox {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        let l = frame * p.coords;
        lo = lo.inf(&l);
        hi = hi.sup(&l);
    }
    let mid = (lo + hi) * 0.5;
    let half = (hi - lo) * 0.5;
    let axes = [
        frame.row(0).transpose(),
        frame.row(1).transpose(),
        frame.row(2).transpose(),
    ];
    OrientedBox {
        center: Point3::from(frame.transpose() * mid),
        axes,
        half_extents: [half.x.max(0.0), half.y.max(0.0), half.z.max(0.0)],
    }
}

fn frame_volume(points: &[Point3], frame: &Matrix3) -> f64 {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        let l = frame * p.coords;
        lo = lo.inf(&l);
        hi = hi.sup(&l);
    }
    let e = hi - lo;
    e.x * e.y * e.z
}

/// Among the 24 proper signed permutations of the frame rows, pick the one
/// closest to the identity (largest trace).
fn canonical_frame(frame: &Matrix3) -> Matrix3 {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut best = *frame;
    let mut best_trace = f64::NEG_INFINITY;
    for perm in PERMS {
        for signs in 0..8u32 {
            let mut m = Matrix3::zeros();
            for (k, &src) in perm.iter().enumerate() {
                let s = if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                m.set_row(k, &(frame.row(src) * s));
            }
            if m.determinant() < 0.0 {
                continue;
            }
            let tr = m.trace();
            if tr > best_trace + 1e-12 {
                best_trace = tr;
                best = m;
            }
        }
    }
    best
}

/// Orthonormal frame with `n` as its third row.
fn frame_from_normal(n: &Vector3) -> Matrix3 {
    let n = n.normalize();
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = helper.cross(&n).normalize();
    let v = n.cross(&u);
    Matrix3::from_rows(&[u.transpose(), v.transpose(), n.transpose()])
}

/// Andrew's monotone chain; returns the hull in counter-clockwise order.
fn hull_2d(points: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in points.iter() {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in points.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area enclosing rectangle direction in the plane of `frame`'s first
/// two rows. Returns the in-plane angle of the best edge direction.
fn min_area_rectangle_angle(points: &[Point3], frame: &Matrix3) -> f64 {
    let u = frame.row(0).transpose();
    let v = frame.row(1).transpose();
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (u.dot(&p.coords), v.dot(&p.coords)))
        .collect();
    let hull = hull_2d(&mut pts);
    if hull.len() < 3 {
        if hull.len() == 2 {
            return (hull[1].1 - hull[0].1).atan2(hull[1].0 - hull[0].0);
        }
        return 0.0;
    }
    let mut best_area = f64::INFINITY;
    let mut best_angle = 0.0;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len = (dx * dx + dy * dy).sqrt();
        if len == 0.0 {
            continue;
        }
        let (ex, ey) = (dx / len, dy / len);
        let (mut lo_s, mut hi_s, mut lo_t, mut hi_t) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for p in &hull {
            let s = p.0 * ex + p.1 * ey;
            let t = -p.0 * ey + p.1 * ex;
            lo_s = lo_s.min(s);
            hi_s = hi_s.max(s);
            lo_t = lo_t.min(t);
            hi_t = hi_t.max(t);
        }
        let area = (hi_s - lo_s) * (hi_t - lo_t);
        if area < best_area {
            best_area = area;
            best_angle = ey.atan2(ex);
        }
    }
    best_angle
}

/// Rotate the in-plane rows of `frame` by `angle` about its third row.
fn spin_frame(frame: &Matrix3, angle: f64) -> Matrix3 {
    let u = frame.row(0).transpose();
    let v = frame.row(1).transpose();
    let (s, c) = angle.sin_cos();
    let nu = u * c + v * s;
    let nv = -u * s + v * c;
    Matrix3::from_rows(&[nu.transpose(), nv.transpose(), frame.row(2).into_owned()])
}

fn pca_frame(points: &[Point3]) -> Matrix3 {
    let n = points.len() as f64;
    let mean = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    // largest variance first
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut rows: Vec<Vector3> = idx
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    rows[2] = rows[0].cross(&rows[1]).normalize();
    rows[1] = rows[2].cross(&rows[0]).normalize();
    Matrix3::from_rows(&[
        rows[0].transpose(),
        rows[1].transpose(),
        rows[2].transpose(),
    ])
}

/// Box aligned with the principal axes of the points.
pub fn pca_box(points: &[Point3]) -> OrientedBox {
    assert!(!points.is_empty(), "pca_box needs at least one point");
    box_in_frame(points, &canonical_frame(&pca_frame(points)))
}

struct Candidate {
    frame: Matrix3,
    volume: f64,
}

impl Candidate {
    fn new(points: &[Point3], frame: Matrix3) -> Candidate {
        let frame = canonical_frame(&frame);
        Candidate {
            volume: frame_volume(points, &frame),
            frame,
        }
    }

    fn angle(&self) -> f64 {
        Rotation3::from_matrix_unchecked(self.frame).angle()
    }

    /// Smaller volume wins; near-equal volumes fall back to the frame closest
    /// to the identity.
    fn better_than(&self, other: &Candidate) -> bool {
        let scale = self
            .volume
            .abs()
            .max(other.volume.abs())
            .max(f64::MIN_POSITIVE);
        if (self.volume - other.volume).abs() > 1e-12 * scale {
            return self.volume < other.volume;
        }
        self.angle().total_cmp(&other.angle()) == Ordering::Less
    }
}

/// Approximate minimum-volume bounding box of a point set.
///
/// Candidate frames are the principal axes and, for every distinct hull face
/// normal, the frame made of that normal plus the minimum-area rectangle of
/// the projected hull. The winner is polished by a shrinking local rotation
/// search whose final step is tied to `epsilon`. Degenerate (flat, linear or
/// single-point) sets produce boxes with zero extent on the collapsed axes.
pub fn approximate_mbb(points: &[Point3], epsilon: f64) -> OrientedBox {
    assert!(
        !points.is_empty(),
        "approximate_mbb needs at least one point"
    );
    match convex_hull(points) {
        Ok(h) => mbb_of_hull(&h, epsilon),
        Err(HullError::Degenerate(kind)) => degenerate_box(points, kind),
    }
}

/// Same as [`approximate_mbb`] for a precomputed hull.
pub fn mbb_of_hull(hull: &ConvexHull, epsilon: f64) -> OrientedBox {
    let pts = &hull.vertices;
    let mut best = Candidate::new(pts, pca_frame(pts));

    let mut normals: Vec<Vector3> = Vec::new();
    for f in 0..hull.faces.len() {
        let n = hull.face_normal(f);
        if !n.iter().all(|c| c.is_finite()) {
            continue;
        }
        if normals.iter().any(|m| m.dot(&n).abs() > 1.0 - 1e-9) {
            continue;
        }
        normals.push(n);
    }
    for n in &normals {
        let base = frame_from_normal(n);
        let angle = min_area_rectangle_angle(pts, &base);
        let cand = Candidate::new(pts, spin_frame(&base, angle));
        if cand.better_than(&best) {
            best = cand;
        }
    }

    refine(pts, best, epsilon)
}

fn refine(pts: &[Point3], mut best: Candidate, epsilon: f64) -> OrientedBox {
    let final_step = (epsilon * 10.0).clamp(0.02, 2.0).to_radians();
    let mut step = 3f64.to_radians();
    while step >= final_step {
        let mut improved = true;
        let mut rounds = 0;
        while improved && rounds < 50 {
            improved = false;
            rounds += 1;
            for axis in [Vector3::x_axis(), Vector3::y_axis(), Vector3::z_axis()] {
                for sign in [1.0, -1.0] {
                    let r = Rotation3::from_axis_angle(&axis, sign * step);
                    let cand = Candidate::new(pts, r.matrix() * best.frame);
                    if cand.volume < best.volume * (1.0 - 1e-12) {
                        best = cand;
                        improved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    box_in_frame(pts, &best.frame)
}

fn degenerate_box(points: &[Point3], kind: Degeneracy) -> OrientedBox {
    match kind {
        Degeneracy::Empty => unreachable!("checked by caller"),
        Degeneracy::Coincident => OrientedBox::degenerate_at(points[0]),
        Degeneracy::Collinear => {
            let frame = pca_frame(points);
            box_in_frame(points, &canonical_frame(&frame))
        }
        Degeneracy::Coplanar => {
            // flat: third PCA axis is the plane normal; solve the 2D problem in-plane
            let frame = pca_frame(points);
            let angle = min_area_rectangle_angle(points, &frame);
            let frame = spin_frame(&frame, angle);
            box_in_frame(points, &canonical_frame(&frame))
        }
    }
}
