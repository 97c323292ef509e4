//! Geometric kernel: hulls, bounding boxes, rotations and rigid transforms.

mod hull;
mod mbb;
mod rotation;

pub use hull::{convex_hull, ConvexHull, Degeneracy, HullError};
pub use mbb::{approximate_mbb, mbb_of_hull, pca_box, OrientedBox};
pub use rotation::{
    align_to_box, axis_align, canonical_orientations, packing_rotations, sample_rotations,
};

use nalgebra::{Isometry3, Translation3};
use serde::{Deserialize, Serialize};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type UnitQuaternion = nalgebra::UnitQuaternion<f64>;
pub type Matrix3 = nalgebra::Matrix3<f64>;

/// Volume of the tetrahedron `abcd`, always non-negative.
pub fn tet_volume(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> f64 {
    signed_tet_volume(a, b, c, d).abs()
}

/// Signed volume; positive when `d` lies on the side of `abc` given by the
/// right-hand rule.
pub fn signed_tet_volume(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

/// A rotation followed by a translation: `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: UnitQuaternion,
    pub translation: Vector3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: UnitQuaternion, translation: Vector3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(UnitQuaternion::identity(), Vector3::zeros())
    }

    pub fn from_rotation(rotation: UnitQuaternion) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3) -> Vector3 {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.translation), self.rotation)
    }

    /// Quaternion as `[w, x, y, z]`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }
}

/// Serialized form used by placement reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for TransformRecord {
    fn from(t: &RigidTransform) -> Self {
        TransformRecord {
            quaternion: t.quaternion_wxyz(),
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl From<&TransformRecord> for RigidTransform {
    fn from(r: &TransformRecord) -> Self {
        let [w, x, y, z] = r.quaternion;
        RigidTransform::new(
            UnitQuaternion::new_normalize(nalgebra::Quaternion::new(w, x, y, z)),
            Vector3::new(r.translation[0], r.translation[1], r.translation[2]),
        )
    }
}

/// Axis-aligned bounds of a point set, `None` when empty.
pub fn aabb(points: &[Point3]) -> Option<(Point3, Point3)> {
    let first = points.first()?;
    let mut lo = *first;
    let mut hi = *first;
    for p in &points[1..] {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_corner_tet_is_one_sixth() {
        let v = tet_volume(
            &Point3::origin(),
            &Point3::new(1.0, 0.0, 0.0),
            &Point3::new(0.0, 1.0, 0.0),
            &Point3::new(0.0, 0.0, 1.0),
        );
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn coplanar_tet_has_zero_volume() {
        let v = tet_volume(
            &Point3::origin(),
            &Point3::new(1.0, 0.0, 0.0),
            &Point3::new(0.0, 1.0, 0.0),
            &Point3::new(1.0, 1.0, 0.0),
        );
        assert_eq!(v, 0.0);
    }

    #[test]
    fn tet_volume_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..4)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let exact = tet_volume(&pts[0], &pts[1], &pts[2], &pts[3]);
        let (lo, hi) = aabb(&pts).unwrap();
        let ext = hi - lo;
        // barycentric point-in-tet test, independent of the determinant formula above
        let m =
            nalgebra::Matrix3::from_columns(&[pts[1] - pts[0], pts[2] - pts[0], pts[3] - pts[0]]);
        let inv = m.try_inverse().unwrap();
        let samples = 1_000_000;
        let mut inside = 0usize;
        for _ in 0..samples {
            let p = lo
                + Vector3::new(
                    rng.random::<f64>() * ext.x,
                    rng.random::<f64>() * ext.y,
                    rng.random::<f64>() * ext.z,
                );
            let b = inv * (p - pts[0]);
            if b.x >= 0.0 && b.y >= 0.0 && b.z >= 0.0 && b.x + b.y + b.z <= 1.0 {
                inside += 1;
            }
        }
        let estimate = inside as f64 / samples as f64 * ext.x * ext.y * ext.z;
        assert!(
            (estimate - exact).abs() / exact < 0.01,
            "{estimate} vs {exact}"
        );
    }

    #[test]
    fn cube_decompositions_sum_to_one() {
        let c = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
        // five-tet split: four corners plus the central tet
        let five = [
            [c(0., 0., 0.), c(1., 0., 0.), c(0., 1., 0.), c(0., 0., 1.)],
            [c(1., 1., 0.), c(1., 0., 0.), c(0., 1., 0.), c(1., 1., 1.)],
            [c(1., 0., 1.), c(1., 0., 0.), c(0., 0., 1.), c(1., 1., 1.)],
            [c(0., 1., 1.), c(0., 1., 0.), c(0., 0., 1.), c(1., 1., 1.)],
            [c(1., 0., 0.), c(0., 1., 0.), c(0., 0., 1.), c(1., 1., 1.)],
        ];
        let sum: f64 = five
            .iter()
            .map(|t| tet_volume(&t[0], &t[1], &t[2], &t[3]))
            .sum();
        assert!((sum - 1.0).abs() < 1e-9);
        // six-tet split around the main diagonal
        let a = c(0., 0., 0.);
        let g = c(1., 1., 1.);
        let path = [
            [c(1., 0., 0.), c(1., 1., 0.)],
            [c(1., 0., 0.), c(1., 0., 1.)],
            [c(0., 1., 0.), c(1., 1., 0.)],
            [c(0., 1., 0.), c(0., 1., 1.)],
            [c(0., 0., 1.), c(1., 0., 1.)],
            [c(0., 0., 1.), c(0., 1., 1.)],
        ];
        let sum: f64 = path.iter().map(|[p, q]| tet_volume(&a, p, q, &g)).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rots = sample_rotations(20, 3);
        for q in rots {
            let t = RigidTransform::new(
                q,
                Vector3::new(rng.random_range(-5.0..5.0), rng.random(), -3.0),
            );
            let id = t.compose(&t.inverse());
            for _ in 0..100 {
                let p = Point3::new(rng.random_range(-9.0..9.0), rng.random(), rng.random());
                assert!((id.apply(&p) - p).norm() < 1e-7);
                assert!((t.inverse().apply(&t.apply(&p)) - p).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn transform_record_round_trip() {
        let t = RigidTransform::new(sample_rotations(1, 9)[0], Vector3::new(1.0, -2.0, 0.5));
        let back = RigidTransform::from(&TransformRecord::from(&t));
        let p = Point3::new(0.3, 0.2, -0.7);
        assert!((back.apply(&p) - t.apply(&p)).norm() < 1e-12);
    }
}
