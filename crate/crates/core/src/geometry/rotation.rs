use nalgebra::{Quaternion, Rotation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{approximate_mbb, Matrix3, OrientedBox, Point3, RigidTransform, UnitQuaternion};

/// RNG stream reserved for rotation sampling.
pub const ROTATION_STREAM: u64 = 1;

/// `count` rotations uniformly distributed on the unit-quaternion sphere,
/// drawn with Marsaglia's two-disk rejection method. Deterministic per seed.
pub fn sample_rotations(count: usize, seed: u64) -> Vec<UnitQuaternion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ROTATION_STREAM);
    (0..count).map(|_| marsaglia(&mut rng)).collect()
}

fn marsaglia(rng: &mut impl Rng) -> UnitQuaternion {
    let (x1, y1, s1) = disk_point(rng, false);
    let (x2, y2, s2) = disk_point(rng, true);
    let f = ((1.0 - s1) / s2).sqrt();
    UnitQuaternion::new_normalize(Quaternion::new(x1, y1, x2 * f, y2 * f))
}

fn disk_point(rng: &mut impl Rng, nonzero: bool) -> (f64, f64, f64) {
    loop {
        let x: f64 = rng.random_range(-1.0..1.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        let s = x * x + y * y;
        if s < 1.0 && (!nonzero || s > 0.0) {
            return (x, y, s);
        }
    }
}

/// The six rotations that map the coordinate axes onto each other up to
/// sign, one per permutation; the identity comes first.
pub fn canonical_orientations() -> Vec<UnitQuaternion> {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [1, 0, 2],
        [0, 2, 1],
        [2, 1, 0],
        [1, 2, 0],
        [2, 0, 1],
    ];
    PERMS
        .iter()
        .map(|perm| {
            let mut m = Matrix3::zeros();
            for (row, &col) in perm.iter().enumerate() {
                m[(row, col)] = 1.0;
            }
            if m.determinant() < 0.0 {
                m.set_row(2, &(-m.row(2)));
            }
            UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
        })
        .collect()
}

/// Rotation set used by the packer: the axis-permuting orientations first
/// (an axis-aligned part stays axis-aligned under them), then uniform samples.
pub fn packing_rotations(count: usize, seed: u64) -> Vec<UnitQuaternion> {
    let mut out: Vec<UnitQuaternion> = canonical_orientations().into_iter().take(count).collect();
    if count > out.len() {
        out.extend(sample_rotations(count - out.len(), seed));
    }
    out
}

/// Rigid transform that maps the part's approximate minimum bounding box to
/// an axis-aligned box centered at the origin.
pub fn axis_align(points: &[Point3]) -> RigidTransform {
    assert!(!points.is_empty(), "axis_align needs at least one point");
    align_to_box(&approximate_mbb(points, 0.01))
}

/// Rigid transform taking `b` to an axis-aligned box centered at the origin.
pub fn align_to_box(b: &OrientedBox) -> RigidTransform {
    let frame = b.frame();
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(frame));
    RigidTransform::new(rotation, -(rotation * b.center.coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{aabb, Vector3};

    #[test]
    fn deterministic_and_unit() {
        let a = sample_rotations(10, 42);
        let b = sample_rotations(10, 42);
        assert_eq!(a.len(), 10);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.quaternion().coords, q.quaternion().coords);
            assert!((p.quaternion().norm() - 1.0).abs() < 1e-9);
        }
        assert_ne!(a[0], sample_rotations(1, 43)[0]);
    }

    #[test]
    fn canonical_set_is_distinct_axis_permutations() {
        let rots = canonical_orientations();
        assert_eq!(rots.len(), 6);
        assert_eq!(rots[0], UnitQuaternion::identity());
        let images: Vec<[usize; 3]> = rots
            .iter()
            .map(|q| {
                let m = q.to_rotation_matrix();
                let mut img = [0; 3];
                for (c, slot) in img.iter_mut().enumerate() {
                    let col = m.matrix().column(c);
                    *slot = (0..3)
                        .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()))
                        .unwrap();
                    assert!((col[*slot].abs() - 1.0).abs() < 1e-12);
                }
                img
            })
            .collect();
        for i in 0..6 {
            for j in i + 1..6 {
                assert_ne!(images[i], images[j]);
            }
        }
    }

    #[test]
    fn packing_rotations_prefix() {
        let r = packing_rotations(10, 3);
        assert_eq!(r.len(), 10);
        assert_eq!(&r[..6], &canonical_orientations()[..]);
        assert_eq!(&r[6..], &sample_rotations(4, 3)[..]);
        assert_eq!(packing_rotations(2, 0).len(), 2);
    }

    fn cube_points(q: &UnitQuaternion, shift: Vector3) -> Vec<Point3> {
        (0..8)
            .map(|i| {
                let p = Point3::new((i & 1) as f64, (i >> 1 & 1) as f64, (i >> 2 & 1) as f64)
                    - Vector3::repeat(0.5);
                q * p + shift
            })
            .collect()
    }

    #[test]
    fn aligned_cube_maps_to_itself() {
        let pts = cube_points(&UnitQuaternion::identity(), Vector3::zeros());
        let t = axis_align(&pts);
        let moved: Vec<Point3> = pts.iter().map(|p| t.apply(p)).collect();
        let (lo, hi) = aabb(&moved).unwrap();
        assert!((lo.coords + Vector3::repeat(0.5)).norm() < 1e-9);
        assert!((hi.coords - Vector3::repeat(0.5)).norm() < 1e-9);
    }

    #[test]
    fn rotated_cube_becomes_axis_aligned() {
        let q = UnitQuaternion::from_euler_angles(0.4, 0.9, -0.3);
        let pts = cube_points(&q, Vector3::new(3.0, -1.0, 2.0));
        let t = axis_align(&pts);
        let moved: Vec<Point3> = pts.iter().map(|p| t.apply(p)).collect();
        let (lo, hi) = aabb(&moved).unwrap();
        let e = hi - lo;
        assert!(e.x * e.y * e.z <= 1.01, "{e:?}");
        assert!(((lo.coords + hi.coords) * 0.5).norm() < 1e-9);
    }

    #[test]
    fn flat_plate_maps_flat_axis_to_world_axis() {
        let q = UnitQuaternion::from_euler_angles(0.2, 0.5, 0.1);
        let pts: Vec<Point3> = [(0., 0.), (1., 0.), (1., 2.), (0., 2.)]
            .iter()
            .map(|&(x, y)| q * Point3::new(x, y, 0.0))
            .collect();
        let t = axis_align(&pts);
        let moved: Vec<Point3> = pts.iter().map(|p| t.apply(p)).collect();
        let (lo, hi) = aabb(&moved).unwrap();
        let e = hi - lo;
        let thin = e.iter().filter(|v| v.abs() < 1e-9).count();
        assert_eq!(thin, 1, "{e:?}");
    }
}
