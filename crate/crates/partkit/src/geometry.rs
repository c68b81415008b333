//! Minimal 3D math substrate: vectors, rotations, rigid poses, oriented
//! boxes, point clouds, and surface sampling.
//!
//! Rotations are stored as unit quaternions; matrices are computed on
//! demand. All types are immutable values and safe to share across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A point or direction in 3D, meters unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            Vec3::ZERO
        } else {
            self / n
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

impl std::ops::Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

// JSON encoding: [x, y, z]
impl Serialize for Vec3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vec3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        let v = Vec3::new(x, y, z);
        if !v.is_finite() {
            return Err(D::Error::custom("non-finite vector component"));
        }
        Ok(v)
    }
}

/// A 3D rotation stored as a unit quaternion (w, x, y, z).
///
/// The double cover is handled by canonicalizing w >= 0 on serialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Builds a rotation from a quaternion, normalizing to unit length.
    pub fn from_quat(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        assert!(n > 0.0, "zero quaternion");
        Rotation { w: w / n, x: x / n, y: y / n, z: z / n }
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_angle_axis(angle: f64, axis: Vec3) -> Self {
        let u = axis.normalized();
        let (s, c) = (angle / 2.0).sin_cos();
        Rotation { w: c, x: u.x * s, y: u.y * s, z: u.z * s }
    }

    pub fn from_matrix(m: &nalgebra::Matrix3<f64>) -> Self {
        let q = nalgebra::UnitQuaternion::from_matrix(m);
        Rotation::from_quat(q.w, q.i, q.j, q.k)
    }

    pub fn to_matrix(self) -> nalgebra::Matrix3<f64> {
        let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
            self.w, self.x, self.y, self.z,
        ));
        q.to_rotation_matrix().into_inner()
    }

    pub fn apply(self, v: Vec3) -> Vec3 {
        // q * v * q^-1 expanded via the cross-product form
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    pub fn compose(self, other: Rotation) -> Rotation {
        let (w1, x1, y1, z1) = (self.w, self.x, self.y, self.z);
        let (w2, x2, y2, z2) = (other.w, other.x, other.y, other.z);
        Rotation::from_quat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )
    }

    pub fn inverse(self) -> Rotation {
        Rotation { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Geodesic distance to another rotation, radians in [0, pi].
    pub fn angle_to(self, other: Rotation) -> f64 {
        self.inverse().compose(other).angle_axis().0
    }

    /// Decomposes into (angle, axis) with angle in [0, pi].
    ///
    /// Near-identity rotations report axis (0, 0, 1) so downstream
    /// geometry inference never sees NaN.
    pub fn angle_axis(self) -> (f64, Vec3) {
        let w = self.w.abs();
        let u = if self.w < 0.0 {
            Vec3::new(-self.x, -self.y, -self.z)
        } else {
            Vec3::new(self.x, self.y, self.z)
        };
        let s = u.norm();
        let angle = 2.0 * s.atan2(w);
        if angle < 1e-12 {
            (0.0, Vec3::new(0.0, 0.0, 1.0))
        } else {
            (angle, u / s)
        }
    }

    fn canonical(self) -> Rotation {
        if self.w < 0.0 {
            Rotation { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
        } else {
            self
        }
    }
}

// JSON encoding: [w, x, y, z] with w >= 0
impl Serialize for Rotation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let c = self.canonical();
        [c.w, c.x, c.y, c.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(d)?;
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(D::Error::custom("invalid quaternion"));
        }
        Ok(Rotation::from_quat(w, x, y, z))
    }
}

/// A rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { rotation: Rotation::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Pose { rotation, translation }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Pose { rotation: Rotation::IDENTITY, translation: t }
    }

    /// R * v + t
    pub fn apply(self, v: Vec3) -> Vec3 {
        self.rotation.apply(v) + self.translation
    }

    /// self then-applied-after other: (self * other)(v) = self(other(v))
    pub fn compose(self, other: Pose) -> Pose {
        Pose {
            rotation: self.rotation.compose(other.rotation),
            translation: self.rotation.apply(other.translation) + self.translation,
        }
    }

    pub fn inverse(self) -> Pose {
        let rinv = self.rotation.inverse();
        Pose { rotation: rinv, translation: -rinv.apply(self.translation) }
    }
}

/// A box with arbitrary center, orientation, and strictly positive half extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub rotation: Rotation,
}

impl OrientedBox {
    pub fn new(center: Vec3, half_extents: Vec3, rotation: Rotation) -> Self {
        assert!(
            half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.z > 0.0,
            "half extents must be strictly positive"
        );
        OrientedBox { center, half_extents, rotation }
    }

    /// The box frame as a pose (box-local to world).
    pub fn frame(&self) -> Pose {
        Pose::new(self.rotation, self.center)
    }
}

/// An ordered set of 3D points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        let mut c = Vec3::ZERO;
        for p in &self.points {
            c = c + *p;
        }
        c / self.points.len().max(1) as f64
    }

    pub fn transformed(&self, pose: Pose) -> PointCloud {
        PointCloud::new(self.points.iter().map(|p| pose.apply(*p)).collect())
    }

    /// Plain-text encoding: one "x y z" triple per line.
    pub fn to_xyz_text(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
        }
        out
    }

    pub fn from_xyz_text(text: &str) -> Result<PointCloud, String> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("line {}: {}", i + 1, e))?;
            if vals.len() != 3 {
                return Err(format!("line {}: expected 3 values, got {}", i + 1, vals.len()));
            }
            points.push(Vec3::new(vals[0], vals[1], vals[2]));
        }
        Ok(PointCloud::new(points))
    }
}

/// Samples `n` points uniformly over the 6 faces of `b` by area.
/// Deterministic for a fixed seed; points are returned in world frame.
pub fn sample_box_surface(b: &OrientedBox, n: usize, seed: u64) -> PointCloud {
    assert!(n >= 1, "need at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = b.half_extents;
    // face areas: +-x, +-y, +-z
    let areas = [
        h.y * h.z,
        h.y * h.z,
        h.x * h.z,
        h.x * h.z,
        h.x * h.y,
        h.x * h.y,
    ];
    let total: f64 = areas.iter().sum();
    let frame = b.frame();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut r = rng.gen_range(0.0..total);
        let mut face = 0;
        for (i, a) in areas.iter().enumerate() {
            if r < *a {
                face = i;
                break;
            }
            r -= a;
        }
        let u = rng.gen_range(-1.0..1.0);
        let v = rng.gen_range(-1.0..1.0);
        let local = match face {
            0 => Vec3::new(h.x, u * h.y, v * h.z),
            1 => Vec3::new(-h.x, u * h.y, v * h.z),
            2 => Vec3::new(u * h.x, h.y, v * h.z),
            3 => Vec3::new(u * h.x, -h.y, v * h.z),
            4 => Vec3::new(u * h.x, v * h.y, h.z),
            _ => Vec3::new(u * h.x, v * h.y, -h.z),
        };
        points.push(frame.apply(local));
    }
    PointCloud::new(points)
}
