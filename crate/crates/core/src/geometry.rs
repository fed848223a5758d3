//! Room scenario, poses and the transforms between the global frame and the
//! array-local frames.
//!
//! Conventions: `theta` is the polar angle measured from +z and `phi` is the
//! azimuth in the x-y plane measured from +x, so that a unit direction is
//! `(sin θ cos φ, sin θ sin φ, cos θ)`. Orientations are applied as the
//! extrinsic rotation `R = Rz(alpha) · Ry(beta) · Rx(gamma)`.

use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for a (numerically) zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::epsilon() && n.is_finite() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    pub fn get(self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn with(mut self, axis: usize, value: T) -> Self {
        match axis {
            0 => self.x = value,
            1 => self.y = value,
            2 => self.z = value,
            _ => panic!("axis {axis} out of range"),
        }
        self
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cast<U: Scalar>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Array orientation. `alpha` rotates about z, `beta` about y, `gamma` about x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Orientation<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Scalar> Orientation<T> {
    pub fn new(alpha: T, beta: T, gamma: T) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Rotation about z only, as used by the linear-array scenario.
    pub fn yaw(alpha: T) -> Self {
        Self::new(alpha, T::zero(), T::zero())
    }

    pub fn cast<U: Scalar>(self) -> Orientation<U> {
        Orientation::new(
            U::lit(self.alpha.as_f64()),
            U::lit(self.beta.as_f64()),
            U::lit(self.gamma.as_f64()),
        )
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Scalar> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Mat3([[o, z, z], [z, o, z], [z, z, o]])
    }

    pub fn rot_x(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Mat3([[o, z, z], [z, c, -s], [z, s, c]])
    }

    pub fn rot_y(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Mat3([[c, z, s], [z, o, z], [-s, z, c]])
    }

    pub fn rot_z(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Mat3([[c, -s, z], [s, c, z], [z, z, o]])
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).fold(T::zero(), |acc, k| acc + self.0[i][k] * other.0[k][j]);
            }
        }
        Mat3(out)
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// `Rz(alpha) · Ry(beta) · Rx(gamma)`; maps array-local coordinates to global ones.
pub fn rotation_matrix<T: Scalar>(o: Orientation<T>) -> Mat3<T> {
    Mat3::rot_z(o.alpha)
        .mul_mat(&Mat3::rot_y(o.beta))
        .mul_mat(&Mat3::rot_x(o.gamma))
}

/// Unit vector for the spherical angles `(phi, theta)`.
pub fn spherical_to_unit<T: Scalar>(phi: T, theta: T) -> Vec3<T> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

/// Spherical angles of a unit vector: `phi ∈ [0, 2π)`, `theta ∈ [0, π]`.
pub fn unit_to_spherical<T: Scalar>(d: Vec3<T>) -> (T, T) {
    let theta = d.z.max(-T::one()).min(T::one()).acos();
    let mut phi = d.y.atan2(d.x);
    if phi < T::zero() {
        phi = phi + T::TAU();
    }
    if phi >= T::TAU() {
        phi = T::zero();
    }
    (phi, theta)
}

/// Expresses a global direction in the frame of an array with orientation `o`.
pub fn global_to_local_angles<T: Scalar>(direction: Vec3<T>, o: Orientation<T>) -> Result<(T, T)> {
    let d = direction
        .normalized()
        .ok_or_else(|| Error::invalid("direction has zero length"))?;
    let local = rotation_matrix(o).transpose().mul_vec(d);
    Ok(unit_to_spherical(local))
}

/// Inverse of [`global_to_local_angles`].
pub fn local_to_global_direction<T: Scalar>(phi: T, theta: T, o: Orientation<T>) -> Vec3<T> {
    rotation_matrix(o).mul_vec(spherical_to_unit(phi, theta))
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Scalar> Aabb<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|a| self.min.get(a) <= self.max.get(a))
            && self.min.is_finite()
            && self.max.is_finite()
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        (0..3).all(|a| p.get(a) >= self.min.get(a) && p.get(a) <= self.max.get(a))
    }

    pub fn contains_box(&self, other: &Aabb<T>) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    /// Strict interior test (points on the surface are outside).
    pub fn contains_strict(&self, p: Vec3<T>) -> bool {
        (0..3).all(|a| p.get(a) > self.min.get(a) && p.get(a) < self.max.get(a))
    }

    /// Slab test for the closed segment `a → b`.
    pub fn intersects_segment(&self, a: Vec3<T>, b: Vec3<T>) -> bool {
        let d = b - a;
        let mut t0 = T::zero();
        let mut t1 = T::one();
        for axis in 0..3 {
            let (o, dir) = (a.get(axis), d.get(axis));
            let (lo, hi) = (self.min.get(axis), self.max.get(axis));
            if dir.abs() <= T::epsilon() {
                if o < lo || o > hi {
                    return false;
                }
            } else {
                let inv = T::one() / dir;
                let mut ta = (lo - o) * inv;
                let mut tb = (hi - o) * inv;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle<T> {
    pub name: String,
    pub bounds: Aabb<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T> {
    pub position: Vec3<T>,
    pub orientation: Orientation<T>,
}

/// Half-open angle interval `[lo, hi)`; `lo == hi` pins the angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRange<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> AngleRange<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn fixed(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, a: T) -> bool {
        if self.lo == self.hi {
            a == self.lo
        } else {
            a >= self.lo && a < self.hi
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene<T> {
    pub room: Aabb<T>,
    pub obstacles: Vec<Obstacle<T>>,
    pub tx: Pose<T>,
    pub rx_region: Aabb<T>,
    /// Ranges for alpha, beta and gamma of the receiver.
    pub rx_orientation: [AngleRange<T>; 3],
}

impl<T: Scalar> Scene<T> {
    /// 7 m × 7 m × 3 m living room with the TX array 1 m above the floor at the
    /// origin and five furniture blockers. Furniture sizes are assumed values.
    pub fn living_room() -> Self {
        let v = |x: f64, y: f64, z: f64| Vec3::new(T::lit(x), T::lit(y), T::lit(z));
        let b = |name: &str, min: Vec3<T>, max: Vec3<T>| Obstacle {
            name: name.to_string(),
            bounds: Aabb::new(min, max),
        };
        Scene {
            room: Aabb::new(v(-0.5, -3.5, -1.0), v(6.5, 3.5, 2.0)),
            obstacles: vec![
                b("sofa-a", v(3.0, -2.6, -1.0), v(3.9, -0.8, -0.2)),
                b("sofa-b", v(5.6, -1.2, -1.0), v(6.5, 1.2, -0.2)),
                b("table", v(2.4, 0.8, -1.0), v(3.2, 1.8, -0.25)),
                b("chair", v(2.0, -3.1, -1.0), v(2.6, -2.5, 0.15)),
                b("cabinet", v(3.6, 2.2, -1.0), v(4.2, 3.5, 1.0)),
            ],
            tx: Pose {
                position: Vec3::zero(),
                orientation: Orientation::default(),
            },
            rx_region: Aabb::new(v(1.5, -3.5, 0.0), v(5.5, 3.5, 0.0)),
            rx_orientation: [
                AngleRange::new(T::zero(), T::TAU()),
                AngleRange::fixed(T::zero()),
                AngleRange::fixed(T::zero()),
            ],
        }
    }

    /// Planar-array variant: receiver height in `[-0.5, 1]` and tilts in `[-π/4, π/4)`.
    pub fn living_room_planar() -> Self {
        let mut s = Self::living_room();
        s.rx_region.min.z = T::lit(-0.5);
        s.rx_region.max.z = T::one();
        let q = T::FRAC_PI_4();
        s.rx_orientation[1] = AngleRange::new(-q, q);
        s.rx_orientation[2] = AngleRange::new(-q, q);
        s
    }

    pub fn is_planar(&self) -> bool {
        !(self.rx_orientation[1].is_fixed() && self.rx_orientation[2].is_fixed())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.room.is_valid() || !self.rx_region.is_valid() {
            return Err(Error::invalid("room and rx region need min <= max"));
        }
        if !self.room.contains_box(&self.rx_region) {
            return Err(Error::invalid("rx region must lie inside the room"));
        }
        if let Some(o) = self
            .obstacles
            .iter()
            .find(|o| !o.bounds.is_valid() || !self.room.contains_box(&o.bounds))
        {
            return Err(Error::invalid(format!(
                "obstacle `{}` must lie inside the room",
                o.name
            )));
        }
        if !self.room.contains(self.tx.position) {
            return Err(Error::invalid("tx position must lie inside the room"));
        }
        for r in &self.rx_orientation {
            if !(r.lo <= r.hi) {
                return Err(Error::invalid("orientation range needs lo <= hi"));
            }
        }
        Ok(())
    }

    /// True when `p` lies strictly inside some obstacle.
    pub fn inside_obstacle(&self, p: Vec3<T>) -> bool {
        self.obstacles.iter().any(|o| o.bounds.contains_strict(p))
    }
}

fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::lit(u)
}

/// Draws a receiver pose from an existing generator.
pub fn sample_rx_pose_with<T: Scalar, R: Rng + ?Sized>(scene: &Scene<T>, rng: &mut R) -> Pose<T> {
    let r = &scene.rx_region;
    let position = Vec3::new(
        uniform(rng, r.min.x, r.max.x),
        uniform(rng, r.min.y, r.max.y),
        uniform(rng, r.min.z, r.max.z),
    );
    let [a, b, g] = scene.rx_orientation;
    let orientation = Orientation::new(
        uniform(rng, a.lo, a.hi),
        uniform(rng, b.lo, b.hi),
        uniform(rng, g.lo, g.hi),
    );
    Pose {
        position,
        orientation,
    }
}

/// Uniform receiver pose; deterministic for a fixed seed.
pub fn sample_rx_pose<T: Scalar>(scene: &Scene<T>, seed: u64) -> Pose<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_rx_pose_with(scene, &mut rng)
}
