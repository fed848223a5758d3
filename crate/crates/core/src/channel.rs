//! Multipath synthesis with the image-source method and assembly of the
//! narrowband MIMO channel matrix from its path components.

use std::cmp::Ordering;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{global_to_local_angles, Pose, Scene, Vec3};
use crate::scalar::Scalar;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn wavelength<T: Scalar>(carrier_hz: T) -> T {
    T::lit(SPEED_OF_LIGHT) / carrier_hz
}

/// One propagation path between the arrays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent<T> {
    /// Linear power gain.
    pub rho: T,
    /// Carrier phase, radians in `[0, 2π)`.
    pub vartheta: T,
    /// Departure `(phi, theta)` in the TX array frame.
    pub aod: (T, T),
    /// Arrival `(phi, theta)` in the RX array frame.
    pub aoa: (T, T),
    /// Number of wall bounces; 0 is the line-of-sight path.
    pub order: u8,
    pub length: T,
}

/// Half-wavelength spaced antenna array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArrayGeometry {
    Ula { n: usize },
    Upa { n_h: usize, n_v: usize },
}

impl ArrayGeometry {
    pub fn len(&self) -> usize {
        match *self {
            ArrayGeometry::Ula { n } => n,
            ArrayGeometry::Upa { n_h, n_v } => n_h * n_v,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, ArrayGeometry::Upa { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ArrayGeometry::Ula { n } => n >= 1,
            ArrayGeometry::Upa { n_h, n_v } => n_h >= 1 && n_v >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("array element counts must be >= 1"))
        }
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| *z * s).collect(),
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                        acc + a * b
                    })
            })
            .collect())
    }

    /// Adds `s · a bᴴ` in place.
    fn add_outer(&mut self, s: Complex<T>, a: &[Complex<T>], b: &[Complex<T>]) {
        for (r, ar) in a.iter().enumerate() {
            let sa = s * ar;
            for (c, bc) in b.iter().enumerate() {
                self.data[r * self.cols + c] += sa * bc.conj();
            }
        }
    }
}

/// `aᴴ b`.
pub fn inner<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x.conj() * y
        })
}

/// Array steering vector (unit norm). ULA entry `k` is
/// `exp(jπ k sinθ cosφ) / √N`; UPA entry `(i, j)` at flat index `i·n_v + j`
/// is `exp(jπ (i sinθ cosφ + j cosθ)) / √(n_h n_v)`.
pub fn array_response<T: Scalar>(g: &ArrayGeometry, phi: T, theta: T) -> Vec<Complex<T>> {
    let (n_h, n_v) = match *g {
        ArrayGeometry::Ula { n } => (n, 1),
        ArrayGeometry::Upa { n_h, n_v } => (n_h, n_v),
    };
    let scale = T::one() / T::from_usize_lossy(n_h * n_v).sqrt();
    let horiz = T::PI() * theta.sin() * phi.cos();
    let vert = T::PI() * theta.cos();
    let mut out = Vec::with_capacity(n_h * n_v);
    for i in 0..n_h {
        for j in 0..n_v {
            let mut arg = T::from_usize_lossy(i) * horiz;
            if g.is_planar() {
                arg += T::from_usize_lossy(j) * vert;
            }
            out.push(Complex::from_polar(scale, arg));
        }
    }
    out
}

/// Parameters of the deterministic image-source tracer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig<T> {
    pub carrier_hz: T,
    /// Power loss per wall bounce, dB (negative).
    pub reflection_loss_db: T,
    /// Highest reflection order, 0..=2.
    pub max_order: u8,
    pub max_paths: usize,
}

impl<T: Scalar> Default for TraceConfig<T> {
    fn default() -> Self {
        Self {
            carrier_hz: T::lit(60e9),
            reflection_loss_db: T::lit(-10.0),
            max_order: 2,
            max_paths: 20,
        }
    }
}

/// Free-space power gain with per-bounce loss and the propagation phase.
pub fn path_gain<T: Scalar>(
    length: T,
    order: u8,
    carrier_hz: T,
    reflection_loss_db: T,
) -> Result<(T, T)> {
    if !(length > T::zero()) || !length.is_finite() {
        return Err(Error::invalid(format!(
            "path length must be positive, got {length}"
        )));
    }
    let lambda = wavelength(carrier_hz);
    let friis = lambda / (T::lit(4.0) * T::PI() * length);
    let gamma = T::lit(10.0).powf(reflection_loss_db / T::lit(10.0));
    let rho = friis * friis * gamma.powi(i32::from(order));
    let mut vartheta = (-T::TAU() * length / lambda) % T::TAU();
    if vartheta < T::zero() {
        vartheta += T::TAU();
    }
    if vartheta >= T::TAU() {
        vartheta = T::zero();
    }
    Ok((rho, vartheta))
}

// Walls are indexed as 2·axis + side with side 0 = min face, 1 = max face.
fn wall_plane<T: Scalar>(scene: &Scene<T>, wall: usize) -> (usize, T) {
    let axis = wall / 2;
    let c = if wall % 2 == 0 {
        scene.room.min.get(axis)
    } else {
        scene.room.max.get(axis)
    };
    (axis, c)
}

fn mirror<T: Scalar>(p: Vec3<T>, axis: usize, c: T) -> Vec3<T> {
    p.with(axis, T::lit(2.0) * c - p.get(axis))
}

/// Point where segment `a → b` meets the plane `coord[axis] = c`, if strictly inside the segment.
fn cross_plane<T: Scalar>(a: Vec3<T>, b: Vec3<T>, axis: usize, c: T) -> Option<Vec3<T>> {
    let (pa, pb) = (a.get(axis), b.get(axis));
    let denom = pb - pa;
    if denom.abs() <= T::epsilon() {
        return None;
    }
    let t = (c - pa) / denom;
    let eps = T::lit(1e-9);
    if t <= eps || t >= T::one() - eps {
        return None;
    }
    Some((a + (b - a) * t).with(axis, c))
}

fn on_face<T: Scalar>(scene: &Scene<T>, p: Vec3<T>, axis: usize) -> bool {
    let tol = T::lit(1e-9);
    (0..3)
        .filter(|&a| a != axis)
        .all(|a| p.get(a) >= scene.room.min.get(a) - tol && p.get(a) <= scene.room.max.get(a) + tol)
}

fn blocked<T: Scalar>(scene: &Scene<T>, vertices: &[Vec3<T>]) -> bool {
    vertices.windows(2).any(|seg| {
        scene
            .obstacles
            .iter()
            .any(|o| o.bounds.intersects_segment(seg[0], seg[1]))
    })
}

/// Enumerates the line-of-sight path and wall reflections up to
/// `cfg.max_order`, drops the ones crossing an obstacle, and keeps the
/// `cfg.max_paths` strongest.
pub fn trace_paths<T: Scalar>(
    scene: &Scene<T>,
    tx: &Pose<T>,
    rx: &Pose<T>,
    cfg: &TraceConfig<T>,
) -> Result<Vec<PathComponent<T>>> {
    let (p_t, p_r) = (tx.position, rx.position);
    if !scene.room.contains(p_r) {
        return Err(Error::invalid("receiver lies outside the room"));
    }
    if !scene.room.contains(p_t) {
        return Err(Error::invalid("transmitter lies outside the room"));
    }
    if p_t.distance(p_r) <= T::epsilon() {
        return Err(Error::invalid("transmitter and receiver coincide"));
    }
    if cfg.max_order > 2 {
        return Err(Error::invalid("max reflection order is 2"));
    }
    if cfg.max_paths == 0 {
        return Err(Error::invalid("max_paths must be >= 1"));
    }

    // Each candidate is the polyline TX → bounce points → RX.
    let mut polylines: Vec<(u8, Vec<Vec3<T>>)> = vec![(0, vec![p_t, p_r])];
    if cfg.max_order >= 1 {
        for w in 0..6 {
            let (axis, c) = wall_plane(scene, w);
            let image = mirror(p_t, axis, c);
            if let Some(q) = cross_plane(image, p_r, axis, c).filter(|q| on_face(scene, *q, axis)) {
                polylines.push((1, vec![p_t, q, p_r]));
            }
        }
    }
    if cfg.max_order >= 2 {
        for w1 in 0..6 {
            for w2 in (0..6).filter(|&w| w != w1) {
                let (a1, c1) = wall_plane(scene, w1);
                let (a2, c2) = wall_plane(scene, w2);
                let i1 = mirror(p_t, a1, c1);
                let i2 = mirror(i1, a2, c2);
                let Some(q2) = cross_plane(i2, p_r, a2, c2).filter(|q| on_face(scene, *q, a2))
                else {
                    continue;
                };
                let Some(q1) = cross_plane(i1, q2, a1, c1).filter(|q| on_face(scene, *q, a1))
                else {
                    continue;
                };
                polylines.push((2, vec![p_t, q1, q2, p_r]));
            }
        }
    }

    let mut paths = Vec::new();
    for (order, pts) in polylines {
        if blocked(scene, &pts) {
            continue;
        }
        let length = pts
            .windows(2)
            .fold(T::zero(), |acc, s| acc + s[0].distance(s[1]));
        let (rho, vartheta) = path_gain(length, order, cfg.carrier_hz, cfg.reflection_loss_db)?;
        let aod = global_to_local_angles(pts[1] - pts[0], tx.orientation)?;
        let n = pts.len();
        let aoa = global_to_local_angles(pts[n - 2] - pts[n - 1], rx.orientation)?;
        paths.push(PathComponent {
            rho,
            vartheta,
            aod,
            aoa,
            order,
            length,
        });
    }
    // Stable sort keeps enumeration order among equal gains.
    paths.sort_by(|a, b| b.rho.partial_cmp(&a.rho).unwrap_or(Ordering::Equal));
    paths.truncate(cfg.max_paths);
    Ok(paths)
}

fn path_order<T: Scalar>(a: &PathComponent<T>, b: &PathComponent<T>) -> Ordering {
    let key = |p: &PathComponent<T>| {
        [
            -p.rho.as_f64(),
            p.vartheta.as_f64(),
            p.aod.0.as_f64(),
            p.aod.1.as_f64(),
            p.aoa.0.as_f64(),
            p.aoa.1.as_f64(),
            p.length.as_f64(),
            f64::from(p.order),
        ]
    };
    let (ka, kb) = (key(a), key(b));
    ka.iter()
        .zip(&kb)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// `H = Σ √ρ e^{jϑ} a_r(aoa) a_t(aod)ᴴ`, accumulated in a canonical path
/// order so any permutation of `paths` gives bit-identical output.
pub fn channel_matrix<T: Scalar>(
    paths: &[PathComponent<T>],
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> CMatrix<T> {
    let mut sorted: Vec<&PathComponent<T>> = paths.iter().collect();
    sorted.sort_by(|a, b| path_order(a, b));
    let mut h = CMatrix::zeros(rx.len(), tx.len());
    for p in sorted {
        let a_r = array_response(rx, p.aoa.0, p.aoa.1);
        let a_t = array_response(tx, p.aod.0, p.aod.1);
        h.add_outer(Complex::from_polar(p.rho.sqrt(), p.vartheta), &a_r, &a_t);
    }
    h
}
