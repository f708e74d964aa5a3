//! Quaternion algebra and Riemannian primitives of the unit 3-sphere.
//!
//! Points of S³ are unit quaternions stored as `(w, x, y, z)` with the
//! Hamilton product (`i·j = k`). S² is identified with the unit imaginary
//! quaternions. The Hopf projection is `q ↦ Im(q̄ i q)`, whose fibers are the
//! left cosets `{(cos θ + i sin θ)·q}`.

use nalgebra::{Vector3, Vector4};
use thiserror::Error;

pub type Vec4 = Vector4<f64>;
pub type Vec3 = Vector3<f64>;

/// Tolerance on `|p| = 1` accepted by the checked constructors.
pub const UNIT_TOL: f64 = 1e-10;
/// Tolerance on `|v| = 1` for the direction passed to [`geodesic_step`].
pub const STEP_DIR_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point is not on the unit sphere (|p| = {norm})")]
    NotUnit { norm: f64 },
    #[error("step direction is not unit length (|v| = {norm})")]
    NonUnitDirection { norm: f64 },
    #[error("vector is not tangent at its base point (<v, x> = {inner})")]
    NotTangent { inner: f64 },
}

/// Hamilton product of two quaternions in `(w, x, y, z)` order.
pub fn quat_mul(a: &Vec4, b: &Vec4) -> Vec4 {
    Vec4::new(
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    )
}

pub fn quat_conj(a: &Vec4) -> Vec4 {
    Vec4::new(a[0], -a[1], -a[2], -a[3])
}

/// The quaternion `cos θ + i sin θ`.
pub fn unit_complex(theta: f64) -> Vec4 {
    Vec4::new(theta.cos(), theta.sin(), 0.0, 0.0)
}

/// Embeds an imaginary 3-vector as the quaternion `0 + v₁i + v₂j + v₃k`.
pub fn pure(v: &Vec3) -> Vec4 {
    Vec4::new(0.0, v[0], v[1], v[2])
}

pub fn imag(q: &Vec4) -> Vec3 {
    Vec3::new(q[1], q[2], q[3])
}

/// Vector orthogonal to `a`, `b`, `c`, defined by `⟨cross4(a,b,c), w⟩ = det[a, b, c, w]`.
pub fn cross4(a: &Vec4, b: &Vec4, c: &Vec4) -> Vec4 {
    let m = |i: usize, j: usize, k: usize| -> f64 {
        a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i])
            + a[k] * (b[i] * c[j] - b[j] * c[i])
    };
    Vec4::new(-m(1, 2, 3), m(0, 2, 3), -m(0, 1, 3), m(0, 1, 2))
}

/// A unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S3Point(Vec4);

impl S3Point {
    pub const IDENTITY: S3Point = S3Point(Vec4::new(1.0, 0.0, 0.0, 0.0));

    /// Checked constructor: the input must already be unit within [`UNIT_TOL`].
    pub fn new(coords: Vec4) -> Result<Self, GeomError> {
        let norm = coords.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(GeomError::NotUnit { norm });
        }
        Ok(S3Point(coords))
    }

    /// Explicit renormalization of an arbitrary nonzero 4-vector.
    pub fn normalize(coords: Vec4) -> Self {
        S3Point(coords / coords.norm())
    }

    pub fn coords(&self) -> &Vec4 {
        &self.0
    }

    pub fn conj(&self) -> S3Point {
        S3Point(quat_conj(&self.0))
    }

    pub fn mul(&self, other: &S3Point) -> S3Point {
        S3Point(quat_mul(&self.0, &other.0))
    }

    /// Geodesic (great-circle) distance.
    pub fn distance(&self, other: &S3Point) -> f64 {
        // atan2 form is accurate for both tiny and near-antipodal separations.
        let dot = self.0.dot(&other.0);
        let chord = (self.0 - other.0).norm();
        let half = 0.5 * chord;
        if dot > 0.0 {
            2.0 * half.min(1.0).asin()
        } else {
            std::f64::consts::PI - 2.0 * (0.5 * (self.0 + other.0).norm()).min(1.0).asin()
        }
    }

    /// Riemannian logarithm: the tangent vector at `self` pointing to `other`
    /// with length equal to their geodesic distance.
    pub fn log(&self, other: &S3Point) -> Vec4 {
        let x = &self.0;
        let theta = self.distance(other);
        let w = other.0 - x * x.dot(&other.0);
        let n = w.norm();
        if n < 1e-300 {
            return Vec4::zeros();
        }
        w * (theta / n)
    }
}

/// A vector in the tangent space `T_x S³ = x^⊥`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: S3Point,
    pub dir: Vec4,
}

impl TangentVector {
    pub fn new(base: S3Point, dir: Vec4) -> Result<Self, GeomError> {
        let inner = dir.dot(base.coords());
        if inner.abs() > 1e-10 * dir.norm().max(1.0) {
            return Err(GeomError::NotTangent { inner });
        }
        Ok(TangentVector { base, dir })
    }

    pub fn norm(&self) -> f64 {
        self.dir.norm()
    }

    /// Unit-length copy; zero vectors are returned unchanged.
    pub fn normalized(&self) -> TangentVector {
        let n = self.dir.norm();
        if n == 0.0 {
            return *self;
        }
        TangentVector {
            base: self.base,
            dir: self.dir / n,
        }
    }

    /// Parallel transport along the great circle generated by this (unit)
    /// vector, evaluated after arclength `s`.
    pub fn transport_along_self(&self, s: f64) -> TangentVector {
        let (sn, cs) = s.sin_cos();
        let base = S3Point::normalize(self.base.coords() * cs + self.dir * sn);
        let dir = self.dir * cs - self.base.coords() * sn;
        TangentVector { base, dir }
    }
}

/// Point on the unit 2-sphere, identified with a unit imaginary quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S2Point(Vec3);

impl S2Point {
    pub fn new(coords: Vec3) -> Result<Self, GeomError> {
        let norm = coords.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(GeomError::NotUnit { norm });
        }
        Ok(S2Point(coords))
    }

    pub fn normalize(coords: Vec3) -> Self {
        S2Point(coords / coords.norm())
    }

    pub fn coords(&self) -> &Vec3 {
        &self.0
    }

    pub fn distance(&self, other: &S2Point) -> f64 {
        let cross = self.0.cross(&other.0).norm();
        cross.atan2(self.0.dot(&other.0))
    }

    /// Tangent vector at `self` pointing to `other`, length = geodesic distance.
    pub fn log(&self, other: &S2Point) -> Vec3 {
        let theta = self.distance(other);
        let w = other.0 - self.0 * self.0.dot(&other.0);
        let n = w.norm();
        if n < 1e-300 {
            return Vec3::zeros();
        }
        w * (theta / n)
    }

    /// Exponential map along tangent vector `v` (assumed orthogonal to `self`).
    pub fn exp(&self, v: &Vec3) -> S2Point {
        let t = v.norm();
        if t == 0.0 {
            return *self;
        }
        S2Point::normalize(self.0 * t.cos() + v * (t.sin() / t))
    }
}

/// `cos(s)·x + sin(s)·v`, renormalized. `v.dir` must be unit within
/// [`STEP_DIR_TOL`] and based at `x`.
pub fn geodesic_step(x: &S3Point, v: &TangentVector, s: f64) -> Result<S3Point, GeomError> {
    let norm = v.dir.norm();
    if (norm - 1.0).abs() > STEP_DIR_TOL {
        return Err(GeomError::NonUnitDirection { norm });
    }
    let (sn, cs) = s.sin_cos();
    Ok(S3Point::normalize(x.coords() * cs + v.dir * sn))
}

/// Orthogonal projection of `w` onto `T_x S³`.
pub fn tangent_project(x: &S3Point, w: &Vec4) -> TangentVector {
    let xc = x.coords();
    TangentVector {
        base: *x,
        dir: w - xc * xc.dot(w),
    }
}

/// Hopf projection `q ↦ Im(q̄ i q)`.
pub fn hopf_project(q: &S3Point) -> S2Point {
    let i = Vec4::new(0.0, 1.0, 0.0, 0.0);
    let v = quat_mul(&quat_mul(&quat_conj(q.coords()), &i), q.coords());
    S2Point::normalize(imag(&v))
}

/// One point of the Hopf fiber over `p`; the whole fiber is `{e^{iθ}·q}`.
pub fn hopf_lift(p: &S2Point) -> S3Point {
    // Find a rotation r with r i r̄ = p; then q = r̄ satisfies q̄ i q = p.
    let i = Vec3::new(1.0, 0.0, 0.0);
    let pc = p.coords();
    let c = i.dot(pc);
    let r = if c < -1.0 + 1e-12 {
        Vec4::new(0.0, 0.0, 1.0, 0.0)
    } else {
        // Half-angle quaternion: (1 + c, i × p) normalized.
        let axis = i.cross(pc);
        Vec4::new(1.0 + c, axis[0], axis[1], axis[2])
    };
    S3Point::normalize(quat_conj(&r))
}
