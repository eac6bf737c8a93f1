//! Geometry of the complex hyperbolic plane: point classification, Heisenberg
//! coordinates of boundary points, Bergman distance, Cartan invariant of ideal
//! triangles, and the trace-based isometry classification with its Bergman
//! translation length.

use num_complex::Complex64 as C;
use thiserror::Error;

use crate::cx3::{herm, CVec3, Cx3Error, ScaledMat33};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum ChGeomError {
    #[error("zero vector has no sign")]
    ZeroVector,
    #[error("vector is not null")]
    NotNull,
    #[error("point is not in the interior (lift not negative)")]
    NotInterior,
    #[error("two of the points coincide projectively")]
    DegenerateTriple,
    #[error("matrix is not J-unitary within tolerance")]
    NotIsometry,
    #[error(transparent)]
    Kernel(#[from] Cx3Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VectorSign {
    Negative,
    Null,
    Positive,
}

/// Sign of `<v,v>`, with a null band of width 1e-10 relative to the squared
/// coordinate norm.
pub fn vector_sign(v: &CVec3) -> Result<VectorSign, ChGeomError> {
    let n2 = v.norm() * v.norm();
    if n2 == 0.0 {
        return Err(ChGeomError::ZeroVector);
    }
    let h = herm(v, v).re;
    if h.abs() <= 1e-10 * n2 {
        Ok(VectorSign::Null)
    } else if h < 0.0 {
        Ok(VectorSign::Negative)
    } else {
        Ok(VectorSign::Positive)
    }
}

/// Heisenberg coordinates of a boundary point, or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeisPoint {
    Infinity,
    Finite { zeta: C, t: f64 },
}

/// A point of the ideal boundary: a projective null vector together with its
/// Heisenberg view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    lift: CVec3,
    heis: HeisPoint,
}

impl BoundaryPoint {
    /// Builds a boundary point from a null lift.
    pub fn from_lift(lift: CVec3) -> Result<Self, ChGeomError> {
        let heis = lift_to_heis(&lift)?;
        Ok(BoundaryPoint { lift, heis })
    }

    pub fn from_heis(h: HeisPoint) -> Self {
        BoundaryPoint { lift: heis_to_lift(&h), heis: h }
    }

    pub fn infinity() -> Self {
        Self::from_heis(HeisPoint::Infinity)
    }

    pub fn finite(zeta: C, t: f64) -> Self {
        Self::from_heis(HeisPoint::Finite { zeta, t })
    }

    pub fn lift(&self) -> &CVec3 {
        &self.lift
    }

    pub fn heis(&self) -> HeisPoint {
        self.heis
    }

    /// Projective coincidence test.
    pub fn same_point(&self, other: &BoundaryPoint) -> bool {
        projectively_equal(&self.lift, &other.lift, 1e-9)
    }
}

pub fn projectively_equal(a: &CVec3, b: &CVec3, tol: f64) -> bool {
    a.cross(b).norm() <= tol * a.norm() * b.norm()
}

/// Lift of a Heisenberg point: infinity goes to (1,0,0), [zeta,t] to
/// (-|zeta|^2 + it, zeta sqrt2, 1).
pub fn heis_to_lift(p: &HeisPoint) -> CVec3 {
    match p {
        HeisPoint::Infinity => CVec3::from_reals(1.0, 0.0, 0.0),
        HeisPoint::Finite { zeta, t } => CVec3::new(
            C::new(-zeta.norm_sqr(), *t),
            zeta * SQRT2,
            C::new(1.0, 0.0),
        ),
    }
}

/// Inverse of `heis_to_lift` after projective normalization. Null vectors
/// with vanishing third coordinate map to infinity.
pub fn lift_to_heis(v: &CVec3) -> Result<HeisPoint, ChGeomError> {
    if vector_sign(v)? != VectorSign::Null {
        return Err(ChGeomError::NotNull);
    }
    let v3 = v.0[2];
    if v3.norm() <= 1e-12 * v.norm() {
        return Ok(HeisPoint::Infinity);
    }
    let w1 = v.0[0] / v3;
    let w2 = v.0[1] / v3;
    Ok(HeisPoint::Finite { zeta: w2 / SQRT2, t: w1.im })
}

/// Bergman distance between two interior points given by negative lifts.
pub fn bergman_dist(z: &CVec3, w: &CVec3) -> Result<f64, ChGeomError> {
    if vector_sign(z)? != VectorSign::Negative || vector_sign(w)? != VectorSign::Negative {
        return Err(ChGeomError::NotInterior);
    }
    let num = (herm(z, w) * herm(w, z)).re;
    let den = (herm(z, z) * herm(w, w)).re;
    let ratio = (num / den).max(1.0);
    Ok(2.0 * ratio.sqrt().acosh())
}

/// Cartan angular invariant of an ordered ideal triangle.
pub fn cartan(
    v1: &BoundaryPoint,
    v2: &BoundaryPoint,
    v3: &BoundaryPoint,
) -> Result<f64, ChGeomError> {
    if v1.same_point(v2) || v2.same_point(v3) || v3.same_point(v1) {
        return Err(ChGeomError::DegenerateTriple);
    }
    let p = -herm(v1.lift(), v2.lift()) * herm(v2.lift(), v3.lift()) * herm(v3.lift(), v1.lift());
    Ok(p.arg())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TriangleKind {
    RealPlane,
    ComplexLine,
    Generic,
}

/// Classifies an ideal triangle by its Cartan invariant: 0 for a real plane,
/// +-pi/2 for a complex line.
pub fn triangle_kind(c: f64) -> TriangleKind {
    const BAND: f64 = 1e-9;
    if c.abs() <= BAND {
        TriangleKind::RealPlane
    } else if (c.abs() - std::f64::consts::FRAC_PI_2).abs() <= BAND {
        TriangleKind::ComplexLine
    } else {
        TriangleKind::Generic
    }
}

/// The discriminant f(z) = |z|^4 - 8 Re(z^3) + 18 |z|^2 - 27 separating the
/// isometry classes by the trace of an SU(2,1) representative.
pub fn discriminator(z: C) -> f64 {
    let n2 = z.norm_sqr();
    n2 * n2 - 8.0 * (z * z * z).re + 18.0 * n2 - 27.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsometryKind {
    Loxodromic,
    Elliptic,
    /// The f = 0 band: parabolic or special elliptic (not separated).
    ParabolicOrSpecialElliptic,
}

#[derive(Debug, Clone, Copy)]
pub struct IsometryClass {
    pub kind: IsometryKind,
    /// Discriminant value at the SU-normalized trace.
    pub f: f64,
    /// The SU-normalized trace itself.
    pub trace: C,
}

/// Width of the f = 0 band reported as parabolic / special elliptic.
const PARABOLIC_BAND: f64 = 1e-7;

/// Default J-unitarity tolerance for single matrices entered by hand.
pub const DEFAULT_ISOMETRY_TOL: f64 = 1e-7;

pub fn classify(a: &ScaledMat33) -> Result<IsometryClass, ChGeomError> {
    classify_with_tol(a, DEFAULT_ISOMETRY_TOL)
}

/// Trace classification; `tol` is the J-unitarity gate (scale it with the
/// word length for long holonomy products).
pub fn classify_with_tol(a: &ScaledMat33, tol: f64) -> Result<IsometryClass, ChGeomError> {
    if !a.is_j_unitary(tol) {
        return Err(ChGeomError::NotIsometry);
    }
    let n = a.su_normalize()?;
    let trace = n.trace() * n.logscale().exp();
    let f = discriminator(trace);
    let kind = if f.abs() <= PARABOLIC_BAND {
        IsometryKind::ParabolicOrSpecialElliptic
    } else if f > 0.0 {
        IsometryKind::Loxodromic
    } else {
        IsometryKind::Elliptic
    };
    Ok(IsometryClass { kind, f, trace })
}

/// Bergman translation length: 2 ln sigma of a representative rescaled to
/// unit-modulus determinant. Zero when all eigenvalue moduli agree.
pub fn translation_length(a: &ScaledMat33) -> Result<f64, ChGeomError> {
    translation_length_with_tol(a, DEFAULT_ISOMETRY_TOL)
}

pub fn translation_length_with_tol(a: &ScaledMat33, tol: f64) -> Result<f64, ChGeomError> {
    if !a.is_j_unitary(tol) {
        return Err(ChGeomError::NotIsometry);
    }
    let d = a.det3();
    let log_sigma = a.log_spectral_radius()? - d.log_modulus / 3.0;
    Ok((2.0 * log_sigma).max(0.0))
}
