//! Real ideal triangles and their pair invariants: the Z-invariant of two
//! adjacent real ideal triangles, the normal pair (tau_0, tau_z), the real
//! symmetry M_{x,alpha}, the order-3 rotation E, normalization to the
//! standard triangle, and single developing steps.

use num_complex::Complex64 as C;
use thiserror::Error;

use crate::chgeom::{cartan, projectively_equal, BoundaryPoint, ChGeomError};
use crate::cx3::{box_product, herm, CVec3, Cx3Error, ScaledMat33};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum ZGeomError {
    #[error("triangle is not real (Cartan invariant too far from 0)")]
    NotRealTriangle,
    #[error("degenerate point configuration")]
    Degenerate,
    #[error("invariant z must avoid {{-1, 0}}")]
    ForbiddenInvariant,
    #[error("a pairing in the Z formula vanishes (point on the shared complex line)")]
    DivisionByZero,
    #[error("modulus x must be positive")]
    NonPositiveModulus,
    #[error(transparent)]
    Geom(#[from] ChGeomError),
    #[error(transparent)]
    Kernel(#[from] Cx3Error),
}

/// Tolerance on |Cartan| for accepting a triangle as real; sized for
/// developing chains of length up to ~1e3.
pub const REAL_TRIANGLE_TOL: f64 = 1e-8;

/// An ordered ideal triangle whose vertices lie on the boundary of a real
/// plane (Cartan invariant 0).
#[derive(Debug, Clone, Copy)]
pub struct RealIdealTriangle {
    vertices: [BoundaryPoint; 3],
}

impl RealIdealTriangle {
    pub fn new(
        p1: BoundaryPoint,
        p2: BoundaryPoint,
        p3: BoundaryPoint,
    ) -> Result<Self, ZGeomError> {
        let c = cartan(&p1, &p2, &p3)?;
        if c.abs() > REAL_TRIANGLE_TOL {
            return Err(ZGeomError::NotRealTriangle);
        }
        Ok(RealIdealTriangle { vertices: [p1, p2, p3] })
    }

    pub fn vertices(&self) -> &[BoundaryPoint; 3] {
        &self.vertices
    }

    /// The standard triangle tau_0 = (infinity, [-1,0], [0,0]).
    pub fn standard() -> Self {
        RealIdealTriangle {
            vertices: [
                BoundaryPoint::infinity(),
                BoundaryPoint::finite(C::new(-1.0, 0.0), 0.0),
                BoundaryPoint::finite(C::new(0.0, 0.0), 0.0),
            ],
        }
    }
}

/// Lifts of tau_0 in the fixed order (1,0,0), (-1,-sqrt2,1), (0,0,1).
fn tau0_lifts() -> [CVec3; 3] {
    [
        CVec3::from_reals(1.0, 0.0, 0.0),
        CVec3::from_reals(-1.0, -SQRT2, 1.0),
        CVec3::from_reals(0.0, 0.0, 1.0),
    ]
}

/// Third vertex of tau_z: the lift (-|z|^2, z sqrt2, 1), i.e. [z, 0] in
/// Heisenberg coordinates.
fn tau_z_vertex(z: C) -> BoundaryPoint {
    BoundaryPoint::finite(z, 0.0)
}

/// Two adjacent real ideal triangles tau1 = (p1,p2,p3), tau2 = (p3,p4,p1)
/// sharing the edge {p1,p3}.
#[derive(Debug, Clone, Copy)]
pub struct TrianglePair {
    tau1: RealIdealTriangle,
    tau2: RealIdealTriangle,
}

impl TrianglePair {
    /// Builds the pair from the four corner points; validates both triangles
    /// and the invariant condition z outside {-1, 0}.
    pub fn new(
        p1: BoundaryPoint,
        p2: BoundaryPoint,
        p3: BoundaryPoint,
        p4: BoundaryPoint,
    ) -> Result<Self, ZGeomError> {
        let tau1 = RealIdealTriangle::new(p1, p2, p3)?;
        let tau2 = RealIdealTriangle::new(p3, p4, p1)?;
        let pair = TrianglePair { tau1, tau2 };
        let z = pair.z_invariant_unchecked()?;
        if z.norm() <= 1e-10 || (z + C::new(1.0, 0.0)).norm() <= 1e-10 {
            return Err(ZGeomError::ForbiddenInvariant);
        }
        Ok(pair)
    }

    pub fn tau1(&self) -> &RealIdealTriangle {
        &self.tau1
    }

    pub fn tau2(&self) -> &RealIdealTriangle {
        &self.tau2
    }

    pub fn corners(&self) -> [&BoundaryPoint; 4] {
        let v1 = self.tau1.vertices();
        let v2 = self.tau2.vertices();
        [&v1[0], &v1[1], &v1[2], &v2[1]]
    }

    /// The pair with the triangle order swapped: (tau2, tau1) as
    /// (p3, p4, p1), (p1, p2, p3).
    pub fn swapped(&self) -> TrianglePair {
        let [p1, p2, p3, p4] = self.corners();
        TrianglePair {
            tau1: RealIdealTriangle { vertices: [*p3, *p4, *p1] },
            tau2: RealIdealTriangle { vertices: [*p1, *p2, *p3] },
        }
    }

    /// Image of the pair under an isometry (projective action on lifts).
    pub fn transformed(&self, a: &ScaledMat33) -> Result<TrianglePair, ZGeomError> {
        let [p1, p2, p3, p4] = self.corners();
        let map = |p: &BoundaryPoint| -> Result<BoundaryPoint, ZGeomError> {
            Ok(BoundaryPoint::from_lift(a.apply_projective(p.lift()))?)
        };
        TrianglePair::new(map(p1)?, map(p2)?, map(p3)?, map(p4)?)
    }

    fn z_invariant_unchecked(&self) -> Result<C, ZGeomError> {
        let [p1, p2, p3, p4] = self.corners();
        let v = box_product(p1.lift(), p3.lift()).map_err(|_| ZGeomError::Degenerate)?;
        let h4v = herm(p4.lift(), &v);
        let h2v = herm(p2.lift(), &v);
        let h21 = herm(p2.lift(), p1.lift());
        let h41 = herm(p4.lift(), p1.lift());
        let scale = v.norm();
        if h2v.norm() <= 1e-13 * p2.lift().norm() * scale
            || h41.norm() <= 1e-13 * p4.lift().norm() * p1.lift().norm()
        {
            return Err(ZGeomError::DivisionByZero);
        }
        Ok(-(h4v * h21) / (h2v * h41))
    }
}

/// The Z-invariant of an ordered pair of adjacent real ideal triangles.
pub fn z_invariant(pair: &TrianglePair) -> Result<C, ZGeomError> {
    pair.z_invariant_unchecked()
}

/// The normal pair (tau_0, tau_z) realizing a prescribed invariant.
pub fn standard_pair(z: C) -> Result<TrianglePair, ZGeomError> {
    if z.norm() <= 1e-10 || (z + C::new(1.0, 0.0)).norm() <= 1e-10 {
        return Err(ZGeomError::ForbiddenInvariant);
    }
    let p1 = BoundaryPoint::infinity();
    let p2 = BoundaryPoint::finite(C::new(-1.0, 0.0), 0.0);
    let p3 = BoundaryPoint::finite(C::new(0.0, 0.0), 0.0);
    let p4 = tau_z_vertex(z);
    TrianglePair::new(p1, p2, p3, p4)
}

/// The J-unitary matrix (up to positive scale) sending a real ideal triangle
/// onto tau_0, vertexwise and projectively.
///
/// The lifts are first rescaled so their pairwise products match tau_0's own
/// values (1, -1, 1); the change of basis between two frames with equal Gram
/// matrices is then automatically J-unitary.
pub fn map_to_standard(t: &RealIdealTriangle) -> Result<ScaledMat33, ZGeomError> {
    let [p1, p2, p3] = t.vertices();
    let l1 = *p1.lift();
    let l2 = *p2.lift();
    let l3 = *p3.lift();
    let h12 = herm(&l1, &l2);
    let h23 = herm(&l2, &l3);
    let h31 = herm(&l3, &l1);
    let small = 1e-13;
    if h12.norm() <= small * l1.norm() * l2.norm()
        || h23.norm() <= small * l2.norm() * l3.norm()
        || h31.norm() <= small * l3.norm() * l1.norm()
    {
        return Err(ZGeomError::Degenerate);
    }
    // want <q1,q2> = 1, <q2,q3> = -1, <q3,q1> = 1 with q_i = c_i l_i
    let a = C::new(1.0, 0.0) / h12;
    let b = -C::new(1.0, 0.0) / h23;
    let cc = C::new(1.0, 0.0) / h31;
    // c1 real > 0 solves c1^2 = a c / conj(b); real positivity is exactly the
    // Cartan-0 condition already enforced by RealIdealTriangle
    let c1sq = a * cc / b.conj();
    let c1 = C::new(c1sq.norm().sqrt(), 0.0);
    let c2 = a.conj() / c1;
    let c3 = b.conj() * c1 / a;
    let q = [l1.scale(c1), l2.scale(c2), l3.scale(c3)];
    let qmat = ScaledMat33::new(columns(&q)).map_err(|_| ZGeomError::Degenerate)?;
    let t0 = ScaledMat33::new(columns(&tau0_lifts())).expect("tau0 lifts are independent");
    let qinv = qmat.inverse().map_err(|_| ZGeomError::Degenerate)?;
    Ok(t0.mul(&qinv)?)
}

fn columns(v: &[CVec3; 3]) -> [[C; 3]; 3] {
    let mut m = [[C::new(0.0, 0.0); 3]; 3];
    for (j, col) in v.iter().enumerate() {
        for i in 0..3 {
            m[i][j] = col.0[i];
        }
    }
    m
}

/// Develops the fourth vertex across the edge {p3, p1} of `t`: the returned
/// point p4 makes (t, (p3, p4, p1)) a pair with Z-invariant `z`.
pub fn develop_vertex(t: &RealIdealTriangle, z: C) -> Result<BoundaryPoint, ZGeomError> {
    if z.norm() <= 1e-10 || (z + C::new(1.0, 0.0)).norm() <= 1e-10 {
        return Err(ZGeomError::ForbiddenInvariant);
    }
    let a = map_to_standard(t)?;
    let ainv = a.inverse()?;
    let lift = ainv.apply_projective(tau_z_vertex(z).lift());
    Ok(BoundaryPoint::from_lift(lift)?)
}

/// The real symmetry matrix M_{x,alpha} = [[0,0,x],[0,e^{i alpha},0],[1/x,0,0]].
pub fn m_matrix(x: f64, alpha: f64) -> Result<ScaledMat33, ZGeomError> {
    if x.is_nan() || x <= 0.0 {
        return Err(ZGeomError::NonPositiveModulus);
    }
    let zero = C::new(0.0, 0.0);
    let m = [
        [zero, zero, C::new(x, 0.0)],
        [zero, C::from_polar(1.0, alpha), zero],
        [C::new(1.0 / x, 0.0), zero, zero],
    ];
    Ok(ScaledMat33::new(m)?)
}

/// The order-3 elliptic element cyclically permuting tau_0's vertices.
pub fn e_matrix() -> ScaledMat33 {
    ScaledMat33::from_reals([[-1.0, SQRT2, 1.0], [-SQRT2, 1.0, 0.0], [1.0, 0.0, 0.0]])
        .expect("constant matrix")
}

/// Checks that the antiholomorphic map v -> M_z conj(v) attached to the
/// pair's invariant flips the vertices: (p1,p3) and (p2,p4) swap.
pub fn verify_flip(pair: &TrianglePair) -> Result<bool, ZGeomError> {
    let z = z_invariant(pair)?;
    let (x, alpha) = (z.norm(), z.arg());
    let m = m_matrix(x, alpha)?;
    let b = map_to_standard(pair.tau1())?;
    let [p1, p2, p3, p4] = pair.corners();
    let norm = |p: &BoundaryPoint| {
        let v = b.apply_projective(p.lift());
        v.scale(C::new(1.0 / v.norm(), 0.0))
    };
    let (q1, q2, q3, q4) = (norm(p1), norm(p2), norm(p3), norm(p4));
    let flip = |v: &CVec3| {
        let conj = CVec3::new(v.0[0].conj(), v.0[1].conj(), v.0[2].conj());
        m.apply_projective(&conj)
    };
    let tol = 1e-8;
    Ok(projectively_equal(&flip(&q1), &q3, tol)
        && projectively_equal(&flip(&q3), &q1, tol)
        && projectively_equal(&flip(&q2), &q4, tol)
        && projectively_equal(&flip(&q4), &q2, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chgeom::{lift_to_heis, HeisPoint};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn standard_pair_round_trip() {
        let z = C::from_polar(2.0, std::f64::consts::FRAC_PI_4);
        let pair = standard_pair(z).unwrap();
        assert!((z_invariant(&pair).unwrap() - z).norm() < 1e-12);

        let z2 = C::from_polar(3.0497, 0.2936);
        let pair2 = standard_pair(z2).unwrap();
        assert!((z_invariant(&pair2).unwrap() - z2).norm() < 1e-12 * z2.norm());

        assert_eq!(standard_pair(c(1.0, 0.0)).and_then(|p| z_invariant(&p)).unwrap(), c(1.0, 0.0));
        assert_eq!(standard_pair(c(-1.0, 0.0)).unwrap_err(), ZGeomError::ForbiddenInvariant);
        assert_eq!(standard_pair(c(0.0, 0.0)).unwrap_err(), ZGeomError::ForbiddenInvariant);
    }

    #[test]
    fn conjugation_symmetry() {
        let z = C::from_polar(0.7, 1.3);
        let pair = standard_pair(z).unwrap();
        let zs = z_invariant(&pair.swapped()).unwrap();
        assert!((zs - z.conj()).norm() < 1e-12);
    }

    #[test]
    fn map_to_standard_fixes_tau0() {
        let a = map_to_standard(&RealIdealTriangle::standard()).unwrap();
        // identity up to a unit scalar: check projective action on a basis
        for lift in tau0_lifts() {
            let img = a.apply_projective(&lift);
            assert!(projectively_equal(&img, &lift, 1e-12));
        }
        assert!(a.is_j_unitary(1e-12));
    }

    #[test]
    fn tau0_pairwise_products() {
        let [u1, u2, u3] = tau0_lifts();
        assert!((herm(&u1, &u2) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((herm(&u2, &u3) - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((herm(&u3, &u1) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn develop_from_standard_lands_on_heis_z() {
        let z = c(0.8, 0.45);
        let p4 = develop_vertex(&RealIdealTriangle::standard(), z).unwrap();
        match lift_to_heis(p4.lift()).unwrap() {
            HeisPoint::Finite { zeta, t } => {
                assert!((zeta - z).norm() < 1e-10 && t.abs() < 1e-10);
            }
            HeisPoint::Infinity => panic!("expected finite point"),
        }
        assert_eq!(
            develop_vertex(&RealIdealTriangle::standard(), c(0.0, 0.0)).unwrap_err(),
            ZGeomError::ForbiddenInvariant
        );
    }

    #[test]
    fn m_matrix_identities() {
        let m = m_matrix(1.0, 0.0).unwrap();
        let d = m.dense();
        assert!((d[0][2] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((d[1][1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((d[2][0] - c(1.0, 0.0)).norm() < 1e-15);

        let m2 = m_matrix(3.7, 1.234).unwrap();
        let prod = m2.mul(&m2.conj()).unwrap().dense();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - c(expect, 0.0)).norm() < 1e-14);
            }
        }
        let det = m2.det3();
        assert!((det.value() - (-C::from_polar(1.0, 1.234))).norm() < 1e-13);
        assert_eq!(m_matrix(0.0, 0.0).unwrap_err(), ZGeomError::NonPositiveModulus);
    }

    #[test]
    fn e_matrix_order_three() {
        let e = e_matrix();
        let cube = e.mul(&e).unwrap().mul(&e).unwrap().dense();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { -1.0 } else { 0.0 };
                assert!((cube[i][j] - c(expect, 0.0)).norm() < 1e-14);
            }
        }
        assert!(e.trace().norm() < 1e-15);
        // cycles tau0's vertices
        let [u1, u2, u3] = tau0_lifts();
        assert!(projectively_equal(&e.apply_projective(&u1), &u2, 1e-12));
        assert!(projectively_equal(&e.apply_projective(&u2), &u3, 1e-12));
        assert!(projectively_equal(&e.apply_projective(&u3), &u1, 1e-12));
        assert!(e.is_j_unitary(1e-13));
    }

    #[test]
    fn flip_checks() {
        assert!(verify_flip(&standard_pair(c(2.0, 0.0)).unwrap()).unwrap());
        assert!(verify_flip(&standard_pair(C::from_polar(0.5, 1.0)).unwrap()).unwrap());
        // perturbed fourth vertex: the pair is still valid but the symmetry
        // computed from its own invariant no longer swaps p2 and p4 with the
        // original z's matrix
        let pair = standard_pair(c(2.0, 0.0)).unwrap();
        let [p1, p2, p3, _] = pair.corners();
        let wrong = TrianglePair::new(*p1, *p2, *p3, tau_z_vertex(c(3.0, 0.0))).unwrap();
        let m = m_matrix(2.0, 0.0).unwrap();
        let q4 = wrong.corners()[3];
        let conj = CVec3::new(
            q4.lift().0[0].conj(),
            q4.lift().0[1].conj(),
            q4.lift().0[2].conj(),
        );
        let image = m.apply_projective(&conj);
        assert!(!projectively_equal(&image, p2.lift(), 1e-8));
    }
}
