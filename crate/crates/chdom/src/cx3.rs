//! Complex 3-dimensional kernel for the signature-(2,1) Hermitian form.
//!
//! Everything downstream (boundary points, triangle invariants, holonomy
//! words) is built from the primitives here: the Hermitian pairing, the box
//! product giving polar vectors, and 3x3 matrices carried together with a
//! real log-prefactor so that long products never overflow.

use num_complex::Complex64 as C;
use thiserror::Error;

/// The Hermitian form matrix J (antidiagonal ones).
pub const J: [[f64; 3]; 3] = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];

#[derive(Debug, Error, PartialEq)]
pub enum Cx3Error {
    #[error("vectors are projectively proportional")]
    DegeneratePair,
    #[error("matrix part is identically zero")]
    ZeroMatrix,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is singular (|det| below threshold)")]
    Singular,
}

/// A vector of C^3, understood with respect to the form `herm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVec3(pub [C; 3]);

impl CVec3 {
    pub fn new(z1: C, z2: C, z3: C) -> Self {
        CVec3([z1, z2, z3])
    }

    pub fn from_reals(a: f64, b: f64, c: f64) -> Self {
        CVec3([C::new(a, 0.0), C::new(b, 0.0), C::new(c, 0.0)])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Euclidean norm of the coordinate vector (not the Hermitian form).
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: C) -> Self {
        CVec3([self.0[0] * c, self.0[1] * c, self.0[2] * c])
    }

    /// Ordinary bilinear cross product (no conjugation).
    pub fn cross(&self, other: &CVec3) -> CVec3 {
        let a = &self.0;
        let b = &other.0;
        CVec3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }
}

/// The form `<z,w> = z1 conj(w3) + z2 conj(w2) + z3 conj(w1)`.
///
/// Linear in the first slot, conjugate-linear in the second.
pub fn herm(z: &CVec3, w: &CVec3) -> C {
    z.0[0] * w.0[2].conj() + z.0[1] * w.0[1].conj() + z.0[2] * w.0[0].conj()
}

/// Box product: a vector Hermitian-orthogonal to both arguments (the polar
/// vector of the complex line they span).
///
/// Uses `J * conj(p x q)`; then `herm(a, box(p,q)) = det[a p q]`, which
/// vanishes for `a` in `{p, q}`.
pub fn box_product(p: &CVec3, q: &CVec3) -> Result<CVec3, Cx3Error> {
    let cr = p.cross(q);
    if cr.norm() < 1e-12 * p.norm() * q.norm() {
        return Err(Cx3Error::DegeneratePair);
    }
    let c = [cr.0[0].conj(), cr.0[1].conj(), cr.0[2].conj()];
    // J swaps first and third coordinates.
    Ok(CVec3([c[2], c[1], c[0]]))
}

/// A 3x3 complex matrix stored as `e^{logscale} * mat`, with `mat`
/// renormalized so its largest entry modulus is 1. Keeps products of
/// hundreds of group elements representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMat33 {
    mat: [[C; 3]; 3],
    logscale: f64,
}

/// Determinant of a represented matrix, split into a unit-modulus phase and
/// the log of its modulus.
#[derive(Debug, Clone, Copy)]
pub struct LogDet {
    pub phase: C,
    pub log_modulus: f64,
}

impl LogDet {
    /// The determinant as a plain complex number (may overflow for extreme
    /// log moduli; fine at desk scale).
    pub fn value(&self) -> C {
        self.phase * self.log_modulus.exp()
    }
}

/// Eigenvalues of the *unscaled* matrix part together with the logscale that
/// refers them back to the represented matrix.
#[derive(Debug, Clone, Copy)]
pub struct EigenTriple {
    pub values: [C; 3],
    pub logscale: f64,
}

impl EigenTriple {
    /// Eigenvalues of the represented matrix.
    pub fn scaled_values(&self) -> [C; 3] {
        let s = self.logscale.exp();
        [self.values[0] * s, self.values[1] * s, self.values[2] * s]
    }
}

fn raw_det(m: &[[C; 3]; 3]) -> C {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl ScaledMat33 {
    /// Wraps a plain matrix (logscale 0) and renormalizes.
    pub fn new(mat: [[C; 3]; 3]) -> Result<Self, Cx3Error> {
        Self::from_parts(mat, 0.0)
    }

    pub fn from_parts(mat: [[C; 3]; 3], logscale: f64) -> Result<Self, Cx3Error> {
        let mut m = ScaledMat33 { mat, logscale };
        m.renormalize()?;
        Ok(m)
    }

    pub fn from_reals(mat: [[f64; 3]; 3]) -> Result<Self, Cx3Error> {
        let mut c = [[C::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = C::new(mat[i][j], 0.0);
            }
        }
        Self::new(c)
    }

    pub fn identity() -> Self {
        let mut m = [[C::new(0.0, 0.0); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = C::new(1.0, 0.0);
        }
        ScaledMat33 { mat: m, logscale: 0.0 }
    }

    pub fn diagonal(d: [C; 3]) -> Result<Self, Cx3Error> {
        let mut m = [[C::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            m[i][i] = d[i];
        }
        Self::new(m)
    }

    fn renormalize(&mut self) -> Result<(), Cx3Error> {
        let mut max = 0.0f64;
        for row in &self.mat {
            for z in row {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Cx3Error::NonFinite);
                }
                max = max.max(z.norm());
            }
        }
        if max == 0.0 {
            return Err(Cx3Error::ZeroMatrix);
        }
        if !(0.5..=2.0).contains(&max) {
            let inv = 1.0 / max;
            for row in &mut self.mat {
                for z in row {
                    *z *= inv;
                }
            }
            self.logscale += max.ln();
        }
        if !self.logscale.is_finite() {
            return Err(Cx3Error::NonFinite);
        }
        Ok(())
    }

    /// Unscaled matrix part (largest entry modulus in [1/2, 2]).
    pub fn mat(&self) -> &[[C; 3]; 3] {
        &self.mat
    }

    pub fn logscale(&self) -> f64 {
        self.logscale
    }

    /// The represented matrix as plain complex entries. Overflows for
    /// extreme logscales; intended for desk-scale inspection and tests.
    pub fn dense(&self) -> [[C; 3]; 3] {
        let s = self.logscale.exp();
        let mut out = self.mat;
        for row in &mut out {
            for z in row {
                *z *= s;
            }
        }
        out
    }

    pub fn trace(&self) -> C {
        self.mat[0][0] + self.mat[1][1] + self.mat[2][2]
    }

    /// |trace| of the represented matrix.
    pub fn abs_trace(&self) -> f64 {
        self.trace().norm() * self.logscale.exp()
    }

    pub fn mul(&self, other: &ScaledMat33) -> Result<ScaledMat33, Cx3Error> {
        let mut m = [[C::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = C::new(0.0, 0.0);
                for (k, row) in other.mat.iter().enumerate() {
                    acc += self.mat[i][k] * row[j];
                }
                m[i][j] = acc;
            }
        }
        ScaledMat33::from_parts(m, self.logscale + other.logscale)
    }

    pub fn apply(&self, v: &CVec3) -> CVec3 {
        let s = self.logscale.exp();
        let mut out = [C::new(0.0, 0.0); 3];
        for (i, row) in self.mat.iter().enumerate() {
            out[i] = (row[0] * v.0[0] + row[1] * v.0[1] + row[2] * v.0[2]) * s;
        }
        CVec3(out)
    }

    /// Applies the matrix projectively: no scale factor, so the image lift
    /// stays bounded for large logscales.
    pub fn apply_projective(&self, v: &CVec3) -> CVec3 {
        let mut out = [C::new(0.0, 0.0); 3];
        for (i, row) in self.mat.iter().enumerate() {
            out[i] = row[0] * v.0[0] + row[1] * v.0[1] + row[2] * v.0[2];
        }
        CVec3(out)
    }

    pub fn conj(&self) -> ScaledMat33 {
        let mut m = self.mat;
        for row in &mut m {
            for z in row {
                *z = z.conj();
            }
        }
        ScaledMat33 { mat: m, logscale: self.logscale }
    }

    pub fn inverse(&self) -> Result<ScaledMat33, Cx3Error> {
        let d = raw_det(&self.mat);
        if d.norm() < 1e-200 {
            return Err(Cx3Error::Singular);
        }
        let m = &self.mat;
        let inv_d = C::new(1.0, 0.0) / d;
        let mut adj = [[C::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                // cofactor transpose
                let r = [(j + 1) % 3, (j + 2) % 3];
                let c = [(i + 1) % 3, (i + 2) % 3];
                adj[i][j] = (m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]) * inv_d;
            }
        }
        ScaledMat33::from_parts(adj, -self.logscale)
    }

    pub fn det3(&self) -> LogDet {
        let d = raw_det(&self.mat);
        let n = d.norm();
        if n == 0.0 {
            return LogDet { phase: C::new(0.0, 0.0), log_modulus: f64::NEG_INFINITY };
        }
        LogDet { phase: d / n, log_modulus: 3.0 * self.logscale + n.ln() }
    }

    /// Closed-form eigenvalues of the matrix part (Cardano on the exact
    /// characteristic polynomial), polished by Newton iteration.
    pub fn eig3(&self) -> Result<EigenTriple, Cx3Error> {
        // renormalize() has already rejected non-finite entries.
        let m = &self.mat;
        let tr = m[0][0] + m[1][1] + m[2][2];
        // sum of principal 2x2 minors
        let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2]
            - m[0][2] * m[2][0]
            + m[1][1] * m[2][2]
            - m[1][2] * m[2][1];
        let det = raw_det(m);
        // monic cubic x^3 + a x^2 + b x + c
        let a = -tr;
        let b = m2;
        let c = -det;
        let mut roots = cubic_roots(a, b, c);
        for lam in &mut roots {
            *lam = newton_polish(*lam, a, b, c);
        }
        Ok(EigenTriple { values: roots, logscale: self.logscale })
    }

    /// Spectral radius of the represented matrix.
    pub fn spectral_radius(&self) -> Result<f64, Cx3Error> {
        let e = self.eig3()?;
        let mx = e.values.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        Ok(mx * self.logscale.exp())
    }

    /// Log of the spectral radius; safe for extreme logscales.
    pub fn log_spectral_radius(&self) -> Result<f64, Cx3Error> {
        let e = self.eig3()?;
        let mx = e.values.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        Ok(mx.ln() + self.logscale)
    }

    /// Gelfand-formula estimate of the spectral radius by `doublings`
    /// repeated squarings: sigma ~ ||A^(2^d)||^(1/2^d) in the max-row-sum
    /// norm (so diagonal matrices and the identity come out exact).
    ///
    /// Accuracy: within 2% of `spectral_radius` when the top two eigenvalue
    /// moduli are separated by at least 1e-6 relative, within 5% otherwise.
    pub fn gelfand_oracle(&self, doublings: u32) -> Result<f64, Cx3Error> {
        assert!(doublings >= 8, "gelfand_oracle needs at least 8 doublings");
        let mut p = *self;
        for _ in 0..doublings {
            p = p.mul(&p)?;
        }
        let norm: f64 = p
            .mat
            .iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let k = (1u64 << doublings) as f64;
        Ok(((p.logscale + norm.ln()) / k).exp())
    }

    /// Frobenius residual of `mat* J mat` against the nearest multiple of J,
    /// measured on the window-normalized matrix part. Small exactly when the
    /// represented matrix is J-unitary up to a positive scale.
    pub fn j_unitary_residual(&self) -> f64 {
        let m = &self.mat;
        // G = mat^* J mat; J reverses the row index of the left factor.
        let mut g = [[C::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = C::new(0.0, 0.0);
                for k in 0..3 {
                    acc += m[2 - k][i].conj() * m[k][j];
                }
                g[i][j] = acc;
            }
        }
        let c = (g[0][2] + g[1][1] + g[2][0]) / 3.0;
        // A negative J-scale means the form's signature is flipped: reject,
        // but only when the scale is resolvable above the floating-point
        // noise floor of G. For strongly loxodromic products the true scale
        // e^{-2 logscale} sits below that floor and the sign of c is noise.
        let gmax = g.iter().flatten().map(|z| z.norm()).fold(0.0f64, f64::max);
        if c.re < -1e-12 * gmax.max(1.0) {
            return f64::INFINITY;
        }
        let mut res = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = c * J[i][j];
                res += (g[i][j] - target).norm_sqr();
            }
        }
        res.sqrt()
    }

    pub fn is_j_unitary(&self, tol: f64) -> bool {
        self.j_unitary_residual() <= tol
    }

    /// Rescales to determinant one (principal cube root of the determinant).
    pub fn su_normalize(&self) -> Result<ScaledMat33, Cx3Error> {
        let d = self.det3();
        if d.log_modulus < -690.0 {
            return Err(Cx3Error::Singular);
        }
        // A / det(A)^{1/3} = mat / det(mat)^{1/3}: the logscale cancels.
        let dm = raw_det(&self.mat);
        let root = dm.powf(1.0 / 3.0);
        let inv = C::new(1.0, 0.0) / root;
        let mut m = self.mat;
        for row in &mut m {
            for z in row {
                *z *= inv;
            }
        }
        ScaledMat33::from_parts(m, 0.0)
    }
}

/// Roots of the monic cubic x^3 + a x^2 + b x + c via the complex Cardano
/// formula. Seeds only; callers polish with Newton.
fn cubic_roots(a: C, b: C, c: C) -> [C; 3] {
    let third = 1.0 / 3.0;
    let p = b - a * a * third;
    let q = a * a * a * (2.0 / 27.0) - a * b * third + c;
    let shift = -a * third;
    let disc = (q * q * 0.25 + p * p * p / 27.0).sqrt();
    // pick the branch with less cancellation
    let u3a = -q * 0.5 + disc;
    let u3b = -q * 0.5 - disc;
    let u3 = if u3a.norm() >= u3b.norm() { u3a } else { u3b };
    if u3.norm() < 1e-300 {
        // p and q both (near) zero: triple root
        return [shift, shift, shift];
    }
    let u = u3.cbrt();
    let v = -p / (u * 3.0);
    let w = C::new(-0.5, 0.75f64.sqrt()); // primitive cube root of unity
    let mut roots = [C::new(0.0, 0.0); 3];
    let mut uk = u;
    let mut vk = v;
    for r in &mut roots {
        *r = uk + vk + shift;
        uk *= w;
        vk *= w.conj();
    }
    roots
}

fn newton_polish(mut x: C, a: C, b: C, c: C) -> C {
    let mut best = x;
    let mut best_res = f64::INFINITY;
    for _ in 0..8 {
        let f = ((x + a) * x + b) * x + c;
        let res = f.norm();
        if res < best_res {
            best_res = res;
            best = x;
        }
        if res == 0.0 {
            break;
        }
        let df = (x * 3.0 + a * 2.0) * x + b;
        if df.norm() < 1e-300 {
            break;
        }
        x -= f / df;
    }
    // keep the iterate with the smallest residual in case Newton cycles
    let f = ((best + a) * best + b) * best + c;
    debug_assert!(f.norm().is_finite());
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn herm_examples() {
        let e1 = CVec3::from_reals(1.0, 0.0, 0.0);
        let e2 = CVec3::from_reals(0.0, 1.0, 0.0);
        let e3 = CVec3::from_reals(0.0, 0.0, 1.0);
        assert_eq!(herm(&e1, &e1), c(0.0, 0.0));
        assert_eq!(herm(&e2, &e2), c(1.0, 0.0));
        assert_eq!(herm(&e1, &e3), c(1.0, 0.0));
    }

    #[test]
    fn box_polar_of_axis_line() {
        let p = CVec3::from_reals(1.0, 0.0, 0.0);
        let q = CVec3::from_reals(0.0, 0.0, 1.0);
        let v = box_product(&p, &q).unwrap();
        // proportional to (0,1,0)
        assert!(v.0[0].norm() < 1e-15 && v.0[2].norm() < 1e-15);
        assert!(v.0[1].norm() > 0.5);
        assert!(herm(&p, &v).norm() < 1e-15);
        assert!(herm(&q, &v).norm() < 1e-15);
    }

    #[test]
    fn box_degenerate() {
        let p = CVec3::new(c(1.0, 2.0), c(0.5, 0.0), c(0.0, -1.0));
        assert_eq!(box_product(&p, &p.scale(c(2.0, 1.0))), Err(Cx3Error::DegeneratePair));
    }

    #[test]
    fn mul_identity_and_inverse() {
        let a = ScaledMat33::new([
            [c(1.0, 0.2), c(0.3, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(2.0, 0.0), c(0.1, -0.4)],
            [c(0.5, 0.0), c(0.0, 1.0), c(1.0, 0.0)],
        ])
        .unwrap();
        let i = ScaledMat33::identity();
        let ia = i.mul(&a).unwrap();
        let ad = a.dense();
        let iad = ia.dense();
        for r in 0..3 {
            for s in 0..3 {
                assert!((ad[r][s] - iad[r][s]).norm() < 1e-13);
            }
        }
        let prod = a.mul(&a.inverse().unwrap()).unwrap().dense();
        for r in 0..3 {
            for s in 0..3 {
                let expect = if r == s { 1.0 } else { 0.0 };
                assert!((prod[r][s] - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mul_forty_diagonal_copies() {
        let d = ScaledMat33::diagonal([
            c(std::f64::consts::E, 0.0),
            c(1.0, 0.0),
            c((-1.0f64).exp(), 0.0),
        ])
        .unwrap();
        let mut p = ScaledMat33::identity();
        for _ in 0..40 {
            p = p.mul(&d).unwrap();
        }
        assert!((p.logscale() - 40.0).abs() < 1e-9);
        for row in p.mat() {
            for z in row {
                assert!(z.norm() <= 2.0);
            }
        }
    }

    #[test]
    fn eig_diagonal() {
        let d = ScaledMat33::diagonal([
            c(std::f64::consts::E, 0.0),
            c(1.0, 0.0),
            c((-1.0f64).exp(), 0.0),
        ])
        .unwrap();
        let mut mods: Vec<f64> = d.eig3().unwrap().scaled_values().iter().map(|z| z.norm()).collect();
        mods.sort_by(f64::total_cmp);
        assert!((mods[2] - std::f64::consts::E).abs() < 1e-12);
        assert!((mods[1] - 1.0).abs() < 1e-12);
        assert!((mods[0] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((d.spectral_radius().unwrap() - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn gelfand_examples() {
        let d = ScaledMat33::diagonal([
            c(std::f64::consts::E, 0.0),
            c(1.0, 0.0),
            c((-1.0f64).exp(), 0.0),
        ])
        .unwrap();
        let g = d.gelfand_oracle(10).unwrap();
        assert!((g - std::f64::consts::E).abs() / std::f64::consts::E < 0.02);
        let gi = ScaledMat33::identity().gelfand_oracle(10).unwrap();
        assert_eq!(gi, 1.0);
    }

    #[test]
    fn j_unitary_checks() {
        // diag(2,1,1) scales the form unevenly
        let bad = ScaledMat33::from_reals([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(!bad.is_j_unitary(1e-10));
        // diag(e,1,1/e) is J-unitary for this antidiagonal form
        let good = ScaledMat33::diagonal([
            c(std::f64::consts::E, 0.0),
            c(1.0, 0.0),
            c((-1.0f64).exp(), 0.0),
        ])
        .unwrap();
        assert!(good.is_j_unitary(1e-13));
    }

    #[test]
    fn su_normalize_scalars_cancel() {
        let two_i = ScaledMat33::from_reals([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        let n = two_i.su_normalize().unwrap().dense();
        for r in 0..3 {
            for s in 0..3 {
                let expect = if r == s { 1.0 } else { 0.0 };
                assert!((n[r][s] - c(expect, 0.0)).norm() < 1e-12);
            }
        }
        let d = two_i.su_normalize().unwrap().det3();
        assert!((d.value() - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn eig_residuals_bounded() {
        let a = ScaledMat33::new([
            [c(1.3, -0.2), c(0.1, 2.0), c(-0.7, 0.0)],
            [c(0.0, 0.9), c(-2.2, 0.4), c(1.0, 1.0)],
            [c(3.0, 0.0), c(0.5, -0.5), c(0.2, 0.0)],
        ])
        .unwrap();
        let e = a.eig3().unwrap();
        let m = a.mat();
        let tr = m[0][0] + m[1][1] + m[2][2];
        let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
            + m[1][1] * m[2][2]
            - m[1][2] * m[2][1];
        let det = super::raw_det(m);
        for lam in e.values {
            let p = ((lam - tr) * lam + m2) * lam - det;
            assert!(p.norm() <= 1e-10 * 1f64.max(lam.norm().powi(3)));
        }
    }
}
