//! T-bent representations from edge invariants: holonomy evaluation, the
//! real representation rho_0 obtained by dropping all bending angles, the
//! domination and sign-structure checks, the supporting matrix lemmas, and
//! the discriminant sampling experiment.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64 as C;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chgeom::discriminator;
use crate::cx3::{Cx3Error, ScaledMat33};
use crate::surface::{SurfaceError, Triangulation, Word};
use crate::zgeom::{e_matrix, m_matrix, ZGeomError};

#[derive(Debug, Error)]
pub enum RepDomError {
    #[error("bad invariant on edge e{edge}: {msg}")]
    BadInvariant { edge: usize, msg: String },
    #[error("word references unknown edge e{0}")]
    UnknownEdge(usize),
    #[error("representations live on different triangulations")]
    MismatchedTriangulation,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("bad experiment config: {0}")]
    BadConfig(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Geom(#[from] ZGeomError),
    #[error(transparent)]
    Kernel(#[from] Cx3Error),
}

/// One edge invariant z = x e^{i alpha}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeInvariant {
    pub x: f64,
    pub alpha: f64,
}

impl EdgeInvariant {
    pub fn z(&self) -> C {
        C::from_polar(self.x, self.alpha)
    }
}

/// A T-bent representation: a triangulation plus one invariant per edge,
/// with every z_j outside {-1, 0}.
#[derive(Debug, Clone)]
pub struct BentRep {
    tri: Arc<Triangulation>,
    inv: Vec<EdgeInvariant>,
}

impl BentRep {
    /// `inv[j]` is the invariant of edge `e<j>`; angles are canonicalized to
    /// [0, 2pi).
    pub fn new(tri: Arc<Triangulation>, inv: Vec<EdgeInvariant>) -> Result<Self, RepDomError> {
        if inv.len() != tri.num_edges() {
            return Err(RepDomError::BadInvariant {
                edge: inv.len(),
                msg: format!("expected {} edge invariants, got {}", tri.num_edges(), inv.len()),
            });
        }
        let mut canon = Vec::with_capacity(inv.len());
        for (edge, e) in inv.into_iter().enumerate() {
            if !(e.x.is_finite() && e.x > 0.0) {
                return Err(RepDomError::BadInvariant {
                    edge,
                    msg: format!("modulus must be a positive finite real, got {}", e.x),
                });
            }
            if !e.alpha.is_finite() {
                return Err(RepDomError::BadInvariant { edge, msg: "angle not finite".into() });
            }
            let alpha = e.alpha.rem_euclid(TAU);
            if (e.x - 1.0).abs() <= 1e-12 && (alpha - PI).abs() <= 1e-12 {
                return Err(RepDomError::BadInvariant {
                    edge,
                    msg: "z = -1 is a forbidden invariant".into(),
                });
            }
            canon.push(EdgeInvariant { x: e.x, alpha });
        }
        Ok(BentRep { tri, inv: canon })
    }

    pub fn triangulation(&self) -> &Arc<Triangulation> {
        &self.tri
    }

    pub fn invariants(&self) -> &[EdgeInvariant] {
        &self.inv
    }

    pub fn invariant(&self, edge: usize) -> Result<EdgeInvariant, RepDomError> {
        self.inv.get(edge).copied().ok_or(RepDomError::UnknownEdge(edge))
    }
}

/// Parses the invariant file: one `invariant e<int> modulus <float> angle
/// <float>` per edge (angle in radians, `#` comments).
pub fn parse_invariant_file(text: &str) -> Result<Vec<(usize, EdgeInvariant)>, RepDomError> {
    let perr = |line: usize, msg: String| RepDomError::Parse { line, msg };
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["invariant", edge, "modulus", x, "angle", a] => {
                let edge: usize = edge
                    .strip_prefix('e')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| perr(lineno, format!("bad edge token '{edge}'")))?;
                let x: f64 =
                    x.parse().map_err(|_| perr(lineno, format!("bad modulus '{x}'")))?;
                let alpha: f64 =
                    a.parse().map_err(|_| perr(lineno, format!("bad angle '{a}'")))?;
                out.push((edge, EdgeInvariant { x, alpha }));
            }
            _ => {
                return Err(perr(
                    lineno,
                    "expected 'invariant e<int> modulus <float> angle <float>'".into(),
                ))
            }
        }
    }
    Ok(out)
}

/// Builds a representation from parsed invariant lines: every edge of the
/// triangulation must be covered exactly once.
pub fn rep_from_lines(
    tri: Arc<Triangulation>,
    lines: &[(usize, EdgeInvariant)],
) -> Result<BentRep, RepDomError> {
    let n = tri.num_edges();
    let mut slots: Vec<Option<EdgeInvariant>> = vec![None; n];
    for &(edge, inv) in lines {
        if edge >= n {
            return Err(RepDomError::UnknownEdge(edge));
        }
        if slots[edge].replace(inv).is_some() {
            return Err(RepDomError::BadInvariant {
                edge,
                msg: "edge invariant given twice".into(),
            });
        }
    }
    let mut inv = Vec::with_capacity(n);
    for (edge, s) in slots.into_iter().enumerate() {
        inv.push(s.ok_or(RepDomError::BadInvariant {
            edge,
            msg: "no invariant for this edge".to_string(),
        })?);
    }
    BentRep::new(tri, inv)
}

fn e_inverse() -> ScaledMat33 {
    // closed form: E^3 = -Id, so E^{-1} = -E^2
    let s = 2.0f64.sqrt();
    ScaledMat33::from_reals([[0.0, 0.0, 1.0], [0.0, 1.0, s], [1.0, -s, -1.0]])
        .expect("constant matrix")
}

/// Holonomy of a word: the letter product M_{z_1} E^{d_1} M_{z_2} E^{d_2}
/// ... in step order. The result is J-unitary up to positive scale with
/// residual at most 1e-10 times the letter count.
pub fn holonomy(rep: &BentRep, w: &Word) -> Result<ScaledMat33, RepDomError> {
    let e = e_matrix();
    let e_inv = e_inverse();
    let mut acc = ScaledMat33::identity();
    for s in w.steps() {
        let inv = rep.invariant(s.edge)?;
        let m = m_matrix(inv.x, inv.alpha)?;
        acc = acc.mul(&m)?;
        acc = acc.mul(if s.delta > 0 { &e } else { &e_inv })?;
    }
    Ok(acc)
}

/// Sum of bending angles along the word; the holonomy's determinant is
/// exactly e^{i a} for this a, so its modulus is 1 analytically. Length and
/// trace normalization use this instead of a numerical determinant, which
/// underflows into noise for long loxodromic products.
fn det_angle(rep: &BentRep, w: &Word) -> Result<f64, RepDomError> {
    let mut a = 0.0;
    for s in w.steps() {
        a += rep.invariant(s.edge)?.alpha;
    }
    Ok(a)
}

/// Translation length of a holonomy, using |det| = 1.
fn holonomy_length(h: &ScaledMat33) -> Result<f64, RepDomError> {
    Ok((2.0 * h.log_spectral_radius()?).max(0.0))
}

/// SU(2,1)-representative trace of a holonomy (defined up to a cube root of
/// unity, which the discriminant f does not see).
fn su_trace(h: &ScaledMat33, det_angle: f64) -> C {
    h.trace() * h.logscale().exp() * C::from_polar(1.0, -det_angle / 3.0)
}

/// The real representation in the same bending fiber: all angles dropped.
pub fn real_form(rep: &BentRep) -> BentRep {
    BentRep {
        tri: Arc::clone(&rep.tri),
        inv: rep.inv.iter().map(|e| EdgeInvariant { x: e.x, alpha: 0.0 }).collect(),
    }
}

/// True iff the edgewise moduli |z_j| agree within 1e-12 relative.
pub fn same_bending_fiber(a: &BentRep, b: &BentRep) -> Result<bool, RepDomError> {
    if a.tri != b.tri {
        return Err(RepDomError::MismatchedTriangulation);
    }
    Ok(a.inv
        .iter()
        .zip(&b.inv)
        .all(|(p, q)| (p.x - q.x).abs() <= 1e-12 * p.x.max(q.x)))
}

/// B(gamma): the entrywise absolute value of the rho_0 holonomy.
pub fn b_matrix(rep: &BentRep, w: &Word) -> Result<ScaledMat33, RepDomError> {
    let h = holonomy(&real_form(rep), w)?;
    let mut m = *h.mat();
    for row in &mut m {
        for z in row {
            *z = C::new(z.norm(), 0.0);
        }
    }
    Ok(ScaledMat33::from_parts(m, h.logscale())?)
}

/// Entrywise |a| <= b + tol, with tol read at the window scale of b.
fn entrywise_bounded(a: &ScaledMat33, b: &ScaledMat33, tol: f64) -> bool {
    let s = (a.logscale() - b.logscale()).exp();
    for i in 0..3 {
        for j in 0..3 {
            if a.mat()[i][j].norm() * s > b.mat()[i][j].re + tol {
                return false;
            }
        }
    }
    true
}

/// Verifies the structural shape of rho_0 on the word (Case I sign pattern
/// for mixed turns, triangular for constant turns) and the entrywise bound
/// |rho(gamma)| <= B(gamma).
pub fn check_sign_structure(rep: &BentRep, w: &Word) -> Result<bool, RepDomError> {
    const TOL: f64 = 1e-12;
    let rho0 = holonomy(&real_form(rep), w)?;
    let m = rho0.mat();
    // rho_0 letters are real, so products carry no imaginary part at all
    let real_ok = m.iter().flatten().all(|z| z.im.abs() <= TOL);
    let shape_ok = if !w.steps().is_empty() && w.constant_delta() {
        // Case II: triangular; delta = +1 kills the upper triangle
        let upper = w.steps()[0].delta > 0;
        let mut ok = true;
        for i in 0..3 {
            for j in 0..3 {
                let off = if upper { j > i } else { i > j };
                if off && m[i][j].norm() > TOL {
                    ok = false;
                }
            }
        }
        ok
    } else {
        // Case I: [+,-,-; -,+,+; -,+,+]
        let mut ok = true;
        for i in 0..3 {
            for j in 0..3 {
                let positive = i == j || (i > 0 && j > 0);
                if positive {
                    ok &= m[i][j].re >= -TOL;
                } else {
                    ok &= m[i][j].re <= TOL;
                }
            }
        }
        ok
    };
    let rho = holonomy(rep, w)?;
    let b = b_matrix(rep, w)?;
    Ok(real_ok && shape_ok && entrywise_bounded(&rho, &b, TOL))
}

/// Per-word domination verdicts and the numbers behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub word: String,
    pub letters: usize,
    pub peripheral: Option<usize>,
    pub l_rho: f64,
    pub l_rho0: f64,
    pub abs_tr_rho: f64,
    pub abs_tr_rho0: f64,
    pub f_tr_rho: f64,
    pub f_tr_rho0: f64,
    pub length_ok: bool,
    pub trace_ok: bool,
    pub peripheral_equal: Option<bool>,
    pub sign_ok: bool,
    pub entrywise_ok: bool,
    /// l_rho - l_rho0 (non-positive when domination holds).
    pub length_residual: f64,
    pub j_residual_rho: f64,
    pub j_residual_rho0: f64,
}

impl DominationReport {
    pub fn all_ok(&self) -> bool {
        self.length_ok
            && self.trace_ok
            && self.sign_ok
            && self.entrywise_ok
            && self.peripheral_equal.unwrap_or(true)
    }
}

fn domination_slack(l_rho0: f64) -> f64 {
    1e-7 * l_rho0.max(1.0)
}

pub fn check_domination(rep: &BentRep, w: &Word) -> Result<DominationReport, RepDomError> {
    let rho = holonomy(rep, w)?;
    let rho0 = holonomy(&real_form(rep), w)?;
    // constant-turn words have exactly triangular holonomies, where the
    // spectral radius is the largest diagonal modulus; reading it off the
    // diagonal avoids the root-finder's accuracy loss at defective spectra
    // (all moduli 1 when the x-product is 1)
    let triangular = !w.steps().is_empty() && w.constant_delta();
    let length = |h: &ScaledMat33| -> Result<f64, RepDomError> {
        if triangular {
            let mx = (0..3).map(|i| h.mat()[i][i].norm()).fold(0.0f64, f64::max);
            Ok((2.0 * (mx.ln() + h.logscale())).max(0.0))
        } else {
            holonomy_length(h)
        }
    };
    let l_rho = length(&rho)?;
    let l_rho0 = length(&rho0)?;
    let tr = su_trace(&rho, det_angle(rep, w)?);
    let tr0 = su_trace(&rho0, 0.0);
    let slack = domination_slack(l_rho0);

    let peripheral_equal = if !w.steps().is_empty() && w.constant_delta() {
        let log_prod: f64 =
            w.steps().iter().map(|s| rep.invariant(s.edge).map(|e| e.x.ln())).sum::<Result<
                f64,
                _,
            >>()?;
        let l_exact = 2.0 * log_prod.abs();
        let tol = 1e-9 * l_rho0.max(1.0);
        Some((l_rho - l_rho0).abs() <= tol && (l_rho - l_exact).abs() <= tol && (l_rho0 - l_exact).abs() <= tol)
    } else {
        None
    };

    Ok(DominationReport {
        word: w.to_string(),
        letters: w.len_letters(),
        peripheral: w.peripheral(),
        l_rho,
        l_rho0,
        abs_tr_rho: tr.norm(),
        abs_tr_rho0: tr0.norm(),
        f_tr_rho: discriminator(tr),
        f_tr_rho0: discriminator(tr0),
        length_ok: l_rho <= l_rho0 + slack,
        // compare in log space once the magnitudes leave the range where the
        // absolute 1e-9 slack is representable
        trace_ok: if tr0.norm() < 1e30 {
            tr.norm() <= tr0.norm() + 1e-9
        } else {
            rho.trace().norm().ln() + rho.logscale()
                <= rho0.trace().norm().ln() + rho0.logscale() + 1e-12
        },
        peripheral_equal,
        sign_ok: check_sign_structure(rep, w)?,
        entrywise_ok: entrywise_bounded(&rho, &b_matrix(rep, w)?, 1e-12),
        length_residual: l_rho - l_rho0,
        j_residual_rho: rho.j_unitary_residual(),
        j_residual_rho0: rho0.j_unitary_residual(),
    })
}

fn eig_multiset_close(a: &ScaledMat33, b: &ScaledMat33, tol: f64) -> Result<bool, RepDomError> {
    let ea = a.eig3()?.values;
    let eb = b.eig3()?.values;
    const PERMS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    Ok(PERMS.iter().any(|p| (0..3).all(|i| (ea[i] - eb[p[i]]).norm() <= tol)))
}

/// Flipping the signs of entries (1,2),(1,3),(2,1),(3,1) preserves the
/// eigenvalues: the flip is conjugation by S = diag(1,-1,-1).
pub fn sign_flip_similarity(a: &ScaledMat33) -> Result<bool, RepDomError> {
    let mut fm = *a.mat();
    for (i, j) in [(0, 1), (0, 2), (1, 0), (2, 0)] {
        fm[i][j] = -fm[i][j];
    }
    let b = ScaledMat33::from_parts(fm, a.logscale())?;
    // cross-check against the explicit conjugation S a S
    let s = ScaledMat33::from_reals([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])?;
    let sas = s.mul(a)?.mul(&s)?;
    let conj_ok = (sas.logscale() - b.logscale()).abs() <= 1e-12
        && (0..3).all(|i| (0..3).all(|j| (sas.mat()[i][j] - b.mat()[i][j]).norm() <= 1e-13));
    Ok(conj_ok && eig_multiset_close(a, &b, 1e-9)?)
}

/// Horn-Johnson chain sigma(a) <= sigma(|a|) <= sigma(b) for |a| <= b
/// entrywise; spectral radii via eig3, cross-checked by the Gelfand oracle.
pub fn entrywise_dom_oracle(a: &ScaledMat33, b: &ScaledMat33) -> Result<bool, RepDomError> {
    for row in b.mat() {
        for z in row {
            if z.im.abs() > 1e-14 || z.re < -1e-14 {
                return Err(RepDomError::PreconditionViolated(
                    "b must be a nonnegative real matrix".into(),
                ));
            }
        }
    }
    if !entrywise_bounded(a, b, 1e-12) {
        return Err(RepDomError::PreconditionViolated("|a| <= b fails entrywise".into()));
    }
    let mut am = *a.mat();
    for row in &mut am {
        for z in row {
            *z = C::new(z.norm(), 0.0);
        }
    }
    let abs_a = ScaledMat33::from_parts(am, a.logscale())?;
    let la = a.log_spectral_radius()?;
    let labs = abs_a.log_spectral_radius()?;
    let lb = b.log_spectral_radius()?;
    let chain = la <= labs + 1e-9 && labs <= lb + 1e-9;
    let gelfand_ok = |m: &ScaledMat33, log_sigma: f64| -> Result<bool, RepDomError> {
        let g = m.gelfand_oracle(10)?;
        let s = log_sigma.exp();
        Ok((g - s).abs() <= 0.05 * s.max(g) + 1e-6)
    };
    Ok(chain && gelfand_ok(a, la)? && gelfand_ok(&abs_a, labs)? && gelfand_ok(b, lb)?)
}

/// Configuration of the discriminant sampling experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub samples: usize,
    pub seed: u64,
    pub xmax: f64,
    pub amax: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { samples: 10_000, seed: 1, xmax: 5.0, amax: PI / 2.0 }
    }
}

/// One experiment sample: f at the trace of A1 = M_{x,a} E M_{y,b} E^{-1}
/// versus f at the trace of the unbent A2 = M_{x,0} E M_{y,0} E^{-1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub a: f64,
    pub b: f64,
    pub f_trace: f64,
    pub f_big_trace: f64,
    pub violation: bool,
}

/// Evaluates one explicit parameter tuple (bypassing the RNG).
pub fn experiment_row(x: f64, y: f64, a: f64, b: f64) -> Result<ExperimentRow, RepDomError> {
    for (name, v) in [("x", x), ("y", y)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(RepDomError::BadConfig(format!("{name} must be positive, got {v}")));
        }
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(RepDomError::BadConfig("angles must be finite".into()));
    }
    let e = e_matrix();
    let e_inv = e_inverse();
    let word = |ang1: f64, ang2: f64| -> Result<C, RepDomError> {
        let m = m_matrix(x, ang1)?.mul(&e)?.mul(&m_matrix(y, ang2)?)?.mul(&e_inv)?;
        Ok(m.trace() * m.logscale().exp())
    };
    let f_trace = discriminator(word(a, b)?);
    let f_big_trace = discriminator(word(0.0, 0.0)?);
    Ok(ExperimentRow { index: 0, x, y, a, b, f_trace, f_big_trace, violation: f_trace > f_big_trace })
}

fn unit_from(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    // 53-bit mantissa uniform in (0, 1]
    let u = ((rng.next_u64() >> 11) as f64) * (1.0 / 9007199254740992.0);
    if u == 0.0 {
        1.0 / 9007199254740992.0
    } else {
        u
    }
}

/// Runs the seeded experiment. Each sample derives its own RNG from
/// seed XOR index, so the output is a pure function of the config no matter
/// how the samples are scheduled.
pub fn appendix_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, RepDomError> {
    if cfg.samples < 1 {
        return Err(RepDomError::BadConfig("samples must be >= 1".into()));
    }
    if !(cfg.xmax.is_finite() && cfg.xmax > 0.0) {
        return Err(RepDomError::BadConfig(format!("xmax must be positive, got {}", cfg.xmax)));
    }
    if !(cfg.amax.is_finite() && cfg.amax > 0.0) {
        return Err(RepDomError::BadConfig(format!("amax must be positive, got {}", cfg.amax)));
    }
    let cfg = *cfg;
    let eval = move |i: usize| -> Result<ExperimentRow, RepDomError> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ i as u64);
        let x = unit_from(&mut rng) * cfg.xmax;
        let y = unit_from(&mut rng) * cfg.xmax;
        let a = unit_from(&mut rng) * cfg.amax;
        let b = unit_from(&mut rng) * cfg.amax;
        let mut row = experiment_row(x, y, a, b)?;
        row.index = i;
        Ok(row)
    };
    let run = || (0..cfg.samples).into_par_iter().map(eval).collect::<Result<Vec<_>, _>>();
    match std::env::var("CHDOM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RepDomError::BadConfig(format!("thread pool: {e}")))?
            .install(run),
        _ => run(),
    }
}
