//! Shared helpers for the integration and property suites: seeded RNG,
//! random closed dual walks, random representations, random J-unitary words.

#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64 as C;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use chdom::cx3::ScaledMat33;
use chdom::repdom::{BentRep, EdgeInvariant};
use chdom::surface::{compile_word, Triangulation, Word};
use chdom::zgeom::{e_matrix, m_matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64) * (1.0 / 9007199254740992.0)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// A random closed dual-graph walk based at a corner of triangle 0, with at
/// most `max_steps` steps and no U-turns.
pub fn random_walk(
    tri: &Triangulation,
    rng: &mut ChaCha8Rng,
    max_steps: usize,
) -> Vec<(usize, usize)> {
    loop {
        let base = (0usize, (rng.next_u32() % 3) as usize);
        let mut entry = base;
        let mut path: Vec<(usize, usize)> = Vec::new();
        let closed = loop {
            let (t, slot) = entry;
            let choice = 1 + (rng.next_u32() % 2) as usize;
            let exit_slot = (slot + choice) % 3;
            let edge = tri.triangles()[t][exit_slot].edge;
            path.push((t, edge));
            let occ = tri.edge_occurrences(edge);
            entry = if occ[0] == (t, exit_slot) { occ[1] } else { occ[0] };
            if entry == base {
                break true;
            }
            if path.len() >= max_steps {
                break false;
            }
        };
        if closed && !path.is_empty() && path.len() <= max_steps {
            return path;
        }
    }
}

pub fn random_word(tri: &Triangulation, rng: &mut ChaCha8Rng, max_steps: usize) -> Word {
    loop {
        let path = random_walk(tri, rng, max_steps);
        if let Ok(w) = compile_word(tri, &path) {
            return w;
        }
    }
}

/// Random representation with moduli uniform in [xmin, xmax] and angles
/// uniform in [0, 2pi).
pub fn random_rep(
    tri: &Arc<Triangulation>,
    rng: &mut ChaCha8Rng,
    xmin: f64,
    xmax: f64,
) -> BentRep {
    loop {
        let inv: Vec<EdgeInvariant> = (0..tri.num_edges())
            .map(|_| EdgeInvariant {
                x: uniform(rng, xmin, xmax),
                alpha: uniform(rng, 0.0, std::f64::consts::TAU),
            })
            .collect();
        if let Ok(r) = BentRep::new(Arc::clone(tri), inv) {
            return r;
        }
    }
}

/// Random J-unitary matrix: a short random product of M_{x,alpha} and
/// E^{+-1} letters.
pub fn random_j_unitary(rng: &mut ChaCha8Rng, letters: usize) -> ScaledMat33 {
    let e = e_matrix();
    let e_inv = e.inverse().unwrap();
    let mut acc = ScaledMat33::identity();
    for _ in 0..letters {
        match rng.next_u32() % 3 {
            0 => {
                let m = m_matrix(uniform(rng, 0.2, 5.0), uniform(rng, 0.0, std::f64::consts::TAU))
                    .unwrap();
                acc = acc.mul(&m).unwrap();
            }
            1 => acc = acc.mul(&e).unwrap(),
            _ => acc = acc.mul(&e_inv).unwrap(),
        }
    }
    acc
}

pub fn random_complex(rng: &mut ChaCha8Rng, scale: f64) -> C {
    C::new(uniform(rng, -scale, scale), uniform(rng, -scale, scale))
}

pub fn random_mat(rng: &mut ChaCha8Rng, scale: f64) -> ScaledMat33 {
    loop {
        let mut m = [[C::new(0.0, 0.0); 3]; 3];
        for row in &mut m {
            for z in row {
                *z = random_complex(rng, scale);
            }
        }
        if let Ok(a) = ScaledMat33::new(m) {
            return a;
        }
    }
}
