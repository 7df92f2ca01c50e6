#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use nuio::model::{AugmentedModel, BuiltinNonlinearity, PlantMatrices, PlantModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sizes of a random test plant.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub n_f: usize,
    pub n_g: usize,
    pub n_v: usize,
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_shape(rng: &mut ChaCha8Rng) -> Shape {
    let n = rng.random_range(1..=5);
    Shape {
        n,
        m: rng.random_range(1..=n.max(2)),
        l: rng.random_range(1..=2),
        n_f: rng.random_range(1..=3),
        n_g: rng.random_range(1..=2),
        n_v: rng.random_range(1..=2),
    }
}

/// Plant with entries in `(−1, 1)` and a linear nonlinearity `g(v) = G v`.
pub fn random_plant(rng: &mut ChaCha8Rng, s: Shape) -> PlantModel {
    let mats = PlantMatrices {
        a: random_matrix(rng, s.n, s.n),
        b: random_matrix(rng, s.n, s.l),
        s: random_matrix(rng, s.n, s.n_g),
        v: random_matrix(rng, s.n_v, s.n),
        c: random_matrix(rng, s.m, s.n),
        fx: random_matrix(rng, s.n, s.n_f),
        fy: random_matrix(rng, s.m, s.n_f),
    };
    let gain = random_matrix(rng, s.n_g, s.n_v);
    let alpha = gain.clone().svd(false, false).singular_values.max();
    PlantModel::new(mats, alpha, Arc::new(BuiltinNonlinearity::Linear { gain })).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Augmented matrices written out entry by entry from the block layout,
/// without any block copies.
pub struct OracleAugmentation {
    pub a_a: DMatrix<f64>,
    pub b_a: DMatrix<f64>,
    pub s_a: DMatrix<f64>,
    pub v_a: DMatrix<f64>,
    pub d_a: DMatrix<f64>,
    pub c_a: DMatrix<f64>,
    pub c_bar: DMatrix<f64>,
}

pub fn oracle_augment(p: &PlantModel, r: usize) -> OracleAugmentation {
    let d = p.dims();
    let (n, nf) = (d.n, d.n_f);
    let nz = n + r * nf;
    // Position of state index i: `None` for the plant part, `Some((k, c))`
    // for channel c of the k-th fault derivative.
    let slot = |i: usize| -> Option<(usize, usize)> {
        if i < n {
            None
        } else {
            Some(((i - n) / nf, (i - n) % nf))
        }
    };
    let mut a_a = DMatrix::zeros(nz, nz);
    for i in 0..nz {
        for j in 0..nz {
            a_a[(i, j)] = match (slot(i), slot(j)) {
                (None, None) => p.a()[(i, j)],
                (None, Some((0, c))) => p.fx()[(i, c)],
                (Some((ki, ci)), Some((kj, cj))) if kj == ki + 1 && ci == cj => 1.0,
                _ => 0.0,
            };
        }
    }
    let mut b_a = DMatrix::zeros(nz, d.l);
    let mut s_a = DMatrix::zeros(nz, d.n_g);
    let mut d_a = DMatrix::zeros(nz, nf);
    for i in 0..nz {
        for j in 0..d.l {
            if i < n {
                b_a[(i, j)] = p.b()[(i, j)];
            }
        }
        for j in 0..d.n_g {
            if i < n {
                s_a[(i, j)] = p.s()[(i, j)];
            }
        }
        for j in 0..nf {
            if let Some((k, c)) = slot(i) {
                if k == r - 1 && c == j {
                    d_a[(i, j)] = 1.0;
                }
            }
        }
    }
    let mut v_a = DMatrix::zeros(d.n_v, nz);
    for i in 0..d.n_v {
        for j in 0..n {
            v_a[(i, j)] = p.v()[(i, j)];
        }
    }
    let mut c_a = DMatrix::zeros(d.m, nz);
    for i in 0..d.m {
        for j in 0..nz {
            c_a[(i, j)] = match slot(j) {
                None => p.c()[(i, j)],
                Some((0, c)) => p.fy()[(i, c)],
                _ => 0.0,
            };
        }
    }
    let mut c_bar = DMatrix::zeros(nf, nz);
    for i in 0..nf {
        for j in 0..nz {
            if slot(j) == Some((0, i)) {
                c_bar[(i, j)] = 1.0;
            }
        }
    }
    OracleAugmentation {
        a_a,
        b_a,
        s_a,
        v_a,
        d_a,
        c_a,
        c_bar,
    }
}

/// First mismatching matrix name, or `None` when every entry is equal.
pub fn oracle_mismatch(aug: &AugmentedModel, o: &OracleAugmentation) -> Option<&'static str> {
    [
        ("A_a", &aug.a_a, &o.a_a),
        ("B_a", &aug.b_a, &o.b_a),
        ("S_a", &aug.s_a, &o.s_a),
        ("V_a", &aug.v_a, &o.v_a),
        ("D_a", &aug.d_a, &o.d_a),
        ("C_a", &aug.c_a, &o.c_a),
        ("C_bar", &aug.c_bar, &o.c_bar),
    ]
    .into_iter()
    .find(|(_, a, b)| a != b)
    .map(|(name, _, _)| name)
}
