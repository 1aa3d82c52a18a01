//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use hyperreg::model::{CoefficientField, DEFAULT_GRID_POINTS};
use hyperreg::nalgebra::DMatrix;
use hyperreg::HyperbolicSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// Matrix rescaled to spectral norm `target`.
pub fn with_norm(m: DMatrix<f64>, target: f64) -> DMatrix<f64> {
    let norm = m.clone().singular_values().max();
    if norm == 0.0 {
        m
    } else {
        m * (target / norm)
    }
}

pub fn random_speeds(rng: &mut ChaCha8Rng, n: usize, ell: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = rng.random_range(0.3..3.0);
            if i < ell {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Constant speeds, `Λ1 = 0`, `‖K‖ < 0.9`.
pub fn random_constant_system(rng: &mut ChaCha8Rng) -> HyperbolicSystem {
    let n = rng.random_range(1..=4);
    let ell = rng.random_range(0..=n);
    let m = rng.random_range(1..=n);
    let speeds = random_speeds(rng, n, ell);
    let k = with_norm(random_matrix(rng, n, n, 1.0), rng.random_range(0.0..0.9));
    HyperbolicSystem::constant(
        ell,
        &speeds,
        &DMatrix::zeros(n, n),
        k,
        random_matrix(rng, n, m, 1.0),
        random_matrix(rng, m, n, 1.0),
        random_matrix(rng, m, n, 1.0),
    )
}

/// Space-varying speeds and coupling.
pub fn random_varying_system(rng: &mut ChaCha8Rng) -> HyperbolicSystem {
    let n = rng.random_range(1..=3);
    let ell = rng.random_range(0..=n);
    let m = rng.random_range(1..=n);
    let base = random_speeds(rng, n, ell);
    let slopes: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..0.2)).collect();
    let coupling = random_matrix(rng, n, n, 0.5);
    let drift = random_matrix(rng, n, n, 0.5);
    let g = DEFAULT_GRID_POINTS;
    let lambda0 = CoefficientField::from_fn(g, n, |s| {
        base.iter().zip(&slopes).map(|(b, a)| b * (1.0 + a * s)).collect()
    });
    let lambda1 = CoefficientField::from_fn(g, n * n, |s| {
        let m = &coupling + &drift * (2.0 * s - 1.0);
        hyperreg::linalg::to_rows(&m).concat()
    });
    HyperbolicSystem::new(
        n,
        ell,
        m,
        lambda0,
        lambda1,
        with_norm(random_matrix(rng, n, n, 1.0), rng.random_range(0.0..0.8)),
        random_matrix(rng, n, m, 1.0),
        random_matrix(rng, m, n, 1.0),
        random_matrix(rng, m, n, 1.0),
    )
}

/// Hurwitz matrix: skew part plus a negative definite symmetric part.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = random_matrix(rng, n, n, 1.0);
    let r = random_matrix(rng, n, n, 1.0);
    let skew = (&g - g.transpose()) * 0.5;
    skew - &r * r.transpose() - DMatrix::identity(n, n) * rng.random_range(0.05..1.0)
}
