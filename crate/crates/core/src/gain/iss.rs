//! Input-to-state stability certification over an exponential weight family.
//!
//! Candidate weights are `P_i(s) = p_i exp(-σ_i μ s / λ̂_i)` where `σ_i` is the
//! sign of the `i`-th speed and `λ̂_i = min_s |λ_i(s)|`. For constant speeds and
//! `Λ1 = 0` the interior inequality then holds with equality.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{grid_coordinate, HyperbolicSystem, LyapunovWeight, WeightParam};

/// Largest admissible eigenvalue of the interior residual.
pub const INTERIOR_TOLERANCE: f64 = 1e-9;
/// `S` must satisfy `λ_min(S) > BOUNDARY_TOLERANCE · max(1, ‖S‖)`.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Grid of decay rates and per-component weights explored by [`certify_iss`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSearch {
    pub rates: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Default for WeightSearch {
    fn default() -> Self {
        Self {
            rates: (1..=60).map(|k| 0.05 * k as f64).collect(),
            weights: (0..9).map(|k| 10f64.powf(-2.0 + 0.5 * k as f64)).collect(),
        }
    }
}

impl WeightSearch {
    /// Default weight grid, single decay rate.
    pub fn fixed_rate(mu: f64) -> Self {
        Self { rates: vec![mu], ..Self::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IssCertificate {
    pub weight: LyapunovWeight,
    /// Smallest `c` with `[[-S, Q], [Qᵀ, R - cI]] ⪯ 0`.
    #[serde(with = "linalg::sig9")]
    pub c: f64,
    #[serde(rename = "S", with = "linalg::rows_serde")]
    pub s: DMatrix<f64>,
    #[serde(rename = "Q", with = "linalg::rows_serde")]
    pub q: DMatrix<f64>,
    #[serde(rename = "R", with = "linalg::rows_serde")]
    pub r: DMatrix<f64>,
    /// Largest eigenvalue of the interior residual over the grid (≤ 0 when satisfied).
    #[serde(with = "linalg::sig9")]
    pub interior_residual: f64,
    pub valid: bool,
}

impl IssCertificate {
    /// Largest eigenvalue of the block matrix `[[-S, Q], [Qᵀ, R - cI]]`.
    pub fn block_max_eigenvalue(&self) -> f64 {
        let (n, m) = (self.s.nrows(), self.r.nrows());
        let mut block = DMatrix::zeros(n + m, n + m);
        block.view_mut((0, 0), (n, n)).copy_from(&(-&self.s));
        block.view_mut((0, n), (n, m)).copy_from(&self.q);
        block.view_mut((n, 0), (m, n)).copy_from(&self.q.transpose());
        block
            .view_mut((n, n), (m, m))
            .copy_from(&(&self.r - DMatrix::identity(m, m) * self.c));
        linalg::sym_max_eigenvalue(&block)
    }
}

/// Exponents of the weight family for decay rate `mu`.
pub fn family_exponents(system: &HyperbolicSystem, mu: f64) -> Vec<f64> {
    (0..system.n)
        .map(|i| {
            let min_speed = system
                .lambda0
                .samples()
                .iter()
                .map(|row| row[i].abs())
                .fold(f64::INFINITY, f64::min);
            let sign = if i < system.ell { 1.0 } else { -1.0 };
            -sign * mu / min_speed
        })
        .collect()
}

/// Max over grid samples of `λ_max((PΛ0)_s - PΛ1 - Λ1ᵀP + μP)`.
pub fn interior_residual(system: &HyperbolicSystem, param: &WeightParam, mu: f64) -> Result<f64> {
    let g = system.grid_points();
    let mut worst = f64::NEG_INFINITY;
    for j in 0..g {
        let s = grid_coordinate(j, g);
        let c = system.eval_coefficients(s)?;
        let p = param.eval(s);
        let dp = param.derivative(s);
        let p_mat = linalg::diag(&p);
        let d_pl: Vec<f64> = (0..system.n)
            .map(|i| dp[i] * c.lambda0[i] + p[i] * c.dlambda0[i])
            .collect();
        let pl1 = &p_mat * &c.lambda1;
        let residual = linalg::diag(&d_pl) - &pl1 - pl1.transpose() + &p_mat * mu;
        worst = worst.max(linalg::sym_max_eigenvalue(&residual));
    }
    Ok(worst)
}

/// Boundary matrices `(S, Q, R)` for a given weight.
pub fn boundary_matrices(
    system: &HyperbolicSystem,
    param: &WeightParam,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let at = |s: f64| -> Result<DMatrix<f64>> {
        let c = system.eval_coefficients(s)?;
        let p = param.eval(s);
        Ok(linalg::diag(&p.iter().zip(&c.lambda0).map(|(a, b)| a * b).collect::<Vec<_>>()))
    };
    let (d1, d0) = (at(1.0)?, at(0.0)?);
    let (kp, km) = (system.k_plus(), system.k_minus());
    let (b_minus, b_plus) = (system.b_minus_padded(), system.b_plus_padded());
    let s = kp.transpose() * &d1 * &kp - km.transpose() * &d0 * &km;
    let q = -(kp.transpose() * &d1 * &b_minus) + km.transpose() * &d0 * &b_plus;
    let r = -(b_minus.transpose() * &d1 * &b_minus) + b_plus.transpose() * &d0 * &b_plus;
    Ok((s, q, r))
}

/// Evaluates one member of the family without searching.
pub fn evaluate_weight(system: &HyperbolicSystem, weights: &[f64], mu: f64) -> Result<IssCertificate> {
    if weights.len() != system.n || weights.iter().any(|p| !(*p > 0.0)) || !(mu > 0.0) {
        return Err(Error::InvalidInput("weights must be n positive numbers and mu > 0".into()));
    }
    let param = WeightParam {
        weights: weights.to_vec(),
        exponents: family_exponents(system, mu),
    };
    let interior = interior_residual(system, &param, mu)?;
    let (s, q, r) = boundary_matrices(system, &param)?;
    let s_margin = linalg::sym_min_eigenvalue(&s);
    let boundary_ok = s_margin > BOUNDARY_TOLERANCE * linalg::spectral_norm(&s).max(1.0);
    let c = if boundary_ok {
        let s_inv_q = s.clone().lu().solve(&q).ok_or_else(|| Error::Numerical("S is singular".into()))?;
        linalg::sym_max_eigenvalue(&(&r + q.transpose() * s_inv_q)).max(0.0)
    } else {
        f64::INFINITY
    };
    let valid = boundary_ok && interior <= INTERIOR_TOLERANCE && c.is_finite();
    Ok(IssCertificate {
        weight: LyapunovWeight::from_param(param, system.grid_points(), mu, s_margin),
        c,
        s,
        q,
        r,
        interior_residual: interior,
        valid,
    })
}

/// Relative boundary margin used to rank infeasible candidates.
fn normalized_margin(cert: &IssCertificate) -> f64 {
    cert.weight.s_margin / cert.weight.p_upper
}

fn candidate_weights(n: usize, grid: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0; n]];
    let mut idx = vec![0usize; n];
    loop {
        let w: Vec<f64> = idx.iter().map(|&k| grid[k]).collect();
        if w.iter().any(|x| *x != 1.0) {
            out.push(w);
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < grid.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Product grids stay affordable up to this dimension; beyond it the weights
/// are tuned one coordinate at a time.
const FULL_GRID_MAX_DIM: usize = 3;

/// Every feasible candidate in deterministic grid order.
pub fn feasible_weights(system: &HyperbolicSystem, search: &WeightSearch) -> Result<(Vec<IssCertificate>, f64, f64)> {
    let mut feasible = Vec::new();
    let mut best_margin = f64::NEG_INFINITY;
    let mut best_interior = f64::INFINITY;
    let mut record = |cert: IssCertificate, feasible: &mut Vec<IssCertificate>| {
        best_interior = best_interior.min(cert.interior_residual);
        if cert.interior_residual <= INTERIOR_TOLERANCE {
            best_margin = best_margin.max(normalized_margin(&cert));
        }
        if cert.valid {
            feasible.push(cert);
        }
    };
    for &mu in &search.rates {
        if system.n <= FULL_GRID_MAX_DIM {
            for w in candidate_weights(system.n, &search.weights) {
                record(evaluate_weight(system, &w, mu)?, &mut feasible);
            }
        } else {
            let mut current = vec![1.0; system.n];
            let mut current_score = normalized_margin(&evaluate_weight(system, &current, mu)?);
            record(evaluate_weight(system, &current, mu)?, &mut feasible);
            for i in 0..system.n {
                for &p in &search.weights {
                    let mut trial = current.clone();
                    trial[i] = p;
                    let cert = evaluate_weight(system, &trial, mu)?;
                    let score = normalized_margin(&cert);
                    record(cert, &mut feasible);
                    if score > current_score {
                        current = trial;
                        current_score = score;
                    }
                }
            }
        }
    }
    Ok((feasible, best_margin, best_interior))
}

/// First feasible weight in grid order (rates ascending, weights seeded at 1).
pub fn certify_iss(system: &HyperbolicSystem, search: &WeightSearch) -> Result<IssCertificate> {
    let (feasible, best_margin, best_interior) = feasible_weights(system, search)?;
    feasible
        .into_iter()
        .next()
        .ok_or(Error::CertificationFailed { best_margin, best_interior })
}
