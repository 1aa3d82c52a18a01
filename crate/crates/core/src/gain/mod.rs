//! Rank conditions, integral gain bound and forwarding weight for the hyperbolic model.

pub mod iss;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fundamental::{self, BlockSplit, FundamentalSolution, DEFAULT_STEPS};
use crate::linalg;
use crate::model::HyperbolicSystem;

pub use iss::{certify_iss, evaluate_weight, IssCertificate, WeightSearch};

/// Steady-state input-output map `T1 = (L1Φ₋ + L2Φ₊)(Φ₋ − KΦ₊)⁻¹B`.
pub fn compute_t1(system: &HyperbolicSystem, split: &BlockSplit) -> Result<DMatrix<f64>> {
    let inner = &split.phi_minus - &system.k * &split.phi_plus;
    let lhs = &system.l1 * &split.phi_minus + &system.l2 * &split.phi_plus;
    Ok(lhs * linalg::checked_solve(&inner, &system.b, "Phi_minus(1) - K Phi_plus(1)")?)
}

fn inner2(system: &HyperbolicSystem, psi_at_one: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l0 = system.eval_coefficients(0.0)?.lambda0_matrix();
    let l1 = system.eval_coefficients(1.0)?.lambda0_matrix();
    Ok(&l0 * system.k_minus() - psi_at_one * &l1 * system.k_plus())
}

/// `M = (L1K + L2)(Λ0(0)K₋ − Ψ(1)Λ0(1)K₊)⁻¹` and the matrix `T2` built from it.
pub fn compute_m_and_t2(
    system: &HyperbolicSystem,
    psi_at_one: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let inner = inner2(system, psi_at_one)?;
    let inv = linalg::checked_inverse(&inner, "Lambda0(0) K_minus - Psi(1) Lambda0(1) K_plus")?;
    let m = (&system.l1 * &system.k + &system.l2) * inv;
    let l0 = system.eval_coefficients(0.0)?.lambda0_matrix();
    let l1 = system.eval_coefficients(1.0)?.lambda0_matrix();
    let drive = &l0 * system.b_plus_padded() - psi_at_one * &l1 * system.b_minus_padded();
    let t2 = -(&system.l1 * &system.b) + &m * drive;
    Ok((m, t2))
}

/// Condition numbers of every matrix whose invertibility the design relies on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankReport {
    #[serde(with = "linalg::sig9")]
    pub cond_inner_t1: f64,
    #[serde(with = "linalg::sig9")]
    pub cond_inner_m: f64,
    #[serde(with = "linalg::sig9")]
    pub cond_t1: f64,
    #[serde(with = "linalg::sig9")]
    pub cond_t2: f64,
    pub t1_full_rank: bool,
    pub t2_full_rank: bool,
}

impl RankReport {
    pub fn passes(&self) -> bool {
        self.t1_full_rank && self.t2_full_rank
    }
}

/// Fundamental solutions and the static matrices derived from them.
#[derive(Debug, Clone)]
pub struct Precomputed {
    pub phi: FundamentalSolution,
    pub psi: FundamentalSolution,
    pub split: BlockSplit,
    pub t1: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub t2: DMatrix<f64>,
    pub rank: RankReport,
}

impl Precomputed {
    pub fn new(system: &HyperbolicSystem, steps: usize) -> Result<Self> {
        let violations = system.validate();
        if let Some(v) = violations.first() {
            return Err(Error::InvalidInput(v.to_string()));
        }
        let phi = fundamental::integrate_phi(system, steps)?;
        let psi = fundamental::integrate_psi(system, steps)?;
        let split = fundamental::split_blocks(system, &phi.at_one);
        let t1 = compute_t1(system, &split)?;
        let (m, t2) = compute_m_and_t2(system, &psi.at_one)?;
        let rank = RankReport {
            cond_inner_t1: linalg::condition_number(&(&split.phi_minus - &system.k * &split.phi_plus)),
            cond_inner_m: linalg::condition_number(&inner2(system, &psi.at_one)?),
            cond_t1: linalg::condition_number(&t1),
            cond_t2: linalg::condition_number(&t2),
            t1_full_rank: linalg::is_full_rank(&t1),
            t2_full_rank: linalg::is_full_rank(&t2),
        };
        Ok(Self { phi, psi, split, t1, m, t2, rank })
    }
}

/// `true` when `T2 Ki + Kiᵀ T2ᵀ` is positive definite.
pub fn check_ki_candidate(t2: &DMatrix<f64>, ki: &DMatrix<f64>) -> bool {
    if t2.ncols() != ki.nrows() || t2.nrows() != ki.ncols() || !linalg::all_finite(ki) {
        return false;
    }
    let prod = t2 * ki;
    linalg::sym_min_eigenvalue(&(&prod + prod.transpose())) > 0.0
}

/// How a weight is picked among the feasible ISS certificates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Largest certified gain bound.
    #[default]
    MaxGain,
    /// First feasible weight in grid order.
    FirstFeasible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignOptions {
    pub steps: usize,
    pub search: WeightSearch,
    pub selection: Selection,
    /// Operating gain as a fraction of the certified bound.
    pub gain_fraction: f64,
    /// Forwarding weight as a fraction of its admissible maximum.
    pub p_fraction: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            search: WeightSearch::default(),
            selection: Selection::MaxGain,
            gain_fraction: 0.9,
            p_fraction: 0.9,
        }
    }
}

/// Everything needed to run and audit the integral controller.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainCertificate {
    #[serde(rename = "T1", with = "linalg::rows_serde")]
    pub t1: DMatrix<f64>,
    #[serde(rename = "T2", with = "linalg::rows_serde")]
    pub t2: DMatrix<f64>,
    #[serde(rename = "M", with = "linalg::rows_serde")]
    pub m: DMatrix<f64>,
    #[serde(rename = "Ki", with = "linalg::rows_serde")]
    pub ki_matrix: DMatrix<f64>,
    pub rank: RankReport,
    pub iss: IssCertificate,
    #[serde(with = "linalg::sig9")]
    pub m_norm: f64,
    #[serde(with = "linalg::sig9")]
    pub psi_sup: f64,
    #[serde(with = "linalg::sig9")]
    pub ki_matrix_norm: f64,
    #[serde(with = "linalg::sig9")]
    pub ki_star: f64,
    /// Same bound with `‖Ki‖²` in place of `‖Ki‖`.
    #[serde(with = "linalg::sig9")]
    pub ki_star_strict: f64,
    #[serde(with = "linalg::sig9")]
    pub ki: f64,
    #[serde(with = "linalg::sig9")]
    pub p_max: f64,
    #[serde(with = "linalg::sig9")]
    pub p: f64,
    #[serde(with = "linalg::sig9")]
    pub mu_e: f64,
}

/// `√(μP̲) / (|M| Ψ̄ √(c‖Ki‖))`.
pub fn ki_star_formula(mu: f64, p_lower: f64, m_norm: f64, psi_sup: f64, c: f64, ki_norm: f64) -> f64 {
    (mu * p_lower).sqrt() / (m_norm * psi_sup * (c * ki_norm).sqrt())
}

/// `μP̲ / (ki |M|² Ψ̄²)`.
pub fn p_max_formula(mu: f64, p_lower: f64, ki: f64, m_norm: f64, psi_sup: f64) -> f64 {
    mu * p_lower / (ki * m_norm * m_norm * psi_sup * psi_sup)
}

/// Decay rate of the augmented functional for operating point `(ki, p)`.
pub fn mu_e_formula(
    mu: f64,
    p_lower: f64,
    m_norm: f64,
    psi_sup: f64,
    c: f64,
    ki_norm: f64,
    ki: f64,
    p: f64,
) -> f64 {
    let coupling = m_norm * m_norm * psi_sup * psi_sup / p_lower;
    let a = mu - p * ki * coupling;
    let b = p * ki - c * ki * ki * ki_norm;
    (a / (1.0 + 2.0 * p * coupling)).min(b / (2.0 * p))
}

impl GainCertificate {
    pub fn mu(&self) -> f64 {
        self.iss.weight.mu
    }

    pub fn c(&self) -> f64 {
        self.iss.c
    }

    pub fn recompute_ki_star(&self) -> f64 {
        ki_star_formula(self.mu(), self.iss.weight.p_lower, self.m_norm, self.psi_sup, self.c(), self.ki_matrix_norm)
    }

    pub fn recompute_p_max(&self) -> f64 {
        p_max_formula(self.mu(), self.iss.weight.p_lower, self.ki, self.m_norm, self.psi_sup)
    }

    /// Decay rate for a different operating point with the same certificate.
    pub fn mu_e_at(&self, ki: f64, p: f64) -> f64 {
        mu_e_formula(
            self.mu(),
            self.iss.weight.p_lower,
            self.m_norm,
            self.psi_sup,
            self.c(),
            self.ki_matrix_norm,
            ki,
            p,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a certificate and restores the sampled weight for `grid_points`.
    pub fn from_json(text: &str, grid_points: usize) -> Result<Self> {
        let mut cert: Self = serde_json::from_str(text)?;
        let w = &cert.iss.weight;
        cert.iss.weight = crate::model::LyapunovWeight::from_param(w.param.clone(), grid_points, w.mu, w.s_margin);
        Ok(cert)
    }
}

fn candidate_bound(pre: &Precomputed, m_norm: f64, ki_norm: f64, cert: &IssCertificate) -> f64 {
    ki_star_formula(cert.weight.mu, cert.weight.p_lower, m_norm, pre.psi.sup_norm, cert.c, ki_norm)
}

/// Full design pipeline with explicit options.
pub fn design_with(system: &HyperbolicSystem, options: &DesignOptions) -> Result<GainCertificate> {
    if !(options.gain_fraction > 0.0 && options.gain_fraction < 1.0)
        || !(options.p_fraction > 0.0 && options.p_fraction < 1.0)
    {
        return Err(Error::InvalidInput("gain and weight fractions must lie in (0, 1)".into()));
    }
    let pre = Precomputed::new(system, options.steps)?;
    if !pre.rank.t1_full_rank {
        return Err(Error::RankCondition { which: "T1", condition: pre.rank.cond_t1 });
    }
    if !pre.rank.t2_full_rank {
        return Err(Error::RankCondition { which: "T2", condition: pre.rank.cond_t2 });
    }
    let ki_matrix = linalg::checked_inverse(&pre.t2, "T2")?;
    let m_norm = linalg::spectral_norm(&pre.m);
    let ki_norm = linalg::spectral_norm(&ki_matrix);
    if m_norm == 0.0 {
        return Err(Error::Design("M vanishes, the gain bound is unbounded".into()));
    }
    let (feasible, best_margin, best_interior) = iss::feasible_weights(system, &options.search)?;
    let mut chosen: Option<(f64, IssCertificate)> = None;
    for cert in feasible {
        let bound = candidate_bound(&pre, m_norm, ki_norm, &cert);
        let better = match &chosen {
            None => true,
            Some((best, _)) => options.selection == Selection::MaxGain && bound > best * (1.0 + 1e-12),
        };
        if better {
            chosen = Some((bound, cert));
        }
        if options.selection == Selection::FirstFeasible {
            break;
        }
    }
    let (ki_star, iss) = chosen.ok_or(Error::CertificationFailed { best_margin, best_interior })?;
    if !ki_star.is_finite() {
        return Err(Error::Design("ISS constant vanished, the gain bound is unbounded".into()));
    }
    let psi_sup = pre.psi.sup_norm;
    let mu = iss.weight.mu;
    let p_lower = iss.weight.p_lower;
    let ki = options.gain_fraction * ki_star;
    let p_max = p_max_formula(mu, p_lower, ki, m_norm, psi_sup);
    let p = options.p_fraction * p_max;
    let mu_e = mu_e_formula(mu, p_lower, m_norm, psi_sup, iss.c, ki_norm, ki, p);
    let ki_star_strict = ki_star_formula(mu, p_lower, m_norm, psi_sup, iss.c, ki_norm * ki_norm);
    Ok(GainCertificate {
        t1: pre.t1,
        t2: pre.t2,
        m: pre.m,
        ki_matrix,
        rank: pre.rank,
        iss,
        m_norm,
        psi_sup,
        ki_matrix_norm: ki_norm,
        ki_star,
        ki_star_strict,
        ki,
        p_max,
        p,
        mu_e,
    })
}

pub fn design(system: &HyperbolicSystem) -> Result<GainCertificate> {
    design_with(system, &DesignOptions::default())
}
