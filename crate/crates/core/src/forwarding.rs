//! Forwarding design for finite-dimensional `ẋ = Ax + Bu`, `y = Cx` with integral action.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalues with real part above this are not considered stable.
pub const HURWITZ_MARGIN: f64 = -1e-12;

/// Solution of `AᵀP + PA = −I`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovSolution {
    #[serde(rename = "P", with = "linalg::rows_serde")]
    pub p: DMatrix<f64>,
    /// Rate in `AᵀP + PA ⪯ −μ|x|²` (always 1 here).
    pub mu: f64,
    /// Equivalent rate in `AᵀP + PA ⪯ −μP`, i.e. `1/λ_max(P)`.
    #[serde(with = "linalg::sig9")]
    pub mu_weighted: f64,
}

pub fn lyapunov_p(a: &DMatrix<f64>) -> Result<LyapunovSolution> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidInput("A must be square and nonempty".into()));
    }
    let abscissa = linalg::spectral_abscissa(a);
    if !(abscissa < HURWITZ_MARGIN) {
        return Err(Error::NotHurwitz { max_real_part: abscissa });
    }
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    // column-major vec: vec(AᵀP) = (I ⊗ Aᵀ) vec P, vec(PA) = (Aᵀ ⊗ I) vec P
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, (-&eye).iter().copied());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Lyapunov operator is singular".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    let mu_weighted = 1.0 / linalg::sym_max_eigenvalue(&p);
    Ok(LyapunovSolution { p, mu: 1.0, mu_weighted })
}

/// `μ / (2‖M‖√α)`.
pub fn ki_star_formula(mu: f64, m_norm: f64, alpha: f64) -> f64 {
    mu / (2.0 * m_norm * alpha.sqrt())
}

/// Scalars of the Young splitting used at one operating gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub ki: f64,
    /// Splitting weight in `(0, 1]`; `a = θp/α`, `b = 1/‖M‖²`.
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub mu_e: f64,
}

/// Picks `θ` maximizing `min(μ(1 − r/√θ), ki√α(1 − θ)/(√θ‖M‖))` with `r = ki/ki*`.
pub fn operating_point(mu: f64, m_norm: f64, alpha: f64, ki: f64) -> OperatingPoint {
    let ki_star = ki_star_formula(mu, m_norm, alpha);
    let r = ki / ki_star;
    let state_rate = |theta: f64| mu * (1.0 - r / theta.sqrt());
    let integ_rate = |theta: f64| ki * alpha.sqrt() * (1.0 - theta) / (theta.sqrt() * m_norm);
    let theta = if ki > 0.0 && r < 1.0 {
        let (mut lo, mut hi) = (r * r, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if state_rate(mid) < integ_rate(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    } else {
        1.0
    };
    let p = alpha.sqrt() / (theta.sqrt() * m_norm);
    OperatingPoint {
        ki,
        theta,
        a: theta * p / alpha,
        b: 1.0 / (m_norm * m_norm),
        p,
        mu_e: state_rate(theta).min(integ_rate(theta)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForwardingDesign {
    #[serde(rename = "P", with = "linalg::rows_serde")]
    pub p_matrix: DMatrix<f64>,
    #[serde(with = "linalg::sig9")]
    pub mu: f64,
    #[serde(rename = "M", with = "linalg::rows_serde")]
    pub m: DMatrix<f64>,
    #[serde(rename = "Ki", with = "linalg::rows_serde")]
    pub ki_matrix: DMatrix<f64>,
    #[serde(with = "linalg::sig9")]
    pub m_norm: f64,
    #[serde(with = "linalg::sig9")]
    pub alpha: f64,
    #[serde(with = "linalg::sig9")]
    pub ki_star: f64,
    pub operating: OperatingPoint,
    #[serde(with = "linalg::sig9")]
    pub p: f64,
    #[serde(with = "linalg::sig9")]
    pub mu_e: f64,
    #[serde(rename = "Pe", with = "linalg::rows_serde")]
    pub pe: DMatrix<f64>,
}

/// `[[P + pMᵀM, −pMᵀ], [−pM, pI]]`.
pub fn assemble_pe(p_matrix: &DMatrix<f64>, m: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let (n, k) = (p_matrix.nrows(), m.nrows());
    let mut pe = DMatrix::zeros(n + k, n + k);
    pe.view_mut((0, 0), (n, n)).copy_from(&(p_matrix + m.transpose() * m * p));
    pe.view_mut((0, n), (n, k)).copy_from(&(-m.transpose() * p));
    pe.view_mut((n, 0), (k, n)).copy_from(&(-m * p));
    pe.view_mut((n, n), (k, k)).copy_from(&(DMatrix::identity(k, k) * p));
    pe
}

fn check_shapes(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n || c.ncols() != n || c.nrows() != b.ncols() {
        return Err(Error::InvalidInput(format!(
            "incompatible shapes A {}x{}, B {}x{}, C {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    Ok(())
}

/// `M = CA⁻¹` and `Ki = (CA⁻¹B)⁻¹`, both through solves with `A`.
pub fn steady_state_maps(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_shapes(a, b, c)?;
    let m = linalg::checked_solve(&a.transpose(), &c.transpose(), "A")?.transpose();
    let ki = linalg::checked_inverse(&(&m * b), "C A^-1 B")?;
    Ok((m, ki))
}

impl ForwardingDesign {
    /// Operating point and `Pe` for another gain, keeping `P`, `M` and `Ki`.
    pub fn at_gain(&self, ki: f64) -> (OperatingPoint, DMatrix<f64>) {
        let op = operating_point(self.mu, self.m_norm, self.alpha, ki);
        let pe = assemble_pe(&self.p_matrix, &self.m, op.p);
        (op, pe)
    }
}

/// Design at the operating gain `0.9·ki*`.
pub fn forwarding_design(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    p_matrix: &DMatrix<f64>,
    mu: f64,
) -> Result<ForwardingDesign> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput("mu must be positive".into()));
    }
    let (m, ki_matrix) = steady_state_maps(a, b, c)?;
    let m_norm = linalg::spectral_norm(&m);
    let alpha = linalg::spectral_norm(&(p_matrix * b * &ki_matrix)).powi(2);
    let ki_star = ki_star_formula(mu, m_norm, alpha);
    let operating = operating_point(mu, m_norm, alpha, 0.9 * ki_star);
    let pe = assemble_pe(p_matrix, &m, operating.p);
    Ok(ForwardingDesign {
        p_matrix: p_matrix.clone(),
        mu,
        m,
        ki_matrix,
        m_norm,
        alpha,
        ki_star,
        p: operating.p,
        mu_e: operating.mu_e,
        operating,
        pe,
    })
}

/// `A_e = [[A, B Ki ki], [C, 0]]`.
pub fn extended_operator(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, ki_matrix: &DMatrix<f64>, ki: f64) -> DMatrix<f64> {
    let (n, k) = (a.nrows(), c.nrows());
    let mut ae = DMatrix::zeros(n + k, n + k);
    ae.view_mut((0, 0), (n, n)).copy_from(a);
    ae.view_mut((0, n), (n, k)).copy_from(&(b * ki_matrix * ki));
    ae.view_mut((n, 0), (k, n)).copy_from(c);
    ae
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DissipationReport {
    pub operating: OperatingPoint,
    /// `λ_max(A_eᵀPe + PeA_e)`.
    #[serde(with = "linalg::sig9")]
    pub dissipation_max: f64,
    #[serde(with = "linalg::sig9")]
    pub pe_min_eigenvalue: f64,
    /// `dissipation_max ≤ −μ_e` up to rounding.
    pub rate_bound_holds: bool,
    pub pass: bool,
}

pub fn verify_dissipation(
    design: &ForwardingDesign,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    ki: f64,
) -> Result<DissipationReport> {
    check_shapes(a, b, c)?;
    let (operating, pe) = design.at_gain(ki);
    let ae = extended_operator(a, b, c, &design.ki_matrix, ki);
    let lhs = ae.transpose() * &pe + &pe * &ae;
    let dissipation_max = linalg::sym_max_eigenvalue(&lhs);
    let pe_min_eigenvalue = linalg::sym_min_eigenvalue(&pe);
    let scale = linalg::spectral_norm(&pe) * linalg::spectral_norm(&ae);
    let rounding = 1e-10 * scale;
    Ok(DissipationReport {
        operating,
        dissipation_max,
        pe_min_eigenvalue,
        rate_bound_holds: dissipation_max <= -operating.mu_e + rounding,
        pass: dissipation_max < -rounding && pe_min_eigenvalue > 0.0,
    })
}

/// `ν / (‖CA⁻¹‖ k² ‖B(CA⁻¹B)⁻¹‖)` for a semigroup bound `‖e^{At}‖ ≤ k e^{−νt}`.
pub fn corollary_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, k_sg: f64, nu_sg: f64) -> Result<f64> {
    if !(k_sg > 0.0 && nu_sg > 0.0) {
        return Err(Error::InvalidInput("semigroup constants must be positive".into()));
    }
    let (m, ki) = steady_state_maps(a, b, c)?;
    Ok(corollary_formula(linalg::spectral_norm(&m), linalg::spectral_norm(&(b * ki)), k_sg, nu_sg))
}

pub fn corollary_formula(cainv_norm: f64, bki_norm: f64, k_sg: f64, nu_sg: f64) -> f64 {
    nu_sg / (cainv_norm * k_sg * k_sg * bki_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn lyapunov_of_minus_identity() {
        let sol = lyapunov_p(&(-DMatrix::<f64>::identity(3, 3))).unwrap();
        assert!((&sol.p - DMatrix::<f64>::identity(3, 3) * 0.5).amax() < 1e-14);
        assert!((sol.mu_weighted - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_residual() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -2.0]);
        let p = lyapunov_p(&a).unwrap().p;
        let res = a.transpose() * &p + &p * &a + DMatrix::<f64>::identity(2, 2);
        assert!(res.amax() <= 1e-12);
    }

    #[test]
    fn unstable_matrix_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(lyapunov_p(&a), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn scalar_design_by_hand() {
        let d = forwarding_design(&scalar(-1.0), &scalar(1.0), &scalar(1.0), &scalar(0.5), 1.0).unwrap();
        assert!((d.m[(0, 0)] + 1.0).abs() < 1e-15);
        assert!((d.ki_matrix[(0, 0)] + 1.0).abs() < 1e-15);
        assert!((d.alpha - 0.25).abs() < 1e-15);
        assert!((d.ki_star - 1.0).abs() < 1e-15);
        assert!(d.mu_e > 0.0);
    }

    #[test]
    fn scalar_verification() {
        let (a, b, c) = (scalar(-1.0), scalar(1.0), scalar(1.0));
        let d = forwarding_design(&a, &b, &c, &scalar(0.5), 1.0).unwrap();
        let rep = verify_dissipation(&d, &a, &b, &c, 0.5).unwrap();
        assert!(rep.pass && rep.rate_bound_holds);
        let rep = verify_dissipation(&d, &a, &b, &c, 0.0).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn rank_failure_is_reported() {
        let a = -DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let c = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let p = DMatrix::<f64>::identity(2, 2) * 0.5;
        assert!(matches!(forwarding_design(&a, &b, &c, &p, 1.0), Err(Error::RankCondition { .. })));
    }

    #[test]
    fn corollary_scalar_and_homogeneity() {
        let (a, b, c) = (scalar(-1.0), scalar(1.0), scalar(1.0));
        assert!((corollary_gain(&a, &b, &c, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let g2 = corollary_gain(&a, &b, &c, 2.0, 1.0).unwrap();
        assert!((g2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn operating_point_balances_rates() {
        let op = operating_point(1.0, 1.0, 0.25, 0.5);
        let r: f64 = 0.5;
        let state = 1.0 - r / op.theta.sqrt();
        let integ = 0.5 * 0.5 * (1.0 - op.theta) / op.theta.sqrt();
        assert!((state - integ).abs() < 1e-12);
        assert!((op.mu_e - state).abs() < 1e-12);
    }
}
