//! Ready-made hyperbolic systems used by the CLI recipes and the test suites.

use nalgebra::DMatrix;

use crate::model::HyperbolicSystem;

/// Scalar transport `φ_t + φ_s = 0`, `φ(t,0) = u + w_b`, `y = φ(t,1) + w_y`.
///
/// Stored with a positive speed (`ℓ = 1`), which is the sign pattern the
/// boundary relation above requires.
pub fn transport() -> HyperbolicSystem {
    HyperbolicSystem::constant(
        1,
        &[1.0],
        &DMatrix::zeros(1, 1),
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, 1.0),
    )
}

/// Parameters of the normalized linearized Saint-Venant system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaintVenantParams {
    pub c: f64,
    pub d: f64,
    pub k0: f64,
    pub k1: f64,
    pub b0: f64,
    pub b1: f64,
}

impl Default for SaintVenantParams {
    fn default() -> Self {
        Self { c: 1.0, d: 1.0, k0: 0.5, k1: 0.5, b0: 1.0, b1: 1.0 }
    }
}

/// `Λ0 = diag(c, -d)`, `Λ1 = 0`, `K = [[0, k0], [k1, 0]]`, `B = diag(b0, b1)`
/// with the level/discharge outputs.
pub fn saint_venant(p: &SaintVenantParams) -> HyperbolicSystem {
    let cd = p.c + p.d;
    HyperbolicSystem::constant(
        1,
        &[p.c, -p.d],
        &DMatrix::zeros(2, 2),
        DMatrix::from_row_slice(2, 2, &[0.0, p.k0, p.k1, 0.0]),
        DMatrix::from_row_slice(2, 2, &[p.b0, 0.0, 0.0, p.b1]),
        DMatrix::from_row_slice(2, 2, &[p.c / cd, 0.0, 0.0, -1.0 / cd]),
        DMatrix::from_row_slice(2, 2, &[0.0, p.d / cd, 1.0 / cd, 0.0]),
    )
}

/// `T1` in closed form: `(1/(c+d)) [[c, d], [1, -1]] [[1, -k0], [-k1, 1]]⁻¹ diag(b0, b1)`.
pub fn saint_venant_t1_closed_form(p: &SaintVenantParams) -> DMatrix<f64> {
    let left = DMatrix::from_row_slice(2, 2, &[p.c, p.d, 1.0, -1.0]) / (p.c + p.d);
    let det = 1.0 - p.k0 * p.k1;
    let inv = DMatrix::from_row_slice(2, 2, &[1.0, p.k0, p.k1, 1.0]) / det;
    left * inv * DMatrix::from_row_slice(2, 2, &[p.b0, 0.0, 0.0, p.b1])
}

/// Integral gain written with the scalar factor `ϑ`, as a positive multiple of `T2⁻¹`.
///
/// The `(2,2)` entry carries a minus sign; without it the matrix is singular
/// whenever `k0 = k1` and `c = d`.
pub fn saint_venant_ki_closed_form(p: &SaintVenantParams) -> DMatrix<f64> {
    let SaintVenantParams { c, d, k0, k1, b0, b1 } = *p;
    DMatrix::from_row_slice(
        2,
        2,
        &[b1 * (1.0 - k0), b1 * (d + c * k0), b0 * (1.0 - k1), -b0 * (c + d * k1)],
    ) * saint_venant_theta(p)
}

/// `ϑ = -(c+d)²(1-k0k1)² / (b0 b1 [(1-k0)(c+dk1) + (1-k1)(d+ck0)])`.
pub fn saint_venant_theta(p: &SaintVenantParams) -> f64 {
    let SaintVenantParams { c, d, k0, k1, b0, b1 } = *p;
    -(c + d).powi(2) * (1.0 - k0 * k1).powi(2)
        / (b0 * b1)
        / ((1.0 - k0) * (c + d * k1) + (1.0 - k1) * (d + c * k0))
}
