//! Fundamental matrix solutions `Φ` and `Ψ` of the steady-state spatial ODEs.
//!
//! * `Φ_s = -Λ0⁻¹ Λ1 Φ`, `Φ(0) = I`: propagates steady profiles, so every
//!   equilibrium satisfies `φ∞(s) = Φ(s) φ∞(0)`.
//! * `Ψ_s = Ψ (Λ1 - Λ0') Λ0⁻¹`, `Ψ(0) = I`: row propagation used by the
//!   forwarding operator. Together they satisfy `Ψ(s) Λ0(s) Φ(s) = Λ0(0)`.
//!
//! Both are integrated with the classical fixed-step RK4 scheme.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::HyperbolicSystem;

pub const DEFAULT_STEPS: usize = 1000;
pub const MIN_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionKind {
    Phi,
    Psi,
}

#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub kind: SolutionKind,
    /// Value at `s = k / steps`, `k = 0..=steps`.
    pub samples: Vec<DMatrix<f64>>,
    pub at_one: DMatrix<f64>,
    /// Largest spectral norm over the samples (the bound `Ψ̄` for `Ψ`).
    pub sup_norm: f64,
}

impl FundamentalSolution {
    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    /// Linear interpolation between stored samples.
    pub fn at(&self, s: f64) -> DMatrix<f64> {
        let steps = self.steps();
        let x = s.clamp(0.0, 1.0) * steps as f64;
        let k = (x.floor() as usize).min(steps - 1);
        let t = x - k as f64;
        &self.samples[k] * (1.0 - t) + &self.samples[k + 1] * t
    }
}

fn speed_inverse(system: &HyperbolicSystem, lambda0: &[f64], s: f64) -> Result<Vec<f64>> {
    lambda0
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if l == 0.0 || !l.is_finite() {
                Err(Error::Coefficient(format!(
                    "lambda_{} = {l} is not invertible at s = {s} (n = {})",
                    i + 1,
                    system.n
                )))
            } else {
                Ok(1.0 / l)
            }
        })
        .collect()
}

fn phi_generator(system: &HyperbolicSystem, s: f64) -> Result<DMatrix<f64>> {
    let c = system.eval_coefficients(s)?;
    let inv = speed_inverse(system, &c.lambda0, s)?;
    let mut f = -c.lambda1;
    for (i, scale) in inv.iter().enumerate() {
        f.row_mut(i).scale_mut(*scale);
    }
    Ok(f)
}

fn psi_generator(system: &HyperbolicSystem, s: f64) -> Result<DMatrix<f64>> {
    let c = system.eval_coefficients(s)?;
    let inv = speed_inverse(system, &c.lambda0, s)?;
    let mut g = c.lambda1 - linalg::diag(&c.dlambda0);
    for (j, scale) in inv.iter().enumerate() {
        g.column_mut(j).scale_mut(*scale);
    }
    Ok(g)
}

fn ensure_valid(system: &HyperbolicSystem, steps: usize) -> Result<()> {
    let report = system.validate();
    if let Some(v) = report.first() {
        return Err(Error::InvalidInput(format!("invalid system: {v}")));
    }
    if steps < MIN_STEPS {
        return Err(Error::InvalidInput(format!("at least {MIN_STEPS} integration steps required, got {steps}")));
    }
    Ok(())
}

/// RK4 for `X' = F(s) X` (left) or `X' = X F(s)` (right) on `[from, to]`.
fn rk4(
    from: f64,
    to: f64,
    steps: usize,
    initial: DMatrix<f64>,
    generator: impl Fn(f64) -> Result<DMatrix<f64>>,
    right: bool,
) -> Result<Vec<DMatrix<f64>>> {
    let h = (to - from) / steps as f64;
    let apply = |f: &DMatrix<f64>, x: &DMatrix<f64>| if right { x * f } else { f * x };
    let mut x = initial;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x.clone());
    for k in 0..steps {
        let s = from + k as f64 * h;
        let s_next = if k + 1 == steps { to } else { s + h };
        let f0 = generator(s)?;
        let fm = generator(s + 0.5 * h)?;
        let f1 = generator(s_next)?;
        let k1 = apply(&f0, &x);
        let k2 = apply(&fm, &(&x + &k1 * (0.5 * h)));
        let k3 = apply(&fm, &(&x + &k2 * (0.5 * h)));
        let k4 = apply(&f1, &(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !linalg::all_finite(&x) {
            return Err(Error::Numerical(format!("fundamental solution diverged at s = {s_next}")));
        }
        out.push(x.clone());
    }
    Ok(out)
}

fn finish(kind: SolutionKind, mut samples: Vec<DMatrix<f64>>) -> FundamentalSolution {
    // the initial value is the identity by definition, not by integration
    let n = samples[0].nrows();
    samples[0] = DMatrix::identity(n, n);
    let sup_norm = samples.iter().map(linalg::spectral_norm).fold(0.0, f64::max);
    FundamentalSolution {
        kind,
        at_one: samples.last().cloned().unwrap_or_else(|| DMatrix::identity(n, n)),
        samples,
        sup_norm,
    }
}

pub fn integrate_phi(system: &HyperbolicSystem, steps: usize) -> Result<FundamentalSolution> {
    ensure_valid(system, steps)?;
    let n = system.n;
    let samples = rk4(0.0, 1.0, steps, DMatrix::identity(n, n), |s| phi_generator(system, s), false)?;
    Ok(finish(SolutionKind::Phi, samples))
}

pub fn integrate_psi(system: &HyperbolicSystem, steps: usize) -> Result<FundamentalSolution> {
    ensure_valid(system, steps)?;
    let n = system.n;
    let samples = rk4(0.0, 1.0, steps, DMatrix::identity(n, n), |s| psi_generator(system, s), true)?;
    Ok(finish(SolutionKind::Psi, samples))
}

/// Propagates `initial` with the `Φ` dynamics from `from` to `to`; returns the final value.
pub fn propagate_phi(
    system: &HyperbolicSystem,
    from: f64,
    to: f64,
    steps: usize,
    initial: DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    ensure_valid(system, steps)?;
    let out = rk4(from, to, steps, initial, |s| phi_generator(system, s), false)?;
    Ok(out.into_iter().last().expect("rk4 returns at least one sample"))
}

/// Block rearrangements of `Φ(1)` and `K` induced by the sign split `ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSplit {
    /// `[[Φ11(1), Φ12(1)], [0, I]]`: maps `φ(0)` to `[φ₊(1); φ₋(0)]`.
    pub phi_plus: DMatrix<f64>,
    /// `[[I, 0], [Φ21(1), Φ22(1)]]`: maps `φ(0)` to `[φ₊(0); φ₋(1)]`.
    pub phi_minus: DMatrix<f64>,
    pub k_plus: DMatrix<f64>,
    pub k_minus: DMatrix<f64>,
}

pub fn split_blocks(system: &HyperbolicSystem, phi_at_one: &DMatrix<f64>) -> BlockSplit {
    let (n, ell) = (system.n, system.ell);
    let rest = n - ell;
    let mut phi_plus = phi_at_one.clone();
    phi_plus.rows_mut(ell, rest).fill(0.0);
    phi_plus.view_mut((ell, ell), (rest, rest)).fill_with_identity();
    let mut phi_minus = phi_at_one.clone();
    phi_minus.rows_mut(0, ell).fill(0.0);
    phi_minus.view_mut((0, 0), (ell, ell)).fill_with_identity();
    BlockSplit {
        phi_plus,
        phi_minus,
        k_plus: system.k_plus(),
        k_minus: system.k_minus(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientField, HyperbolicSystem};
    use crate::scenarios;

    fn scalar(lambda1: f64) -> HyperbolicSystem {
        HyperbolicSystem::constant(
            1,
            &[1.0],
            &DMatrix::from_element(1, 1, lambda1),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
        )
    }

    #[test]
    fn zero_coupling_gives_identity() {
        let sys = scenarios::saint_venant(&scenarios::SaintVenantParams::default());
        let phi = integrate_phi(&sys, 100).unwrap();
        let psi = integrate_psi(&sys, 100).unwrap();
        let id = DMatrix::<f64>::identity(2, 2);
        for (p, q) in phi.samples.iter().zip(&psi.samples) {
            assert!((p - &id).amax() <= 1e-13);
            assert!((q - &id).amax() <= 1e-13);
        }
        assert!((psi.sup_norm - 1.0).abs() < 1e-13);
        assert_eq!(psi.at_one, id);
    }

    #[test]
    fn scalar_exponential_closed_form() {
        // Φ(1) = exp(-λ), Ψ(1) = exp(λ) for Λ0 ≡ 1, Λ1 ≡ λ
        for lambda in [-1.3, 0.4, 2.0] {
            let sys = scalar(lambda);
            let phi = integrate_phi(&sys, 1000).unwrap();
            let psi = integrate_psi(&sys, 1000).unwrap();
            assert!((phi.at_one[(0, 0)] - (-lambda).exp()).abs() < 1e-10);
            assert!((psi.at_one[(0, 0)] - lambda.exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn cocycle_property_scalar() {
        let sys = scalar(0.7);
        let half = propagate_phi(&sys, 0.0, 0.5, 1000, DMatrix::identity(1, 1)).unwrap();
        let two_legs = propagate_phi(&sys, 0.5, 1.0, 1000, half).unwrap();
        let direct = propagate_phi(&sys, 0.0, 1.0, 1000, DMatrix::identity(1, 1)).unwrap();
        assert!((two_legs - direct).amax() < 1e-9);
    }

    #[test]
    fn psi_is_the_adjoint_propagator() {
        let g = 201;
        let sys = HyperbolicSystem::new(
            2,
            1,
            1,
            CoefficientField::from_fn(g, 2, |s| vec![1.0 + 0.5 * s, -2.0 + 0.3 * s * s]),
            CoefficientField::from_fn(g, 4, |s| vec![0.3, 0.1 * s, -0.2, 0.4 * (1.0 - s)]),
            DMatrix::zeros(2, 2),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        );
        let phi = integrate_phi(&sys, 400).unwrap();
        let psi = integrate_psi(&sys, 400).unwrap();
        let l00 = sys.eval_coefficients(0.0).unwrap().lambda0_matrix();
        for k in [0, 100, 250, 400] {
            let s = k as f64 / 400.0;
            let l0 = sys.eval_coefficients(s).unwrap().lambda0_matrix();
            let prod = &psi.samples[k] * l0 * &phi.samples[k];
            assert!((prod - &l00).amax() < 1e-6, "s = {s}");
        }
        for p in &phi.samples {
            assert!(p.determinant().abs() > 1e-12 * p.amax());
        }
    }

    #[test]
    fn coarse_and_fine_integrations_agree() {
        let g = 201;
        let sys = HyperbolicSystem::new(
            2,
            1,
            2,
            CoefficientField::from_fn(g, 2, |s| vec![1.0 + (2.0 * s).sin() * 0.3, -1.5 + 0.4 * s]),
            CoefficientField::from_fn(g, 4, |s| vec![(3.0 * s).cos(), 0.5, -0.4 * s, 0.2 + s * s]),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        );
        let coarse = integrate_phi(&sys, 200).unwrap().at_one;
        let fine = integrate_phi(&sys, 1600).unwrap().at_one;
        assert!((coarse - fine).amax() <= 1e-6);
    }

    #[test]
    fn too_few_steps_is_rejected() {
        assert!(matches!(integrate_phi(&scenarios::transport(), 5), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn identity_split() {
        let sys = scenarios::saint_venant(&scenarios::SaintVenantParams::default());
        let split = split_blocks(&sys, &DMatrix::identity(2, 2));
        assert_eq!(split.phi_plus, DMatrix::identity(2, 2));
        assert_eq!(split.phi_minus, DMatrix::identity(2, 2));
    }

    #[test]
    fn transport_split_with_zero_coupling() {
        let split = split_blocks(&scenarios::transport(), &DMatrix::identity(1, 1));
        assert_eq!(split.k_plus[(0, 0)], 1.0);
        assert_eq!(split.k_minus[(0, 0)], 0.0);
    }

    #[test]
    fn saint_venant_split_by_hand() {
        let p = scenarios::SaintVenantParams { k0: 0.25, k1: -0.6, ..Default::default() };
        let sys = scenarios::saint_venant(&p);
        let phi1 = DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 5.0, 7.0]);
        let split = split_blocks(&sys, &phi1);
        assert_eq!(split.k_plus, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -0.6, 0.0]));
        assert_eq!(split.k_minus, DMatrix::from_row_slice(2, 2, &[0.0, 0.25, 0.0, 1.0]));
        assert_eq!(split.phi_plus, DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 0.0, 1.0]));
        assert_eq!(split.phi_minus, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 5.0, 7.0]));
    }
}
