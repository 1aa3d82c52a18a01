//! Heating a bar of length 10 with three distributed actuators and three point sensors.
//!
//! The state lives on the interior nodes of a uniform grid with Dirichlet ends.
//! Norms use the grid-weighted inner product `⟨u, v⟩ = h Σ u_j v_j`; internally
//! the abstract formulas are applied in the scaled coordinates `√h u`, where
//! that inner product is Euclidean.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forwarding::{self, OperatingPoint};
use crate::linalg;

pub const BAR_LENGTH: f64 = 10.0;
pub const DEFAULT_INTERVALS: usize = 2000;

/// Solves a tridiagonal system with constant bands by the Thomas algorithm.
pub fn solve_tridiagonal(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if n == 0 {
        return d;
    }
    c[0] = upper / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let denom = diag - lower * c[i - 1];
        c[i] = upper / denom;
        d[i] = (rhs[i] - lower * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Dirichlet Green's function of `d²/dx²` on `(0, L)`.
pub fn green(x: f64, xi: f64) -> f64 {
    if x <= xi {
        -x * (BAR_LENGTH - xi) / BAR_LENGTH
    } else {
        -xi * (BAR_LENGTH - x) / BAR_LENGTH
    }
}

/// `∫_a^b G(x, ξ) dξ` in closed form.
pub fn green_integral(x: f64, a: f64, b: f64) -> f64 {
    // antiderivatives of G on ξ ≤ x and on ξ ≥ x
    let left = |xi: f64| -(BAR_LENGTH - x) / BAR_LENGTH * xi * xi / 2.0;
    let right = |xi: f64| -x / BAR_LENGTH * (BAR_LENGTH * xi - xi * xi / 2.0);
    let mut total = 0.0;
    if a < x {
        total += left(b.min(x)) - left(a);
    }
    if b > x {
        total += right(b) - right(a.max(x));
    }
    total
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatProblem {
    pub intervals: usize,
    pub actuators: Vec<(f64, f64)>,
    pub sensors: Vec<f64>,
    pub y_ref: Vec<f64>,
}

impl Default for HeatProblem {
    fn default() -> Self {
        Self::new(DEFAULT_INTERVALS).expect("default grid is admissible")
    }
}

impl HeatProblem {
    /// `intervals` must be a positive multiple of 20 so actuator ends and sensors sit on nodes.
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals == 0 || !intervals.is_multiple_of(20) {
            return Err(Error::InvalidInput(format!(
                "number of grid intervals must be a positive multiple of 20, got {intervals}"
            )));
        }
        Ok(Self {
            intervals,
            actuators: vec![(1.5, 2.5), (4.5, 5.5), (6.5, 7.5)],
            sensors: vec![3.0, 6.0, 8.0],
            y_ref: vec![1.0, 3.0, 2.0],
        })
    }

    pub fn h(&self) -> f64 {
        BAR_LENGTH / self.intervals as f64
    }

    /// Number of interior nodes.
    pub fn dim(&self) -> usize {
        self.intervals - 1
    }

    pub fn node(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.h()
    }

    fn node_index(&self, x: f64) -> usize {
        (x / self.h()).round() as usize - 1
    }

    /// Applies the discrete Laplacian.
    pub fn apply_a(&self, v: &[f64]) -> Vec<f64> {
        let h2 = self.h() * self.h();
        let n = v.len();
        (0..n)
            .map(|j| {
                let l = if j > 0 { v[j - 1] } else { 0.0 };
                let r = if j + 1 < n { v[j + 1] } else { 0.0 };
                (l - 2.0 * v[j] + r) / h2
            })
            .collect()
    }

    /// `A⁻¹ v` by a tridiagonal solve.
    pub fn apply_a_inv(&self, v: &[f64]) -> Vec<f64> {
        let h2 = self.h() * self.h();
        solve_tridiagonal(1.0, -2.0, 1.0, v).into_iter().map(|x| x * h2).collect()
    }

    /// Indicator samples with half weight on the interval ends.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.dim(), self.actuators.len());
        for (k, &(lo, hi)) in self.actuators.iter().enumerate() {
            let (i0, i1) = (self.node_index(lo), self.node_index(hi));
            for j in i0..=i1 {
                b[(j, k)] = if j == i0 || j == i1 { 0.5 } else { 1.0 };
            }
        }
        b
    }

    pub fn apply_c(&self, v: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.sensors.len(), self.sensors.iter().map(|&x| v[self.node_index(x)]))
    }

    /// `Cᵀ y` in node coordinates.
    pub fn apply_c_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (&x, &v) in self.sensors.iter().zip(y) {
            out[self.node_index(x)] += v;
        }
        out
    }

    /// `C A⁻¹ B` from the discretized operators.
    pub fn discrete_cainvb(&self) -> DMatrix<f64> {
        let b = self.b_matrix();
        let m = self.sensors.len();
        let mut out = DMatrix::zeros(m, b.ncols());
        for k in 0..b.ncols() {
            let col: Vec<f64> = b.column(k).iter().copied().collect();
            out.set_column(k, &self.apply_c(&self.apply_a_inv(&col)));
        }
        out
    }

    /// `‖C A⁻¹‖` in the weighted norm, by power iteration on `(CA⁻¹)(CA⁻¹)*`.
    pub fn cainv_norm(&self) -> f64 {
        let h = self.h();
        let gram = |y: &DVector<f64>| -> DVector<f64> {
            let ct = self.apply_c_transpose(y.as_slice());
            let w = self.apply_a_inv(&self.apply_a_inv(&ct));
            self.apply_c(&w) / h
        };
        let m = self.sensors.len();
        let mut v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
        let mut estimate = 0.0;
        for _ in 0..1000 {
            let w = gram(&v);
            let next = w.norm();
            v = w / next;
            if (next - estimate).abs() <= 1e-15 * next {
                estimate = next;
                break;
            }
            estimate = next;
        }
        estimate.sqrt()
    }

    /// Frobenius norm of `B` in the weighted norm, an upper bound for its operator norm.
    pub fn b_norm_bound(&self) -> f64 {
        (self.b_matrix().norm_squared() * self.h()).sqrt()
    }

    /// `‖B v‖` in the weighted norm, as an operator norm on `R^m`.
    pub fn weighted_operator_norm(&self, b: &DMatrix<f64>) -> f64 {
        linalg::spectral_norm(b) * self.h().sqrt()
    }

    /// Integral of `G(x_i, ξ) φ(ξ)` over the bar by the trapezoidal rule.
    ///
    /// `phi` holds samples on all `intervals + 1` nodes including both ends.
    pub fn cainv_apply(&self, phi: &[f64]) -> Result<DVector<f64>> {
        if phi.len() != self.intervals + 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                self.intervals + 1,
                phi.len()
            )));
        }
        let h = self.h();
        let w = linalg::trapezoid_weights(phi.len(), BAR_LENGTH);
        Ok(DVector::from_iterator(
            self.sensors.len(),
            self.sensors.iter().map(|&x| {
                phi.iter()
                    .enumerate()
                    .map(|(j, v)| w[j] * green(x, j as f64 * h) * v)
                    .sum::<f64>()
            }),
        ))
    }
}

/// `C A⁻¹ B` of the continuous problem, integrated in closed form.
pub fn exact_cainvb(problem: &HeatProblem) -> DMatrix<f64> {
    DMatrix::from_fn(problem.sensors.len(), problem.actuators.len(), |i, k| {
        let (a, b) = problem.actuators[k];
        green_integral(problem.sensors[i], a, b)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatGain {
    #[serde(rename = "CAinvB", with = "linalg::rows_serde")]
    pub cainvb: DMatrix<f64>,
    #[serde(rename = "Ki", with = "linalg::rows_serde")]
    pub ki_matrix: DMatrix<f64>,
    #[serde(with = "linalg::sig9")]
    pub ki_norm: f64,
    #[serde(with = "linalg::sig9")]
    pub cainv_norm: f64,
    #[serde(with = "linalg::sig9")]
    pub b_norm_bound: f64,
    #[serde(with = "linalg::sig9")]
    pub bki_norm: f64,
    #[serde(with = "linalg::sig9")]
    pub mu: f64,
    /// `μ / (2 ‖B‖ ‖Ki‖ ‖CA⁻¹‖)` using the Frobenius bound on `‖B‖`.
    #[serde(with = "linalg::sig9")]
    pub ki_star: f64,
    /// `μ / (2 ‖B Ki‖ ‖CA⁻¹‖)`.
    #[serde(with = "linalg::sig9")]
    pub ki_star_sharp: f64,
    /// Semigroup-constant bound with `k = 1`, `ν = π²/100`.
    #[serde(with = "linalg::sig9")]
    pub ki_corollary: f64,
}

pub fn heat_gain(problem: &HeatProblem) -> Result<HeatGain> {
    let cainvb = problem.discrete_cainvb();
    let ki_matrix = linalg::checked_inverse(&cainvb, "C A^-1 B")?;
    let ki_norm = linalg::spectral_norm(&ki_matrix);
    let cainv_norm = problem.cainv_norm();
    let b_norm_bound = problem.b_norm_bound();
    let bki_norm = problem.weighted_operator_norm(&(problem.b_matrix() * &ki_matrix));
    let mu = PI * PI / 50.0;
    Ok(HeatGain {
        ki_star: mu / (2.0 * b_norm_bound * ki_norm * cainv_norm),
        ki_star_sharp: forwarding::ki_star_formula(mu, cainv_norm, bki_norm * bki_norm),
        ki_corollary: forwarding::corollary_formula(cainv_norm, bki_norm, 1.0, PI * PI / 100.0),
        cainvb,
        ki_matrix,
        ki_norm,
        cainv_norm,
        b_norm_bound,
        bki_norm,
        mu,
    })
}

/// Closed-loop steady state `(φ∞, z∞)` for gain `ki` and distributed disturbance `w`.
pub fn heat_steady_state(problem: &HeatProblem, gain: &HeatGain, ki: f64, w: &[f64]) -> (Vec<f64>, DVector<f64>) {
    let y_ref = DVector::from_column_slice(&problem.y_ref);
    let cainv_w = problem.apply_c(&problem.apply_a_inv(w));
    let u_inf = -&gain.ki_matrix * (&y_ref + &cainv_w);
    let z_inf = -(&y_ref + cainv_w) / ki;
    let forcing: Vec<f64> = (problem.b_matrix() * &u_inf).iter().zip(w).map(|(bu, wj)| -(bu + wj)).collect();
    (problem.apply_a_inv(&forcing), z_inf)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatTrajectory {
    pub times: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub norm_phi: Vec<f64>,
    pub v: Vec<f64>,
    pub ve: Vec<f64>,
    pub ki: f64,
    pub dt: f64,
    pub operating: OperatingPoint,
    /// Set when `ki` lies outside the certified interval.
    pub warning: Option<String>,
}

impl HeatTrajectory {
    pub fn final_output(&self) -> &[f64] {
        self.y.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Steps where `Ve` grew by more than `rel · Ve`.
    pub fn ve_increases(&self, rel: f64) -> usize {
        self.ve.windows(2).filter(|w| w[1] > w[0] * (1.0 + rel)).count()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let m = self.y.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=m).map(|i| format!("y{i}")));
        header.extend((1..=m).map(|i| format!("z{i}")));
        header.extend(["V".to_string(), "Ve".to_string()]);
        wtr.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![self.times[k]];
            row.extend(&self.y[k]);
            row.extend(&self.z[k]);
            row.extend([self.v[k], self.ve[k]]);
            wtr.write_record(row.iter().map(|x| crate::linalg::format_sig9(*x)))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HeatSimulation {
    pub ki: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Distributed disturbance on the interior nodes; empty means none.
    pub disturbance: Vec<f64>,
    pub record_every: usize,
}

impl HeatSimulation {
    pub fn new(ki: f64) -> Self {
        Self { ki, horizon: 5000.0, dt: 1.0, disturbance: Vec::new(), record_every: 1 }
    }
}

/// Implicit Euler for the heat equation, explicit Euler for the integrator, from zero data.
pub fn simulate_heat(problem: &HeatProblem, gain: &HeatGain, sim: &HeatSimulation) -> Result<HeatTrajectory> {
    if !(sim.dt > 0.0 && sim.horizon > 0.0) || sim.record_every == 0 {
        return Err(Error::Config("time step, horizon and recording stride must be positive".into()));
    }
    let n = problem.dim();
    let w = if sim.disturbance.is_empty() { vec![0.0; n] } else { sim.disturbance.clone() };
    if w.len() != n {
        return Err(Error::InvalidInput(format!("disturbance needs {n} samples, got {}", w.len())));
    }
    let warning = (!(sim.ki > 0.0 && sim.ki < gain.ki_star))
        .then(|| format!("gain {} outside the certified interval (0, {})", sim.ki, gain.ki_star));
    let h = problem.h();
    let b = problem.b_matrix();
    let y_ref = DVector::from_column_slice(&problem.y_ref);
    let (phi_inf, z_inf) = heat_steady_state(problem, gain, sim.ki, &w);
    let operating = forwarding::operating_point(gain.mu, gain.cainv_norm, gain.bki_norm.powi(2), sim.ki);
    let steps = (sim.horizon / sim.dt).round() as usize;
    let r = sim.dt / (h * h);

    let mut phi = vec![0.0; n];
    let mut z = DVector::zeros(problem.sensors.len());
    let mut traj = HeatTrajectory {
        times: Vec::new(),
        y: Vec::new(),
        z: Vec::new(),
        norm_phi: Vec::new(),
        v: Vec::new(),
        ve: Vec::new(),
        ki: sim.ki,
        dt: sim.dt,
        operating,
        warning,
    };
    let record = |t: f64, phi: &[f64], z: &DVector<f64>, traj: &mut HeatTrajectory| {
        let y = problem.apply_c(phi);
        let shifted: Vec<f64> = phi.iter().zip(&phi_inf).map(|(a, b)| a - b).collect();
        let v = h * shifted.iter().map(|x| x * x).sum::<f64>();
        let m_phi = problem.apply_c(&problem.apply_a_inv(&shifted));
        let dz = z - &z_inf - m_phi;
        traj.times.push(t);
        traj.y.push(y.iter().copied().collect());
        traj.z.push(z.iter().copied().collect());
        traj.norm_phi.push((h * phi.iter().map(|x| x * x).sum::<f64>()).sqrt());
        traj.v.push(v);
        traj.ve.push(v + operating.p * dz.norm_squared());
    };
    record(0.0, &phi, &z, &mut traj);
    for k in 0..steps {
        let y = problem.apply_c(&phi);
        let u = &gain.ki_matrix * &z * sim.ki;
        let bu = &b * &u;
        let rhs: Vec<f64> = (0..n).map(|j| phi[j] + sim.dt * (bu[j] + w[j])).collect();
        phi = solve_tridiagonal(-r, 1.0 + 2.0 * r, -r, &rhs);
        z += (y - &y_ref) * sim.dt;
        if !phi.iter().chain(z.iter()).all(|x| x.is_finite()) {
            return Err(Error::Numerical(format!("heat simulation diverged at step {}", k + 1)));
        }
        if (k + 1) % sim.record_every == 0 || k + 1 == steps {
            record((k + 1) as f64 * sim.dt, &phi, &z, &mut traj);
        }
    }
    Ok(traj)
}
