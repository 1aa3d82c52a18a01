//! Closed-loop simulation of the hyperbolic system under integral action.
//!
//! Upwind differences in space, explicit Euler in time. Each step evaluates the
//! output on the current state, advances the integrator, transports the
//! interior and then assigns the incoming boundary values from the new traces.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fundamental::{self, DEFAULT_STEPS};
use crate::gain::{self, GainCertificate};
use crate::linalg;
use crate::model::{DisturbanceScenario, HyperbolicSystem, LyapunovWeight};

/// Per-step growth of `Ve` tolerated as `VE_SLACK_CONSTANT · h · Ve`.
pub const VE_SLACK_CONSTANT: f64 = 1.0;

/// Integration steps per grid cell so that fine grids still get `DEFAULT_STEPS` in total.
fn substeps(cells: usize) -> usize {
    DEFAULT_STEPS.div_ceil(cells).max(1)
}

/// `Φ(s_j)` on the nodes `s_j = j / cells`.
pub fn phi_on_grid(system: &HyperbolicSystem, cells: usize) -> Result<Vec<DMatrix<f64>>> {
    let sub = substeps(cells);
    let phi = fundamental::integrate_phi(system, cells * sub)?;
    Ok(phi.samples.into_iter().step_by(sub).collect())
}

/// `Ψ(s_j)` on the nodes `s_j = j / cells`.
pub fn psi_on_grid(system: &HyperbolicSystem, cells: usize) -> Result<Vec<DMatrix<f64>>> {
    let sub = substeps(cells);
    let psi = fundamental::integrate_psi(system, cells * sub)?;
    Ok(psi.samples.into_iter().step_by(sub).collect())
}

/// Field sampled on `cells + 1` nodes: `values[i][j]` is component `i` at node `j`.
pub type GridField = Vec<Vec<f64>>;

fn node_vector(field: &GridField, j: usize) -> DVector<f64> {
    DVector::from_iterator(field.len(), field.iter().map(|c| c[j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Equilibrium {
    #[serde(with = "linalg::vec_sig9")]
    pub phi0: Vec<f64>,
    /// `φ∞` on the system grid.
    pub phi_inf: GridField,
    #[serde(with = "linalg::vec_sig9")]
    pub z_inf: Vec<f64>,
    #[serde(with = "linalg::vec_sig9")]
    pub u_inf: Vec<f64>,
}

impl Equilibrium {
    pub fn compute(system: &HyperbolicSystem, cert: &GainCertificate, scenario: &DisturbanceScenario) -> Result<Self> {
        Self::compute_with(system, &cert.ki_matrix, cert.ki, scenario, DEFAULT_STEPS)
    }

    /// Equilibrium for an arbitrary invertible `Ki` and scalar gain `ki`.
    pub fn compute_with(
        system: &HyperbolicSystem,
        ki_matrix: &DMatrix<f64>,
        ki: f64,
        scenario: &DisturbanceScenario,
        steps: usize,
    ) -> Result<Self> {
        if !(ki > 0.0) {
            return Err(Error::InvalidInput(format!("integral gain must be positive, got {ki}")));
        }
        let sc = scenario.resolved_for(system)?;
        let phi = fundamental::integrate_phi(system, steps)?;
        let split = fundamental::split_blocks(system, &phi.at_one);
        let inner = &split.phi_minus - &system.k * &split.phi_plus;
        let observe = &system.l1 * &split.phi_minus + &system.l2 * &split.phi_plus;
        let t1 = gain::compute_t1(system, &split)?;
        if !linalg::is_full_rank(&t1) {
            return Err(Error::RankCondition { which: "T1", condition: linalg::condition_number(&t1) });
        }
        let wb = sc.w_b_vector();
        let disturbance_gain = &observe * linalg::checked_solve(&inner, &DMatrix::from_column_slice(system.n, 1, wb.as_slice()), "Phi_minus(1) - K Phi_plus(1)")?;
        let target = sc.y_ref_vector() - sc.w_y_vector() - disturbance_gain.column(0);
        let u_inf = linalg::checked_solve(&t1, &DMatrix::from_column_slice(system.m, 1, target.as_slice()), "T1")?;
        let z_inf = linalg::checked_solve(ki_matrix, &u_inf, "Ki")? / ki;
        let drive = &system.b * &u_inf + DMatrix::from_column_slice(system.n, 1, wb.as_slice());
        let phi0 = linalg::checked_solve(&inner, &drive, "Phi_minus(1) - K Phi_plus(1)")?;
        let g = system.grid_points();
        let profile = phi_on_grid(system, g - 1)?;
        let mut phi_inf = vec![vec![0.0; g]; system.n];
        for (j, m) in profile.iter().enumerate() {
            let v = m * &phi0;
            for i in 0..system.n {
                phi_inf[i][j] = v[(i, 0)];
            }
        }
        Ok(Self {
            phi0: phi0.column(0).iter().copied().collect(),
            phi_inf,
            z_inf: z_inf.column(0).iter().copied().collect(),
            u_inf: u_inf.column(0).iter().copied().collect(),
        })
    }

    /// `φ∞` on `cells + 1` uniform nodes.
    pub fn profile(&self, system: &HyperbolicSystem, cells: usize) -> Result<GridField> {
        let phi0 = DVector::from_column_slice(&self.phi0);
        let mut out = vec![vec![0.0; cells + 1]; system.n];
        for (j, m) in phi_on_grid(system, cells)?.iter().enumerate() {
            let v = m * &phi0;
            for i in 0..system.n {
                out[i][j] = v[i];
            }
        }
        Ok(out)
    }
}

/// Trace vectors `([φ₊(0); φ₋(1)], [φ₊(1); φ₋(0)])` of a field.
fn traces(ell: usize, field: &GridField) -> (DVector<f64>, DVector<f64>) {
    let last = field[0].len() - 1;
    let outgoing = DVector::from_iterator(field.len(), field.iter().enumerate().map(|(i, c)| if i < ell { c[0] } else { c[last] }));
    let incoming = DVector::from_iterator(field.len(), field.iter().enumerate().map(|(i, c)| if i < ell { c[last] } else { c[0] }));
    (outgoing, incoming)
}

fn output(system: &HyperbolicSystem, field: &GridField, w_y: &DVector<f64>) -> DVector<f64> {
    let (a, b) = traces(system.ell, field);
    &system.l1 * a + &system.l2 * b + w_y
}

/// Boundary and output residuals `(|BC|∞, |y − y_ref|∞)` of an equilibrium.
pub fn equilibrium_residuals(
    system: &HyperbolicSystem,
    eq: &Equilibrium,
    ki_matrix: &DMatrix<f64>,
    ki: f64,
    scenario: &DisturbanceScenario,
) -> Result<(f64, f64)> {
    let sc = scenario.resolved_for(system)?;
    let field: GridField = eq.phi_inf.clone();
    let (a, b) = traces(system.ell, &field);
    let u = ki_matrix * DVector::from_column_slice(&eq.z_inf) * ki;
    let bc = &a - &system.k * &b - &system.b * u - sc.w_b_vector();
    let y = output(system, &field, &sc.w_y_vector()) - sc.y_ref_vector();
    Ok((bc.amax(), y.amax()))
}

/// `(∫₀¹ e^{at}(1 − t) dt, ∫₀¹ e^{at} t dt)`.
fn exp_moments(a: f64) -> (f64, f64) {
    if a.abs() < 1e-3 {
        let i0 = 1.0 + a / 2.0 + a * a / 6.0 + a * a * a / 24.0;
        let i1 = 0.5 + a / 3.0 + a * a / 8.0 + a * a * a / 30.0;
        (i0 - i1, i1)
    } else {
        let ea = a.exp();
        let i0 = (ea - 1.0) / a;
        let i1 = (ea * (a - 1.0) + 1.0) / (a * a);
        (i0 - i1, i1)
    }
}

/// `V(φ) = ∫ φᵀ P φ` with `φ_i²` piecewise linear and the exponential weight integrated exactly.
///
/// For a constant weight this is the trapezoidal rule.
pub fn evaluate_v(weight: &LyapunovWeight, phi: &GridField) -> f64 {
    let nodes = phi.first().map_or(0, Vec::len);
    if nodes < 2 {
        return 0.0;
    }
    let h = 1.0 / (nodes - 1) as f64;
    let param = &weight.param;
    phi.iter()
        .enumerate()
        .map(|(i, c)| {
            let (left, right) = exp_moments(param.exponents[i] * h);
            (0..nodes - 1)
                .map(|j| {
                    let scale = h * param.weights[i] * (param.exponents[i] * j as f64 * h).exp();
                    scale * (left * c[j] * c[j] + right * c[j + 1] * c[j + 1])
                })
                .sum::<f64>()
        })
        .sum()
}

/// Quadrature form of `𝓜φ = ∫ M Ψ(s) φ(s) ds`: one `m × n` block per node.
#[derive(Debug, Clone)]
pub struct ForwardingOperator {
    pub blocks: Vec<DMatrix<f64>>,
}

impl ForwardingOperator {
    pub fn new(system: &HyperbolicSystem, m: &DMatrix<f64>, cells: usize) -> Result<Self> {
        let w = linalg::trapezoid_weights(cells + 1, 1.0);
        let blocks = psi_on_grid(system, cells)?
            .iter()
            .zip(&w)
            .map(|(psi, wj)| m * psi * *wj)
            .collect();
        Ok(Self { blocks })
    }

    pub fn apply(&self, phi: &GridField) -> DVector<f64> {
        let rows = self.blocks.first().map_or(0, |b| b.nrows());
        let mut acc = DVector::zeros(rows);
        for (j, block) in self.blocks.iter().enumerate() {
            acc += block * node_vector(phi, j);
        }
        acc
    }
}

/// `V(φ) + p |z − 𝓜φ|²`.
pub fn evaluate_ve(weight: &LyapunovWeight, forwarding: &ForwardingOperator, p: f64, phi: &GridField, z: &DVector<f64>) -> f64 {
    evaluate_v(weight, phi) + p * (z - forwarding.apply(phi)).norm_squared()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub cells: usize,
    pub cfl: f64,
    /// Frames are recorded every this many steps (and at the final step).
    pub record_every: usize,
    pub store_states: bool,
    /// Overrides the certificate's operating gain.
    pub ki: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { horizon: 60.0, cells: 400, cfl: 0.9, record_every: 10, store_states: false, ki: None }
    }
}

#[derive(Debug, Clone)]
pub struct InitialState {
    pub phi: GridField,
    pub z: DVector<f64>,
}

impl InitialState {
    pub fn zero(system: &HyperbolicSystem, cells: usize) -> Self {
        Self { phi: vec![vec![0.0; cells + 1]; system.n], z: DVector::zeros(system.m) }
    }

    pub fn at_equilibrium(system: &HyperbolicSystem, eq: &Equilibrium, cells: usize) -> Result<Self> {
        Ok(Self { phi: eq.profile(system, cells)?, z: DVector::from_column_slice(&eq.z_inf) })
    }

    /// Smooth random profile: a few sine modes with seeded coefficients, zero integrator.
    pub fn random(system: &HyperbolicSystem, cells: usize, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = (0..system.n)
            .map(|_| {
                let coefs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                (0..=cells)
                    .map(|j| {
                        let s = j as f64 / cells as f64;
                        amplitude
                            * coefs
                                .iter()
                                .enumerate()
                                .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * s).sin())
                                .sum::<f64>()
                            / 2.0
                    })
                    .collect()
            })
            .collect();
        Self { phi, z: DVector::zeros(system.m) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Recorded fields, empty unless requested.
    pub states: Vec<GridField>,
    pub z: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub norm_phi: Vec<f64>,
    pub v: Vec<f64>,
    pub ve: Vec<f64>,
    pub cfl: f64,
    pub dt: f64,
    pub cells: usize,
    pub scheme: String,
    pub ki: f64,
    pub p: f64,
    /// Steps whose `Ve` increase exceeded the scheme slack.
    pub ve_increases: usize,
    pub equilibrium: Equilibrium,
}

impl Trajectory {
    /// Least-squares slope of `−ln Ve` over frames with `t ≥ from`.
    pub fn ve_decay_rate(&self, from: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.ve)
            .filter(|(t, v)| **t >= from && **v > 0.0)
            .map(|(t, v)| (*t, v.ln()))
            .collect();
        let n = pts.len() as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        -cov / var
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let m = self.y.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=m).map(|i| format!("y_{i}")));
        header.extend((1..=m).map(|i| format!("z_{i}")));
        header.extend(["norm_phi", "V", "Ve"].map(String::from));
        wtr.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![self.times[k]];
            row.extend(&self.y[k]);
            row.extend(&self.z[k]);
            row.extend([self.norm_phi[k], self.v[k], self.ve[k]]);
            wtr.write_record(row.iter().map(|x| linalg::format_sig9(*x)))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn max_speed(system: &HyperbolicSystem) -> f64 {
    system
        .lambda0
        .samples()
        .iter()
        .flatten()
        .fold(0.0, |a, b| f64::max(a, b.abs()))
}

/// Time step and number of steps for a horizon under the CFL contract.
pub fn time_grid(system: &HyperbolicSystem, config: &SimConfig) -> Result<(f64, usize)> {
    if !(config.cfl > 0.0 && config.cfl <= 1.0) {
        return Err(Error::Config(format!("CFL number must lie in (0, 1], got {}", config.cfl)));
    }
    if config.cells < 2 || !(config.horizon > 0.0) || config.record_every == 0 {
        return Err(Error::Config("need at least two cells, a positive horizon and recording stride".into()));
    }
    let dt_max = config.cfl / (config.cells as f64 * max_speed(system));
    let steps = (config.horizon / dt_max).ceil() as usize;
    Ok((config.horizon / steps as f64, steps))
}

/// One explicit upwind step of the interior, `Λ1` coupling included.
fn transport_step(system: &HyperbolicSystem, speeds: &[Vec<f64>], lambda1: &[DMatrix<f64>], phi: &GridField, dt: f64) -> GridField {
    let cells = phi[0].len() - 1;
    let h = 1.0 / cells as f64;
    let mut next = phi.clone();
    for j in 0..=cells {
        let coupling = &lambda1[j] * node_vector(phi, j);
        for i in 0..system.n {
            let lam = speeds[j][i];
            let grad = if i < system.ell {
                if j == 0 {
                    continue;
                }
                (phi[i][j] - phi[i][j - 1]) / h
            } else {
                if j == cells {
                    continue;
                }
                (phi[i][j + 1] - phi[i][j]) / h
            };
            next[i][j] = phi[i][j] - dt * (lam * grad + coupling[i]);
        }
    }
    next
}

fn shifted(phi: &GridField, eq: &GridField) -> GridField {
    phi.iter().zip(eq).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect()
}

/// Simulates the closed loop from `init`; `V` and `Ve` are evaluated on the shifted state.
pub fn simulate(
    system: &HyperbolicSystem,
    cert: &GainCertificate,
    scenario: &DisturbanceScenario,
    init: &InitialState,
    config: &SimConfig,
) -> Result<Trajectory> {
    if scenario.w_dist.is_some() {
        return Err(Error::InvalidInput("distributed disturbances are not supported for hyperbolic systems".into()));
    }
    let sc = scenario.resolved_for(system)?;
    let (dt, steps) = time_grid(system, config)?;
    let cells = config.cells;
    if init.phi.len() != system.n || init.phi.iter().any(|c| c.len() != cells + 1) || init.z.len() != system.m {
        return Err(Error::InvalidInput("initial state does not match the grid".into()));
    }
    let ki = config.ki.unwrap_or(cert.ki);
    let p = if config.ki.is_some() {
        0.9 * gain::p_max_formula(cert.mu(), cert.iss.weight.p_lower, ki, cert.m_norm, cert.psi_sup)
    } else {
        cert.p
    };
    let eq = Equilibrium::compute_with(system, &cert.ki_matrix, ki, &sc, DEFAULT_STEPS)?;
    let eq_field = eq.profile(system, cells)?;
    let z_inf = DVector::from_column_slice(&eq.z_inf);
    let forwarding = ForwardingOperator::new(system, &cert.m, cells)?;
    let weight = &cert.iss.weight;
    let h = 1.0 / cells as f64;
    let slack = VE_SLACK_CONSTANT * h;

    let mut speeds = Vec::with_capacity(cells + 1);
    let mut lambda1 = Vec::with_capacity(cells + 1);
    for j in 0..=cells {
        let c = system.eval_coefficients(j as f64 / cells as f64)?;
        speeds.push(c.lambda0);
        lambda1.push(c.lambda1);
    }
    let (w_b, w_y, y_ref) = (sc.w_b_vector(), sc.w_y_vector(), sc.y_ref_vector());
    let gain_matrix = &cert.ki_matrix * ki;

    let mut phi = init.phi.clone();
    let mut z = init.z.clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        z: Vec::new(),
        y: Vec::new(),
        norm_phi: Vec::new(),
        v: Vec::new(),
        ve: Vec::new(),
        cfl: dt * cells as f64 * max_speed(system),
        dt,
        cells,
        scheme: "upwind-explicit-euler".into(),
        ki,
        p,
        ve_increases: 0,
        equilibrium: eq.clone(),
    };
    let functional = |phi: &GridField, z: &DVector<f64>| {
        let d = shifted(phi, &eq_field);
        let v = evaluate_v(weight, &d);
        (v, v + p * (z - &z_inf - forwarding.apply(&d)).norm_squared())
    };
    let record = |t: f64, phi: &GridField, z: &DVector<f64>, v: f64, ve: f64, traj: &mut Trajectory| {
        traj.times.push(t);
        if config.store_states {
            traj.states.push(phi.clone());
        }
        traj.z.push(z.iter().copied().collect());
        traj.y.push(output(system, phi, &w_y).iter().copied().collect());
        let w = linalg::trapezoid_weights(cells + 1, 1.0);
        let sq: f64 = (0..=cells).map(|j| w[j] * phi.iter().map(|c| c[j] * c[j]).sum::<f64>()).sum();
        traj.norm_phi.push(sq.sqrt());
        traj.v.push(v);
        traj.ve.push(ve);
    };
    let (mut v, mut ve) = functional(&phi, &z);
    record(0.0, &phi, &z, v, ve, &mut traj);
    for k in 0..steps {
        let y = output(system, &phi, &w_y);
        z += (y - &y_ref) * dt;
        phi = transport_step(system, &speeds, &lambda1, &phi, dt);
        let (_, incoming) = traces(system.ell, &phi);
        let boundary = &system.k * incoming + &system.b * (&gain_matrix * &z) + &w_b;
        for i in 0..system.n {
            if i < system.ell {
                phi[i][0] = boundary[i];
            } else {
                phi[i][cells] = boundary[i];
            }
        }
        let (v_next, ve_next) = functional(&phi, &z);
        if !ve_next.is_finite() || !z.iter().all(|x| x.is_finite()) {
            return Err(Error::Numerical(format!("simulation diverged at t = {}", (k + 1) as f64 * dt)));
        }
        if ve_next > ve * (1.0 + slack) {
            traj.ve_increases += 1;
        }
        (v, ve) = (v_next, ve_next);
        if (k + 1) % config.record_every == 0 || k + 1 == steps {
            record((k + 1) as f64 * dt, &phi, &z, v, ve, &mut traj);
        }
    }
    Ok(traj)
}

/// Open-loop run with constant input `u0` from zero data; returns `(t, V)` per recorded step.
pub fn simulate_open_loop(
    system: &HyperbolicSystem,
    weight: &LyapunovWeight,
    u0: &DVector<f64>,
    config: &SimConfig,
) -> Result<Vec<(f64, f64)>> {
    if u0.len() != system.m {
        return Err(Error::InvalidInput("input has the wrong dimension".into()));
    }
    let (dt, steps) = time_grid(system, config)?;
    let cells = config.cells;
    let mut speeds = Vec::with_capacity(cells + 1);
    let mut lambda1 = Vec::with_capacity(cells + 1);
    for j in 0..=cells {
        let c = system.eval_coefficients(j as f64 / cells as f64)?;
        speeds.push(c.lambda0);
        lambda1.push(c.lambda1);
    }
    let bu = &system.b * u0;
    let mut phi = vec![vec![0.0; cells + 1]; system.n];
    let mut out = vec![(0.0, 0.0)];
    for k in 0..steps {
        phi = transport_step(system, &speeds, &lambda1, &phi, dt);
        let (_, incoming) = traces(system.ell, &phi);
        let boundary = &system.k * incoming + &bu;
        for i in 0..system.n {
            if i < system.ell {
                phi[i][0] = boundary[i];
            } else {
                phi[i][cells] = boundary[i];
            }
        }
        if (k + 1) % config.record_every == 0 || k + 1 == steps {
            out.push(((k + 1) as f64 * dt, evaluate_v(weight, &phi)));
        }
    }
    Ok(out)
}
