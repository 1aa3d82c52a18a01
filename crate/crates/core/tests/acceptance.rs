//! Acceptance runner: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use hyperreg::cli::main_with_args;
use hyperreg::forwarding;
use hyperreg::fundamental::DEFAULT_STEPS;
use hyperreg::gain::{self, DesignOptions, Precomputed, WeightSearch};
use hyperreg::heat::{self, HeatProblem, HeatSimulation};
use hyperreg::linalg;
use hyperreg::model::DisturbanceScenario;
use hyperreg::nalgebra::DMatrix;
use hyperreg::scenarios::{self, SaintVenantParams};
use hyperreg::sim::{self, Equilibrium, InitialState, SimConfig};
use hyperreg::HyperbolicSystem;
use rand::Rng;

struct Failure(String);

impl From<hyperreg::Error> for Failure {
    fn from(e: hyperreg::Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<&str> for Failure {
    fn from(e: &str) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<String, Failure>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(Failure(msg))
    }
}

fn within(elapsed: Duration, limit: f64, what: &str) -> Outcome {
    check(elapsed.as_secs_f64() < limit, format!("{what} runtime {:.2} s (limit {limit} s)", elapsed.as_secs_f64()))
}

fn heat_exactness() -> Outcome {
    let start = Instant::now();
    let problem = HeatProblem::default();
    let printed = DMatrix::from_row_slice(3, 3, &[14.0, 15.0, 9.0, 8.0, 20.0, 18.0, 4.0, 10.0, 14.0]) * -0.1;
    let exact = heat::exact_cainvb(&problem);
    let closed_err = (&exact - &printed).amax();
    check(closed_err <= 1e-12, format!("closed form error {closed_err:.2e}"))?;
    let g = heat::heat_gain(&problem)?;
    let grid_err = (&g.cainvb - &exact).amax();
    check(grid_err <= 1e-3, format!("grid operator error {grid_err:.2e} at N = {}", problem.intervals))?;
    let printed_ki = DMatrix::from_row_slice(3, 3, &[-1.25, 1.5, -1.125, 0.5, -2.0, 2.25, 0.0, 1.0, -2.0]);
    let ki_err = (&g.ki_matrix - &printed_ki).amax();
    check(ki_err <= 1e-3, format!("Ki error {ki_err:.2e}"))?;
    check((g.ki_norm - 4.2433).abs() <= 1e-3, format!("|Ki| = {:.6}", g.ki_norm))?;
    within(start.elapsed(), 10.0, "")?;
    Ok(format!("|CA^-1B - printed| = {closed_err:.1e}, grid error {grid_err:.1e}, |Ki| = {:.5}", g.ki_norm))
}

fn heat_gain_estimate() -> Outcome {
    let g = heat::heat_gain(&HeatProblem::default())?;
    let rel = (g.ki_star / 2.1498e-3 - 1.0).abs();
    check(
        (2.0e-3..=2.3e-3).contains(&g.ki_star) && rel < 0.05,
        format!("ki_star = {:.5e} (relative offset {rel:.2e})", g.ki_star),
    )
}

fn heat_regulation() -> Outcome {
    let start = Instant::now();
    let problem = HeatProblem::default();
    let g = heat::heat_gain(&problem)?;
    let ki = 2.0e-3;
    let target = [1.0, 3.0, 2.0];
    let mut worst: f64 = 0.0;
    let mut worst_steady: f64 = 0.0;
    let disturbances = [vec![0.0; problem.dim()], vec![0.05; problem.dim()]];
    for w in disturbances {
        let sim_cfg = HeatSimulation { disturbance: w.clone(), record_every: 100, ..HeatSimulation::new(ki) };
        let traj = heat::simulate_heat(&problem, &g, &sim_cfg)?;
        let y = traj.final_output();
        worst = worst.max(y.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let (_, z_inf) = heat::heat_steady_state(&problem, &g, ki, &w);
        let z = traj.z.last().unwrap();
        let scale = z_inf.amax().max(1.0);
        worst_steady = worst_steady.max(z.iter().zip(z_inf.iter()).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max));
    }
    check(worst <= 1e-2, format!("|y(T) - yref| = {worst:.2e}"))?;
    check(worst_steady <= 1e-2, format!("z(T) vs steady state relative gap {worst_steady:.2e}"))?;
    within(start.elapsed(), 60.0, "")?;
    Ok(format!("|y(T) - yref| = {worst:.2e}, z(T) vs steady state {worst_steady:.2e}, {:.1} s", start.elapsed().as_secs_f64()))
}

fn transport_gain_law() -> Outcome {
    let sys = scenarios::transport();
    let mut worst: f64 = 0.0;
    for mu in [0.25, 0.5, 1.0, 2.0] {
        let cert = gain::design_with(&sys, &DesignOptions { search: WeightSearch::fixed_rate(mu), ..Default::default() })?;
        worst = worst.max((cert.ki_star - (mu * (-mu).exp()).sqrt()).abs());
    }
    check(worst <= 1e-6, format!("max deviation from sqrt(mu e^-mu) {worst:.2e}"))?;
    let best = gain::design(&sys)?;
    let peak_err = (best.ki_star - (-0.5f64).exp()).abs();
    check(
        peak_err <= 1e-6 && (best.mu() - 1.0).abs() < 1e-12,
        format!("optimum ki_star = {:.9} at mu = {}", best.ki_star, best.mu()),
    )?;
    Ok(format!("sweep deviation {worst:.1e}, optimum {:.9} at mu = 1", best.ki_star))
}

fn constant_identity() -> Outcome {
    let mut rng = common::rng(5);
    let mut worst_sum: f64 = 0.0;
    let mut worst_fund: f64 = 0.0;
    for _ in 0..200 {
        let sys = common::random_constant_system(&mut rng);
        let pre = Precomputed::new(&sys, DEFAULT_STEPS)?;
        let eye = DMatrix::<f64>::identity(sys.n, sys.n);
        worst_fund = worst_fund.max((&pre.phi.at_one - &eye).amax()).max((&pre.psi.at_one - &eye).amax());
        let rel = linalg::spectral_norm(&(&pre.t1 + &pre.t2)) / (1.0 + linalg::spectral_norm(&pre.t1));
        worst_sum = worst_sum.max(rel);
    }
    check(worst_sum <= 1e-10, format!("|T1 + T2| / (1 + |T1|) = {worst_sum:.2e}"))?;
    check(worst_fund <= 1e-13, format!("|Phi(1) - I|, |Psi(1) - I| = {worst_fund:.2e}"))?;
    Ok(format!("200 instances, |T1 + T2| ratio {worst_sum:.1e}, fundamental error {worst_fund:.1e}"))
}

fn saint_venant() -> Outcome {
    let mut rng = common::rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = SaintVenantParams {
            c: rng.random_range(0.3..3.0),
            d: rng.random_range(0.3..3.0),
            k0: rng.random_range(-0.95..0.95),
            k1: rng.random_range(-0.95..0.95),
            b0: rng.random_range(0.3..3.0),
            b1: rng.random_range(0.3..3.0),
        };
        let pre = Precomputed::new(&scenarios::saint_venant(&p), DEFAULT_STEPS)?;
        worst = worst.max((&pre.t1 - scenarios::saint_venant_t1_closed_form(&p)).amax());
    }
    check(worst <= 1e-12, format!("T1 closed form error {worst:.2e}"))?;
    let feasible = gain::design(&scenarios::saint_venant(&SaintVenantParams { k0: 0.5, k1: 0.5, ..Default::default() }));
    check(feasible.is_ok(), format!("k0 = k1 = 0.5 not certified: {:?}", feasible.as_ref().err().map(|e| e.to_string())))?;
    let infeasible = gain::design(&scenarios::saint_venant(&SaintVenantParams { k0: 1.5, k1: 1.5, ..Default::default() }));
    check(infeasible.is_err(), "k0 = k1 = 1.5 unexpectedly certified".into())?;
    Ok(format!("T1 error {worst:.1e} on 50 draws, 0.5 certified, 1.5 rejected"))
}

fn forwarding_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(7);
    let mut done = 0;
    let mut worst_diss = f64::NEG_INFINITY;
    let mut worst_pe = f64::INFINITY;
    let mut worst_id: f64 = 0.0;
    while done < 100 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=3usize.min(n));
        let a = common::random_hurwitz(&mut rng, n);
        let b = common::random_matrix(&mut rng, n, m, 1.0);
        let c = common::random_matrix(&mut rng, m, n, 1.0);
        if forwarding::steady_state_maps(&a, &b, &c).is_err() {
            continue;
        }
        let lyap = forwarding::lyapunov_p(&a)?;
        let design = forwarding::forwarding_design(&a, &b, &c, &lyap.p, lyap.mu)?;
        let rep = forwarding::verify_dissipation(&design, &a, &b, &c, 0.9 * design.ki_star)?;
        let scale = linalg::spectral_norm(&design.pe) * linalg::spectral_norm(&forwarding::extended_operator(&a, &b, &c, &design.ki_matrix, 0.9 * design.ki_star));
        worst_diss = worst_diss.max(rep.dissipation_max / scale);
        worst_pe = worst_pe.min(rep.pe_min_eigenvalue);
        let ma = (&design.m * &a - &c).amax();
        let mbk = (&design.m * &b * &design.ki_matrix - DMatrix::<f64>::identity(m, m)).amax();
        worst_id = worst_id.max(ma).max(mbk);
        check(rep.pass, format!("case {done} (N = {n}, m = {m}) failed: {rep:?}"))?;
        done += 1;
    }
    check(worst_pe > 0.0, format!("min eig Pe = {worst_pe:.2e}"))?;
    check(worst_id <= 1e-10, format!("|MA - C|, |MBKi - I| = {worst_id:.2e}"))?;
    within(start.elapsed(), 30.0, "")?;
    Ok(format!(
        "100 plants, max relative dissipation {worst_diss:.2e}, min eig Pe {worst_pe:.2e}, identity error {worst_id:.1e}"
    ))
}

fn decay_case(name: &str, sys: &HyperbolicSystem, y_ref: Vec<f64>, horizon: f64) -> Outcome {
    let cert = gain::design(sys)?;
    let scenario = DisturbanceScenario::reference(y_ref);
    let mut counts = Vec::new();
    let mut rate = 0.0;
    for cells in [200, 400, 800] {
        let init = InitialState::random(sys, cells, 11, 1.0);
        let config = SimConfig { horizon, cells, ..Default::default() };
        let traj = sim::simulate(sys, &cert, &scenario, &init, &config)?;
        counts.push(traj.ve_increases);
        rate = traj.ve_decay_rate(horizon / 2.0);
    }
    let msg = format!("{name}: rate {rate:.4} vs mu_e {:.4}, increases {counts:?}", cert.mu_e);
    check(rate >= 0.5 * cert.mu_e && counts.windows(2).all(|w| w[1] <= w[0]), msg)
}

fn lyapunov_decay() -> Outcome {
    let t = decay_case("transport", &scenarios::transport(), vec![1.0], 20.0)?;
    let s = decay_case("saint-venant", &scenarios::saint_venant(&SaintVenantParams::default()), vec![0.5, 1.0], 40.0)?;
    Ok(format!("{t}; {s}"))
}

fn equilibrium_residuals() -> Outcome {
    let mut rng = common::rng(9);
    let mut done = 0;
    let mut worst: f64 = 0.0;
    while done < 100 {
        let sys = common::random_varying_system(&mut rng);
        let Ok(pre) = Precomputed::new(&sys, DEFAULT_STEPS) else { continue };
        if !pre.rank.passes() {
            continue;
        }
        let ki_matrix = pre.t2.clone().try_inverse().ok_or("singular T2")?;
        let scenario = DisturbanceScenario {
            w_b: (0..sys.n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            w_y: (0..sys.m).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y_ref: (0..sys.m).map(|_| rng.random_range(-2.0..2.0)).collect(),
            w_dist: None,
        };
        let ki = rng.random_range(0.05..1.0);
        let eq = Equilibrium::compute_with(&sys, &ki_matrix, ki, &scenario, DEFAULT_STEPS)?;
        let (bc, y) = sim::equilibrium_residuals(&sys, &eq, &ki_matrix, ki, &scenario)?;
        worst = worst.max(bc).max(y);
        done += 1;
    }
    check(worst <= 1e-9, format!("max residual {worst:.2e} over 100 systems"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| Failure(e.to_string()))?;
    let out = dir.path().to_str().unwrap();
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let mut stdout = Vec::new();
        for example in ["heat", "transport", "saintvenant"] {
            let mut err = Vec::new();
            let args = ["hyperreg", "reproduce", example, "--T", "20", "--grid", "200", "--out-dir", out];
            let code = main_with_args(args, &mut stdout, &mut err);
            check(code == 0, format!("reproduce {example} exited {code}: {}", String::from_utf8_lossy(&err)))?;
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
            .map_err(|e| Failure(e.to_string()))?
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        snapshots.push((stdout, files));
    }
    check(snapshots[0] == snapshots[1], "outputs differ between runs".into())?;
    Ok(format!("{} files and stdout identical across runs", snapshots[0].1.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("heat example exactness", heat_exactness),
        ("heat gain estimate", heat_gain_estimate),
        ("heat regulation", heat_regulation),
        ("transport gain law", transport_gain_law),
        ("constant-coefficient identity", constant_identity),
        ("saint-venant", saint_venant),
        ("forwarding property suite", forwarding_suite),
        ("lyapunov decay in simulation", lyapunov_decay),
        ("equilibrium residuals", equilibrium_residuals),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(Failure(d)) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {tag} {name} [{:.1} s] {detail}", i + 1, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
