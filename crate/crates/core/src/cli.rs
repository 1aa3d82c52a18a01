//! Command-line front end: design, verification, simulation and reproduction recipes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::forwarding;
use crate::gain::{self, iss, DesignOptions, GainCertificate, Selection, WeightSearch};
use crate::heat::{self, HeatProblem, HeatSimulation};
use crate::linalg;
use crate::model::{DisturbanceScenario, HyperbolicSystem};
use crate::scenarios::{self, SaintVenantParams};
use crate::sim::{self, Equilibrium, InitialState, SimConfig};

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "hyperreg", version, about = "Integral-action regulators for linear hyperbolic and abstract systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Certify a hyperbolic system and compute its integral gain
    Design(DesignArgs),
    /// Forwarding design for a finite-dimensional system given as CSV matrices
    Forward(ForwardArgs),
    /// Simulate the closed loop of a certified hyperbolic system
    Simulate(SimulateArgs),
    /// Re-check a system and certificate against every invariant
    Verify(VerifyArgs),
    /// Regenerate the reference examples
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DesignArgs {
    /// System description (JSON)
    #[arg(long)]
    pub system: PathBuf,
    /// RK4 steps for the fundamental solutions
    #[arg(long, default_value_t = crate::fundamental::DEFAULT_STEPS)]
    pub steps: usize,
    /// Restrict the weight search to a single decay rate
    #[arg(long)]
    pub rate: Option<f64>,
    /// Keep the first feasible weight instead of the one with the largest gain bound
    #[arg(long)]
    pub first_feasible: bool,
    #[arg(long, default_value_t = 0.9)]
    pub gain_fraction: f64,
    #[arg(long, default_value_t = 0.9)]
    pub p_fraction: f64,
    /// Certificate output path (defaults to certificate.json in the output directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ForwardArgs {
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long = "B")]
    pub b: PathBuf,
    #[arg(long = "C")]
    pub c: PathBuf,
    /// Gain to verify (defaults to the design's operating gain)
    #[arg(long)]
    pub ki: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zero,
    Random,
    Equilibrium,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub cert: PathBuf,
    /// Disturbance scenario (JSON); falls back to the scenario embedded in the system file
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Time horizon
    #[arg(long = "T", default_value_t = 60.0)]
    pub horizon: f64,
    /// Number of grid cells
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.9)]
    pub cfl: f64,
    /// Overrides the certificate's operating gain
    #[arg(long)]
    pub ki: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitKind::Zero)]
    pub init: InitKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 10)]
    pub record_every: usize,
    #[arg(long, default_value = "trajectory.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub cert: PathBuf,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    Heat,
    Transport,
    #[value(name = "saintvenant")]
    SaintVenant,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub example: Example,
    /// Grid intervals (heat) or cells (hyperbolic examples)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Time horizon
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Integral gain used in the closed-loop run
    #[arg(long)]
    pub ki: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Decimal with 9 significant digits.
pub fn fmt9(x: f64) -> String {
    let r = linalg::round_sig(x, 9);
    if r == 0.0 || (1e-4..1e9).contains(&r.abs()) || !r.is_finite() {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    (0..m.nrows())
        .map(|i| {
            let row: Vec<String> = m.row(i).iter().map(|x| format!("{:>14}", fmt9(*x))).collect();
            format!("  [{}]", row.join(","))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => json!(linalg::round_sig(x, 9)),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn tolerances() -> Value {
    json!({
        "rank_condition_limit": linalg::RANK_TOLERANCE,
        "iss_interior": iss::INTERIOR_TOLERANCE,
        "iss_boundary": iss::BOUNDARY_TOLERANCE,
        "hurwitz_margin": forwarding::HURWITZ_MARGIN,
        "ve_slack_constant": sim::VE_SLACK_CONSTANT,
    })
}

/// Output files collected in memory and written only once the command has succeeded.
struct Outputs {
    dir: PathBuf,
    files: BTreeMap<PathBuf, Vec<u8>>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: BTreeMap::new() }
    }

    fn add(&mut self, name: impl AsRef<Path>, bytes: Vec<u8>) {
        let path = if name.as_ref().is_absolute() { name.as_ref().to_path_buf() } else { self.dir.join(name) };
        self.files.insert(path, bytes);
    }

    fn add_json<T: Serialize>(&mut self, name: impl AsRef<Path>, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add(name, text.into_bytes());
        Ok(())
    }

    fn manifest(&mut self, cli: &Cli, derived: Value) -> Result<()> {
        let manifest = json!({
            "tool": "hyperreg",
            "version": env!("CARGO_PKG_VERSION"),
            "config": serde_json::to_value(cli)?,
            "tolerances": tolerances(),
            "derived": round_json(derived),
        });
        self.add_json(MANIFEST_NAME, &manifest)
    }

    fn commit(self) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        for (path, bytes) in self.files {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(path, bytes)?;
        }
        Ok(())
    }
}

fn read_system(path: &Path) -> Result<(HyperbolicSystem, Option<DisturbanceScenario>)> {
    HyperbolicSystem::from_json_file(path)
}

fn read_cert(path: &Path, system: &HyperbolicSystem) -> Result<GainCertificate> {
    GainCertificate::from_json(&fs::read_to_string(path)?, system.grid_points())
}

fn read_scenario(path: Option<&Path>, embedded: Option<DisturbanceScenario>, system: &HyperbolicSystem) -> Result<DisturbanceScenario> {
    let sc = match (path, embedded) {
        (Some(p), _) => DisturbanceScenario::from_json_file(p)?,
        (None, Some(s)) => s,
        (None, None) => return Err(Error::InvalidInput("no scenario given and none embedded in the system file".into())),
    };
    sc.resolved_for(system)
}

/// Reads a headerless comma-separated matrix.
pub fn read_csv_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::InvalidInput(format!("{}: bad number {f:?}: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    linalg::from_rows(&rows)
}

fn certificate_summary(cert: &GainCertificate) -> Value {
    json!({
        "mu": cert.mu(),
        "c": cert.c(),
        "ki_star": cert.ki_star,
        "ki_star_strict": cert.ki_star_strict,
        "ki": cert.ki,
        "p_max": cert.p_max,
        "p": cert.p,
        "mu_e": cert.mu_e,
        "M_norm": cert.m_norm,
        "Psi_sup": cert.psi_sup,
        "Ki_norm": cert.ki_matrix_norm,
    })
}

fn print_certificate(out: &mut dyn Write, cert: &GainCertificate) -> Result<()> {
    writeln!(out, "T1 =\n{}", fmt_matrix(&cert.t1))?;
    writeln!(out, "T2 =\n{}", fmt_matrix(&cert.t2))?;
    writeln!(out, "Ki =\n{}", fmt_matrix(&cert.ki_matrix))?;
    writeln!(out, "weights = {:?}", cert.iss.weight.param.weights.iter().map(|x| fmt9(*x)).collect::<Vec<_>>())?;
    for (name, value) in [
        ("mu", cert.mu()),
        ("c", cert.c()),
        ("ki_star", cert.ki_star),
        ("ki_star_strict", cert.ki_star_strict),
        ("ki", cert.ki),
        ("p_max", cert.p_max),
        ("p", cert.p),
        ("mu_e", cert.mu_e),
    ] {
        writeln!(out, "{name} = {}", fmt9(value))?;
    }
    Ok(())
}

fn design_options(args: &DesignArgs) -> DesignOptions {
    DesignOptions {
        steps: args.steps,
        search: args.rate.map_or_else(WeightSearch::default, WeightSearch::fixed_rate),
        selection: if args.first_feasible { Selection::FirstFeasible } else { Selection::MaxGain },
        gain_fraction: args.gain_fraction,
        p_fraction: args.p_fraction,
    }
}

fn run_design(cli: &Cli, args: &DesignArgs, out: &mut dyn Write) -> Result<()> {
    let (system, _) = read_system(&args.system)?;
    let cert = gain::design_with(&system, &design_options(args))?;
    print_certificate(out, &cert)?;
    let mut files = Outputs::new(&args.out_dir);
    files.add_json(args.out.clone().unwrap_or_else(|| "certificate.json".into()), &cert)?;
    files.manifest(cli, certificate_summary(&cert))?;
    files.commit()
}

fn run_forward(cli: &Cli, args: &ForwardArgs, out: &mut dyn Write) -> Result<()> {
    let (a, b, c) = (read_csv_matrix(&args.a)?, read_csv_matrix(&args.b)?, read_csv_matrix(&args.c)?);
    let lyap = forwarding::lyapunov_p(&a)?;
    let design = forwarding::forwarding_design(&a, &b, &c, &lyap.p, lyap.mu)?;
    let ki = args.ki.unwrap_or(design.operating.ki);
    let report = forwarding::verify_dissipation(&design, &a, &b, &c, ki)?;
    let doc = json!({ "lyapunov": lyap, "design": design, "verification": report });
    writeln!(out, "{}", serde_json::to_string_pretty(&round_json(doc.clone()))?)?;
    let mut files = Outputs::new(&args.out_dir);
    files.add_json("forward_report.json", &round_json(doc))?;
    files.manifest(
        cli,
        json!({
            "mu": design.mu,
            "alpha": design.alpha,
            "ki_star": design.ki_star,
            "ki": ki,
            "p": report.operating.p,
            "mu_e": report.operating.mu_e,
            "pass": report.pass,
        }),
    )?;
    files.commit()?;
    if report.pass {
        Ok(())
    } else {
        Err(Error::Design(format!("closed-loop dissipation check failed at ki = {ki}")))
    }
}

fn initial_state(args: &SimulateArgs, system: &HyperbolicSystem, cert: &GainCertificate, scenario: &DisturbanceScenario) -> Result<InitialState> {
    Ok(match args.init {
        InitKind::Zero => InitialState::zero(system, args.grid),
        InitKind::Random => InitialState::random(system, args.grid, args.seed, args.amplitude),
        InitKind::Equilibrium => {
            let ki = args.ki.unwrap_or(cert.ki);
            let eq = Equilibrium::compute_with(system, &cert.ki_matrix, ki, scenario, crate::fundamental::DEFAULT_STEPS)?;
            InitialState::at_equilibrium(system, &eq, args.grid)?
        }
    })
}

fn trajectory_summary(traj: &sim::Trajectory) -> Value {
    json!({
        "dt": traj.dt,
        "cfl": traj.cfl,
        "steps_recorded": traj.times.len(),
        "ki": traj.ki,
        "p": traj.p,
        "ve_increases": traj.ve_increases,
        "ve_decay_rate_second_half": traj.ve_decay_rate(traj.times.last().copied().unwrap_or(0.0) / 2.0),
        "y_final": traj.y.last().cloned().unwrap_or_default(),
        "z_inf": traj.equilibrium.z_inf,
    })
}

fn run_simulate(cli: &Cli, args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let (system, embedded) = read_system(&args.system)?;
    let cert = read_cert(&args.cert, &system)?;
    let scenario = read_scenario(args.scenario.as_deref(), embedded, &system)?;
    let config = SimConfig {
        horizon: args.horizon,
        cells: args.grid,
        cfl: args.cfl,
        record_every: args.record_every,
        store_states: false,
        ki: args.ki,
    };
    sim::time_grid(&system, &config)?;
    let init = initial_state(args, &system, &cert, &scenario)?;
    let traj = sim::simulate(&system, &cert, &scenario, &init, &config)?;
    let mut csv_bytes = Vec::new();
    traj.write_csv(&mut csv_bytes)?;
    let summary = trajectory_summary(&traj);
    writeln!(out, "{}", serde_json::to_string_pretty(&round_json(summary.clone()))?)?;
    let mut files = Outputs::new(&args.out_dir);
    files.add(&args.out, csv_bytes);
    let mut derived = certificate_summary(&cert);
    derived["simulation"] = summary;
    files.manifest(cli, derived)?;
    files.commit()
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, detail }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Every invariant a stored certificate must satisfy for `system`.
pub fn verify_certificate(system: &HyperbolicSystem, cert: &GainCertificate, scenario: Option<&DisturbanceScenario>) -> Result<Vec<Check>> {
    // stored values carry 9 significant digits
    let tol = 1e-7;
    let mut checks = Vec::new();
    let violations = system.validate();
    checks.push(check("system_valid", violations.is_empty(), format!("{} violations", violations.len())));
    if !violations.is_empty() {
        return Ok(checks);
    }
    let pre = gain::Precomputed::new(system, crate::fundamental::DEFAULT_STEPS)?;
    let scale = |m: &DMatrix<f64>| m.amax().max(1.0);
    let d1 = (&pre.t1 - &cert.t1).amax();
    checks.push(check("T1_matches", d1 <= 1e-6 * scale(&pre.t1), format!("max deviation {d1:e}")));
    let d2 = (&pre.t2 - &cert.t2).amax();
    checks.push(check("T2_matches", d2 <= 1e-6 * scale(&pre.t2), format!("max deviation {d2:e}")));
    checks.push(check("rank_conditions", pre.rank.passes(), format!("cond T1 {:e}, cond T2 {:e}", pre.rank.cond_t1, pre.rank.cond_t2)));
    checks.push(check("Ki_candidate", gain::check_ki_candidate(&cert.t2, &cert.ki_matrix), "T2 Ki + (T2 Ki)ᵀ ≻ 0".into()));
    let w = &cert.iss.weight;
    let iss_cert = iss::evaluate_weight(system, &w.param.weights, w.mu)?;
    checks.push(check(
        "iss_weight",
        iss_cert.valid && iss_cert.c <= cert.c() * (1.0 + tol) + 1e-12,
        format!("interior {:e}, boundary margin {:e}, c {}", iss_cert.interior_residual, iss_cert.weight.s_margin, fmt9(iss_cert.c)),
    ));
    let ks = cert.recompute_ki_star();
    checks.push(check("ki_star_formula", rel_close(ks, cert.ki_star, tol), format!("recomputed {}", fmt9(ks))));
    let pm = cert.recompute_p_max();
    checks.push(check("p_max_formula", rel_close(pm, cert.p_max, tol), format!("recomputed {}", fmt9(pm))));
    checks.push(check("gain_range", cert.ki > 0.0 && cert.ki < cert.ki_star, format!("ki {}", fmt9(cert.ki))));
    checks.push(check("weight_range", cert.p > 0.0 && cert.p <= cert.p_max, format!("p {}", fmt9(cert.p))));
    let mu_e = cert.mu_e_at(cert.ki, cert.p);
    checks.push(check("mu_e_positive", mu_e > 0.0, format!("mu_e {}", fmt9(mu_e))));
    if let Some(sc) = scenario {
        let eq = Equilibrium::compute(system, cert, sc)?;
        let (bc, y) = sim::equilibrium_residuals(system, &eq, &cert.ki_matrix, cert.ki, sc)?;
        checks.push(check("equilibrium_residuals", bc <= 1e-9 && y <= 1e-9, format!("boundary {bc:e}, output {y:e}")));
    }
    Ok(checks)
}

fn run_verify(cli: &Cli, args: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let (system, embedded) = read_system(&args.system)?;
    let cert = read_cert(&args.cert, &system)?;
    let scenario = match (&args.scenario, embedded) {
        (None, None) => None,
        (p, e) => Some(read_scenario(p.as_deref(), e, &system)?),
    };
    let checks = verify_certificate(&system, &cert, scenario.as_ref())?;
    for c in &checks {
        writeln!(out, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let mut files = Outputs::new(&args.out_dir);
    files.add_json("verify_report.json", &checks)?;
    files.manifest(cli, json!({ "checks": checks.len(), "failed": failed }))?;
    files.commit()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Design(format!("verification failed: {}", failed.join(", "))))
    }
}

fn reproduce_heat(cli: &Cli, args: &ReproduceArgs, out: &mut dyn Write) -> Result<()> {
    let problem = HeatProblem::new(args.grid.unwrap_or(heat::DEFAULT_INTERVALS))?;
    let exact = heat::exact_cainvb(&problem);
    let g = heat::heat_gain(&problem)?;
    writeln!(out, "C A^-1 B (closed form) =\n{}", fmt_matrix(&exact))?;
    writeln!(out, "C A^-1 B (grid, N = {}) =\n{}", problem.intervals, fmt_matrix(&g.cainvb))?;
    writeln!(out, "Ki =\n{}", fmt_matrix(&g.ki_matrix))?;
    for (name, value) in [
        ("|Ki|", g.ki_norm),
        ("|C A^-1|", g.cainv_norm),
        ("|B| bound", g.b_norm_bound),
        ("|B Ki|", g.bki_norm),
        ("mu", g.mu),
        ("ki_star", g.ki_star),
        ("ki_star_sharp", g.ki_star_sharp),
        ("ki_corollary", g.ki_corollary),
    ] {
        writeln!(out, "{name} = {}", fmt9(value))?;
    }
    let mut sim_cfg = HeatSimulation::new(args.ki.unwrap_or(2e-3));
    if let Some(t) = args.horizon {
        sim_cfg.horizon = t;
    }
    let traj = heat::simulate_heat(&problem, &g, &sim_cfg)?;
    if let Some(w) = &traj.warning {
        writeln!(out, "warning: {w}")?;
    }
    let y = traj.final_output().to_vec();
    writeln!(out, "y(T) = {:?}", y.iter().map(|x| fmt9(*x)).collect::<Vec<_>>())?;
    let mut csv_bytes = Vec::new();
    traj.write_csv(&mut csv_bytes)?;
    let mut files = Outputs::new(&args.out_dir);
    files.add("heat_trajectory.csv", csv_bytes);
    let mut derived = serde_json::to_value(&g)?;
    derived["ki"] = json!(traj.ki);
    derived["p"] = json!(traj.operating.p);
    derived["mu_e"] = json!(traj.operating.mu_e);
    derived["y_final"] = json!(y);
    files.manifest(cli, derived)?;
    files.commit()
}

fn reproduce_hyperbolic(
    cli: &Cli,
    args: &ReproduceArgs,
    name: &str,
    system: &HyperbolicSystem,
    scenario: &DisturbanceScenario,
    out: &mut dyn Write,
) -> Result<()> {
    let cert = gain::design(system)?;
    print_certificate(out, &cert)?;
    let mut derived = certificate_summary(&cert);
    if system.n == 1 {
        let mut sweep = Vec::new();
        for mu in [0.25, 0.5, 1.0, 2.0] {
            let c = gain::design_with(system, &DesignOptions { search: WeightSearch::fixed_rate(mu), ..Default::default() })?;
            writeln!(out, "ki_star(mu = {}) = {}", fmt9(mu), fmt9(c.ki_star))?;
            sweep.push(json!({ "mu": mu, "ki_star": c.ki_star }));
        }
        derived["ki_star_sweep"] = Value::Array(sweep);
    }
    let config = SimConfig {
        horizon: args.horizon.unwrap_or(60.0),
        cells: args.grid.unwrap_or(400),
        ki: args.ki,
        ..Default::default()
    };
    let traj = sim::simulate(system, &cert, scenario, &InitialState::zero(system, config.cells), &config)?;
    let summary = trajectory_summary(&traj);
    writeln!(out, "y(T) = {:?}", traj.y.last().map(|y| y.iter().map(|x| fmt9(*x)).collect::<Vec<_>>()).unwrap_or_default())?;
    let mut csv_bytes = Vec::new();
    traj.write_csv(&mut csv_bytes)?;
    let mut files = Outputs::new(&args.out_dir);
    files.add(format!("{name}_trajectory.csv"), csv_bytes);
    files.add_json(format!("{name}_certificate.json"), &cert)?;
    derived["simulation"] = summary;
    files.manifest(cli, derived)?;
    files.commit()
}

fn run_reproduce(cli: &Cli, args: &ReproduceArgs, out: &mut dyn Write) -> Result<()> {
    match args.example {
        Example::Heat => reproduce_heat(cli, args, out),
        Example::Transport => reproduce_hyperbolic(
            cli,
            args,
            "transport",
            &scenarios::transport(),
            &DisturbanceScenario::reference(vec![1.0]),
            out,
        ),
        Example::SaintVenant => reproduce_hyperbolic(
            cli,
            args,
            "saintvenant",
            &scenarios::saint_venant(&SaintVenantParams::default()),
            &DisturbanceScenario::reference(vec![1.0, 0.5]),
            out,
        ),
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Design(a) => run_design(cli, a, out),
        Command::Forward(a) => run_forward(cli, a, out),
        Command::Simulate(a) => run_simulate(cli, a, out),
        Command::Verify(a) => run_verify(cli, a, out),
        Command::Reproduce(a) => run_reproduce(cli, a, out),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 1;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
