//! Problem data for the abstract (finite-dimensional) and hyperbolic settings.
//!
//! Coefficient functions of the hyperbolic system are stored as samples on a
//! uniform grid of `[0, 1]` and evaluated by linear interpolation. The speed
//! matrix `Λ0(s)` is stored by its diagonal, so it is diagonal by construction.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub const DEFAULT_GRID_POINTS: usize = 201;

/// A vector- or matrix-valued function of `s ∈ [0, 1]` sampled on a uniform grid.
///
/// Each sample is a flat row of `width` numbers (a diagonal for `Λ0`, a
/// row-major `n×n` matrix for `Λ1`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    width: usize,
    samples: Vec<Vec<f64>>,
    derivative: Option<Vec<Vec<f64>>>,
}

impl CoefficientField {
    pub fn constant(values: &[f64], grid_points: usize) -> Self {
        Self {
            width: values.len(),
            samples: vec![values.to_vec(); grid_points],
            derivative: None,
        }
    }

    pub fn from_fn(grid_points: usize, width: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let samples = (0..grid_points)
            .map(|j| {
                let v = f(grid_coordinate(j, grid_points));
                debug_assert_eq!(v.len(), width);
                v
            })
            .collect();
        Self {
            width,
            samples,
            derivative: None,
        }
    }

    /// Resamples scattered `(s, values)` pairs onto the uniform grid.
    pub fn from_points(points: &[(f64, Vec<f64>)], grid_points: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("coefficient has no samples".into()));
        }
        let width = points[0].1.len();
        if points.iter().any(|(_, v)| v.len() != width) {
            return Err(Error::InvalidInput("coefficient samples have unequal widths".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput("coefficient sample coordinates must increase strictly".into()));
        }
        let (first, last) = (points[0].0, points[points.len() - 1].0);
        if first > 0.0 || last < 1.0 {
            return Err(Error::InvalidInput("coefficient samples must cover [0, 1]".into()));
        }
        Ok(Self::from_fn(grid_points, width, |s| {
            let k = points.partition_point(|(x, _)| *x <= s).clamp(1, points.len() - 1);
            let (s0, v0) = &points[k - 1];
            let (s1, v1) = &points[k];
            let t = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
            v0.iter().zip(v1).map(|(a, b)| a + t * (b - a)).collect()
        }))
    }

    /// Overrides the finite-difference derivative with analytic values.
    pub fn with_derivative(mut self, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let n = self.samples.len();
        self.derivative = Some((0..n).map(|j| f(grid_coordinate(j, n))).collect());
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn grid_points(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn is_constant(&self) -> bool {
        self.samples.windows(2).all(|w| w[0] == w[1])
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let intervals = self.samples.len() - 1;
        let x = s * intervals as f64;
        let k = (x.floor() as usize).min(intervals - 1);
        (k, x - k as f64)
    }

    pub fn value(&self, s: f64) -> Vec<f64> {
        let (k, t) = self.locate(s);
        lerp(&self.samples[k], &self.samples[k + 1], t)
    }

    /// Nodal derivative: second-order differences, one-sided at the ends.
    fn nodal_derivative(&self, j: usize) -> Vec<f64> {
        if let Some(d) = &self.derivative {
            return d[j].clone();
        }
        let n = self.samples.len();
        let h = 1.0 / (n - 1) as f64;
        let f = |k: usize, i: usize| self.samples[k][i];
        (0..self.width)
            .map(|i| {
                if n == 2 {
                    (f(1, i) - f(0, i)) / h
                } else if j == 0 {
                    (-3.0 * f(0, i) + 4.0 * f(1, i) - f(2, i)) / (2.0 * h)
                } else if j == n - 1 {
                    (3.0 * f(n - 1, i) - 4.0 * f(n - 2, i) + f(n - 3, i)) / (2.0 * h)
                } else {
                    (f(j + 1, i) - f(j - 1, i)) / (2.0 * h)
                }
            })
            .collect()
    }

    pub fn derivative(&self, s: f64) -> Vec<f64> {
        let (k, t) = self.locate(s);
        lerp(&self.nodal_derivative(k), &self.nodal_derivative(k + 1), t)
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

pub fn grid_coordinate(j: usize, grid_points: usize) -> f64 {
    j as f64 / (grid_points - 1) as f64
}

/// Pointwise coefficient values returned by [`HyperbolicSystem::eval_coefficients`].
#[derive(Debug, Clone)]
pub struct Coefficients {
    /// Diagonal of `Λ0(s)`.
    pub lambda0: Vec<f64>,
    pub lambda1: DMatrix<f64>,
    /// Diagonal of `dΛ0/ds`.
    pub dlambda0: Vec<f64>,
}

impl Coefficients {
    pub fn lambda0_matrix(&self) -> DMatrix<f64> {
        linalg::diag(&self.lambda0)
    }

    pub fn dlambda0_matrix(&self) -> DMatrix<f64> {
        linalg::diag(&self.dlambda0)
    }
}

/// `φ_t + Λ0(s) φ_s + Λ1(s) φ = 0` on `(0, 1)` with boundary relation
/// `[φ₊(t,0); φ₋(t,1)] = K [φ₊(t,1); φ₋(t,0)] + B u + w_b` and output
/// `y = L1 [φ₊(t,0); φ₋(t,1)] + L2 [φ₊(t,1); φ₋(t,0)] + w_y`.
#[derive(Debug, Clone)]
pub struct HyperbolicSystem {
    pub n: usize,
    /// Number of components with positive speed.
    pub ell: usize,
    pub m: usize,
    pub lambda0: CoefficientField,
    pub lambda1: CoefficientField,
    pub k: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub l1: DMatrix<f64>,
    pub l2: DMatrix<f64>,
}

impl HyperbolicSystem {
    /// Assembles a system without validating it; see [`HyperbolicSystem::validate`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        ell: usize,
        m: usize,
        lambda0: CoefficientField,
        lambda1: CoefficientField,
        k: DMatrix<f64>,
        b: DMatrix<f64>,
        l1: DMatrix<f64>,
        l2: DMatrix<f64>,
    ) -> Self {
        Self { n, ell, m, lambda0, lambda1, k, b, l1, l2 }
    }

    /// Constant-coefficient system (`Λ0` constant diagonal, `Λ1` constant).
    #[allow(clippy::too_many_arguments)]
    pub fn constant(
        ell: usize,
        speeds: &[f64],
        lambda1: &DMatrix<f64>,
        k: DMatrix<f64>,
        b: DMatrix<f64>,
        l1: DMatrix<f64>,
        l2: DMatrix<f64>,
    ) -> Self {
        let n = speeds.len();
        let m = b.ncols();
        let l1_flat: Vec<f64> = linalg::to_rows(lambda1).concat();
        Self::new(
            n,
            ell,
            m,
            CoefficientField::constant(speeds, DEFAULT_GRID_POINTS),
            CoefficientField::constant(&l1_flat, DEFAULT_GRID_POINTS),
            k,
            b,
            l1,
            l2,
        )
    }

    pub fn grid_points(&self) -> usize {
        self.lambda0.grid_points()
    }

    pub fn eval_coefficients(&self, s: f64) -> Result<Coefficients> {
        if !(0.0..=1.0).contains(&s) || s.is_nan() {
            return Err(Error::Domain(s));
        }
        let l1 = self.lambda1.value(s);
        Ok(Coefficients {
            lambda0: self.lambda0.value(s),
            lambda1: DMatrix::from_row_slice(self.n, self.n, &l1),
            dlambda0: self.lambda0.derivative(s),
        })
    }

    /// `B1` padded with zero rows: `[B1; 0]`.
    pub fn b_plus_padded(&self) -> DMatrix<f64> {
        let mut out = self.b.clone();
        out.rows_mut(self.ell, self.n - self.ell).fill(0.0);
        out
    }

    /// `[0; B2]`.
    pub fn b_minus_padded(&self) -> DMatrix<f64> {
        let mut out = self.b.clone();
        out.rows_mut(0, self.ell).fill(0.0);
        out
    }

    /// `K₊ = [[I, 0], [K21, K22]]`.
    pub fn k_plus(&self) -> DMatrix<f64> {
        let mut out = self.k.clone();
        let ell = self.ell;
        out.rows_mut(0, ell).fill(0.0);
        out.view_mut((0, 0), (ell, ell)).fill_with_identity();
        out
    }

    /// `K₋ = [[K11, K12], [0, I]]`.
    pub fn k_minus(&self) -> DMatrix<f64> {
        let mut out = self.k.clone();
        let (ell, rest) = (self.ell, self.n - self.ell);
        out.rows_mut(ell, rest).fill(0.0);
        out.view_mut((ell, ell), (rest, rest)).fill_with_identity();
        out
    }

    /// Checks every structural invariant; an empty report means the system is valid.
    pub fn validate(&self) -> Vec<Violation> {
        validate_hyperbolic(self)
    }

    pub fn from_json_str(text: &str) -> Result<(Self, Option<DisturbanceScenario>)> {
        let doc: SystemDocument = serde_json::from_str(text)?;
        doc.into_system()
    }

    pub fn from_json_file(path: &Path) -> Result<(Self, Option<DisturbanceScenario>)> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_document(&self, scenario: Option<&DisturbanceScenario>) -> SystemDocument {
        let field = |f: &CoefficientField| {
            if f.is_constant() {
                CoefficientSpec::Constant(CoefficientValues::Flat(f.samples[0].clone()))
            } else {
                let g = f.grid_points();
                CoefficientSpec::Samples(
                    f.samples
                        .iter()
                        .enumerate()
                        .map(|(j, v)| {
                            let mut row = vec![grid_coordinate(j, g)];
                            row.extend_from_slice(v);
                            row
                        })
                        .collect(),
                )
            }
        };
        SystemDocument {
            n: self.n,
            ell: self.ell,
            m: self.m,
            grid_points: Some(self.grid_points()),
            lambda0: field(&self.lambda0),
            lambda1: field(&self.lambda1),
            k: linalg::to_rows(&self.k),
            b: linalg::to_rows(&self.b),
            l1: linalg::to_rows(&self.l1),
            l2: linalg::to_rows(&self.l2),
            scenario: scenario.cloned(),
        }
    }
}

/// Which structural invariant a [`Violation`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    Dimensions,
    SignPattern,
    Finite,
    BlockShape,
    GridSize,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Invariant::Dimensions => "dimensions",
            Invariant::SignPattern => "sign-pattern",
            Invariant::Finite => "finite-values",
            Invariant::BlockShape => "block-shape",
            Invariant::GridSize => "grid-size",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub invariant: Invariant,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

pub fn validate_hyperbolic(system: &HyperbolicSystem) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut push = |invariant, detail: String| report.push(Violation { invariant, detail });
    let (n, ell, m) = (system.n, system.ell, system.m);

    if n == 0 || m == 0 || ell > n {
        push(Invariant::Dimensions, format!("n = {n}, ell = {ell}, m = {m} (need n ≥ 1, m ≥ 1, 0 ≤ ell ≤ n)"));
        return report;
    }
    let g = system.lambda0.grid_points();
    if g < 2 || system.lambda1.grid_points() != g {
        push(
            Invariant::GridSize,
            format!("lambda0 has {g} samples, lambda1 has {} (need equal, ≥ 2)", system.lambda1.grid_points()),
        );
        return report;
    }
    if system.lambda0.width() != n {
        push(Invariant::BlockShape, format!("lambda0 has width {} (expected {n})", system.lambda0.width()));
    }
    if system.lambda1.width() != n * n {
        push(Invariant::BlockShape, format!("lambda1 has width {} (expected {})", system.lambda1.width(), n * n));
    }
    for (name, mat, rows, cols) in [
        ("K", &system.k, n, n),
        ("B", &system.b, n, m),
        ("L1", &system.l1, m, n),
        ("L2", &system.l2, m, n),
    ] {
        if mat.shape() != (rows, cols) {
            push(
                Invariant::BlockShape,
                format!("{name} is {}×{} (expected {rows}×{cols})", mat.nrows(), mat.ncols()),
            );
        } else if let Some(pos) = mat.iter().position(|x| !x.is_finite()) {
            push(Invariant::Finite, format!("{name} has a non-finite entry at column-major index {pos}"));
        }
    }
    for (j, row) in system.lambda0.samples().iter().enumerate() {
        for (i, &lam) in row.iter().enumerate().take(n) {
            if !lam.is_finite() {
                push(Invariant::Finite, format!("lambda0[{i}] is not finite at grid index {j}"));
            } else if i < ell && lam <= 0.0 {
                push(
                    Invariant::SignPattern,
                    format!("lambda_{} = {lam} at grid index {j} must be > 0 (i ≤ ell)", i + 1),
                );
            } else if i >= ell && lam >= 0.0 {
                push(
                    Invariant::SignPattern,
                    format!("lambda_{} = {lam} at grid index {j} must be < 0 (i > ell)", i + 1),
                );
            }
        }
    }
    for (j, row) in system.lambda1.samples().iter().enumerate() {
        if let Some(pos) = row.iter().position(|x| !x.is_finite()) {
            push(Invariant::Finite, format!("lambda1 entry {pos} is not finite at grid index {j}"));
        }
    }
    report
}

/// Dense finite-dimensional system `φ' = Aφ + Bu + w`, `y = Cφ`.
#[derive(Debug, Clone)]
pub struct AbstractLinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl AbstractLinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || n == 0 {
            return Err(Error::InvalidInput(format!("A must be square and nonempty, got {}×{}", a.nrows(), a.ncols())));
        }
        let m = b.ncols();
        if b.nrows() != n || c.shape() != (m, n) || m == 0 {
            return Err(Error::InvalidInput(format!(
                "inconsistent shapes: A {n}×{n}, B {}×{}, C {}×{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if !(linalg::all_finite(&a) && linalg::all_finite(&b) && linalg::all_finite(&c)) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self { a, b, c })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn io_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn is_hurwitz(&self) -> bool {
        linalg::spectral_abscissa(&self.a) < -1e-12
    }
}

/// Constant disturbances and reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceScenario {
    #[serde(default)]
    pub w_b: Vec<f64>,
    #[serde(default)]
    pub w_y: Vec<f64>,
    pub y_ref: Vec<f64>,
    /// Distributed disturbance, one value per grid node (abstract/heat case only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_dist: Option<Vec<f64>>,
}

impl DisturbanceScenario {
    pub fn reference(y_ref: Vec<f64>) -> Self {
        Self { w_b: Vec::new(), w_y: Vec::new(), y_ref, w_dist: None }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fills empty disturbance vectors with zeros and checks dimensions against `system`.
    pub fn resolved_for(&self, system: &HyperbolicSystem) -> Result<Self> {
        let mut out = self.clone();
        if out.w_b.is_empty() {
            out.w_b = vec![0.0; system.n];
        }
        if out.w_y.is_empty() {
            out.w_y = vec![0.0; system.m];
        }
        if out.w_b.len() != system.n || out.w_y.len() != system.m || out.y_ref.len() != system.m {
            return Err(Error::InvalidInput(format!(
                "scenario dimensions (w_b {}, w_y {}, y_ref {}) do not match n = {}, m = {}",
                out.w_b.len(),
                out.w_y.len(),
                out.y_ref.len(),
                system.n,
                system.m
            )));
        }
        if out.w_b.iter().chain(&out.w_y).chain(&out.y_ref).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("scenario has non-finite entries".into()));
        }
        Ok(out)
    }

    pub fn w_b_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.w_b)
    }

    pub fn w_y_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.w_y)
    }

    pub fn y_ref_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y_ref)
    }
}

/// Exponential weight family `P_i(s) = weights[i] · exp(exponents[i] · s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightParam {
    #[serde(with = "linalg::vec_sig9")]
    pub weights: Vec<f64>,
    #[serde(with = "linalg::vec_sig9")]
    pub exponents: Vec<f64>,
}

impl WeightParam {
    pub fn eval(&self, s: f64) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.exponents)
            .map(|(p, e)| p * (e * s).exp())
            .collect()
    }

    /// `dP/ds`.
    pub fn derivative(&self, s: f64) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.exponents)
            .map(|(p, e)| p * e * (e * s).exp())
            .collect()
    }
}

/// Diagonal spatial weight `P(s)` certifying input-to-state exponential stability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovWeight {
    pub param: WeightParam,
    /// Diagonal of `P` at each grid node.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
    #[serde(with = "linalg::sig9")]
    pub mu: f64,
    #[serde(with = "linalg::sig9")]
    pub p_lower: f64,
    #[serde(with = "linalg::sig9")]
    pub p_upper: f64,
    #[serde(with = "linalg::sig9")]
    pub s_margin: f64,
}

impl LyapunovWeight {
    pub fn from_param(param: WeightParam, grid_points: usize, mu: f64, s_margin: f64) -> Self {
        let samples: Vec<Vec<f64>> = (0..grid_points)
            .map(|j| param.eval(grid_coordinate(j, grid_points)))
            .collect();
        // exponentials are monotone, so the extremes sit at s = 0 or s = 1
        let ends = [param.eval(0.0), param.eval(1.0)];
        let p_lower = ends.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        let p_upper = ends.iter().flatten().cloned().fold(0.0, f64::max);
        Self { param, samples, mu, p_lower, p_upper, s_margin }
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        self.param.eval(s)
    }
}

// ---------------------------------------------------------------------------
// JSON document

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientValues {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl CoefficientValues {
    fn flatten(self) -> Vec<f64> {
        match self {
            CoefficientValues::Flat(v) => v,
            CoefficientValues::Nested(rows) => rows.concat(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientSpec {
    Constant(CoefficientValues),
    /// Rows of `[s, value...]`.
    Samples(Vec<Vec<f64>>),
}

impl CoefficientSpec {
    fn into_field(self, grid_points: usize) -> Result<CoefficientField> {
        match self {
            CoefficientSpec::Constant(v) => Ok(CoefficientField::constant(&v.flatten(), grid_points)),
            CoefficientSpec::Samples(rows) => {
                let points: Vec<(f64, Vec<f64>)> = rows
                    .into_iter()
                    .map(|r| {
                        if r.len() < 2 {
                            Err(Error::InvalidInput("sample rows need [s, value...]".into()))
                        } else {
                            Ok((r[0], r[1..].to_vec()))
                        }
                    })
                    .collect::<Result<_>>()?;
                CoefficientField::from_points(&points, grid_points)
            }
        }
    }
}

/// On-disk JSON layout of a hyperbolic system (optionally with a scenario).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDocument {
    pub n: usize,
    pub ell: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    pub lambda0: CoefficientSpec,
    pub lambda1: CoefficientSpec,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "L1")]
    pub l1: Vec<Vec<f64>>,
    #[serde(rename = "L2")]
    pub l2: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<DisturbanceScenario>,
}

impl SystemDocument {
    pub fn into_system(self) -> Result<(HyperbolicSystem, Option<DisturbanceScenario>)> {
        let g = self.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        if g < 2 {
            return Err(Error::InvalidInput("grid_points must be at least 2".into()));
        }
        let matrix = |rows: &[Vec<f64>], r: usize, c: usize, name: &str| -> Result<DMatrix<f64>> {
            // an empty block is allowed when one of its dimensions is zero
            if rows.is_empty() && r * c == 0 {
                return Ok(DMatrix::zeros(r, c));
            }
            let a = linalg::from_rows(rows)?;
            if a.shape() != (r, c) {
                return Err(Error::InvalidInput(format!(
                    "{name} is {}×{}, expected {r}×{c}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            Ok(a)
        };
        let (n, m) = (self.n, self.m);
        let system = HyperbolicSystem::new(
            n,
            self.ell,
            m,
            self.lambda0.into_field(g)?,
            self.lambda1.into_field(g)?,
            matrix(&self.k, n, n, "K")?,
            matrix(&self.b, n, m, "B")?,
            matrix(&self.l1, m, n, "L1")?,
            matrix(&self.l2, m, n, "L2")?,
        );
        let report = system.validate();
        if !report.is_empty() {
            let msgs: Vec<String> = report.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidInput(msgs.join("; ")));
        }
        Ok((system, self.scenario))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn transport_and_saint_venant_validate() {
        assert!(scenarios::transport().validate().is_empty());
        assert!(scenarios::saint_venant(&scenarios::SaintVenantParams::default()).validate().is_empty());
    }

    #[test]
    fn zero_speed_sample_is_reported() {
        let mut sys = scenarios::transport();
        let g = sys.grid_points();
        sys.lambda0 = CoefficientField::from_fn(g, 1, |s| vec![if (s - 0.5).abs() < 1e-9 { 0.0 } else { 1.0 }]);
        let report = sys.validate();
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].invariant, Invariant::SignPattern);
        assert!(report[0].detail.contains("grid index 100"), "{}", report[0].detail);
    }

    #[test]
    fn validation_is_pure() {
        let mut sys = scenarios::transport();
        sys.b = DMatrix::zeros(2, 1);
        let a = sys.validate();
        let b = sys.validate();
        assert_eq!(a, b);
        assert_eq!(a[0].invariant, Invariant::BlockShape);
    }

    #[test]
    fn non_finite_entries_are_reported() {
        let mut sys = scenarios::transport();
        sys.k[(0, 0)] = f64::NAN;
        assert_eq!(sys.validate()[0].invariant, Invariant::Finite);
    }

    #[test]
    fn constant_coefficients_have_zero_derivative() {
        let sys = HyperbolicSystem::constant(
            1,
            &[1.0, -1.0],
            &DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        );
        let c = sys.eval_coefficients(0.37).unwrap();
        assert_eq!(c.lambda0, vec![1.0, -1.0]);
        assert!((c.lambda1[(1, 0)] - 0.3).abs() < 1e-15);
        assert!(c.dlambda0.iter().all(|d| d.abs() <= 1e-12));
    }

    #[test]
    fn affine_speed_has_unit_derivative() {
        let field = CoefficientField::from_fn(201, 1, |s| vec![1.0 + s]);
        assert!((field.derivative(0.5)[0] - 1.0).abs() < 1e-9);
        // endpoint: one-sided difference, still exact for affine data
        assert!((field.derivative(1.0)[0] - 1.0).abs() < 1e-9);
        assert!((field.value(1.0)[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_coordinate_is_a_domain_error() {
        let sys = scenarios::transport();
        assert!(matches!(sys.eval_coefficients(1.0 + 1e-9), Err(Error::Domain(_))));
        assert!(matches!(sys.eval_coefficients(-0.1), Err(Error::Domain(_))));
        assert!(sys.eval_coefficients(1.0).is_ok());
    }

    #[test]
    fn interpolation_error_shrinks_under_refinement() {
        let f = |s: f64| vec![(3.0 * s).sin() + 2.0];
        let err = |g: usize| {
            let field = CoefficientField::from_fn(g, 1, f);
            (0..97)
                .map(|k| {
                    let s = (k as f64 + 0.37) / 97.0;
                    (field.value(s)[0] - f(s)[0]).abs()
                })
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(21), err(41));
        assert!(fine < 0.5 * coarse, "coarse {coarse:e} fine {fine:e}");
    }

    #[test]
    fn json_round_trip_preserves_system() {
        let sys = scenarios::saint_venant(&scenarios::SaintVenantParams::default());
        let scen = DisturbanceScenario::reference(vec![1.0, 0.5]);
        let text = serde_json::to_string(&sys.to_document(Some(&scen))).unwrap();
        let (back, s) = HyperbolicSystem::from_json_str(&text).unwrap();
        assert_eq!(back.k, sys.k);
        assert_eq!(back.lambda0, sys.lambda0);
        assert_eq!(s.unwrap(), scen);
    }

    #[test]
    fn json_accepts_sampled_coefficients() {
        let text = r#"{
            "n": 1, "ell": 1, "m": 1, "grid_points": 11,
            "lambda0": {"samples": [[0.0, 1.0], [1.0, 2.0]]},
            "lambda1": {"constant": [0.0]},
            "K": [[0.0]], "B": [[1.0]], "L1": [[0.0]], "L2": [[1.0]],
            "scenario": {"y_ref": [1.0]}
        }"#;
        let (sys, scen) = HyperbolicSystem::from_json_str(text).unwrap();
        assert_eq!(sys.grid_points(), 11);
        assert!((sys.eval_coefficients(0.25).unwrap().lambda0[0] - 1.25).abs() < 1e-14);
        let resolved = scen.unwrap().resolved_for(&sys).unwrap();
        assert_eq!(resolved.w_b, vec![0.0]);
    }

    #[test]
    fn json_with_bad_sign_is_rejected() {
        let text = r#"{"n": 1, "ell": 1, "m": 1, "lambda0": {"constant": [-1.0]},
            "lambda1": {"constant": [0.0]}, "K": [[0.0]], "B": [[1.0]], "L1": [[0.0]], "L2": [[1.0]]}"#;
        assert!(matches!(HyperbolicSystem::from_json_str(text), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn k_blocks_follow_the_sign_split() {
        let sys = scenarios::saint_venant(&scenarios::SaintVenantParams { k0: 0.3, k1: 0.7, ..Default::default() });
        assert_eq!(sys.k_plus(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.7, 0.0]));
        assert_eq!(sys.k_minus(), DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.0, 1.0]));
    }
}
