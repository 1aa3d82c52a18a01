//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A matrix counts as full rank iff its 2-norm condition number is below this.
pub const RANK_TOLERANCE: f64 = 1e10;

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// 2-norm condition number; `inf` for singular or empty matrices.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return f64::INFINITY;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn is_full_rank(a: &DMatrix<f64>) -> bool {
    a.is_square() && condition_number(a) < RANK_TOLERANCE
}

/// Inverse guarded by the rank tolerance.
pub fn checked_inverse(a: &DMatrix<f64>, which: &'static str) -> Result<DMatrix<f64>> {
    let condition = condition_number(a);
    if !a.is_square() || condition >= RANK_TOLERANCE {
        return Err(Error::RankCondition { which, condition });
    }
    a.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::RankCondition { which, condition })
}

/// Solve `a x = b` for a matrix right-hand side (guarded by the rank tolerance).
pub fn checked_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, which: &'static str) -> Result<DMatrix<f64>> {
    let condition = condition_number(a);
    if !a.is_square() || condition >= RANK_TOLERANCE {
        return Err(Error::RankCondition { which, condition });
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::RankCondition { which, condition })
}

fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `a`, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetric_part(a)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn sym_min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).first().cloned().unwrap_or(f64::INFINITY)
}

pub fn sym_max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).last().cloned().unwrap_or(f64::NEG_INFINITY)
}

/// Largest real part over the (complex) spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn all_finite(a: &DMatrix<f64>) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Trapezoidal weights on a uniform grid with `nodes` points over an interval of length `len`.
pub fn trapezoid_weights(nodes: usize, len: f64) -> Vec<f64> {
    assert!(nodes >= 2, "trapezoid rule needs at least two nodes");
    let h = len / (nodes - 1) as f64;
    let mut w = vec![h; nodes];
    w[0] = 0.5 * h;
    w[nodes - 1] = 0.5 * h;
    w
}

/// Build a matrix from row-major nested vectors.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

/// Scientific notation with 9 significant digits, as written to CSV files.
pub fn format_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Serde adapter storing a dense matrix as row-major nested arrays.
pub mod rows_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = super::to_rows(m)
            .into_iter()
            .map(|r| r.into_iter().map(|x| super::round_sig(x, 9)).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for scalars written with 9 significant digits.
pub mod sig9 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::round_sig(*x, 9))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d)
    }
}

/// Serde adapter for vectors written with 9 significant digits.
pub mod vec_sig9 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let r: Vec<f64> = v.iter().map(|x| super::round_sig(*x, 9)).collect();
        r.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<f64>::deserialize(d)
    }
}
