//! Tridiagonal linear algebra in the maximum norm.
//!
//! Matrices keep their row sums next to the three diagonals. For the
//! discretisations assembled here the diagonal is `row_sum - lower - upper`
//! with `row_sum = c_i` tiny compared to the off-diagonals (they reach
//! `1e15` for `eps = 1e-10`), so recovering the row sum from the diagonal
//! by subtraction would leave nothing but roundoff. With the row sums at
//! hand, products `A w` and the elimination of an L-matrix can be carried
//! out without cancellation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Pivots below this magnitude are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// Square tridiagonal matrix of dimension `n`.
///
/// `lower[i - 1] = a_{i,i-1}` for `i = 1..n-1`, `upper[i] = a_{i,i+1}` for
/// `i = 0..n-2`, `row_sums[i] = sum_j a_{ij}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TridiagonalMatrix {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    row_sums: Vec<f64>,
}

fn check_off_diagonals(n: usize, lower: &[f64], upper: &[f64]) -> Result<()> {
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    for len in [lower.len(), upper.len()] {
        if len != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: len,
            });
        }
    }
    Ok(())
}

impl TridiagonalMatrix {
    pub fn from_diagonals(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        check_off_diagonals(n, &lower, &upper)?;
        let row_sums = (0..n)
            .map(|i| {
                let l = if i > 0 { lower[i - 1] } else { 0.0 };
                let u = if i + 1 < n { upper[i] } else { 0.0 };
                l + diag[i] + u
            })
            .collect();
        Ok(TridiagonalMatrix {
            lower,
            diag,
            upper,
            row_sums,
        })
    }

    /// Builds the matrix from its off-diagonals and row sums; the diagonal is
    /// `row_sum - lower - upper`.
    pub fn from_row_sums(lower: Vec<f64>, upper: Vec<f64>, row_sums: Vec<f64>) -> Result<Self> {
        let n = row_sums.len();
        check_off_diagonals(n, &lower, &upper)?;
        let diag = (0..n)
            .map(|i| {
                let l = if i > 0 { lower[i - 1] } else { 0.0 };
                let u = if i + 1 < n { upper[i] } else { 0.0 };
                row_sums[i] - l - u
            })
            .collect();
        Ok(TridiagonalMatrix {
            lower,
            diag,
            upper,
            row_sums,
        })
    }

    pub fn identity(n: usize) -> Self {
        TridiagonalMatrix {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![1.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
            row_sums: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// `(a_{i,i-1}, a_{ii}, a_{i,i+1})`, zeros outside the matrix.
    pub fn row(&self, i: usize) -> (f64, f64, f64) {
        let l = if i > 0 { self.lower[i - 1] } else { 0.0 };
        let u = if i + 1 < self.dim() {
            self.upper[i]
        } else {
            0.0
        };
        (l, self.diag[i], u)
    }

    /// `diag(scale) * self`.
    pub fn scale_rows(&self, scale: &[f64]) -> Result<Self> {
        let n = self.dim();
        if scale.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: scale.len(),
            });
        }
        Ok(TridiagonalMatrix {
            lower: self
                .lower
                .iter()
                .zip(&scale[1..])
                .map(|(a, s)| a * s)
                .collect(),
            diag: self.diag.iter().zip(scale).map(|(a, s)| a * s).collect(),
            upper: self.upper.iter().zip(scale).map(|(a, s)| a * s).collect(),
            row_sums: self
                .row_sums
                .iter()
                .zip(scale)
                .map(|(a, s)| a * s)
                .collect(),
        })
    }

    /// Positive diagonal, non-positive off-diagonals.
    pub fn is_l_matrix(&self) -> bool {
        self.first_non_l_row().is_none()
    }

    fn first_non_l_row(&self) -> Option<usize> {
        (0..self.dim()).find(|&i| {
            let (l, d, u) = self.row(i);
            !(d > 0.0 && l <= 0.0 && u <= 0.0)
        })
    }

    /// Plain product `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        (0..self.dim())
            .map(|i| {
                let (l, d, u) = self.row(i);
                let mut s = d * x[i];
                if i > 0 {
                    s += l * x[i - 1];
                }
                if i + 1 < x.len() {
                    s += u * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `A w` in difference form,
    /// `(A w)_i = a_{i,i-1} (w_{i-1} - w_i) + a_{i,i+1} (w_{i+1} - w_i) + rowsum_i w_i`.
    pub fn apply(&self, w: &MeshVector) -> Vec<f64> {
        assert_eq!(w.len(), self.dim());
        let n = self.dim();
        (0..n)
            .map(|i| {
                let (l, _, u) = self.row(i);
                let mut s = self.row_sums[i] * w.values[i];
                if i > 0 {
                    s -= l * w.increments[i - 1];
                }
                if i + 1 < n {
                    s += u * w.increments[i];
                }
                s
            })
            .collect()
    }
}

/// A vector together with its consecutive differences
/// `increments[i] = values[i + 1] - values[i]`.
///
/// Barrier vectors used in stability checks are known analytically, and so
/// are their increments; supplying them avoids differencing nearly equal
/// values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshVector {
    values: Vec<f64>,
    increments: Vec<f64>,
}

impl MeshVector {
    pub fn from_values(values: Vec<f64>) -> Self {
        let increments = values.windows(2).map(|w| w[1] - w[0]).collect();
        MeshVector { values, increments }
    }

    pub fn with_increments(values: Vec<f64>, increments: Vec<f64>) -> Result<Self> {
        if increments.len() + 1 != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len().saturating_sub(1),
                found: increments.len(),
            });
        }
        Ok(MeshVector { values, increments })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
}

impl From<Vec<f64>> for MeshVector {
    fn from(values: Vec<f64>) -> Self {
        MeshVector::from_values(values)
    }
}

pub fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub solution: Vec<f64>,
    /// `||A x - rhs||_inf`.
    pub residual_norm: f64,
}

/// Direct tridiagonal solve without pivoting.
///
/// L-matrices with non-negative row sums are eliminated in row-sum form:
/// the reduced row sums `s'_i = s_i + |a_{i,i-1}| s'_{i-1} / p_{i-1}` and
/// pivots `p_i = s'_i + |a_{i,i+1}|` involve no subtraction, so the factors
/// keep full relative accuracy however ill-conditioned the matrix is. All
/// other matrices go through the ordinary Thomas recurrence.
pub fn thomas_solve(t: &TridiagonalMatrix, rhs: &[f64]) -> Result<SolveResult> {
    let n = t.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let m_form = t.is_l_matrix() && t.row_sums.iter().all(|&s| s >= 0.0);

    // Pivots and eliminated right-hand side.
    let mut pivot = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut reduced_sum = 0.0;
    for i in 0..n {
        let (l, d, u) = t.row(i);
        let p = if m_form {
            reduced_sum = if i == 0 {
                t.row_sums[0]
            } else {
                t.row_sums[i] + (-l) * reduced_sum / pivot[i - 1]
            };
            reduced_sum - u
        } else if i == 0 {
            d
        } else {
            d - l * t.upper[i - 1] / pivot[i - 1]
        };
        if !(p.abs() > PIVOT_FLOOR) || !p.is_finite() {
            return Err(Error::SingularPivot { row: i, pivot: p });
        }
        pivot[i] = p;
        y[i] = if i == 0 {
            rhs[0]
        } else {
            rhs[i] - l * y[i - 1] / pivot[i - 1]
        };
    }
    let mut x = vec![0.0; n];
    x[n - 1] = y[n - 1] / pivot[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (y[i] - t.upper[i] * x[i + 1]) / pivot[i];
    }

    let ax = t.apply(&MeshVector::from_values(x.clone()));
    let residual_norm = ax
        .iter()
        .zip(rhs)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    Ok(SolveResult {
        solution: x,
        residual_norm,
    })
}

/// Maximum absolute row sum.
pub fn inf_norm_matrix(t: &TridiagonalMatrix) -> f64 {
    (0..t.dim())
        .map(|i| {
            let (l, d, u) = t.row(i);
            l.abs() + d.abs() + u.abs()
        })
        .fold(0.0, f64::max)
}

/// `||A^{-1}||_inf` for an inverse-positive L-matrix, from one solve
/// `A z = 1`.
///
/// If `A` is an L-matrix and `z > 0`, then `z` is itself a barrier with
/// `A z = 1`, which certifies the M-matrix property; then `A^{-1} >= 0`
/// and `||A^{-1}||_inf = ||z||_inf`.
pub fn inverse_inf_norm_inverse_positive(t: &TridiagonalMatrix) -> Result<f64> {
    if let Some(row) = t.first_non_l_row() {
        return Err(Error::NotLMatrix { row });
    }
    let z = thomas_solve(t, &vec![1.0; t.dim()])?.solution;
    if let Some((row, &value)) = z.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NotInversePositive { row, value });
    }
    Ok(z.iter().fold(0.0, |m: f64, &v| m.max(v)))
}

/// `kappa(A) = ||A||_inf ||A^{-1}||_inf` for an inverse-positive L-matrix.
pub fn condition_number(t: &TridiagonalMatrix) -> Result<f64> {
    Ok(inf_norm_matrix(t) * inverse_inf_norm_inverse_positive(t)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCriterion {
    /// `min_i (A w)_i`.
    pub gamma: f64,
    /// `||w||_inf / gamma`, an upper bound for `||A^{-1}||_inf` when `gamma > 0`.
    pub bound: f64,
}

impl MCriterion {
    pub fn certifies(&self) -> bool {
        self.gamma > 0.0
    }
}

/// M-criterion: for an L-matrix `A` and `w > 0` with `A w >= gamma > 0`,
/// `A` is an M-matrix and `||A^{-1}|| <= ||w|| / gamma`.
pub fn m_criterion_check(t: &TridiagonalMatrix, w: &MeshVector) -> Result<MCriterion> {
    if let Some(row) = t.first_non_l_row() {
        return Err(Error::NotLMatrix { row });
    }
    if w.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: w.len(),
        });
    }
    if let Some((index, &value)) = w.values.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveBarrier { index, value });
    }
    let gamma = t.apply(w).into_iter().fold(f64::INFINITY, f64::min);
    let bound = if gamma > 0.0 {
        max_norm(&w.values) / gamma
    } else {
        f64::INFINITY
    };
    Ok(MCriterion { gamma, bound })
}
