//! Rank constraints through repeated pivot deflation.
//!
//! For a pivot `(i, j)` with `m_ij != 0`, the deflation
//!
//! ```text
//! D(M) = H1i (M - m_col m_row' / m_ij) H2j'
//! ```
//!
//! removes row `i` and column `j` after a rank-one update, and lowers the
//! rank by exactly one. Applying it `K` times to a rank-`K` matrix leaves a
//! matrix of zeros, so "rank at most `K`" becomes the vector equation
//! `vec(D^K(M)) = 0`.
//!
//! Pivot positions are 1-based in the public API and refer to the matrix at
//! the stage where they are applied.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot tolerance: a pivot below `PIVOT_TOL * max|M|` (of the
/// undeflated matrix) is treated as zero.
pub const PIVOT_TOL: f64 = 1e-10;

/// Pivots used by successive deflations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeflationPlan {
    pivots: Vec<(usize, usize)>,
}

impl DeflationPlan {
    pub fn new(pivots: Vec<(usize, usize)>) -> Self {
        Self { pivots }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[(usize, usize)] {
        &self.pivots
    }
}

fn check_pivot(m: &DMatrix<f64>, (i, j): (usize, usize)) -> Result<()> {
    if i == 0 || j == 0 || i > m.nrows() || j > m.ncols() {
        return Err(Error::Dimension(format!(
            "pivot ({i}, {j}) outside a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// One deflation step at a 1-based pivot. Fails when the pivot is exactly
/// zero; tolerance checks are the caller's concern.
pub fn deflate(m: &DMatrix<f64>, pivot: (usize, usize)) -> Result<DMatrix<f64>> {
    check_pivot(m, pivot)?;
    let (pi, pj) = (pivot.0 - 1, pivot.1 - 1);
    let mij = m[(pi, pj)];
    if mij == 0.0 || !mij.is_finite() {
        return Err(Error::Pivot {
            stage: 1,
            value: mij,
            tol: 0.0,
        });
    }
    let (r, c) = m.shape();
    Ok(DMatrix::from_fn(r - 1, c - 1, |p, q| {
        let p = if p >= pi { p + 1 } else { p };
        let q = if q >= pj { q + 1 } else { q };
        m[(p, q)] - m[(p, pj)] * m[(pi, q)] / mij
    }))
}

/// Position (1-based) of the entry with the largest magnitude, ties going to
/// the lexicographically smallest position. `None` for a zero matrix.
pub fn pivot_select(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let a = m[(i, j)].abs();
            if a > best.map_or(0.0, |b| b.1) {
                best = Some(((i + 1, j + 1), a));
            }
        }
    }
    best.map(|b| b.0)
}

fn vec_row_major(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

/// Residual `vec(D^K(M))` with pivots chosen by [`pivot_select`] at each
/// stage. Returns the plan so the Jacobian can reuse the same pivots.
pub fn rank_residual(m: &DMatrix<f64>, k: usize) -> Result<(DVector<f64>, DeflationPlan)> {
    if k >= m.nrows().min(m.ncols()) {
        return Err(Error::Spec(format!(
            "rank {k} must be below min({}, {})",
            m.nrows(),
            m.ncols()
        )));
    }
    let tol = PIVOT_TOL * m.amax();
    let mut cur = m.clone();
    let mut pivots = Vec::with_capacity(k);
    for stage in 1..=k {
        let pivot = pivot_select(&cur).ok_or(Error::Pivot {
            stage,
            value: 0.0,
            tol,
        })?;
        let value = cur[(pivot.0 - 1, pivot.1 - 1)];
        if value.abs() <= tol {
            return Err(Error::Pivot { stage, value, tol });
        }
        cur = deflate(&cur, pivot)?;
        pivots.push(pivot);
    }
    Ok((vec_row_major(&cur), DeflationPlan { pivots }))
}

/// Residual under a fixed plan.
pub fn residual_with_plan(m: &DMatrix<f64>, plan: &DeflationPlan) -> Result<DVector<f64>> {
    let mut cur = m.clone();
    for (stage, &pivot) in plan.pivots.iter().enumerate() {
        check_pivot(&cur, pivot)?;
        cur = deflate(&cur, pivot).map_err(|e| match e {
            Error::Pivot { value, tol, .. } => Error::Pivot {
                stage: stage + 1,
                value,
                tol,
            },
            other => other,
        })?;
    }
    Ok(vec_row_major(&cur))
}

/// Jacobian of a single deflation, `d vec(D(M)) / d vec(M)`, row-major.
fn stage_jacobian(m: &DMatrix<f64>, pivot: (usize, usize)) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let (pi, pj) = (pivot.0 - 1, pivot.1 - 1);
    let mij = m[(pi, pj)];
    let mut jac = DMatrix::zeros((r - 1) * (c - 1), r * c);
    let mut row = 0;
    for p in (0..r).filter(|&p| p != pi) {
        for q in (0..c).filter(|&q| q != pj) {
            let a = m[(p, pj)];
            let b = m[(pi, q)];
            jac[(row, p * c + q)] += 1.0;
            jac[(row, p * c + pj)] -= b / mij;
            jac[(row, pi * c + q)] -= a / mij;
            jac[(row, pi * c + pj)] += a * b / (mij * mij);
            row += 1;
        }
    }
    jac
}

/// `d vec(D^K(M)) / d vec(M)` under the given plan, chained stage by stage.
pub fn rank_residual_jacobian(m: &DMatrix<f64>, plan: &DeflationPlan) -> Result<DMatrix<f64>> {
    let mut cur = m.clone();
    let mut jac = DMatrix::identity(m.len(), m.len());
    for &pivot in &plan.pivots {
        check_pivot(&cur, pivot)?;
        let stage = stage_jacobian(&cur, pivot);
        jac = stage * jac;
        cur = deflate(&cur, pivot)?;
    }
    Ok(jac)
}
